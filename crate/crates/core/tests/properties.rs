mod common;

use delegate_rla::model::{load_election, parse_election, save_election, ElectionProfile, Rational};
use delegate_rla::risk::{draw_sample, estimate_asn, km_step, Asn, Discrepancy, KaplanMarkov, RiskParams, RiskState};
use delegate_rla::tabulation::{hamilton_allocate, tabulate, viability};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn category() -> impl Strategy<Value = Discrepancy> {
    prop_oneof![
        6 => Just(Discrepancy::Clean),
        1 => Just(Discrepancy::Understatement),
        1 => Just(Discrepancy::OneVote),
        1 => Just(Discrepancy::TwoVote),
    ]
}

fn fold(categories: &[Discrepancy], margin: &Rational) -> RiskState {
    categories.iter().fold(RiskState::default(), |s, &c| km_step(&s, margin, c, 1.1).unwrap())
}

fn to_json(profile: &ElectionProfile) -> String {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.json");
    save_election(profile, &path).unwrap();
    std::fs::read_to_string(path).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assorters_respect_range_reduction_and_sign(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let profile = random_irv(&mut r, n, 12, 40);
        for _ in 0..20 {
            let a = random_assertion(&mut r, n);
            let bad = assorter_violations(&profile, &a);
            prop_assert!(bad.is_empty(), "{:?}", bad);
            let s = a.margin(&profile);
            prop_assert!(s.mean >= Rational::from_integer(0) && s.mean <= s.upper_bound);
        }
    }

    #[test]
    fn risk_is_order_independent(
        draws in prop::collection::vec(category(), 1..60),
        seed in any::<u64>(),
        margin in 1u32..400,
    ) {
        let mu = Rational::new(margin as i128, 1000);
        let mut shuffled = draws.clone();
        shuffled.shuffle(&mut rng(seed));
        prop_assert_eq!(fold(&draws, &mu), fold(&shuffled, &mu));
        let replayed = RiskState::replay(draws.iter().copied(), margin as f64 / 1000.0, &KaplanMarkov { gamma: 1.1 });
        prop_assert_eq!(fold(&draws, &mu), replayed);
    }

    #[test]
    fn risk_moves_the_right_way(draws in prop::collection::vec(category(), 0..40), margin in 1u32..400) {
        let mu = Rational::new(margin as i128, 1000);
        let base = fold(&draws, &mu);
        let clean = km_step(&base, &mu, Discrepancy::Clean, 1.1).unwrap();
        let one = km_step(&base, &mu, Discrepancy::OneVote, 1.1).unwrap();
        let two = km_step(&base, &mu, Discrepancy::TwoVote, 1.1).unwrap();
        prop_assert!(clean.p_value <= base.p_value);
        prop_assert!(clean.p_value <= one.p_value && one.p_value <= two.p_value);
        prop_assert!((0.0..=1.0).contains(&two.p_value));
    }

    #[test]
    fn zero_error_asn_matches_closed_form(m1 in 1u32..2200, m2 in 1u32..2200) {
        let params = RiskParams { error_rate: 0.0, ..default_params() };
        let a = delegate_rla::assertions::Assertion::IrvWins {
            winner: delegate_rla::model::CandidateId(0),
            loser: delegate_rla::model::CandidateId(1),
            eliminated: delegate_rla::model::CandidateSet::EMPTY,
        };
        let asn = |m: u32| estimate_asn(&a, &Rational::new(m as i128, 1000), 10_000_000, &params);
        let mu = m1 as f64 / 1000.0;
        let closed = (params.alpha.ln() / (1.0 - mu / 2.2).ln()).ceil() as u64;
        prop_assert_eq!(asn(m1), Asn::Draws(closed));
        let (lo, hi) = (m1.min(m2), m1.max(m2));
        prop_assert!(asn(hi) <= asn(lo));
    }

    #[test]
    fn hamilton_allocation_invariants(seed in any::<u64>()) {
        let mut r = rng(seed);
        let profile = random_plurality(&mut r, 10, 2_000);
        let Ok(v) = viability(&profile) else { return Ok(()) };
        let alloc = hamilton_allocate(&v, profile.delegates());
        prop_assert_eq!(alloc.entries.iter().map(|e| e.delegates).sum::<u32>(), profile.delegates());
        for e in &alloc.entries {
            let ceil = e.quota.ceil().to_integer() as u32;
            prop_assert!(e.delegates == e.floor || e.delegates == ceil, "{:?}", e);
            prop_assert!(e.delegates >= e.floor && e.delegates <= e.floor + 1);
        }
    }

    #[test]
    fn irv_rounds_conserve_ballots(seed in any::<u64>(), n in 2usize..=7) {
        let mut r = rng(seed);
        let profile = random_irv(&mut r, n, 15, 60);
        let Ok(v) = viability(&profile) else { return Ok(()) };
        for round in &v.rounds {
            prop_assert_eq!(round.piles.iter().sum::<u64>() + round.exhausted, v.valid_ballots);
        }
        for pair in v.rounds.windows(2) {
            let out = pair[0].eliminated.unwrap();
            for (c, (a, b)) in pair[0].piles.iter().zip(&pair[1].piles).enumerate() {
                if c != out.index() && *a > 0 {
                    prop_assert!(b >= a);
                }
            }
        }
    }

    #[test]
    fn election_files_round_trip_and_aggregate(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let profile = random_irv(&mut r, n, 10, 30);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.json");
        save_election(&profile, &path).unwrap();
        prop_assert_eq!(&load_election(&path).unwrap(), &profile);

        // Split every line in two and shuffle; the loaded profile must not change.
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&profile)).unwrap();
        let ballots = v["ballots"].as_array().unwrap().clone();
        let mut split = Vec::new();
        for b in ballots {
            let count = b["count"].as_u64().unwrap();
            let first = count / 2;
            for part in [first, count - first] {
                if part > 0 {
                    let mut line = b.clone();
                    line["count"] = part.into();
                    split.push(line);
                }
            }
        }
        split.shuffle(&mut r);
        v["ballots"] = split.into();
        let reloaded = parse_election(&v.to_string()).unwrap();
        prop_assert_eq!(&reloaded, &profile);
        if let (Ok(a), Ok(b)) = (tabulate(&profile), tabulate(&reloaded)) {
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn draw_sample_is_uniform() {
    let ids: Vec<String> = (0..10).map(|i| format!("b{i}")).collect();
    let n = 1_000_000u64;
    let mut freq = [0u64; 10];
    for e in draw_sample(2024, 0, n, &ids) {
        freq[e.ballot_id[1..].parse::<usize>().unwrap()] += 1;
    }
    let mean = n as f64 / 10.0;
    let sigma = (n as f64 * 0.1 * 0.9).sqrt();
    for (i, f) in freq.iter().enumerate() {
        assert!((*f as f64 - mean).abs() < 5.0 * sigma, "id {i}: {f}");
    }
}

#[test]
fn draw_sample_is_split_invariant() {
    let ids: Vec<String> = (0..37).map(|i| format!("x{i}")).collect();
    let whole = draw_sample(5, 0, 100, &ids);
    let mut parts = draw_sample(5, 0, 40, &ids);
    parts.extend(draw_sample(5, 40, 60, &ids));
    assert_eq!(whole, parts);
    assert_ne!(whole, draw_sample(6, 0, 100, &ids));
}
