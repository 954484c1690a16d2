#![allow(dead_code)]

use std::path::PathBuf;

use delegate_rla::model::{load_election, CandidateId, ElectionProfile, Ranking, Roster, Style, Threshold};
use delegate_rla::risk::RiskParams;
use delegate_rla::spec::{generate, AuditLevel};
use delegate_rla::tabulation::tabulate;
use delegate_rla::viability::SpecStatus;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn example1() -> ElectionProfile {
    load_election(data("example1.json")).unwrap()
}

pub fn example2() -> ElectionProfile {
    load_election(data("example2.json")).unwrap()
}

pub fn default_params() -> RiskParams {
    RiskParams { alpha: 0.05, gamma: 1.1, error_rate: 0.002, trials: 20, seed: 42 }
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("C{i}")).collect()
}

pub fn threshold(num: i64, den: i64) -> Threshold {
    Threshold::new(Ratio::new(num, den)).unwrap()
}

pub const THRESHOLDS: [(i64, i64); 5] = [(1, 10), (3, 20), (1, 5), (1, 4), (1, 3)];

pub fn random_threshold(rng: &mut impl Rng) -> Threshold {
    let (n, d) = THRESHOLDS[rng.random_range(0..THRESHOLDS.len())];
    threshold(n, d)
}

/// A random ranking over `n` candidates of length `1..=max_len`, or blank
/// with probability `blank`.
pub fn random_ranking(rng: &mut impl Rng, n: usize, max_len: usize, blank: f64) -> Ranking {
    if rng.random_bool(blank) {
        return Ranking::blank();
    }
    let mut ids: Vec<CandidateId> = (0..n as u8).map(CandidateId).collect();
    ids.shuffle(rng);
    ids.truncate(rng.random_range(1..=max_len.min(n)));
    Ranking::new(ids).unwrap()
}

pub fn plurality_profile(tallies: &[u64], blank: u64, threshold: Threshold, delegates: u32) -> ElectionProfile {
    let roster = Roster::new(labels(tallies.len())).unwrap();
    let mut ballots: Vec<(Ranking, u64)> =
        tallies.iter().enumerate().map(|(i, &n)| (Ranking::new(vec![CandidateId(i as u8)]).unwrap(), n)).collect();
    ballots.push((Ranking::blank(), blank));
    ElectionProfile::new(roster, ballots, threshold, delegates, Style::Plurality).unwrap()
}

/// A random plurality contest with at most `max_ballots` ballots, skewed so
/// that several candidates usually clear the threshold.
pub fn random_plurality(rng: &mut impl Rng, max_candidates: usize, max_ballots: u64) -> ElectionProfile {
    let n = rng.random_range(2..=max_candidates);
    let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(2) + 0.01).collect();
    let total_w: f64 = weights.iter().sum();
    let total = rng.random_range(n as u64..=max_ballots);
    let tallies: Vec<u64> = weights.iter().map(|w| ((w / total_w) * total as f64) as u64).collect();
    let blank = rng.random_range(0..=total / 20);
    let delegates = rng.random_range(1..=12);
    plurality_profile(&tallies, blank, random_threshold(rng), delegates)
}

/// A random IRV contest built from `groups` distinct rankings with counts
/// below `max_count`.
pub fn random_irv(rng: &mut impl Rng, candidates: usize, groups: usize, max_count: u64) -> ElectionProfile {
    let roster = Roster::new(labels(candidates)).unwrap();
    let ballots: Vec<(Ranking, u64)> = (0..groups)
        .map(|_| (random_ranking(rng, candidates, candidates, 0.02), rng.random_range(1..max_count)))
        .collect();
    let delegates = rng.random_range(1..=12);
    ElectionProfile::new(roster, ballots, random_threshold(rng), delegates, Style::Irv).unwrap()
}

/// Moves ballots between rankings: a few large shifts toward random rankings
/// and some small ones between existing groups.
pub fn perturb(rng: &mut impl Rng, profile: &ElectionProfile) -> ElectionProfile {
    let n = profile.num_candidates();
    let mut groups: Vec<(Ranking, u64)> = profile.groups().to_vec();
    let total = profile.total_ballots().max(1);
    let budget = (total as f64 * rng.random_range(0.001..0.15)) as u64 + 1;
    let mut moved = 0;
    while moved < budget {
        let from = rng.random_range(0..groups.len());
        if groups[from].1 == 0 {
            moved += 1;
            continue;
        }
        let k = rng.random_range(1..=groups[from].1.min(budget - moved));
        groups[from].1 -= k;
        moved += k;
        if rng.random_bool(0.5) {
            let to = rng.random_range(0..groups.len());
            groups[to].1 += k;
        } else {
            groups.push((random_ranking(rng, n, n, 0.05), k));
        }
    }
    if rng.random_bool(0.3) {
        groups.push((random_ranking(rng, n, n, 0.0), rng.random_range(1..=budget)));
    }
    ElectionProfile::new(profile.roster().clone(), groups, profile.threshold(), profile.delegates(), profile.style())
        .unwrap()
}

/// All ways to split `total` delegates among `parts` candidates.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(left - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(total, parts, &mut Vec::new(), &mut out);
    }
    out
}

pub struct SoundnessReport {
    pub elections: usize,
    pub perturbations: usize,
    pub checked: usize,
    /// Perturbations whose true viable set differs from the reported one.
    pub flipped: usize,
    pub counterexamples: Vec<String>,
}

/// Generates level-1 specs for random IRV contests until `elections` of them
/// are complete, then checks that every perturbation satisfying all the
/// assertions re-tabulates to the reported viable set.
pub fn viability_soundness(rng: &mut impl Rng, elections: usize, perturbations: usize) -> SoundnessReport {
    let params = RiskParams { trials: 5, ..default_params() };
    let mut report =
        SoundnessReport { elections: 0, perturbations: 0, checked: 0, flipped: 0, counterexamples: Vec::new() };
    let mut attempts = 0;
    while report.elections < elections {
        attempts += 1;
        assert!(attempts < elections * 50, "too few auditable random elections");
        let n = rng.random_range(3..=6);
        let groups = rng.random_range(6..=30);
        let profile = random_irv(rng, n, groups, 3000);
        let Ok(g) = generate(&profile, AuditLevel::VIABILITY, params) else { continue };
        if g.spec.status != SpecStatus::Complete {
            continue;
        }
        report.elections += 1;
        let reported = g.outcome.viable();
        for _ in 0..perturbations {
            let p = perturb(rng, &profile);
            report.perturbations += 1;
            let same = tabulate(&p).map(|o| o.viable() == reported).unwrap_or(false);
            if !same {
                report.flipped += 1;
            }
            if !g.spec.assertions.iter().all(|a| a.assertion.holds_on(&p)) {
                continue;
            }
            report.checked += 1;
            if !same {
                report.counterexamples.push(format!("{:?}", p.groups()));
            }
        }
    }
    report
}

/// Synthetic plurality contest with `n` candidates: four strong candidates
/// and a long tail of weak ones.
pub fn synthetic_plurality(n: usize) -> ElectionProfile {
    let mut tallies = vec![120_000u64, 95_000, 61_000, 40_000];
    tallies.extend((4..n).map(|i| 200 + 97 * i as u64));
    plurality_profile(&tallies, 1_500, threshold(3, 20), 24)
}

/// Synthetic IRV contest with `n` candidates: four strong candidates, a
/// tail of weak ones, and rankings that cycle through the roster.
pub fn synthetic_irv(n: usize) -> ElectionProfile {
    let roster = Roster::new(labels(n)).unwrap();
    let mut ballots = Vec::new();
    for first in 0..n {
        let base = match first {
            0..=3 => [40_000u64, 30_000, 24_000, 18_000][first],
            _ => 1_000 + 1_200 * (first as u64 - 4),
        };
        for shift in 1..4 {
            let mut prefs: Vec<CandidateId> = Vec::new();
            for k in 0..4 {
                let c = CandidateId(((first + k * shift) % n) as u8);
                if !prefs.contains(&c) {
                    prefs.push(c);
                }
            }
            ballots.push((Ranking::new(prefs).unwrap(), base / shift as u64));
        }
    }
    ElectionProfile::new(roster, ballots, threshold(3, 20), 30, Style::Irv).unwrap()
}

/// A random well-formed assertion over `n` candidates; a third of the
/// pairwise assertions use `d = 0`.
pub fn random_assertion(rng: &mut impl Rng, n: usize) -> delegate_rla::assertions::Assertion {
    use delegate_rla::assertions::Assertion;
    use delegate_rla::model::{CandidateSet, Rational};
    let mut ids: Vec<CandidateId> = (0..n as u8).map(CandidateId).collect();
    ids.shuffle(rng);
    let (a, b) = (ids[0], ids[1]);
    let eliminated: CandidateSet = ids[2..].iter().copied().filter(|_| rng.random_bool(0.4)).collect();
    let (tn, td) = THRESHOLDS[rng.random_range(0..THRESHOLDS.len())];
    let t = Rational::new(tn as i128, td as i128);
    match rng.random_range(0..4) {
        0 => Assertion::Viable { candidate: a, eliminated, threshold: t },
        1 => Assertion::NonViable { candidate: a, eliminated, threshold: t },
        2 => Assertion::IrvWins { winner: a, loser: b, eliminated },
        _ => {
            let d = if rng.random_bool(1.0 / 3.0) {
                Rational::from_integer(0)
            } else {
                let den = rng.random_range(1..=12i128);
                Rational::new(rng.random_range(-den + 1..den), den)
            };
            Assertion::PairwiseDiff { winner: a, loser: b, d, eliminated }
        }
    }
}

/// Checks value ranges, the `d = 0` reduction and that a positive margin is
/// equivalent to the corresponding inequality on the piles.
pub fn assorter_violations(profile: &ElectionProfile, a: &delegate_rla::assertions::Assertion) -> Vec<String> {
    use delegate_rla::assertions::Assertion;
    use delegate_rla::model::Rational;
    let mut bad = Vec::new();
    let u = a.upper_bound();
    for (r, _) in profile.groups() {
        let v = a.assorter_value(r);
        if v < Rational::from_integer(0) || v > u {
            bad.push(format!("{a:?}: value {v} outside [0, {u}] on {r:?}"));
        }
    }
    let t = profile.tallies(a.eliminated());
    let valid = t.valid() as i128;
    let margin_pos = a.margin(profile).holds();
    let expected = match a {
        Assertion::Viable { candidate, threshold, .. } => {
            Rational::from_integer(t.pile(*candidate) as i128) > threshold * valid
        }
        Assertion::NonViable { candidate, threshold, .. } => {
            Rational::from_integer(t.pile(*candidate) as i128) < threshold * valid
        }
        Assertion::IrvWins { winner, loser, .. } => t.pile(*winner) > t.pile(*loser),
        Assertion::PairwiseDiff { winner, loser, d, .. } => {
            let q: u64 = t.piles.iter().sum();
            let diff = t.pile(*winner) as i128 - t.pile(*loser) as i128;
            Rational::from_integer(diff) > d * q as i128
        }
    };
    if margin_pos != expected {
        bad.push(format!("{a:?}: margin sign {margin_pos} but pile inequality {expected}"));
    }
    if let Assertion::PairwiseDiff { winner, loser, d, eliminated } = a {
        if *d == Rational::from_integer(0) {
            let irv = Assertion::IrvWins { winner: *winner, loser: *loser, eliminated: *eliminated };
            if irv.margin(profile).margin != a.margin(profile).margin {
                bad.push(format!("{a:?}: d = 0 margin differs from IrvWins"));
            }
        }
    }
    bad
}
