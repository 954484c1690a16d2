mod common;

use delegate_rla::assertions::Assertion;
use delegate_rla::delegate::{
    check_allocation, check_theorem1, gen_delegate_assertions, true_allocation, DelegateLevel,
};
use delegate_rla::model::{CandidateId, Rational};
use delegate_rla::score::Scorer;
use delegate_rla::tabulation::{hamilton_allocate, tabulate, viability};
use delegate_rla::viability::SpecStatus;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

#[test]
fn example3_exact_level() {
    let profile = example1();
    let outcome = tabulate(&profile).unwrap();
    let mut scorer = Scorer::new(&profile, default_params());
    let set = gen_delegate_assertions(&outcome, DelegateLevel::Exact, &mut scorer);
    assert_eq!(set.status, SpecStatus::Complete);
    assert!(set.skipped.is_empty());
    let found: Vec<(Assertion, f64)> =
        set.assertions.iter().map(|s| (s.assertion.clone(), s.summary.margin_f64())).collect();
    let (ann, bob) = (CandidateId(0), CandidateId(1));
    let Assertion::PairwiseDiff { winner, loser, d, .. } = &found[0].0 else { panic!() };
    assert_eq!((*winner, *loser, *d), (ann, bob, Rational::new(2, 5)));
    assert!((found[0].1 - 0.12).abs() < 0.01);
    let Assertion::PairwiseDiff { winner, loser, d, .. } = &found[1].0 else { panic!() };
    assert_eq!((*winner, *loser, *d), (bob, ann, Rational::new(-4, 5)));
    assert!((found[1].1 - 1.1).abs() < 0.01);
}

#[test]
fn example3_wrong_allocation_is_caught() {
    let profile = example1();
    let v = viability(&profile).unwrap();
    assert_eq!(true_allocation(&v, 5), vec![4, 1]);
    assert!(check_theorem1(&profile, &v, &[4, 1]).is_none());
    let violated = check_theorem1(&profile, &v, &[3, 2]).expect("(3, 2) must fail");
    assert!(!violated.holds_on(&profile));
}

#[test]
fn single_viable_candidate_has_no_delegate_assertions() {
    let profile = plurality_profile(&[900, 50, 50], 0, threshold(15, 100), 4);
    let outcome = tabulate(&profile).unwrap();
    let mut scorer = Scorer::new(&profile, default_params());
    let set = gen_delegate_assertions(&outcome, DelegateLevel::Exact, &mut scorer);
    assert!(set.assertions.is_empty());
    assert_eq!(set.status, SpecStatus::Complete);
}

#[test]
fn remainder_tie_requires_full_count() {
    // Equal tallies, odd delegate count: the last delegate is a coin toss.
    let profile = plurality_profile(&[500, 500], 0, threshold(15, 100), 3);
    let outcome = tabulate(&profile).unwrap();
    assert!(outcome.allocation.tie);
    let mut scorer = Scorer::new(&profile, default_params());
    let set = gen_delegate_assertions(&outcome, DelegateLevel::Exact, &mut scorer);
    assert_eq!(set.status, SpecStatus::RequiresFullCount);

    // Within-one confirmation survives the tie.
    let set = gen_delegate_assertions(&outcome, DelegateLevel::AllButOne, &mut scorer);
    assert_eq!(set.status, SpecStatus::Complete);
    assert!(set.assertions.iter().all(|s| s.usable()));
}

#[test]
fn theorem1_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut elections = 0;
    while elections < 300 {
        let profile = random_plurality(&mut rng, 8, 500);
        let Ok(v) = viability(&profile) else { continue };
        if v.viable.len() > 6 {
            continue;
        }
        elections += 1;
        let tie = hamilton_allocate(&v, profile.delegates()).tie;
        let truth = true_allocation(&v, profile.delegates());
        for alt in compositions(profile.delegates(), v.viable.len()) {
            let violated = check_theorem1(&profile, &v, &alt).is_some();
            if alt != truth {
                assert!(violated, "alt {alt:?} truth {truth:?} on {:?}", profile.groups());
            } else if !tie {
                assert!(!violated, "true allocation {truth:?} rejected on {:?}", profile.groups());
            }
        }
    }
}

#[test]
fn level2_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut elections = 0;
    let mut off_by_two = 0;
    while elections < 500 {
        let profile = random_plurality(&mut rng, 8, 500);
        let Ok(v) = viability(&profile) else { continue };
        if v.viable.len() > 6 {
            continue;
        }
        elections += 1;
        let truth = true_allocation(&v, profile.delegates());
        for alt in compositions(profile.delegates(), v.viable.len()) {
            let far = alt.iter().zip(&truth).any(|(a, t)| a.abs_diff(*t) >= 2);
            if far {
                off_by_two += 1;
                assert!(
                    check_allocation(&profile, &v, &alt, DelegateLevel::AllButOne).is_some(),
                    "alt {alt:?} truth {truth:?} on {:?}",
                    profile.groups()
                );
            }
        }
        assert!(check_allocation(&profile, &v, &truth, DelegateLevel::AllButOne).is_none());
    }
    assert!(off_by_two > 0);
}
