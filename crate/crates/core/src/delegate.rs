//! Pairwise-difference assertions certifying a Hamilton allocation.
//!
//! For every ordered pair of viable candidates (m, n) the audit checks
//! `p_m > p_n + (a_m − a_n − s)/D` over the qualified votes. With slack
//! `s = 1` these assertions jointly imply the allocation is exactly right;
//! with `s = 2` they imply no candidate holds two or more delegates beyond
//! their true entitlement.

use crate::assertions::Assertion;
use crate::model::{CandidateId, CandidateSet, ElectionProfile, Rational};
use crate::score::{Scored, Scorer};
use crate::tabulation::{hamilton_allocate, ReportedOutcome, ViabilityResult};
use crate::viability::SpecStatus;

/// Audit depth: 2 confirms each viable candidate's correct allocation is
/// within one of the reported `a_c`, 3 confirms every delegate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DelegateLevel {
    AllButOne,
    Exact,
}

impl DelegateLevel {
    pub fn slack(self) -> i128 {
        match self {
            DelegateLevel::AllButOne => 2,
            DelegateLevel::Exact => 1,
        }
    }
}

/// A pair left out because its `d` is at most −1, so the inequality holds for any ballots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkippedPair {
    pub winner: CandidateId,
    pub loser: CandidateId,
    pub d: Rational,
}

#[derive(Clone, Debug)]
pub struct DelegateAssertionSet {
    pub assertions: Vec<Scored>,
    pub level: DelegateLevel,
    pub skipped: Vec<SkippedPair>,
    pub status: SpecStatus,
}

/// Pairwise-difference assertions for an allocation `delegates_of` over the
/// viable set `viable`, in roster order of (m, n). Vacuous pairs are returned
/// separately.
pub fn pairwise_assertions(
    num_candidates: usize,
    viable: CandidateSet,
    total_delegates: u32,
    delegates_of: impl Fn(CandidateId) -> u32,
    level: DelegateLevel,
) -> (Vec<Assertion>, Vec<SkippedPair>) {
    let eliminated = CandidateSet::full(num_candidates).difference(viable);
    let mut assertions = Vec::new();
    let mut skipped = Vec::new();
    for m in viable.iter() {
        for n in viable.iter().filter(|&n| n != m) {
            let diff = delegates_of(m) as i128 - delegates_of(n) as i128 - level.slack();
            let d = Rational::new(diff, total_delegates as i128);
            if d <= Rational::from_integer(-1) {
                skipped.push(SkippedPair { winner: m, loser: n, d });
            } else {
                assertions.push(Assertion::PairwiseDiff { winner: m, loser: n, d, eliminated });
            }
        }
    }
    (assertions, skipped)
}

pub fn gen_delegate_assertions(
    outcome: &ReportedOutcome,
    level: DelegateLevel,
    scorer: &mut Scorer,
) -> DelegateAssertionSet {
    let profile = scorer.profile();
    let alloc = &outcome.allocation;
    let (assertions, skipped) = pairwise_assertions(
        profile.num_candidates(),
        outcome.viable(),
        profile.delegates(),
        |c| alloc.delegates_for(c).unwrap_or(0),
        level,
    );
    let scored: Vec<Scored> = assertions.into_iter().map(|a| scorer.score(a)).collect();
    let exact_tie = alloc.tie && level == DelegateLevel::Exact;
    let status = if exact_tie || scored.iter().any(|s| !s.usable()) {
        SpecStatus::RequiresFullCount
    } else {
        SpecStatus::Complete
    };
    DelegateAssertionSet { assertions: scored, level, skipped, status }
}

/// Builds the `level` assertions from `alternative` (delegates per viable
/// candidate in roster order) and returns one that fails on the profile's
/// true ballots, if any.
pub fn check_allocation(
    profile: &ElectionProfile,
    viability: &ViabilityResult,
    alternative: &[u32],
    level: DelegateLevel,
) -> Option<Assertion> {
    let viable: Vec<CandidateId> = viability.viable.iter().collect();
    assert_eq!(viable.len(), alternative.len(), "one delegate count per viable candidate");
    let lookup = |c: CandidateId| alternative[viable.iter().position(|&v| v == c).expect("viable")];
    let (assertions, _) =
        pairwise_assertions(profile.num_candidates(), viability.viable, profile.delegates(), lookup, level);
    let tallies = assertions.first().map(|a| profile.tallies(a.eliminated()))?;
    assertions.into_iter().find(|a| !a.summary_from_tallies(&tallies).holds())
}

/// An exact-level assertion built from `alternative` that fails on the true
/// ballots. Every allocation other than the true one has such an assertion.
pub fn check_theorem1(
    profile: &ElectionProfile,
    viability: &ViabilityResult,
    alternative: &[u32],
) -> Option<Assertion> {
    check_allocation(profile, viability, alternative, DelegateLevel::Exact)
}

/// The true allocation of a viability result, in roster order.
pub fn true_allocation(viability: &ViabilityResult, delegates: u32) -> Vec<u32> {
    hamilton_allocate(viability, delegates).entries.iter().map(|e| e.delegates).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuous_pairs_are_skipped() {
        // a_m = 0, a_n = D: d = −(D + 1)/D.
        let viable = CandidateSet::from_iter([CandidateId(0), CandidateId(1)]);
        let (asserts, skipped) =
            pairwise_assertions(2, viable, 4, |c| if c == CandidateId(0) { 0 } else { 4 }, DelegateLevel::Exact);
        assert_eq!(asserts.len(), 1);
        assert_eq!(
            skipped,
            vec![SkippedPair { winner: CandidateId(0), loser: CandidateId(1), d: Rational::new(-5, 4) }]
        );
    }

    #[test]
    fn emitted_d_lies_in_open_interval() {
        let viable = CandidateSet::full(4);
        for level in [DelegateLevel::Exact, DelegateLevel::AllButOne] {
            let alloc = [5u32, 0, 2, 1];
            let (asserts, _) = pairwise_assertions(4, viable, 8, |c| alloc[c.index()], level);
            for a in asserts {
                let Assertion::PairwiseDiff { d, .. } = a else { unreachable!() };
                assert!(d > Rational::from_integer(-1) && d < Rational::from_integer(1));
            }
        }
    }

    #[test]
    fn single_viable_candidate_needs_nothing() {
        let viable = CandidateSet::single(CandidateId(2));
        let (asserts, skipped) = pairwise_assertions(3, viable, 5, |_| 5, DelegateLevel::Exact);
        assert!(asserts.is_empty() && skipped.is_empty());
    }
}
