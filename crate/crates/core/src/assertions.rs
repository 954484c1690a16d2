//! The four assertion forms used to audit a Hamilton election and their
//! assorters.
//!
//! Every assertion carries an elimination context `E`: ballots are read at
//! their top preference among the candidates not in `E`. A ballot with no
//! valid vote in the contest (blank) always scores 1/2. Nonblank ballots
//! exhausted under `E` are valid votes for Viable/NonViable, fall outside both
//! classes for IrvWins, and are unqualified (1/2) for PairwiseDiff.
//!
//! Because an assorter only depends on which class a ballot's top remaining
//! preference falls in, the mean over a profile is computed from pile sizes.

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{CandidateId, CandidateSet, ElectionProfile, Ranking, Rational, Roster, Tallies};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Assertion {
    /// `candidate` holds at least proportion `threshold` of the valid votes
    /// once `eliminated` are removed.
    Viable { candidate: CandidateId, eliminated: CandidateSet, threshold: Rational },
    /// `candidate` holds less than proportion `threshold` once `eliminated` are removed.
    NonViable { candidate: CandidateId, eliminated: CandidateSet, threshold: Rational },
    /// `winner` has more ballots than `loser` once `eliminated` are removed.
    IrvWins { winner: CandidateId, loser: CandidateId, eliminated: CandidateSet },
    /// `p_winner > p_loser + d` over the qualified votes, where qualification
    /// means the top preference outside `eliminated` (the non-viable
    /// candidates) exists.
    PairwiseDiff { winner: CandidateId, loser: CandidateId, d: Rational, eliminated: CandidateSet },
}

fn half() -> Rational {
    Rational::new(1, 2)
}

impl Assertion {
    pub fn eliminated(&self) -> CandidateSet {
        match *self {
            Assertion::Viable { eliminated, .. }
            | Assertion::NonViable { eliminated, .. }
            | Assertion::IrvWins { eliminated, .. }
            | Assertion::PairwiseDiff { eliminated, .. } => eliminated,
        }
    }

    /// The candidate whose class scores high.
    pub fn winner(&self) -> CandidateId {
        match *self {
            Assertion::Viable { candidate, .. } | Assertion::NonViable { candidate, .. } => candidate,
            Assertion::IrvWins { winner, .. } | Assertion::PairwiseDiff { winner, .. } => winner,
        }
    }

    pub fn loser(&self) -> Option<CandidateId> {
        match *self {
            Assertion::IrvWins { loser, .. } | Assertion::PairwiseDiff { loser, .. } => Some(loser),
            _ => None,
        }
    }

    pub fn type_tag(&self) -> &'static str {
        match self {
            Assertion::Viable { .. } => "viable",
            Assertion::NonViable { .. } => "non_viable",
            Assertion::IrvWins { .. } => "irv_wins",
            Assertion::PairwiseDiff { .. } => "pairwise_diff",
        }
    }

    pub fn validate(&self, num_candidates: usize) -> Result<()> {
        let roster = CandidateSet::full(num_candidates);
        let fail = |msg: &str| Err(Error::invalid(format!("malformed {} assertion: {msg}", self.type_tag())));
        if !self.eliminated().is_subset(roster) {
            return fail("eliminated set outside the roster");
        }
        let mut named = vec![self.winner()];
        named.extend(self.loser());
        for c in named {
            if c.index() >= num_candidates {
                return fail("unknown candidate");
            }
            if self.eliminated().contains(c) {
                return fail("named candidate is eliminated");
            }
        }
        match self {
            Assertion::Viable { threshold, .. } => {
                if *threshold <= Rational::zero() || *threshold > Rational::one() {
                    return fail("threshold outside (0, 1]");
                }
            }
            Assertion::NonViable { threshold, .. } => {
                if *threshold <= Rational::zero() || *threshold >= Rational::one() {
                    return fail("threshold outside (0, 1)");
                }
            }
            Assertion::IrvWins { winner, loser, .. } => {
                if winner == loser {
                    return fail("winner equals loser");
                }
            }
            Assertion::PairwiseDiff { winner, loser, d, .. } => {
                if winner == loser {
                    return fail("winner equals loser");
                }
                if *d <= -Rational::one() || *d >= Rational::one() {
                    return fail("d outside (-1, 1)");
                }
            }
        }
        Ok(())
    }

    /// The assorter's upper bound u.
    pub fn upper_bound(&self) -> Rational {
        match self {
            Assertion::Viable { threshold, .. } => (threshold * 2).recip(),
            Assertion::NonViable { threshold, .. } => ((Rational::one() - threshold) * 2).recip(),
            Assertion::IrvWins { .. } => Rational::one(),
            Assertion::PairwiseDiff { d, .. } => (Rational::one() + d).recip(),
        }
    }

    /// Assorter value of one ballot.
    pub fn assorter_value(&self, ballot: &Ranking) -> Rational {
        if ballot.is_blank() {
            return half();
        }
        let top = ballot.top_remaining(self.eliminated());
        match self {
            Assertion::Viable { candidate, .. } => {
                if top == Some(*candidate) {
                    self.upper_bound()
                } else {
                    Rational::zero()
                }
            }
            Assertion::NonViable { candidate, .. } => {
                if top == Some(*candidate) {
                    Rational::zero()
                } else {
                    self.upper_bound()
                }
            }
            Assertion::IrvWins { winner, loser, .. } => match top {
                Some(c) if c == *winner => Rational::one(),
                Some(c) if c == *loser => Rational::zero(),
                _ => half(),
            },
            Assertion::PairwiseDiff { winner, loser, .. } => match top {
                Some(c) if c == *winner => self.upper_bound(),
                Some(c) if c == *loser => Rational::zero(),
                Some(_) => self.upper_bound() / 2,
                None => half(),
            },
        }
    }

    /// Assorter mean and margin from the piles of this assertion's elimination context.
    pub fn summary_from_tallies(&self, t: &Tallies) -> AssorterSummary {
        let upper_bound = self.upper_bound();
        if t.total == 0 {
            return AssorterSummary::new(upper_bound, half());
        }
        let n = |x: u64| Rational::from_integer(x as i128);
        let blank = n(t.blank) * half();
        let sum = match self {
            Assertion::Viable { candidate, .. } => n(t.pile(*candidate)) * upper_bound + blank,
            Assertion::NonViable { candidate, .. } => n(t.valid() - t.pile(*candidate)) * upper_bound + blank,
            Assertion::IrvWins { winner, loser, .. } => {
                let (w, l) = (t.pile(*winner), t.pile(*loser));
                n(w) + n(t.total - w - l) * half()
            }
            Assertion::PairwiseDiff { winner, loser, .. } => {
                let (w, l) = (t.pile(*winner), t.pile(*loser));
                let qualified: u64 = t.piles.iter().sum();
                let others = qualified - w - l;
                n(w) * upper_bound + n(others) * upper_bound / 2 + n(t.exhausted + t.blank) * half()
            }
        };
        AssorterSummary::new(upper_bound, sum / n(t.total))
    }

    /// Summary over every ballot of `profile`, blank ballots included.
    pub fn margin(&self, profile: &ElectionProfile) -> AssorterSummary {
        self.summary_from_tallies(&profile.tallies(self.eliminated()))
    }

    pub fn holds_on(&self, profile: &ElectionProfile) -> bool {
        self.margin(profile).holds()
    }

    /// A stable textual identity, independent of labels.
    pub fn key(&self) -> String {
        match self {
            Assertion::Viable { candidate, eliminated, threshold } => {
                format!("viable:{}:{:x}:{threshold}", candidate.0, eliminated.bits())
            }
            Assertion::NonViable { candidate, eliminated, threshold } => {
                format!("non_viable:{}:{:x}:{threshold}", candidate.0, eliminated.bits())
            }
            Assertion::IrvWins { winner, loser, eliminated } => {
                format!("irv_wins:{}:{}:{:x}", winner.0, loser.0, eliminated.bits())
            }
            Assertion::PairwiseDiff { winner, loser, d, eliminated } => {
                format!("pairwise_diff:{}:{}:{:x}:{d}", winner.0, loser.0, eliminated.bits())
            }
        }
    }

    pub fn describe<'a>(&'a self, roster: &'a Roster) -> Describe<'a> {
        Describe { assertion: self, roster }
    }
}

pub struct Describe<'a> {
    assertion: &'a Assertion,
    roster: &'a Roster,
}

impl fmt::Display for Describe<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.roster;
        let set = |s: CandidateSet| format!("{{{}}}", r.set_labels(s).join(","));
        match self.assertion {
            Assertion::Viable { candidate, eliminated, threshold } => {
                write!(f, "Viable({}, {}, {threshold})", r.label(*candidate), set(*eliminated))
            }
            Assertion::NonViable { candidate, eliminated, threshold } => {
                write!(f, "NonViable({}, {}, {threshold})", r.label(*candidate), set(*eliminated))
            }
            Assertion::IrvWins { winner, loser, eliminated } => {
                write!(f, "IRV({}, {}, {})", r.label(*winner), r.label(*loser), set(*eliminated))
            }
            Assertion::PairwiseDiff { winner, loser, d, eliminated } => write!(
                f,
                "PairwiseDiff({} > {} + {d}, viable {})",
                r.label(*winner),
                r.label(*loser),
                set(r.all().difference(*eliminated))
            ),
        }
    }
}

/// Upper bound, mean and margin `2·mean − 1` of an assorter over a profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssorterSummary {
    pub upper_bound: Rational,
    pub mean: Rational,
    pub margin: Rational,
}

impl AssorterSummary {
    fn new(upper_bound: Rational, mean: Rational) -> Self {
        let margin = mean * 2 - Rational::one();
        AssorterSummary { upper_bound, mean, margin }
    }

    pub fn holds(&self) -> bool {
        self.margin > Rational::zero()
    }

    pub fn margin_f64(&self) -> f64 {
        self.margin.to_f64().unwrap_or(f64::NAN)
    }
}

/// Memoised piles per elimination context.
pub struct TallyCache<'a> {
    profile: &'a ElectionProfile,
    cache: HashMap<CandidateSet, Tallies>,
}

impl<'a> TallyCache<'a> {
    pub fn new(profile: &'a ElectionProfile) -> Self {
        TallyCache { profile, cache: HashMap::new() }
    }

    pub fn profile(&self) -> &'a ElectionProfile {
        self.profile
    }

    pub fn tallies(&mut self, eliminated: CandidateSet) -> &Tallies {
        let profile = self.profile;
        self.cache.entry(eliminated).or_insert_with(|| profile.tallies(eliminated))
    }

    pub fn summary(&mut self, a: &Assertion) -> AssorterSummary {
        a.summary_from_tallies(self.tallies(a.eliminated()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Style, Threshold};
    use num_rational::Ratio;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn example1() -> ElectionProfile {
        let roster = Roster::new(["Ann", "Bob", "Cal", "Dee"]).unwrap();
        let ballots = [("Ann", 57_532), ("Bob", 15_630), ("Cal", 1_600), ("Dee", 846)]
            .map(|(c, n)| (Ranking::parse(&roster, &[c]).unwrap(), n));
        ElectionProfile::new(roster, ballots, Threshold::new(Ratio::new(15, 100)).unwrap(), 5, Style::Plurality)
            .unwrap()
    }

    fn c(i: u8) -> CandidateId {
        CandidateId(i)
    }

    #[test]
    fn viable_value_is_one_over_two_t() {
        let p = example1();
        let a = Assertion::Viable { candidate: c(0), eliminated: CandidateSet::EMPTY, threshold: r(3, 20) };
        let ballot = Ranking::parse(p.roster(), &["Ann", "Dee", "Cal", "Bob"]).unwrap();
        assert_eq!(a.assorter_value(&ballot), r(10, 3));
        assert_eq!(a.assorter_value(&Ranking::parse(p.roster(), &["Bob"]).unwrap()), r(0, 1));
        assert_eq!(a.assorter_value(&Ranking::blank()), r(1, 2));
    }

    #[test]
    fn pairwise_diff_values() {
        let p = example1();
        let viable = CandidateSet::from_iter([c(0), c(1)]);
        let a = Assertion::PairwiseDiff {
            winner: c(1),
            loser: c(0),
            d: r(-4, 5),
            eliminated: p.roster().all().difference(viable),
        };
        let bob = Ranking::parse(p.roster(), &["Bob"]).unwrap();
        let cal = Ranking::parse(p.roster(), &["Cal"]).unwrap();
        assert_eq!(a.assorter_value(&bob), r(5, 1));
        assert_eq!(a.assorter_value(&cal), r(1, 2));
        assert_eq!(a.upper_bound(), r(5, 1));
    }

    #[test]
    fn irv_wins_blank_is_half() {
        let a = Assertion::IrvWins { winner: c(0), loser: c(1), eliminated: CandidateSet::EMPTY };
        assert_eq!(a.assorter_value(&Ranking::blank()), r(1, 2));
    }

    #[test]
    fn unanimous_viable_margin() {
        let roster = Roster::new(["A", "B"]).unwrap();
        let a_vote = Ranking::parse(&roster, &["A"]).unwrap();
        let p = ElectionProfile::new(
            roster,
            [(a_vote, 40)],
            Threshold::new(Ratio::new(1, 4)).unwrap(),
            1,
            Style::Plurality,
        )
        .unwrap();
        let a = Assertion::Viable { candidate: c(0), eliminated: CandidateSet::EMPTY, threshold: r(1, 4) };
        // 1/t − 1
        assert_eq!(a.margin(&p).margin, r(3, 1));
    }

    #[test]
    fn holds_on_example1() {
        let p = example1();
        let nv = Assertion::NonViable { candidate: c(2), eliminated: CandidateSet::EMPTY, threshold: r(3, 20) };
        let v = Assertion::Viable { candidate: c(2), eliminated: CandidateSet::EMPTY, threshold: r(3, 20) };
        assert!(nv.holds_on(&p));
        assert!(!v.holds_on(&p));
    }

    #[test]
    fn validation() {
        let e = CandidateSet::single(c(0));
        assert!(Assertion::Viable { candidate: c(0), eliminated: e, threshold: r(1, 2) }.validate(3).is_err());
        assert!(Assertion::NonViable { candidate: c(1), eliminated: e, threshold: r(1, 1) }.validate(3).is_err());
        assert!(Assertion::IrvWins { winner: c(1), loser: c(1), eliminated: e }.validate(3).is_err());
        let pd = |d| Assertion::PairwiseDiff { winner: c(1), loser: c(2), d, eliminated: e };
        assert!(pd(r(-1, 1)).validate(3).is_err());
        assert!(pd(r(1, 1)).validate(3).is_err());
        assert!(pd(r(-2, 5)).validate(3).is_ok());
        assert!(Assertion::IrvWins { winner: c(5), loser: c(1), eliminated: e }.validate(3).is_err());
    }
}
