//! Domain types for a single delegate-allocation contest.
//!
//! Rankings are the canonical vote store for both plurality and IRV contests:
//! a plurality vote is a ranking of length one and a blank ballot is the empty
//! ranking. Counts are exact integers and proportions are exact rationals.

mod io;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    expand_cvrs, load_cvrs, load_election, parse_election, parse_threshold, save_election, write_cvrs, CvrIndex,
};

/// Exact rational used for proportions, assorter values and margins.
pub type Rational = Ratio<i128>;

/// Candidate sets are stored as bitmasks, so a contest holds at most this many candidates.
pub const MAX_CANDIDATES: usize = 64;

/// Index of a candidate within its contest roster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CandidateId(pub u8);

impl CandidateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The ordered list of candidates in a contest. Roster order is also the
/// deterministic tie-break order used throughout the crate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Roster {
    labels: Vec<String>,
}

impl Roster {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::invalid("contest has no candidates"));
        }
        if labels.len() > MAX_CANDIDATES {
            return Err(Error::invalid(format!(
                "contest has {} candidates; at most {MAX_CANDIDATES} are supported",
                labels.len()
            )));
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::invalid("empty candidate label"));
            }
            if labels[..i].contains(label) {
                return Err(Error::invalid(format!("candidate {label:?} listed twice")));
            }
        }
        Ok(Roster { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, id: CandidateId) -> &str {
        &self.labels[id.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn lookup(&self, label: &str) -> Result<CandidateId> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| CandidateId(i as u8))
            .ok_or_else(|| Error::UnknownCandidate(label.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = CandidateId> + '_ {
        (0..self.labels.len()).map(|i| CandidateId(i as u8))
    }

    pub fn all(&self) -> CandidateSet {
        CandidateSet::full(self.labels.len())
    }

    pub fn set_labels(&self, set: CandidateSet) -> Vec<String> {
        set.iter().map(|c| self.label(c).to_string()).collect()
    }

    pub fn set_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<CandidateSet> {
        labels.iter().map(|l| self.lookup(l.as_ref())).collect::<Result<_>>()
    }
}

/// A set of candidates of one contest.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CandidateSet(u64);

impl CandidateSet {
    pub const EMPTY: CandidateSet = CandidateSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            CandidateSet(u64::MAX)
        } else {
            CandidateSet((1u64 << n) - 1)
        }
    }

    pub fn single(c: CandidateId) -> Self {
        CandidateSet(1u64 << c.0)
    }

    pub fn from_bits(bits: u64) -> Self {
        CandidateSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, c: CandidateId) -> bool {
        self.0 & (1u64 << c.0) != 0
    }

    pub fn with(self, c: CandidateId) -> Self {
        CandidateSet(self.0 | (1u64 << c.0))
    }

    pub fn without(self, c: CandidateId) -> Self {
        CandidateSet(self.0 & !(1u64 << c.0))
    }

    pub fn union(self, other: Self) -> Self {
        CandidateSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        CandidateSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        CandidateSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in roster order.
    pub fn iter(self) -> impl Iterator<Item = CandidateId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros();
                bits &= bits - 1;
                Some(CandidateId(i as u8))
            }
        })
    }
}

impl FromIterator<CandidateId> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = CandidateId>>(iter: I) -> Self {
        iter.into_iter().fold(CandidateSet::EMPTY, CandidateSet::with)
    }
}

impl fmt::Debug for CandidateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|c| c.0)).finish()
    }
}

/// An ordered list of distinct candidates. Empty means the ballot carries no
/// valid vote in this contest.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ranking(Vec<CandidateId>);

impl Ranking {
    pub fn new(prefs: Vec<CandidateId>) -> Result<Self> {
        for (i, c) in prefs.iter().enumerate() {
            if prefs[..i].contains(c) {
                return Err(Error::DuplicatePreference(format!("#{}", c.0)));
            }
        }
        Ok(Ranking(prefs))
    }

    pub fn blank() -> Self {
        Ranking(Vec::new())
    }

    pub fn parse<S: AsRef<str>>(roster: &Roster, labels: &[S]) -> Result<Self> {
        let mut prefs = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_ref().trim();
            let id = roster.lookup(label)?;
            if prefs.contains(&id) {
                return Err(Error::DuplicatePreference(label.to_string()));
            }
            prefs.push(id);
        }
        Ok(Ranking(prefs))
    }

    pub fn prefs(&self) -> &[CandidateId] {
        &self.0
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_blank(&self) -> bool {
        self.0.is_empty()
    }

    /// The highest-ranked candidate not in `eliminated`, or `None` when the
    /// ballot is exhausted (or blank).
    pub fn top_remaining(&self, eliminated: CandidateSet) -> Option<CandidateId> {
        self.0.iter().copied().find(|&c| !eliminated.contains(c))
    }

    pub fn labels(&self, roster: &Roster) -> Vec<String> {
        self.0.iter().map(|&c| roster.label(c).to_string()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Plurality,
    Irv,
}

/// Viability threshold τ, an exact rational in (0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Threshold(Ratio<i64>);

impl Threshold {
    pub fn new(value: Ratio<i64>) -> Result<Self> {
        if value <= Ratio::from_integer(0) || value > Ratio::from_integer(1) {
            return Err(Error::invalid(format!("threshold {value} outside (0, 1]")));
        }
        Ok(Threshold(value))
    }

    pub fn ratio(self) -> Ratio<i64> {
        self.0
    }

    pub fn rational(self) -> Rational {
        Rational::new(*self.0.numer() as i128, *self.0.denom() as i128)
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// M = ⌊1/τ⌋, the most candidates that can simultaneously hold τ of the vote.
    pub fn max_viable(self) -> usize {
        (*self.0.denom() / *self.0.numer()) as usize
    }

    /// Whether `tally` reaches τ of `valid` ballots (`≥`, not `>`).
    pub fn reached_by(self, tally: u64, valid: u64) -> bool {
        tally as i128 * *self.0.denom() as i128 >= valid as i128 * *self.0.numer() as i128
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

/// One contest: roster, aggregated rankings, threshold, delegate count and style.
///
/// Ranking groups are merged and kept sorted, so two profiles holding the same
/// multiset of ballots compare equal regardless of input order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElectionProfile {
    roster: Roster,
    groups: Vec<(Ranking, u64)>,
    threshold: Threshold,
    delegates: u32,
    style: Style,
    total: u64,
    blank: u64,
}

impl ElectionProfile {
    pub fn new(
        roster: Roster,
        ballots: impl IntoIterator<Item = (Ranking, u64)>,
        threshold: Threshold,
        delegates: u32,
        style: Style,
    ) -> Result<Self> {
        if delegates == 0 {
            return Err(Error::invalid("delegate count must be positive"));
        }
        let mut merged: BTreeMap<Ranking, u64> = BTreeMap::new();
        for (ranking, count) in ballots {
            if let Some(&c) = ranking.prefs().iter().find(|c| c.index() >= roster.len()) {
                return Err(Error::UnknownCandidate(format!("#{}", c.0)));
            }
            if style == Style::Plurality && ranking.len() > 1 {
                return Err(Error::invalid(format!(
                    "plurality contest contains a ranking of length {}: {:?}",
                    ranking.len(),
                    ranking.labels(&roster)
                )));
            }
            if count > 0 {
                *merged.entry(ranking).or_default() += count;
            }
        }
        let total = merged.values().sum();
        let blank = merged.get(&Ranking::blank()).copied().unwrap_or(0);
        Ok(ElectionProfile { roster, groups: merged.into_iter().collect(), threshold, delegates, style, total, blank })
    }

    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    pub fn groups(&self) -> &[(Ranking, u64)] {
        &self.groups
    }

    pub fn threshold(&self) -> Threshold {
        self.threshold
    }

    pub fn delegates(&self) -> u32 {
        self.delegates
    }

    pub fn style(&self) -> Style {
        self.style
    }

    /// |B|, including blank ballots.
    pub fn total_ballots(&self) -> u64 {
        self.total
    }

    pub fn blank_ballots(&self) -> u64 {
        self.blank
    }

    /// Ballots with a valid vote in the contest: the fixed viability denominator.
    pub fn valid_ballots(&self) -> u64 {
        self.total - self.blank
    }

    pub fn num_candidates(&self) -> usize {
        self.roster.len()
    }

    /// Ballot piles after eliminating `eliminated`.
    pub fn tallies(&self, eliminated: CandidateSet) -> Tallies {
        let mut piles = vec![0u64; self.roster.len()];
        let mut exhausted = 0;
        for (ranking, count) in &self.groups {
            if ranking.is_blank() {
                continue;
            }
            match ranking.top_remaining(eliminated) {
                Some(c) => piles[c.index()] += count,
                None => exhausted += count,
            }
        }
        Tallies { piles, exhausted, blank: self.blank, total: self.total }
    }
}

/// Pile sizes for one elimination context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tallies {
    pub piles: Vec<u64>,
    /// Nonblank ballots whose every preference is eliminated.
    pub exhausted: u64,
    pub blank: u64,
    pub total: u64,
}

impl Tallies {
    pub fn pile(&self, c: CandidateId) -> u64 {
        self.piles[c.index()]
    }

    pub fn valid(&self) -> u64 {
        self.total - self.blank
    }
}

/// A cast vote record: the voting system's interpretation of one ballot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CvrRecord {
    pub ballot_id: String,
    pub ranking: Ranking,
}
