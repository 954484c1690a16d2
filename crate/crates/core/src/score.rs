use std::cmp::Ordering;

use crate::assertions::{Assertion, AssorterSummary, TallyCache};
use crate::model::ElectionProfile;
use crate::risk::{Asn, AsnEstimator, RiskParams};

/// An assertion with its assorter summary on the reported ballots and its
/// estimated auditing effort.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scored {
    pub assertion: Assertion,
    pub summary: AssorterSummary,
    /// `FullCount` for assertions that fail on the reported ballots.
    pub eae: Asn,
}

impl Scored {
    /// Cheaper first: lower EAE, then larger margin, then assertion order.
    pub fn cost_cmp(&self, other: &Scored) -> Ordering {
        self.eae
            .cmp(&other.eae)
            .then_with(|| other.summary.margin.cmp(&self.summary.margin))
            .then_with(|| self.assertion.cmp(&other.assertion))
    }

    pub fn usable(&self) -> bool {
        self.summary.holds() && self.eae.is_finite()
    }
}

/// Evaluates assertions against one profile, caching piles and EAEs.
pub struct Scorer<'a> {
    tallies: TallyCache<'a>,
    asn: AsnEstimator,
}

impl<'a> Scorer<'a> {
    pub fn new(profile: &'a ElectionProfile, params: RiskParams) -> Self {
        Scorer { tallies: TallyCache::new(profile), asn: AsnEstimator::new(params, profile.total_ballots()) }
    }

    pub fn profile(&self) -> &'a ElectionProfile {
        self.tallies.profile()
    }

    pub fn params(&self) -> &RiskParams {
        self.asn.params()
    }

    pub fn summary(&mut self, a: &Assertion) -> AssorterSummary {
        self.tallies.summary(a)
    }

    pub fn score(&mut self, a: Assertion) -> Scored {
        let summary = self.tallies.summary(&a);
        let eae = if summary.holds() { self.asn.estimate(&a, &summary.margin) } else { Asn::FullCount };
        Scored { assertion: a, summary, eae }
    }

    /// The cheapest usable assertion among `options`.
    pub fn cheapest(&mut self, options: impl IntoIterator<Item = Assertion>) -> Option<Scored> {
        let mut best: Option<Scored> = None;
        for a in options {
            let s = self.score(a);
            if !s.usable() {
                continue;
            }
            if best.as_ref().is_none_or(|b| s.cost_cmp(b) == Ordering::Less) {
                best = Some(s);
            }
        }
        best
    }
}
