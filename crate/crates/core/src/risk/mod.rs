//! Risk measurement for ballot-level comparison audits with replacement.
//!
//! The risk function is the Kaplan–Markov comparison form with the assorter
//! margin in place of the diluted margin. A draw multiplies the P-value by
//!
//! ```text
//! clean / understatement:   f = max(0, 1 − μ/(2γ))
//! one-vote overstatement:   f / (1 − 1/(2γ))
//! two-vote overstatement:   f / (1 − 1/γ)
//! ```
//!
//! The P-value is the product of the per-draw factors, reported capped at 1.

mod asn;
mod sample;

use std::fmt;

use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::assertions::Assertion;
use crate::error::{Error, Result};
use crate::model::{Ranking, Rational};

pub use asn::{estimate_additional, estimate_asn, stream_id, AsnEstimator};
pub use sample::{draw_sample, read_manifest, write_manifest, ManifestEntry};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    /// Risk limit α.
    pub alpha: f64,
    /// Error inflation factor γ.
    pub gamma: f64,
    /// Simulated per-draw one-vote overstatement probability e.
    pub error_rate: f64,
    /// Number of simulated audits N.
    pub trials: u32,
    pub seed: u64,
}

impl Default for RiskParams {
    fn default() -> Self {
        RiskParams { alpha: 0.05, gamma: 1.1, error_rate: 0.002, trials: 20, seed: 0 }
    }
}

impl RiskParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("risk limit {} outside (0, 1)", self.alpha)));
        }
        if self.gamma.is_nan() || self.gamma <= 1.0 {
            return Err(Error::invalid(format!("inflation factor {} must exceed 1", self.gamma)));
        }
        if !(0.0..1.0).contains(&self.error_rate) {
            return Err(Error::invalid(format!("error rate {} outside [0, 1)", self.error_rate)));
        }
        if self.trials == 0 {
            return Err(Error::invalid("at least one simulation trial is required"));
        }
        Ok(())
    }

    pub fn kaplan_markov(&self) -> KaplanMarkov {
        KaplanMarkov { gamma: self.gamma }
    }
}

/// Average sample number: a draw count, or the full-count sentinel when no
/// affordable sample confirms the assertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Asn {
    Draws(u64),
    FullCount,
}

impl Asn {
    pub fn draws(self) -> Option<u64> {
        match self {
            Asn::Draws(n) => Some(n),
            Asn::FullCount => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Asn::Draws(_))
    }
}

impl fmt::Display for Asn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Asn::Draws(n) => write!(f, "{n}"),
            Asn::FullCount => f.write_str("--"),
        }
    }
}

impl Serialize for Asn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Asn::Draws(n) => s.serialize_u64(*n),
            Asn::FullCount => s.serialize_str("full_count"),
        }
    }
}

impl<'de> Deserialize<'de> for Asn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Draws(u64),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Draws(n) => Ok(Asn::Draws(n)),
            Repr::Tag(t) if t == "full_count" => Ok(Asn::FullCount),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!("unknown ASN value {t:?}"))),
        }
    }
}

/// Outcome of comparing one CVR with its paper ballot under one assertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discrepancy {
    Clean,
    Understatement,
    OneVote,
    TwoVote,
}

impl Discrepancy {
    pub fn code(self) -> char {
        match self {
            Discrepancy::Clean => 'c',
            Discrepancy::Understatement => 'u',
            Discrepancy::OneVote => '1',
            Discrepancy::TwoVote => '2',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        Some(match c {
            'c' => Discrepancy::Clean,
            'u' => Discrepancy::Understatement,
            '1' => Discrepancy::OneVote,
            '2' => Discrepancy::TwoVote,
            _ => return None,
        })
    }
}

/// Classify the overstatement ω = A(cvr) − A(paper) in units of the assorter bound.
pub fn discrepancy(assertion: &Assertion, cvr: &Ranking, paper: &Ranking) -> Discrepancy {
    let omega = assertion.assorter_value(cvr) - assertion.assorter_value(paper);
    let zero = Rational::from_integer(0);
    if omega == zero {
        Discrepancy::Clean
    } else if omega < zero {
        Discrepancy::Understatement
    } else if omega <= assertion.upper_bound() / 2 {
        Discrepancy::OneVote
    } else {
        Discrepancy::TwoVote
    }
}

/// A pluggable per-draw risk function.
pub trait RiskFunction {
    /// Natural log of the factor one draw applies to the P-value;
    /// `-inf` means the draw drives it to zero.
    fn log_factor(&self, margin: f64, category: Discrepancy) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KaplanMarkov {
    pub gamma: f64,
}

impl KaplanMarkov {
    pub fn clean_factor(&self, margin: f64) -> f64 {
        (1.0 - margin / (2.0 * self.gamma)).max(0.0)
    }
}

impl RiskFunction for KaplanMarkov {
    fn log_factor(&self, margin: f64, category: Discrepancy) -> f64 {
        let clean = self.clean_factor(margin).ln();
        match category {
            Discrepancy::Clean | Discrepancy::Understatement => clean,
            Discrepancy::OneVote => clean - (1.0 - 1.0 / (2.0 * self.gamma)).ln(),
            Discrepancy::TwoVote => clean - (1.0 - 1.0 / self.gamma).ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscrepancyCounts {
    pub clean: u64,
    pub understatement: u64,
    pub one_vote: u64,
    pub two_vote: u64,
}

impl DiscrepancyCounts {
    pub fn record(&mut self, category: Discrepancy) {
        match category {
            Discrepancy::Clean => self.clean += 1,
            Discrepancy::Understatement => self.understatement += 1,
            Discrepancy::OneVote => self.one_vote += 1,
            Discrepancy::TwoVote => self.two_vote += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.clean + self.understatement + self.one_vote + self.two_vote
    }

    fn by_category(&self) -> [(Discrepancy, u64); 4] {
        [
            (Discrepancy::Clean, self.clean),
            (Discrepancy::Understatement, self.understatement),
            (Discrepancy::OneVote, self.one_vote),
            (Discrepancy::TwoVote, self.two_vote),
        ]
    }
}

/// Sequential test state for one assertion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskState {
    pub p_value: f64,
    pub draws: u64,
    pub discrepancies: DiscrepancyCounts,
}

impl Default for RiskState {
    fn default() -> Self {
        RiskState { p_value: 1.0, draws: 0, discrepancies: DiscrepancyCounts::default() }
    }
}

impl RiskState {
    /// Log of the uncapped product of all per-draw factors. It depends only on
    /// the discrepancy counts, so draw order is immaterial.
    pub fn log_product(&self, margin: f64, rf: &impl RiskFunction) -> f64 {
        self.discrepancies
            .by_category()
            .iter()
            .filter(|(_, n)| *n > 0)
            .map(|&(cat, n)| n as f64 * rf.log_factor(margin, cat))
            .sum()
    }

    pub fn from_counts(discrepancies: DiscrepancyCounts, margin: f64, rf: &impl RiskFunction) -> Self {
        let mut s = RiskState { p_value: 1.0, draws: discrepancies.total(), discrepancies };
        s.p_value = s.log_product(margin, rf).exp().min(1.0);
        s
    }

    pub fn replay(categories: impl IntoIterator<Item = Discrepancy>, margin: f64, rf: &impl RiskFunction) -> Self {
        let mut counts = DiscrepancyCounts::default();
        for c in categories {
            counts.record(c);
        }
        RiskState::from_counts(counts, margin, rf)
    }
}

/// Applies one draw to `state`. A nonpositive margin cannot be audited.
pub fn km_step(state: &RiskState, margin: &Rational, category: Discrepancy, gamma: f64) -> Result<RiskState> {
    let mu = margin.to_f64().unwrap_or(0.0);
    if mu <= 0.0 {
        return Err(Error::invalid(format!("assertion margin {margin} is not positive; it cannot be audited")));
    }
    let mut counts = state.discrepancies;
    counts.record(category);
    Ok(RiskState::from_counts(counts, mu, &KaplanMarkov { gamma }))
}
