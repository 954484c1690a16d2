//! Audit specifications: the generated assertion set for one contest, its
//! JSON file format, and the end-to-end generation pipeline.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::assertions::Assertion;
use crate::delegate::{gen_delegate_assertions, DelegateLevel};
use crate::error::{Error, Result};
use crate::model::{parse_threshold, CandidateSet, ElectionProfile, Rational, Roster, Style, Threshold};
use crate::risk::{estimate_asn, Asn, RiskParams};
use crate::score::{Scored, Scorer};
use crate::tabulation::{tabulate, ReportedOutcome};
use crate::viability::{branch_and_bound, gen_plurality_viability, SpecStatus};

pub const SCHEMA_VERSION: u32 = 1;

/// 1 audits viability only; 2 adds "at least a_c − 1 delegates"; 3 adds exact delegates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct AuditLevel(u8);

impl AuditLevel {
    pub const VIABILITY: AuditLevel = AuditLevel(1);
    pub const ALMOST_ALL_DELEGATES: AuditLevel = AuditLevel(2);
    pub const ALL_DELEGATES: AuditLevel = AuditLevel(3);

    pub fn new(level: u8) -> Result<Self> {
        match level {
            1..=3 => Ok(AuditLevel(level)),
            _ => Err(Error::invalid(format!("audit level must be 1, 2 or 3, not {level}"))),
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn delegate_level(self) -> Option<DelegateLevel> {
        match self.0 {
            2 => Some(DelegateLevel::AllButOne),
            3 => Some(DelegateLevel::Exact),
            _ => None,
        }
    }
}

impl TryFrom<u8> for AuditLevel {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        AuditLevel::new(v)
    }
}

impl From<AuditLevel> for u8 {
    fn from(l: AuditLevel) -> u8 {
        l.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssertionRole {
    Viability,
    Delegate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecAssertion {
    pub assertion: Assertion,
    pub role: AssertionRole,
    pub upper_bound: Rational,
    pub margin: Rational,
    pub eae: Asn,
}

impl SpecAssertion {
    fn from_scored(s: &Scored, role: AssertionRole) -> Self {
        SpecAssertion {
            assertion: s.assertion.clone(),
            role,
            upper_bound: s.summary.upper_bound,
            margin: s.summary.margin,
            eae: s.eae,
        }
    }

    pub fn margin_f64(&self) -> f64 {
        self.margin.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditSpec {
    pub roster: Roster,
    pub threshold: Threshold,
    pub delegates: u32,
    pub style: Style,
    pub total_ballots: u64,
    pub level: AuditLevel,
    pub status: SpecStatus,
    pub risk: RiskParams,
    pub overall_asn: Asn,
    pub assertions: Vec<SpecAssertion>,
}

impl AuditSpec {
    pub fn to_json(&self) -> Result<String> {
        let file = SpecFile {
            schema_version: SCHEMA_VERSION,
            candidates: self.roster.labels().to_vec(),
            threshold: self.threshold.to_string(),
            delegates: self.delegates,
            style: self.style,
            total_ballots: self.total_ballots,
            level: self.level,
            status: self.status,
            alpha: self.risk.alpha,
            gamma: self.risk.gamma,
            error_rate: self.risk.error_rate,
            trials: self.risk.trials,
            seed: self.risk.seed,
            overall_asn: self.overall_asn,
            assertions: self.assertions.iter().map(|a| AssertionRecord::new(a, &self.roster)).collect(),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != SCHEMA_VERSION {
            return Err(Error::SchemaVersion { expected: SCHEMA_VERSION, found });
        }
        let file: SpecFile = serde_json::from_value(value)?;
        let roster = Roster::new(file.candidates)?;
        let assertions = file.assertions.into_iter().map(|r| r.into_spec_assertion(&roster)).collect::<Result<_>>()?;
        let risk = RiskParams {
            alpha: file.alpha,
            gamma: file.gamma,
            error_rate: file.error_rate,
            trials: file.trials,
            seed: file.seed,
        };
        risk.validate()?;
        Ok(AuditSpec {
            threshold: parse_threshold(&file.threshold)?,
            roster,
            delegates: file.delegates,
            style: file.style,
            total_ballots: file.total_ballots,
            level: file.level,
            status: file.status,
            risk,
            overall_asn: file.overall_asn,
            assertions,
        })
    }
}

pub fn save_audit_spec(spec: &AuditSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, spec.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_audit_spec(path: impl AsRef<Path>) -> Result<AuditSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AuditSpec::from_json(&text)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    schema_version: u32,
    candidates: Vec<String>,
    threshold: String,
    delegates: u32,
    style: Style,
    total_ballots: u64,
    level: AuditLevel,
    status: SpecStatus,
    alpha: f64,
    gamma: f64,
    error_rate: f64,
    trials: u32,
    seed: u64,
    overall_asn: Asn,
    assertions: Vec<AssertionRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AssertionType {
    Viable,
    NonViable,
    IrvWins,
    PairwiseDiff,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssertionRecord {
    #[serde(rename = "type")]
    kind: AssertionType,
    role: AssertionRole,
    winner: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loser: Option<String>,
    eliminated: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<String>,
    upper_bound: String,
    margin: String,
    margin_approx: f64,
    eae: Asn,
}

fn parse_rational(text: &str, what: &str) -> Result<Rational> {
    text.parse::<Rational>().map_err(|_| Error::invalid(format!("malformed {what} {text:?}")))
}

impl AssertionRecord {
    fn new(a: &SpecAssertion, roster: &Roster) -> Self {
        let (kind, t, d) = match &a.assertion {
            Assertion::Viable { threshold, .. } => (AssertionType::Viable, Some(threshold.to_string()), None),
            Assertion::NonViable { threshold, .. } => (AssertionType::NonViable, Some(threshold.to_string()), None),
            Assertion::IrvWins { .. } => (AssertionType::IrvWins, None, None),
            Assertion::PairwiseDiff { d, .. } => (AssertionType::PairwiseDiff, None, Some(d.to_string())),
        };
        AssertionRecord {
            kind,
            role: a.role,
            winner: roster.label(a.assertion.winner()).to_string(),
            loser: a.assertion.loser().map(|c| roster.label(c).to_string()),
            eliminated: roster.set_labels(a.assertion.eliminated()),
            t,
            d,
            upper_bound: a.upper_bound.to_string(),
            margin: a.margin.to_string(),
            margin_approx: (a.margin_f64() * 1000.0).round() / 1000.0,
            eae: a.eae,
        }
    }

    fn into_spec_assertion(self, roster: &Roster) -> Result<SpecAssertion> {
        let winner = roster.lookup(&self.winner)?;
        let eliminated: CandidateSet = roster.set_from_labels(&self.eliminated)?;
        let loser = || {
            self.loser
                .as_deref()
                .ok_or_else(|| Error::invalid("assertion is missing its loser"))
                .and_then(|l| roster.lookup(l))
        };
        let t = || {
            self.t
                .as_deref()
                .ok_or_else(|| Error::invalid("assertion is missing t"))
                .and_then(|t| parse_rational(t, "t"))
        };
        let assertion = match self.kind {
            AssertionType::Viable => Assertion::Viable { candidate: winner, eliminated, threshold: t()? },
            AssertionType::NonViable => Assertion::NonViable { candidate: winner, eliminated, threshold: t()? },
            AssertionType::IrvWins => Assertion::IrvWins { winner, loser: loser()?, eliminated },
            AssertionType::PairwiseDiff => {
                let d = self.d.as_deref().ok_or_else(|| Error::invalid("assertion is missing d"))?;
                Assertion::PairwiseDiff { winner, loser: loser()?, d: parse_rational(d, "d")?, eliminated }
            }
        };
        assertion.validate(roster.len())?;
        Ok(SpecAssertion {
            upper_bound: parse_rational(&self.upper_bound, "upper bound")?,
            margin: parse_rational(&self.margin, "margin")?,
            assertion,
            role: self.role,
            eae: self.eae,
        })
    }
}

/// Output of the generation pipeline.
#[derive(Clone, Debug)]
pub struct Generated {
    pub outcome: ReportedOutcome,
    pub spec: AuditSpec,
    /// One line per pruned alternative outcome or emitted assertion.
    pub proof_log: Vec<String>,
    pub elapsed: Duration,
}

/// Tabulates `profile` and generates the assertion set for `level`.
pub fn generate(profile: &ElectionProfile, level: AuditLevel, params: RiskParams) -> Result<Generated> {
    params.validate()?;
    let start = Instant::now();
    let outcome = tabulate(profile)?;
    let mut scorer = Scorer::new(profile, params);
    let viability = match profile.style() {
        Style::Plurality => gen_plurality_viability(&outcome, &mut scorer),
        Style::Irv => branch_and_bound(&outcome, &mut scorer),
    };
    let mut status = viability.status;
    let mut proof_log = viability.proof_log;
    let mut assertions: Vec<SpecAssertion> =
        viability.assertions.iter().map(|s| SpecAssertion::from_scored(s, AssertionRole::Viability)).collect();
    if let Some(dl) = level.delegate_level() {
        let set = gen_delegate_assertions(&outcome, dl, &mut scorer);
        if set.status == SpecStatus::RequiresFullCount {
            status = SpecStatus::RequiresFullCount;
        }
        if outcome.allocation.tie && dl == DelegateLevel::Exact {
            proof_log.push("remainder tie in the allocation: delegate assertions have margin 0".into());
        }
        for skip in &set.skipped {
            proof_log.push(format!(
                "skip vacuous pair {} > {} + {}",
                profile.roster().label(skip.winner),
                profile.roster().label(skip.loser),
                skip.d
            ));
        }
        for s in &set.assertions {
            proof_log.push(format!(
                "{} (margin {:.3}, eae {})",
                s.assertion.describe(profile.roster()),
                s.summary.margin_f64(),
                s.eae
            ));
            assertions.push(SpecAssertion::from_scored(s, AssertionRole::Delegate));
        }
    }
    if assertions.iter().any(|a| !a.eae.is_finite()) {
        status = SpecStatus::RequiresFullCount;
    }
    let overall_asn = if status == SpecStatus::RequiresFullCount {
        Asn::FullCount
    } else {
        assertions.iter().map(|a| a.eae).max().unwrap_or(Asn::Draws(0))
    };
    let spec = AuditSpec {
        roster: profile.roster().clone(),
        threshold: profile.threshold(),
        delegates: profile.delegates(),
        style: profile.style(),
        total_ballots: profile.total_ballots(),
        level,
        status,
        risk: params,
        overall_asn,
        assertions,
    };
    Ok(Generated { outcome, spec, proof_log, elapsed: start.elapsed() })
}

/// Overall ASN of a spec under `params`: every assertion is tested on every
/// drawn ballot, so the most expensive assertion sets the sample size.
pub fn estimate_audit_asn(spec: &AuditSpec, params: &RiskParams) -> Asn {
    if spec.status == SpecStatus::RequiresFullCount {
        return Asn::FullCount;
    }
    spec.assertions
        .iter()
        .map(|a| estimate_asn(&a.assertion, &a.margin, spec.total_ballots, params))
        .max()
        .unwrap_or(Asn::Draws(0))
}
