//! Ballot-level comparison audit rounds and the persisted audit state.
//!
//! The state file records every drawn ballot with one discrepancy code per
//! assertion. Risk states are derived from those logs, so replaying the
//! rounds reproduces the stored P-values exactly.

use std::fs;
use std::path::Path;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{CvrIndex, Rational};
use crate::risk::{
    discrepancy, draw_sample, estimate_additional, Asn, Discrepancy, DiscrepancyCounts, KaplanMarkov, ManifestEntry,
    RiskState,
};
use crate::spec::{estimate_audit_asn, AuditSpec};
use crate::viability::SpecStatus;

pub const STATE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditStatus {
    Confirmed,
    Escalate,
    FullCount,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawLog {
    pub draw_index: u64,
    pub ballot_id: String,
    /// One discrepancy code per spec assertion, in spec order.
    pub codes: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: u32,
    pub draws: Vec<DrawLog>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditState {
    pub schema_version: u32,
    pub spec_digest: String,
    pub seed: u64,
    pub rounds: Vec<RoundLog>,
    pub risk: Vec<RiskState>,
    pub checksum: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn spec_digest(spec: &AuditSpec) -> Result<String> {
    Ok(sha256_hex(spec.to_json()?.as_bytes()))
}

impl AuditState {
    pub fn new(spec: &AuditSpec, seed: u64) -> Result<Self> {
        let mut state = AuditState {
            schema_version: STATE_SCHEMA_VERSION,
            spec_digest: spec_digest(spec)?,
            seed,
            rounds: Vec::new(),
            risk: vec![RiskState::default(); spec.assertions.len()],
            checksum: String::new(),
        };
        state.seal()?;
        Ok(state)
    }

    /// Index of the next draw in the seeded sequence.
    pub fn next_draw(&self) -> u64 {
        self.rounds.iter().map(|r| r.draws.len() as u64).sum()
    }

    fn compute_checksum(&self) -> Result<String> {
        let unsealed = AuditState { checksum: String::new(), ..self.clone() };
        Ok(sha256_hex(&serde_json::to_vec(&unsealed)?))
    }

    fn seal(&mut self) -> Result<()> {
        self.checksum = self.compute_checksum()?;
        Ok(())
    }

    /// Recomputes every assertion's risk state from the round logs.
    pub fn replay(&self, spec: &AuditSpec) -> Result<Vec<RiskState>> {
        let mut counts = vec![DiscrepancyCounts::default(); spec.assertions.len()];
        for draw in self.rounds.iter().flat_map(|r| &r.draws) {
            if draw.codes.chars().count() != counts.len() {
                return Err(Error::invalid(format!("draw {} has the wrong number of codes", draw.draw_index)));
            }
            for (slot, code) in counts.iter_mut().zip(draw.codes.chars()) {
                let cat = Discrepancy::from_code(code)
                    .ok_or_else(|| Error::invalid(format!("unknown discrepancy code {code:?}")))?;
                slot.record(cat);
            }
        }
        spec.assertions.iter().zip(counts).map(|(a, c)| risk_from_counts(c, &a.margin, spec.risk.gamma)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != STATE_SCHEMA_VERSION {
            return Err(Error::SchemaVersion { expected: STATE_SCHEMA_VERSION, found });
        }
        let state: AuditState = serde_json::from_value(value)?;
        if state.compute_checksum()? != state.checksum {
            return Err(Error::Checksum);
        }
        Ok(state)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        AuditState::from_json(&text)
    }
}

fn risk_from_counts(counts: DiscrepancyCounts, margin: &Rational, gamma: f64) -> Result<RiskState> {
    let mu = margin.to_f64().unwrap_or(0.0);
    if counts.total() > 0 && mu <= 0.0 {
        return Err(Error::invalid(format!("assertion margin {margin} is not positive; it cannot be audited")));
    }
    Ok(RiskState::from_counts(counts, mu, &KaplanMarkov { gamma }))
}

fn ensure_auditable(spec: &AuditSpec, cvrs: &CvrIndex) -> Result<()> {
    if spec.status == SpecStatus::RequiresFullCount {
        return Err(Error::FullCount("the audit specification has no affordable assertion set".into()));
    }
    if cvrs.len() as u64 != spec.total_ballots {
        return Err(Error::invalid(format!(
            "CVR file has {} ballots but the contest has {}",
            cvrs.len(),
            spec.total_ballots
        )));
    }
    Ok(())
}

/// Starts an audit: a fresh state and the first-round manifest, sized by the
/// spec's overall ASN.
pub fn init_audit(spec: &AuditSpec, cvrs: &CvrIndex, seed: u64) -> Result<(AuditState, Vec<ManifestEntry>)> {
    ensure_auditable(spec, cvrs)?;
    let size = match estimate_audit_asn(spec, &spec.risk) {
        Asn::Draws(n) => n.max(1),
        Asn::FullCount => return Err(Error::FullCount("estimated sample size reaches the ballot count".into())),
    };
    let state = AuditState::new(spec, seed)?;
    let manifest = draw_sample(seed, 0, size, &cvrs.ids());
    Ok((state, manifest))
}

/// Manifest for the next round of `count` draws.
pub fn next_manifest(state: &AuditState, cvrs: &CvrIndex, count: u64) -> Vec<ManifestEntry> {
    draw_sample(state.seed, state.next_draw(), count, &cvrs.ids())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssertionRiskReport {
    pub assertion: String,
    pub margin: f64,
    pub p_value: f64,
    pub draws: u64,
    pub discrepancies: DiscrepancyCounts,
    pub confirmed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u32,
    pub round_draws: u64,
    pub total_draws: u64,
    pub status: AuditStatus,
    pub suggested_additional: Option<u64>,
    pub assertions: Vec<AssertionRiskReport>,
}

/// Compares each drawn CVR with its manual interpretation under every
/// assertion, appends the round to `state` and reports the new status.
pub fn run_audit_round(
    spec: &AuditSpec,
    cvrs: &CvrIndex,
    manifest: &[ManifestEntry],
    interpretations: &CvrIndex,
    state: &mut AuditState,
) -> Result<RoundReport> {
    ensure_auditable(spec, cvrs)?;
    if state.spec_digest != spec_digest(spec)? {
        return Err(Error::invalid("audit state belongs to a different specification"));
    }
    if state.risk.len() != spec.assertions.len() {
        return Err(Error::invalid("audit state does not match the specification's assertions"));
    }
    if manifest.is_empty() {
        return Err(Error::invalid("manifest is empty"));
    }
    let start = state.next_draw();
    if manifest[0].draw_index != start {
        return Err(Error::invalid(format!(
            "manifest starts at draw {} but the audit continues at draw {start}",
            manifest[0].draw_index
        )));
    }
    if draw_sample(state.seed, start, manifest.len() as u64, &cvrs.ids()) != manifest {
        return Err(Error::invalid("manifest does not match the seeded draw sequence"));
    }

    let mut draws = Vec::with_capacity(manifest.len());
    for entry in manifest {
        let cvr = cvrs.get(&entry.ballot_id).ok_or_else(|| Error::UnknownBallotId(entry.ballot_id.clone()))?;
        let paper = interpretations
            .get(&entry.ballot_id)
            .ok_or_else(|| Error::MissingInterpretation(entry.ballot_id.clone()))?;
        let codes: String =
            spec.assertions.iter().map(|a| discrepancy(&a.assertion, &cvr.ranking, &paper.ranking).code()).collect();
        draws.push(DrawLog { draw_index: entry.draw_index, ballot_id: entry.ballot_id.clone(), codes });
    }

    let round = state.rounds.len() as u32 + 1;
    let mut next = state.clone();
    next.rounds.push(RoundLog { round, draws });
    next.risk = next.replay(spec)?;
    let report = evaluate(spec, &next, round, manifest.len() as u64);
    next.seal()?;
    *state = next;
    Ok(report)
}

fn evaluate(spec: &AuditSpec, state: &AuditState, round: u32, round_draws: u64) -> RoundReport {
    let alpha = spec.risk.alpha;
    let kmf = spec.risk.kaplan_markov();
    let mut suggested = Asn::Draws(0);
    let mut assertions = Vec::with_capacity(spec.assertions.len());
    for (a, risk) in spec.assertions.iter().zip(&state.risk) {
        let confirmed = risk.p_value <= alpha;
        if !confirmed {
            let mu = a.margin_f64();
            let log_p = risk.log_product(mu, &kmf);
            let more = estimate_additional(&a.assertion, &a.margin, log_p, spec.total_ballots, &spec.risk);
            suggested = suggested.max(more);
        }
        assertions.push(AssertionRiskReport {
            assertion: a.assertion.describe(&spec.roster).to_string(),
            margin: a.margin_f64(),
            p_value: risk.p_value,
            draws: risk.draws,
            discrepancies: risk.discrepancies,
            confirmed,
        });
    }
    let (status, suggested_additional) = if assertions.iter().all(|a| a.confirmed) {
        (AuditStatus::Confirmed, None)
    } else {
        match suggested {
            Asn::Draws(n) => (AuditStatus::Escalate, Some(n.max(1))),
            Asn::FullCount => (AuditStatus::FullCount, None),
        }
    };
    RoundReport { round, round_draws, total_draws: state.next_draw(), status, suggested_additional, assertions }
}
