use std::collections::HashMap;
use std::fs;
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CvrRecord, ElectionProfile, Ranking, Roster, Style, Threshold};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ElectionFile {
    candidates: Vec<String>,
    threshold: Value,
    delegates: Value,
    style: Style,
    ballots: Vec<BallotLine>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BallotLine {
    ranking: Vec<String>,
    count: Value,
}

#[derive(Serialize)]
struct ElectionOut<'a> {
    candidates: &'a [String],
    threshold: String,
    delegates: u32,
    style: Style,
    ballots: Vec<BallotOut>,
}

#[derive(Serialize)]
struct BallotOut {
    ranking: Vec<String>,
    count: u64,
}

/// Parses a threshold given as a rational (`"15/100"`) or a decimal (`"0.15"`, `0.15`).
pub fn parse_threshold(text: &str) -> Result<Threshold> {
    let text = text.trim();
    let bad = || Error::invalid(format!("malformed threshold {text:?}"));
    let ratio = if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d <= 0 {
            return Err(bad());
        }
        Ratio::new(n, d)
    } else {
        let (int, frac) = text.split_once('.').unwrap_or((text, ""));
        if int.is_empty() && frac.is_empty()
            || !int.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
            || frac.len() > 15
        {
            return Err(bad());
        }
        let denom = 10i64.pow(frac.len() as u32);
        let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        Ratio::new(int.checked_mul(denom).ok_or_else(bad)? + frac, denom)
    };
    Threshold::new(ratio)
}

fn nonnegative_integer(v: &Value, what: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| Error::invalid(format!("{what} must be a nonnegative integer, found {v}")))
}

/// Parses and validates the election JSON format.
pub fn parse_election(text: &str) -> Result<ElectionProfile> {
    let file: ElectionFile = serde_json::from_str(text)?;
    let roster = Roster::new(file.candidates)?;
    let threshold = match &file.threshold {
        Value::String(s) => parse_threshold(s)?,
        Value::Number(n) => parse_threshold(&n.to_string())?,
        other => return Err(Error::invalid(format!("malformed threshold {other}"))),
    };
    let delegates = nonnegative_integer(&file.delegates, "delegates")?;
    let delegates =
        u32::try_from(delegates).map_err(|_| Error::invalid(format!("delegate count {delegates} too large")))?;
    let mut ballots = Vec::with_capacity(file.ballots.len());
    for line in &file.ballots {
        let ranking = Ranking::parse(&roster, &line.ranking)?;
        let count = nonnegative_integer(&line.count, "ballot count")?;
        ballots.push((ranking, count));
    }
    ElectionProfile::new(roster, ballots, threshold, delegates, file.style)
}

pub fn load_election(path: impl AsRef<Path>) -> Result<ElectionProfile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_election(&text)
}

/// Writes a profile in the election JSON format, ballots in canonical order.
pub fn save_election(profile: &ElectionProfile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let out = ElectionOut {
        candidates: profile.roster().labels(),
        threshold: profile.threshold().to_string(),
        delegates: profile.delegates(),
        style: profile.style(),
        ballots: profile
            .groups()
            .iter()
            .map(|(r, n)| BallotOut { ranking: r.labels(profile.roster()), count: *n })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// CVRs in file order, indexed by ballot id.
#[derive(Clone, Debug)]
pub struct CvrIndex {
    records: Vec<CvrRecord>,
    by_id: HashMap<String, usize>,
}

impl CvrIndex {
    pub fn new(records: Vec<CvrRecord>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if by_id.insert(r.ballot_id.clone(), i).is_some() {
                return Err(Error::DuplicateBallotId(r.ballot_id.clone()));
            }
        }
        Ok(CvrIndex { records, by_id })
    }

    pub fn records(&self) -> &[CvrRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, ballot_id: &str) -> Option<&CvrRecord> {
        self.by_id.get(ballot_id).map(|&i| &self.records[i])
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.ballot_id.clone()).collect()
    }
}

/// One CVR per ballot of `profile`, with ids `B000001`, `B000002`, ... in
/// group order.
pub fn expand_cvrs(profile: &ElectionProfile) -> Vec<CvrRecord> {
    let mut out = Vec::with_capacity(profile.total_ballots() as usize);
    for (ranking, n) in profile.groups() {
        for _ in 0..*n {
            let ballot_id = format!("B{:06}", out.len() + 1);
            out.push(CvrRecord { ballot_id, ranking: ranking.clone() });
        }
    }
    out
}

pub fn write_cvrs(records: &[CvrRecord], roster: &Roster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ballot_id", "ranking"])?;
    for r in records {
        w.write_record([r.ballot_id.as_str(), &r.ranking.labels(roster).join("|")])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn parse_cell(roster: &Roster, id: &str, cell: &str) -> Result<Ranking> {
    if cell.trim().is_empty() {
        return Ok(Ranking::blank());
    }
    let labels: Vec<&str> = cell.split('|').map(str::trim).collect();
    if labels.iter().any(|l| l.is_empty()) {
        return Err(Error::invalid(format!("ballot {id:?}: malformed ranking cell {cell:?}")));
    }
    Ranking::parse(roster, &labels)
        .map_err(|e| Error::invalid(format!("ballot {id:?}: malformed ranking cell {cell:?}: {e}")))
}

/// Reads a `ballot_id,ranking` CSV; ranking cells are `|`-separated labels.
pub fn load_cvrs(path: impl AsRef<Path>, roster: &Roster) -> Result<CvrIndex> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_cvrs(file, roster)
}

pub(crate) fn read_cvrs(reader: impl std::io::Read, roster: &Roster) -> Result<CvrIndex> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "ballot_id" || &headers[1] != "ranking" {
        return Err(Error::invalid(format!(
            "expected header `ballot_id,ranking`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let id = row[0].trim().to_string();
        if id.is_empty() {
            return Err(Error::invalid("empty ballot id"));
        }
        let ranking = parse_cell(roster, &id, &row[1])?;
        records.push(CvrRecord { ballot_id: id, ranking });
    }
    CvrIndex::new(records)
}
