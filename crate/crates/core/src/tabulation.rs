//! Reported-outcome computation: plurality or IRV viability followed by
//! Hamilton (largest-remainder) delegate allocation.

use log::warn;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CandidateId, CandidateSet, ElectionProfile, Ranking, Rational, Style};

/// First candidate on `ballot` not in `eliminated`; `None` means exhausted.
pub fn top_remaining(ballot: &Ranking, eliminated: CandidateSet) -> Option<CandidateId> {
    ballot.top_remaining(eliminated)
}

/// Pile sizes at the start of one viability round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    /// Indexed by candidate; eliminated candidates hold 0.
    pub piles: Vec<u64>,
    pub exhausted: u64,
    pub eliminated: Option<CandidateId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViabilityResult {
    pub viable: CandidateSet,
    /// Candidates in the order they were eliminated; empty for plurality.
    pub elimination_order: Vec<CandidateId>,
    pub rounds: Vec<Round>,
    /// Final pile per candidate (0 for eliminated or non-viable candidates).
    pub final_tallies: Vec<u64>,
    /// The fixed viability denominator |B_valid|.
    pub valid_ballots: u64,
    pub total_ballots: u64,
    /// An elimination was decided by roster order between equal lowest piles.
    pub elimination_tie: bool,
    /// Some candidate sits exactly on the threshold.
    pub exact_threshold: bool,
}

impl ViabilityResult {
    pub fn final_tally(&self, c: CandidateId) -> u64 {
        self.final_tallies[c.index()]
    }

    /// Q, the number of ballots counting toward a viable candidate.
    pub fn qualified(&self) -> u64 {
        self.viable.iter().map(|c| self.final_tally(c)).sum()
    }
}

fn on_threshold(profile: &ElectionProfile, tally: u64, valid: u64) -> bool {
    let t = profile.threshold().ratio();
    tally as i128 * *t.denom() as i128 == valid as i128 * *t.numer() as i128
}

pub fn plurality_viability(profile: &ElectionProfile) -> Result<ViabilityResult> {
    let valid = profile.valid_ballots();
    if valid == 0 {
        return Err(Error::UnsupportedOutcome("no valid votes in the contest".into()));
    }
    let tallies = profile.tallies(CandidateSet::EMPTY);
    let threshold = profile.threshold();
    let viable: CandidateSet =
        profile.roster().ids().filter(|&c| threshold.reached_by(tallies.pile(c), valid)).collect();
    if viable.is_empty() {
        return Err(Error::UnsupportedOutcome(format!("no candidate reaches the {threshold} threshold")));
    }
    let exact_threshold = profile.roster().ids().any(|c| on_threshold(profile, tallies.pile(c), valid));
    let final_tallies = profile.roster().ids().map(|c| if viable.contains(c) { tallies.pile(c) } else { 0 }).collect();
    Ok(ViabilityResult {
        viable,
        elimination_order: Vec::new(),
        rounds: vec![Round { piles: tallies.piles.clone(), exhausted: 0, eliminated: None }],
        final_tallies,
        valid_ballots: valid,
        total_ballots: profile.total_ballots(),
        elimination_tie: false,
        exact_threshold,
    })
}

/// IRV viability against the fixed denominator |B_valid|. The lowest pile is
/// eliminated each round; equal lowest piles go to the earliest roster entry.
pub fn irv_viability(profile: &ElectionProfile) -> Result<ViabilityResult> {
    let valid = profile.valid_ballots();
    if valid == 0 {
        return Err(Error::UnsupportedOutcome("no valid votes in the contest".into()));
    }
    let threshold = profile.threshold();
    let mut eliminated = CandidateSet::EMPTY;
    let mut order = Vec::new();
    let mut rounds = Vec::new();
    let mut tie = false;
    loop {
        let remaining = profile.roster().all().difference(eliminated);
        if remaining.is_empty() {
            return Err(Error::UnsupportedOutcome(format!(
                "every candidate was eliminated before reaching the {threshold} threshold"
            )));
        }
        let tallies = profile.tallies(eliminated);
        if remaining.iter().all(|c| threshold.reached_by(tallies.pile(c), valid)) {
            let exact_threshold = remaining.iter().any(|c| on_threshold(profile, tallies.pile(c), valid));
            rounds.push(Round { piles: tallies.piles.clone(), exhausted: tallies.exhausted, eliminated: None });
            return Ok(ViabilityResult {
                viable: remaining,
                elimination_order: order,
                rounds,
                final_tallies: tallies.piles,
                valid_ballots: valid,
                total_ballots: profile.total_ballots(),
                elimination_tie: tie,
                exact_threshold,
            });
        }
        let lowest = remaining.iter().min_by_key(|&c| (tallies.pile(c), c)).expect("remaining is nonempty");
        let low = tallies.pile(lowest);
        if remaining.iter().filter(|&c| tallies.pile(c) == low).count() > 1 {
            warn!("elimination tie at {low} ballots; eliminating {} by roster order", profile.roster().label(lowest));
            tie = true;
        }
        rounds.push(Round { piles: tallies.piles, exhausted: tallies.exhausted, eliminated: Some(lowest) });
        order.push(lowest);
        eliminated = eliminated.with(lowest);
    }
}

pub fn viability(profile: &ElectionProfile) -> Result<ViabilityResult> {
    match profile.style() {
        Style::Plurality => plurality_viability(profile),
        Style::Irv => irv_viability(profile),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllocationEntry {
    pub candidate: CandidateId,
    pub tally: u64,
    /// Share of the qualified vote.
    pub proportion: Rational,
    pub quota: Rational,
    pub floor: u32,
    pub remainder: Rational,
    pub delegates: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllocationResult {
    pub qualified: u64,
    /// One entry per viable candidate, in roster order.
    pub entries: Vec<AllocationEntry>,
    /// Delegates left after the floor stage.
    pub leftover: u32,
    /// Viable candidates ordered by the remainder-stage preference.
    pub remainder_rank: Vec<CandidateId>,
    /// Equal remainders straddled the round-up cut.
    pub tie: bool,
}

impl AllocationResult {
    pub fn delegates_for(&self, c: CandidateId) -> Option<u32> {
        self.entries.iter().find(|e| e.candidate == c).map(|e| e.delegates)
    }

    pub fn entry(&self, c: CandidateId) -> Option<&AllocationEntry> {
        self.entries.iter().find(|e| e.candidate == c)
    }
}

/// Hamilton allocation of `delegates` among the viable candidates. Remainder
/// ties prefer the larger final tally, then roster order.
pub fn hamilton_allocate(viability: &ViabilityResult, delegates: u32) -> AllocationResult {
    assert!(!viability.viable.is_empty(), "allocation needs a viable candidate");
    assert!(delegates >= 1, "allocation needs at least one delegate");
    let qualified = viability.qualified();
    let d = delegates as i128;
    let mut entries: Vec<AllocationEntry> = viability
        .viable
        .iter()
        .map(|c| {
            let tally = viability.final_tally(c);
            let proportion = Rational::new(tally as i128, qualified as i128);
            let quota = proportion * d;
            let floor = quota.floor().to_integer() as u32;
            let remainder = quota.fract();
            AllocationEntry { candidate: c, tally, proportion, quota, floor, remainder, delegates: floor }
        })
        .collect();
    let leftover = delegates - entries.iter().map(|e| e.floor).sum::<u32>();

    let mut rank: Vec<usize> = (0..entries.len()).collect();
    rank.sort_by(|&a, &b| {
        let (x, y) = (&entries[a], &entries[b]);
        y.remainder.cmp(&x.remainder).then(y.tally.cmp(&x.tally)).then(x.candidate.cmp(&y.candidate))
    });
    let cut = leftover as usize;
    let tie = cut > 0 && cut < rank.len() && entries[rank[cut - 1]].remainder == entries[rank[cut]].remainder;
    if tie {
        warn!("remainder tie at the round-up cut; broken by tally then roster order");
    }
    for &i in &rank[..cut] {
        entries[i].delegates += 1;
    }
    AllocationResult {
        qualified,
        remainder_rank: rank.iter().map(|&i| entries[i].candidate).collect(),
        entries,
        leftover,
        tie,
    }
}

/// Viability plus allocation: the full reported outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportedOutcome {
    pub viability: ViabilityResult,
    pub allocation: AllocationResult,
}

impl ReportedOutcome {
    pub fn viable(&self) -> CandidateSet {
        self.viability.viable
    }
}

pub fn tabulate(profile: &ElectionProfile) -> Result<ReportedOutcome> {
    let viability = viability(profile)?;
    let allocation = hamilton_allocate(&viability, profile.delegates());
    Ok(ReportedOutcome { viability, allocation })
}

#[derive(Serialize)]
pub struct OutcomeReport {
    pub style: Style,
    pub threshold: String,
    pub delegates: u32,
    pub total_ballots: u64,
    pub valid_ballots: u64,
    pub viable: Vec<String>,
    pub elimination_order: Vec<String>,
    pub rounds: Vec<RoundReport>,
    pub qualified: u64,
    pub allocation: Vec<AllocationReport>,
    pub remainder_rank: Vec<String>,
    pub elimination_tie: bool,
    pub remainder_tie: bool,
    pub exact_threshold: bool,
}

#[derive(Serialize)]
pub struct RoundReport {
    pub piles: Vec<PileReport>,
    pub exhausted: u64,
    pub eliminated: Option<String>,
}

#[derive(Serialize)]
pub struct PileReport {
    pub candidate: String,
    pub ballots: u64,
    pub proportion: f64,
}

#[derive(Serialize)]
pub struct AllocationReport {
    pub candidate: String,
    pub tally: u64,
    pub proportion: f64,
    pub quota: String,
    pub quota_approx: f64,
    pub floor: u32,
    pub delegates: u32,
}

fn approx(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl OutcomeReport {
    pub fn new(profile: &ElectionProfile, outcome: &ReportedOutcome) -> Self {
        let roster = profile.roster();
        let v = &outcome.viability;
        let valid = v.valid_ballots as f64;
        let mut eliminated = CandidateSet::EMPTY;
        let rounds = v
            .rounds
            .iter()
            .map(|r| {
                let piles = roster
                    .ids()
                    .filter(|&c| !eliminated.contains(c))
                    .map(|c| PileReport {
                        candidate: roster.label(c).to_string(),
                        ballots: r.piles[c.index()],
                        proportion: r.piles[c.index()] as f64 / valid,
                    })
                    .collect();
                if let Some(c) = r.eliminated {
                    eliminated = eliminated.with(c);
                }
                RoundReport {
                    piles,
                    exhausted: r.exhausted,
                    eliminated: r.eliminated.map(|c| roster.label(c).to_string()),
                }
            })
            .collect();
        OutcomeReport {
            style: profile.style(),
            threshold: profile.threshold().to_string(),
            delegates: profile.delegates(),
            total_ballots: v.total_ballots,
            valid_ballots: v.valid_ballots,
            viable: roster.set_labels(v.viable),
            elimination_order: v.elimination_order.iter().map(|&c| roster.label(c).to_string()).collect(),
            rounds,
            qualified: outcome.allocation.qualified,
            allocation: outcome
                .allocation
                .entries
                .iter()
                .map(|e| AllocationReport {
                    candidate: roster.label(e.candidate).to_string(),
                    tally: e.tally,
                    proportion: approx(&e.proportion),
                    quota: e.quota.to_string(),
                    quota_approx: approx(&e.quota),
                    floor: e.floor,
                    delegates: e.delegates,
                })
                .collect(),
            remainder_rank: outcome.allocation.remainder_rank.iter().map(|&c| roster.label(c).to_string()).collect(),
            elimination_tie: v.elimination_tie,
            remainder_tie: outcome.allocation.tie,
            exact_threshold: v.exact_threshold,
        }
    }
}
