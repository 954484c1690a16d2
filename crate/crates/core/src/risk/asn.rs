use std::collections::HashMap;

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use sha2::{Digest, Sha256};

use super::{Asn, Discrepancy, KaplanMarkov, RiskFunction, RiskParams};
use crate::assertions::Assertion;
use crate::model::Rational;

/// A 64-bit stream identifier for an assertion, used to derive its PRNG streams.
pub fn stream_id(assertion: &Assertion) -> u64 {
    let digest = Sha256::digest(assertion.key().as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

fn trial_rng(seed: u64, stream: u64, trial: u32) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"asn-trial");
    h.update(seed.to_le_bytes());
    h.update(stream.to_le_bytes());
    h.update(trial.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Draws needed by one simulated audit, capped at `cap`.
///
/// Clean draws between simulated overstatements are skipped in bulk: the gap
/// to the next overstatement is geometric with success probability `e`, and
/// the number of clean draws still needed is `⌈(ln α − ln P)/ln f⌉`.
fn simulate_trial(
    log_alpha: f64,
    start_log_p: f64,
    log_clean: f64,
    log_one_vote: f64,
    cap: u64,
    gaps: Option<&Geometric>,
    rng: &mut ChaCha8Rng,
) -> u64 {
    let mut log_p = start_log_p;
    let mut draws = 0u64;
    loop {
        if log_p <= log_alpha {
            return draws.min(cap);
        }
        if log_clean == f64::NEG_INFINITY {
            // Any draw, clean or not, drives the P-value to zero.
            return (draws + 1).min(cap);
        }
        let needed = ((log_alpha - log_p) / log_clean).ceil();
        let needed = if needed.is_finite() && needed < cap as f64 { needed as u64 } else { u64::MAX };
        let gap = gaps.map_or(u64::MAX, |g| g.sample(rng));
        if gap >= needed {
            return draws.saturating_add(needed).min(cap);
        }
        draws += gap + 1;
        if draws >= cap {
            return cap;
        }
        log_p += gap as f64 * log_clean + log_one_vote;
    }
}

fn median_draws(margin: f64, start_log_p: f64, total_ballots: u64, params: &RiskParams, stream: u64) -> Asn {
    if margin.is_nan() || margin <= 0.0 || total_ballots == 0 {
        return Asn::FullCount;
    }
    let km = KaplanMarkov { gamma: params.gamma };
    let log_clean = km.log_factor(margin, Discrepancy::Clean);
    let log_one = km.log_factor(margin, Discrepancy::OneVote);
    let log_alpha = params.alpha.ln();
    let gaps = (params.error_rate > 0.0).then(|| Geometric::new(params.error_rate).expect("rate in (0, 1)"));
    let mut lengths: Vec<u64> = (0..params.trials)
        .map(|t| {
            let mut rng = trial_rng(params.seed, stream, t);
            simulate_trial(log_alpha, start_log_p, log_clean, log_one, total_ballots, gaps.as_ref(), &mut rng)
        })
        .collect();
    lengths.sort_unstable();
    let median = lengths[lengths.len() / 2];
    if median >= total_ballots {
        Asn::FullCount
    } else {
        Asn::Draws(median)
    }
}

/// Median simulated sample size for one assertion with the given margin. Each
/// trial draws ballots until the P-value reaches α, or until |B| draws (the
/// full-count sentinel). A nonpositive margin cannot be confirmed.
pub fn estimate_asn(assertion: &Assertion, margin: &Rational, total_ballots: u64, params: &RiskParams) -> Asn {
    let mu = margin.to_f64().unwrap_or(0.0);
    median_draws(mu, 0.0, total_ballots, params, stream_id(assertion))
}

/// Further draws expected to confirm an assertion whose current uncapped
/// P-value has log `log_p`.
pub fn estimate_additional(
    assertion: &Assertion,
    margin: &Rational,
    log_p: f64,
    total_ballots: u64,
    params: &RiskParams,
) -> Asn {
    let mu = margin.to_f64().unwrap_or(0.0);
    median_draws(mu, log_p, total_ballots, params, stream_id(assertion) ^ 0x9e37_79b9_7f4a_7c15)
}

/// Memoised ASN estimates keyed by assertion identity.
pub struct AsnEstimator {
    params: RiskParams,
    total_ballots: u64,
    cache: HashMap<Assertion, Asn>,
}

impl AsnEstimator {
    pub fn new(params: RiskParams, total_ballots: u64) -> Self {
        AsnEstimator { params, total_ballots, cache: HashMap::new() }
    }

    pub fn params(&self) -> &RiskParams {
        &self.params
    }

    pub fn estimate(&mut self, assertion: &Assertion, margin: &Rational) -> Asn {
        if let Some(&asn) = self.cache.get(assertion) {
            return asn;
        }
        let asn = estimate_asn(assertion, margin, self.total_ballots, &self.params);
        self.cache.insert(assertion.clone(), asn);
        asn
    }
}
