//! Assertion sets certifying the reported viable set.
//!
//! Plurality contests need one Viable or NonViable assertion per candidate.
//! IRV contests first shrink the space of alternative viable sets with the
//! sure-winner set W and sure-loser set L, then search a tree of alternative
//! elimination sequences with branch-and-bound, looking for the assertion set
//! with the least estimated auditing effort (EAE) that rules out every
//! alternative.

use std::collections::HashSet;

use log::debug;

use crate::assertions::Assertion;
use crate::model::{CandidateId, CandidateSet, ElectionProfile, Rational, Roster, Threshold};
use crate::risk::Asn;
use crate::score::{Scored, Scorer};
use crate::tabulation::ReportedOutcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecStatus {
    Complete,
    RequiresFullCount,
}

/// Generated viability assertions plus the log of pruned alternatives.
#[derive(Clone, Debug)]
pub struct ViabilityAudit {
    pub assertions: Vec<Scored>,
    pub status: SpecStatus,
    pub sure_winners: CandidateSet,
    pub sure_losers: CandidateSet,
    pub proof_log: Vec<String>,
}

/// M = ⌊1/τ⌋.
pub fn max_viable(threshold: Threshold) -> usize {
    threshold.max_viable()
}

fn viable(c: CandidateId, eliminated: CandidateSet, t: Threshold) -> Assertion {
    Assertion::Viable { candidate: c, eliminated, threshold: t.rational() }
}

/// NonViable needs τ < 1; at τ = 1 there is no bounded assorter for it.
fn non_viable(c: CandidateId, eliminated: CandidateSet, t: Threshold) -> Option<Assertion> {
    (t.rational() < Rational::from_integer(1)).then(|| Assertion::NonViable {
        candidate: c,
        eliminated,
        threshold: t.rational(),
    })
}

/// Ordered assertion set without duplicates.
#[derive(Default)]
struct AssertionSet {
    items: Vec<Scored>,
    seen: HashSet<Assertion>,
}

impl AssertionSet {
    fn add(&mut self, s: &Scored) {
        if self.seen.insert(s.assertion.clone()) {
            self.items.push(s.clone());
        }
    }
}

pub fn gen_plurality_viability(outcome: &ReportedOutcome, scorer: &mut Scorer) -> ViabilityAudit {
    let profile = scorer.profile();
    let t = profile.threshold();
    let mut set = AssertionSet::default();
    let mut status = SpecStatus::Complete;
    let mut proof_log = Vec::new();
    for c in profile.roster().ids() {
        let a = if outcome.viable().contains(c) {
            Some(viable(c, CandidateSet::EMPTY, t))
        } else {
            non_viable(c, CandidateSet::EMPTY, t)
        };
        let Some(a) = a else {
            proof_log.push(format!("{}: no assertion can show non-viability at τ = 1", profile.roster().label(c)));
            status = SpecStatus::RequiresFullCount;
            continue;
        };
        let s = scorer.score(a);
        if !s.usable() {
            status = SpecStatus::RequiresFullCount;
        }
        proof_log.push(format!(
            "{} (margin {:.3}, eae {})",
            s.assertion.describe(profile.roster()),
            s.summary.margin_f64(),
            s.eae
        ));
        set.add(&s);
    }
    ViabilityAudit {
        assertions: set.items,
        status,
        sure_winners: CandidateSet::EMPTY,
        sure_losers: CandidateSet::EMPTY,
        proof_log,
    }
}

/// W, L and the assertions that justify them.
pub fn compute_w_l(scorer: &mut Scorer) -> (CandidateSet, CandidateSet, Vec<Scored>) {
    let profile = scorer.profile();
    let t = profile.threshold();
    let all = profile.roster().all();
    let mut reduction = Vec::new();
    let mut winners = CandidateSet::EMPTY;
    for c in all.iter() {
        let s = scorer.score(viable(c, CandidateSet::EMPTY, t));
        if s.usable() {
            winners = winners.with(c);
            reduction.push(s);
        }
    }
    let mut losers = CandidateSet::EMPTY;
    for c in all.difference(winners).iter() {
        let Some(a) = non_viable(c, all.difference(winners).without(c), t) else { continue };
        let s = scorer.score(a);
        if s.usable() {
            losers = losers.with(c);
            reduction.push(s);
        }
    }
    (winners, losers, reduction)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of alternative viable sets left after the W/L reduction:
/// `Σ_{k=0}^{M−|W|} C(|C∖W∖L|, k)`, less one for the reported set.
pub fn count_alt_sets(num_candidates: usize, winners: usize, losers: usize, max_viable: usize) -> u128 {
    if winners > max_viable {
        return 0;
    }
    let free = num_candidates - winners - losers;
    let total: u128 = (0..=max_viable - winners).map(|k| binomial(free, k)).sum();
    total.saturating_sub(1)
}

/// Every V′ with W ⊆ V′, V′ ∩ L = ∅ and |V′| ≤ M, other than the reported set,
/// in order of size then roster order. The empty set appears only when W is
/// empty, as the "no viable candidate" outcome.
pub fn enumerate_alt_sets(
    all: CandidateSet,
    winners: CandidateSet,
    losers: CandidateSet,
    max_viable: usize,
    reported: CandidateSet,
) -> Vec<CandidateSet> {
    let free: Vec<CandidateId> = all.difference(winners).difference(losers).iter().collect();
    let mut out = Vec::new();
    if winners.len() > max_viable {
        return out;
    }
    fn extend(free: &[CandidateId], from: usize, size: usize, current: CandidateSet, out: &mut Vec<CandidateSet>) {
        if size == 0 {
            out.push(current);
            return;
        }
        for i in from..free.len() {
            if free.len() - i < size {
                break;
            }
            extend(free, i + 1, size - 1, current.with(free[i]), out);
        }
    }
    for size in 0..=(max_viable - winners.len()).min(free.len()) {
        extend(&free, 0, size, winners, &mut out);
    }
    out.retain(|&s| s != reported);
    out
}

/// A node of the alternative-outcome tree: viable set `viable` reached after
/// the eliminations in `elimination` (front = last eliminated), all
/// unmentioned candidates having been eliminated earlier in some order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AltOutcomeNode {
    pub elimination: Vec<CandidateId>,
    pub viable: CandidateSet,
    /// Cheapest assertion contradicting this node alone.
    pub best: Option<Scored>,
    /// Cheapest assertion on the path from the root to this node, and the
    /// depth of the node it belongs to.
    branch_best: Option<(Scored, usize)>,
}

impl AltOutcomeNode {
    pub fn root(viable: CandidateSet, best: Option<Scored>) -> Self {
        let branch_best = best.clone().map(|s| (s, 0));
        AltOutcomeNode { elimination: Vec::new(), viable, best, branch_best }
    }

    pub fn eae(&self) -> Asn {
        self.best.as_ref().map_or(Asn::FullCount, |s| s.eae)
    }

    fn branch_eae(&self) -> Asn {
        self.branch_best.as_ref().map_or(Asn::FullCount, |(s, _)| s.eae)
    }

    pub fn depth(&self) -> usize {
        self.elimination.len()
    }

    pub fn mentioned(&self) -> CandidateSet {
        self.elimination.iter().copied().fold(self.viable, CandidateSet::with)
    }

    pub fn is_leaf(&self, all: CandidateSet) -> bool {
        self.mentioned() == all
    }

    /// Whether `self` lies in the subtree rooted at `ancestor`.
    fn descends_from(&self, viable: CandidateSet, elimination: &[CandidateId]) -> bool {
        self.viable == viable && self.elimination.ends_with(elimination)
    }

    pub fn describe(&self, roster: &Roster) -> String {
        let order: Vec<&str> = self.elimination.iter().map(|&c| roster.label(c)).collect();
        format!("([{}], {{{}}})", order.join(","), roster.set_labels(self.viable).join(","))
    }
}

/// Cheapest assertion ruling out `alt` as the final viable set: some member
/// falls below τ once everyone else is eliminated, or some outsider holds τ
/// on first preferences and so can never be eliminated.
pub fn best_root_assertion(alt: CandidateSet, scorer: &mut Scorer) -> Option<Scored> {
    let profile = scorer.profile();
    let t = profile.threshold();
    let all = profile.roster().all();
    let outside = all.difference(alt);
    let options: Vec<Assertion> = outside
        .iter()
        .map(|c| viable(c, CandidateSet::EMPTY, t))
        .chain(alt.iter().filter_map(|c| non_viable(c, outside, t)))
        .collect();
    scorer.cheapest(options)
}

/// Children of `node`: one per unmentioned candidate, placed as the last
/// elimination before the node's own sequence.
pub fn expand_node(node: &AltOutcomeNode, scorer: &mut Scorer) -> Vec<AltOutcomeNode> {
    let profile = scorer.profile();
    let t = profile.threshold();
    let all = profile.roster().all();
    let mentioned = node.mentioned();
    let unmentioned = all.difference(mentioned);
    let mut children = Vec::with_capacity(unmentioned.len());
    for c in unmentioned.iter() {
        let eliminated = unmentioned.without(c);
        let options: Vec<Assertion> = std::iter::once(viable(c, eliminated, t))
            .chain(mentioned.iter().map(|other| Assertion::IrvWins { winner: c, loser: other, eliminated }))
            .collect();
        let best = scorer.cheapest(options);
        let mut elimination = Vec::with_capacity(node.elimination.len() + 1);
        elimination.push(c);
        elimination.extend_from_slice(&node.elimination);
        let depth = elimination.len();
        let branch_best = match (&node.branch_best, &best) {
            (Some((p, d)), Some(b)) => {
                if b.cost_cmp(p).is_lt() {
                    Some((b.clone(), depth))
                } else {
                    Some((p.clone(), *d))
                }
            }
            (Some(p), None) => Some(p.clone()),
            (None, Some(b)) => Some((b.clone(), depth)),
            (None, None) => None,
        };
        children.push(AltOutcomeNode { elimination, viable: node.viable, best, branch_best });
    }
    children
}

/// Frontier priority: highest finite EAE first, unresolvable nodes last,
/// then deeper nodes, then roster order.
fn frontier_pick(frontier: &[AltOutcomeNode]) -> usize {
    let key = |n: &AltOutcomeNode| {
        let eae = n.branch_eae();
        let rank = match eae {
            Asn::Draws(d) => (0u8, u64::MAX - d),
            Asn::FullCount => (1u8, 0),
        };
        (rank, std::cmp::Reverse(n.depth()), n.viable, n.elimination.clone())
    };
    (0..frontier.len()).min_by_key(|&i| key(&frontier[i])).expect("frontier is nonempty")
}

struct Search<'s, 'p> {
    scorer: &'s mut Scorer<'p>,
    set: AssertionSet,
    proof_log: Vec<String>,
    /// LB; `Draws(0)` until the first leaf is resolved.
    lower_bound: Asn,
    frontier: Vec<AltOutcomeNode>,
    last_pruned: Option<(CandidateSet, Vec<CandidateId>)>,
}

impl Search<'_, '_> {
    fn roster(&self) -> &Roster {
        self.scorer.profile().roster()
    }

    fn log_prune(&mut self, node: &AltOutcomeNode, by: &Scored) {
        let line = format!(
            "prune {} by {} (eae {})",
            node.describe(self.roster()),
            by.assertion.describe(self.roster()),
            by.eae
        );
        debug!("{line}");
        self.proof_log.push(line);
    }

    fn raise_bound(&mut self, eae: Asn) {
        self.lower_bound = self.lower_bound.max(eae);
    }

    fn prune_below_bound(&mut self) {
        let lb = self.lower_bound;
        let (pruned, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut self.frontier)
            .into_iter()
            .partition(|n| n.branch_best.as_ref().is_some_and(|(s, _)| s.eae <= lb));
        self.frontier = kept;
        for n in pruned {
            let (s, _) = n.branch_best.clone().expect("partitioned on branch_best");
            self.set.add(&s);
            self.log_prune(&n, &s);
        }
    }

    /// Resolves a leaf: the cheapest assertion on its branch prunes the
    /// subtree of the node it belongs to. `false` means the branch cannot be
    /// invalidated.
    fn resolve_leaf(&mut self, leaf: &AltOutcomeNode) -> bool {
        let Some((s, depth)) = leaf.branch_best.clone() else {
            let line = format!("cannot invalidate {}", leaf.describe(self.roster()));
            self.proof_log.push(line);
            return false;
        };
        self.last_pruned = Some((leaf.viable, leaf.elimination[leaf.elimination.len() - depth..].to_vec()));
        let cut = &leaf.elimination[leaf.elimination.len() - depth..];
        let subtree_root =
            AltOutcomeNode { elimination: cut.to_vec(), viable: leaf.viable, best: None, branch_best: None };
        self.set.add(&s);
        self.log_prune(&subtree_root, &s);
        self.frontier.retain(|n| !n.descends_from(leaf.viable, cut));
        self.raise_bound(s.eae);
        self.prune_below_bound();
        true
    }

    /// Places a freshly created node. `false` signals failure.
    fn admit(&mut self, node: AltOutcomeNode, all: CandidateSet) -> bool {
        if let Some((s, _)) = &node.branch_best {
            if s.eae <= self.lower_bound {
                let s = s.clone();
                self.set.add(&s);
                self.log_prune(&node, &s);
                return true;
            }
        }
        if node.is_leaf(all) {
            return self.resolve_leaf(&node);
        }
        self.frontier.push(node);
        true
    }
}

/// Branch-and-bound over alternative outcomes for an IRV viability contest.
pub fn branch_and_bound(outcome: &ReportedOutcome, scorer: &mut Scorer) -> ViabilityAudit {
    let profile: &ElectionProfile = scorer.profile();
    let all = profile.roster().all();
    let (winners, losers, reduction) = compute_w_l(scorer);
    let mut set = AssertionSet::default();
    let mut proof_log = Vec::new();
    for s in &reduction {
        set.add(s);
        proof_log.push(format!("reduce by {} (eae {})", s.assertion.describe(profile.roster()), s.eae));
    }
    let alts = enumerate_alt_sets(all, winners, losers, max_viable(profile.threshold()), outcome.viable());
    let roots: Vec<AltOutcomeNode> =
        alts.iter().map(|&alt| AltOutcomeNode::root(alt, best_root_assertion(alt, scorer))).collect();

    let mut search =
        Search { scorer, set, proof_log, lower_bound: Asn::Draws(0), frontier: Vec::new(), last_pruned: None };
    let mut status = SpecStatus::Complete;
    for root in roots {
        if !search.admit(root, all) {
            status = SpecStatus::RequiresFullCount;
            break;
        }
    }
    while status == SpecStatus::Complete && !search.frontier.is_empty() {
        let node = search.frontier.swap_remove(frontier_pick(&search.frontier));
        search.last_pruned = None;
        for child in expand_node(&node, search.scorer) {
            if !search.admit(child, all) {
                status = SpecStatus::RequiresFullCount;
                break;
            }
            // A leaf whose cheapest assertion sits at or above `node` prunes
            // the remaining siblings along with it.
            if let Some((v, cut)) = &search.last_pruned {
                if node.descends_from(*v, cut) {
                    break;
                }
            }
        }
    }
    ViabilityAudit {
        assertions: search.set.items,
        status,
        sure_winners: winners,
        sure_losers: losers,
        proof_log: search.proof_log,
    }
}
