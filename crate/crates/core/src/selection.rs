//! Dynamic expert selection (DES).
//!
//! For one token, each candidate expert carries a gating score and a
//! per-token energy cost. DES finds the cheapest subset whose summed score
//! reaches the QoS threshold, with at most `max_experts` members, by
//! breadth-first branch and bound over include/exclude decisions. Nodes are
//! pruned with a lower bound obtained from the LP relaxation: greedily
//! exclude undecided experts in descending energy-to-score order while the
//! remaining score stays above the threshold, then exclude the critical
//! expert fractionally so the remaining score hits the threshold exactly.
//!
//! If no subset of at most `max_experts` experts can reach the threshold,
//! the token falls back to the Top-D experts by score and the result is
//! flagged. At least one expert is always selected so the result stays
//! aggregatable. Ties (equal energies, equal scores) break toward the
//! lexicographically smallest selected index set, which makes every result
//! deterministic.
//!
//! [`select_experts_bruteforce`] enumerates all subsets under the same
//! rules and serves as the oracle for the search.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sysmodel::{ExpertProfile, SystemConfig};

/// One selectable expert for one token: gating score and per-token energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateExpert<T> {
    pub expert: usize,
    pub score: T,
    pub cost: T,
}

/// Outcome of a per-token selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult<T> {
    /// Selected expert indices, ascending.
    pub selected: Vec<usize>,
    /// Summed per-token energy of the selection, joules.
    pub energy: T,
    /// Whether the selection satisfies the score threshold.
    pub feasible: bool,
    /// Whether the Top-D fallback produced this selection.
    pub fallback_used: bool,
}

/// Search state over candidates sorted by descending energy-to-score ratio:
/// positions below `next_index` are decided (excluded or included), the rest
/// are still included implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode<T> {
    /// Position (in sorted order) of the next undecided candidate.
    pub next_index: usize,
    /// Total score of all non-excluded candidates.
    pub remaining_score: T,
    /// Total energy of all non-excluded candidates.
    pub remaining_energy: T,
    /// Sorted positions already excluded; all below `next_index`.
    pub excluded: Vec<usize>,
    /// Sorted positions already included; all below `next_index`.
    pub included: Vec<usize>,
}

/// Search options; the defaults implement the plain bounded search.
#[derive(Debug, Clone)]
pub struct DesOptions {
    /// Prune with the LP-relaxation bound. Disabling turns the search into
    /// plain exhaustive BFS (used to check pruning soundness).
    pub use_bound: bool,
    /// Abort to the Top-D fallback after this many node expansions.
    pub node_budget: Option<usize>,
}

impl Default for DesOptions {
    fn default() -> Self {
        Self { use_bound: true, node_budget: None }
    }
}

/// Search effort counters.
#[derive(Debug, Clone, Default)]
pub struct DesStats {
    pub nodes_expanded: usize,
    pub nodes_pruned: usize,
    pub budget_exhausted: bool,
}

/// Per-token candidate costs for tokens held by `source`.
///
/// A remote expert `j` costs its per-token compute energy plus the energy to
/// ship one hidden state over the current link rate: `a_j + P0 * s0 / R_j`.
/// The local expert costs `a_i` alone. Remote experts whose link rate is
/// zero are unreachable and omitted from the candidate list.
pub fn candidate_costs<T: Scalar>(
    source: usize,
    link_rates: &[T],
    profiles: &[ExpertProfile<T>],
    cfg: &SystemConfig<T>,
    scores: &[T],
) -> Vec<CandidateExpert<T>> {
    let k = cfg.num_experts;
    assert_eq!(link_rates.len(), k, "need one rate per expert");
    assert_eq!(profiles.len(), k);
    assert_eq!(scores.len(), k);
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let a = profiles[j].comp_energy_per_token;
        if j == source {
            out.push(CandidateExpert { expert: j, score: scores[j], cost: a });
            continue;
        }
        let rate = link_rates[j];
        if !(rate > T::zero()) {
            continue; // unreachable this round
        }
        let ship = cfg.tx_power_per_subcarrier * cfg.hidden_state_bits / rate;
        out.push(CandidateExpert { expert: j, score: scores[j], cost: a + ship });
    }
    out
}

/// Candidates reordered by descending cost-to-score ratio (zero-score
/// candidates first), ties by ascending expert index. This is the order the
/// bound and the search operate in.
pub fn ratio_sorted<T: Scalar>(candidates: &[CandidateExpert<T>]) -> Vec<CandidateExpert<T>> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| {
        let ra = ratio(a);
        let rb = ratio(b);
        rb.partial_cmp(&ra).unwrap().then_with(|| a.expert.cmp(&b.expert))
    });
    sorted
}

fn ratio<T: Scalar>(c: &CandidateExpert<T>) -> T {
    if c.score > T::zero() {
        c.cost / c.score
    } else {
        T::infinity()
    }
}

/// Root node over a sorted candidate list: nothing decided yet.
pub fn root_node<T: Scalar>(sorted: &[CandidateExpert<T>]) -> SearchNode<T> {
    SearchNode {
        next_index: 0,
        remaining_score: sorted.iter().map(|c| c.score).sum(),
        remaining_energy: sorted.iter().map(|c| c.cost).sum(),
        excluded: Vec::new(),
        included: Vec::new(),
    }
}

/// Lower bound on the energy of any feasible completion of `node`.
///
/// Returns 0 when the node's remaining score does not exceed the threshold
/// (the conservative branch). Otherwise undecided candidates are excluded
/// fully in sorted (worst-ratio-first) order while the remaining score stays
/// at or above the threshold, and the critical candidate is excluded
/// fractionally so the score lands on the threshold exactly. The result is
/// the optimum of the LP relaxation restricted to this node.
pub fn fractional_bound<T: Scalar>(
    node: &SearchNode<T>,
    sorted: &[CandidateExpert<T>],
    threshold: T,
) -> T {
    bound_from(node.next_index, node.remaining_score, node.remaining_energy, sorted, threshold)
}

fn bound_from<T: Scalar>(
    mut next: usize,
    mut score: T,
    mut energy: T,
    sorted: &[CandidateExpert<T>],
    threshold: T,
) -> T {
    if score <= threshold {
        return T::zero();
    }
    while next < sorted.len() && score - sorted[next].score >= threshold {
        score -= sorted[next].score;
        energy -= sorted[next].cost;
        next += 1;
    }
    if next < sorted.len() {
        let c = &sorted[next];
        if c.score > T::zero() {
            energy -= (score - threshold) * c.cost / c.score;
        }
    }
    energy
}

/// Canonical score/energy of a selection, summed in ascending expert order
/// so every code path produces bitwise-identical totals.
fn canonical_sums<T: Scalar>(selection: &[usize], by_expert: &[(T, T)]) -> (T, T) {
    let mut score = T::zero();
    let mut energy = T::zero();
    for &j in selection {
        score += by_expert[j].0;
        energy += by_expert[j].1;
    }
    (score, energy)
}

/// (score, cost) lookup keyed by expert index, plus the ascending id list.
fn index_candidates<T: Scalar>(candidates: &[CandidateExpert<T>]) -> (Vec<(T, T)>, usize) {
    let max_id = candidates.iter().map(|c| c.expert).max().unwrap_or(0);
    let mut table = vec![(T::zero(), T::zero()); max_id + 1];
    for c in candidates {
        table[c.expert] = (c.score, c.cost);
    }
    (table, max_id)
}

/// Top-k experts by score over arbitrary candidates, ties to the smaller
/// expert index; returned ascending. Takes everything when `k` exceeds the
/// candidate count.
fn top_set<T: Scalar>(candidates: &[CandidateExpert<T>], k: usize) -> Vec<usize> {
    let mut order: Vec<&CandidateExpert<T>> = candidates.iter().collect();
    order.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap().then_with(|| a.expert.cmp(&b.expert)));
    let mut picked: Vec<usize> = order.iter().take(k).map(|c| c.expert).collect();
    picked.sort_unstable();
    picked
}

/// Top-k selection by gating score alone; ties go to the smaller index.
///
/// Scores carry no cost information, so the result's `energy` is zero; the
/// caller prices the selection through the energy model.
pub fn select_top_k<T: Scalar>(scores: &[T], k: usize) -> Result<SelectionResult<T>> {
    if k == 0 || k > scores.len() {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={}, got {k}",
            scores.len()
        )));
    }
    let candidates: Vec<CandidateExpert<T>> = scores
        .iter()
        .enumerate()
        .map(|(j, &g)| CandidateExpert { expert: j, score: g, cost: T::one() })
        .collect();
    Ok(SelectionResult {
        selected: top_set(&candidates, k),
        energy: T::zero(),
        feasible: true,
        fallback_used: false,
    })
}

fn check_common<T: Scalar>(
    candidates: &[CandidateExpert<T>],
    threshold: T,
    max_experts: usize,
) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if threshold < T::zero() {
        return Err(Error::InvalidParameter(format!("threshold must be nonnegative, got {threshold}")));
    }
    if max_experts == 0 {
        return Err(Error::InvalidParameter("max_experts must be positive".into()));
    }
    for c in candidates {
        if c.score < T::zero() || !(c.cost > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "candidate {} needs score >= 0 and cost > 0",
                c.expert
            )));
        }
    }
    Ok(())
}

fn fallback_result<T: Scalar>(
    candidates: &[CandidateExpert<T>],
    threshold: T,
    max_experts: usize,
) -> SelectionResult<T> {
    let (table, _) = index_candidates(candidates);
    let selected = top_set(candidates, max_experts.min(candidates.len()));
    let (score, energy) = canonical_sums(&selected, &table);
    SelectionResult { selected, energy, feasible: score >= threshold, fallback_used: true }
}

/// Optimal per-token expert selection by bounded breadth-first search.
///
/// Returns the minimum-energy selection meeting the threshold with at most
/// `max_experts` members (never empty); falls back to Top-D when no such
/// subset exists. Among equal-energy optima the lexicographically smallest
/// index set wins.
pub fn select_experts_des<T: Scalar>(
    candidates: &[CandidateExpert<T>],
    threshold: T,
    max_experts: usize,
) -> Result<SelectionResult<T>> {
    select_experts_des_with(candidates, threshold, max_experts, &DesOptions::default())
        .map(|(result, _)| result)
}

/// [`select_experts_des`] with explicit options and effort counters.
pub fn select_experts_des_with<T: Scalar>(
    candidates: &[CandidateExpert<T>],
    threshold: T,
    max_experts: usize,
    options: &DesOptions,
) -> Result<(SelectionResult<T>, DesStats)> {
    check_common(candidates, threshold, max_experts)?;
    let n = candidates.len();
    if n > 128 {
        return Err(Error::EnumerationGuard(format!(
            "selection search supports up to 128 candidates, got {n}"
        )));
    }
    let mut stats = DesStats::default();
    let (table, _) = index_candidates(candidates);

    // Remark-2 style feasibility pre-check: the Top-D set maximizes the
    // attainable score under the cardinality cap.
    let top_d = top_set(candidates, max_experts.min(n));
    let (top_score, _) = canonical_sums(&top_d, &table);
    if top_score < threshold {
        return Ok((fallback_result(candidates, threshold, max_experts), stats));
    }

    let sorted = ratio_sorted(candidates);
    let d = max_experts.min(n);
    // Relative slack protecting the bound comparison from rounding; nodes at
    // the exact-equality boundary must survive for the lexicographic rule.
    let margin = T::from_f64_lossy(1e-12);

    struct Node<T> {
        next: usize,
        score: T,
        energy: T,
        excluded: u128,
        included_count: usize,
    }

    let root = Node {
        next: 0,
        score: sorted.iter().map(|c| c.score).sum(),
        energy: sorted.iter().map(|c| c.cost).sum(),
        excluded: 0,
        included_count: 0,
    };

    // The Top-D set is feasible here and seeds the incumbent; equal-energy
    // nodes survive pruning, so the lexicographic winner is still found.
    let (_, top_energy) = canonical_sums(&top_d, &table);
    let mut best: Option<(T, Vec<usize>)> = Some((top_energy, top_d));
    let mut queue = VecDeque::new();
    queue.push_back(root);

    while let Some(node) = queue.pop_front() {
        stats.nodes_expanded += 1;
        if let Some(budget) = options.node_budget {
            if stats.nodes_expanded > budget {
                stats.budget_exhausted = true;
                return Ok((fallback_result(candidates, threshold, max_experts), stats));
            }
        }

        let excluded_count = node.excluded.count_ones() as usize;
        let selected_count = n - excluded_count;

        // The node's implicit selection keeps every non-excluded candidate.
        if node.score >= threshold && excluded_count >= n - d && selected_count >= 1 {
            let mut selection: Vec<usize> = sorted
                .iter()
                .enumerate()
                .filter(|(pos, _)| node.excluded & (1u128 << pos) == 0)
                .map(|(_, c)| c.expert)
                .collect();
            selection.sort_unstable();
            let (sel_score, sel_energy) = canonical_sums(&selection, &table);
            if sel_score >= threshold {
                let better = match &best {
                    None => true,
                    Some((e, sel)) => sel_energy < *e || (sel_energy == *e && selection < *sel),
                };
                if better {
                    best = Some((sel_energy, selection));
                }
            }
        }

        if node.score < threshold || node.next >= n {
            continue;
        }

        if options.use_bound {
            if let Some((incumbent, _)) = &best {
                let bound = bound_from(node.next, node.score, node.energy, &sorted, threshold);
                if bound > *incumbent + margin * *incumbent {
                    stats.nodes_pruned += 1;
                    continue;
                }
            }
        }

        let c = &sorted[node.next];
        queue.push_back(Node {
            next: node.next + 1,
            score: node.score - c.score,
            energy: node.energy - c.cost,
            excluded: node.excluded | (1u128 << node.next),
            included_count: node.included_count,
        });
        if node.included_count < d {
            queue.push_back(Node {
                next: node.next + 1,
                score: node.score,
                energy: node.energy,
                excluded: node.excluded,
                included_count: node.included_count + 1,
            });
        }
    }

    let (energy, selected) = best.expect("pre-checked feasible instance always yields an incumbent");
    Ok((SelectionResult { selected, energy, feasible: true, fallback_used: false }, stats))
}

/// Exhaustive oracle: enumerates every non-empty subset of at most
/// `max_experts` candidates under the same feasibility, fallback and
/// tie-break rules as the search. Guarded to 25 candidates.
pub fn select_experts_bruteforce<T: Scalar>(
    candidates: &[CandidateExpert<T>],
    threshold: T,
    max_experts: usize,
) -> Result<SelectionResult<T>> {
    check_common(candidates, threshold, max_experts)?;
    let n = candidates.len();
    if n > 25 {
        return Err(Error::EnumerationGuard(format!(
            "brute-force selection supports up to 25 candidates, got {n}"
        )));
    }
    let (table, _) = index_candidates(candidates);
    let mut ids: Vec<usize> = candidates.iter().map(|c| c.expert).collect();
    ids.sort_unstable();

    let mut best: Option<(T, Vec<usize>)> = None;
    for mask in 1u32..(1u32 << n) {
        if (mask.count_ones() as usize) > max_experts {
            continue;
        }
        let selection: Vec<usize> =
            (0..n).filter(|&b| mask & (1 << b) != 0).map(|b| ids[b]).collect();
        let (score, energy) = canonical_sums(&selection, &table);
        if score < threshold {
            continue;
        }
        let better = match &best {
            None => true,
            Some((e, sel)) => energy < *e || (energy == *e && selection < *sel),
        };
        if better {
            best = Some((energy, selection));
        }
    }

    match best {
        Some((energy, selected)) => {
            Ok(SelectionResult { selected, energy, feasible: true, fallback_used: false })
        }
        None => Ok(fallback_result(candidates, threshold, max_experts)),
    }
}
