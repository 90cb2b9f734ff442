//! Joint expert and subcarrier allocation (JESA).
//!
//! Block coordinate descent alternates the two exact sub-solvers: given the
//! current subcarrier assignment, the per-token DES search picks the
//! cheapest feasible expert sets; given the resulting traffic, the
//! assignment solver reallocates subcarriers at minimum communication
//! energy. The objective never increases across half-steps and the loop
//! stops when neither block changes, or at the iteration cap.
//!
//! Each iteration assigns a subcarrier to every directed link: active links
//! get the optimal matching, the remaining links greedily take their
//! highest-rate free subcarrier. Every expert therefore stays reachable,
//! and whenever all links' best subcarriers happen to be distinct the loop
//! lands on the exact joint optimum — [`theorem1_bound`] gives the
//! probability of that event under i.i.d. rates.
//!
//! The module also houses the benchmark schemes (Top-k, homogeneous,
//! geometric-threshold JESA and the exclusivity-free lower bound) and the
//! exhaustive joint oracle used to validate them at small sizes.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gating::{qos_satisfied, GatingTensor, QosPolicy, ThresholdMode};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::Scalar;
use crate::selection::{
    candidate_costs, select_experts_des, select_top_k, CandidateExpert,
};
use crate::sysmodel::{
    sample_channel, total_energy, ChannelRealization, EnergyReport, ExpertProfile,
    SelectionMatrix, SubcarrierAssignment, SystemConfig, TrafficMatrix,
};

/// Iterations after which the descent stops with `converged = false`.
pub const BCD_ITERATION_CAP: usize = 50;

/// One full problem instance for a single layer (plus the other layers'
/// gating, used by [`simulate_query`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario<T> {
    pub cfg: SystemConfig<T>,
    pub profiles: Vec<ExpertProfile<T>>,
    pub channel: ChannelRealization<T>,
    pub gating: GatingTensor<T>,
    pub policy: QosPolicy<T>,
    pub tokens_per_expert: Vec<usize>,
    /// Active layer for single-round operations (1-based).
    pub layer: usize,
    /// Keep the channel fixed across layers instead of redrawing block
    /// fading per round; set for replayed (injected) realizations.
    #[serde(default)]
    pub hold_channel: bool,
}

impl<T: Scalar> Scenario<T> {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        self.policy.validate()?;
        let k = self.cfg.num_experts;
        if self.profiles.len() != k {
            return Err(Error::InvalidConfig("need one profile per expert".into()));
        }
        for (j, p) in self.profiles.iter().enumerate() {
            if p.index != j {
                return Err(Error::InvalidConfig(format!("profile {j} has index {}", p.index)));
            }
            ExpertProfile::new(p.index, p.comp_energy_per_token, p.comp_energy_offset)?;
        }
        if self.channel.num_experts != k || self.channel.num_subcarriers != self.cfg.num_subcarriers {
            return Err(Error::InvalidConfig("channel shape mismatch".into()));
        }
        self.channel.validate()?;
        if self.gating.num_experts != k
            || self.gating.num_layers != self.cfg.num_layers
            || self.gating.tokens_per_expert != self.tokens_per_expert
        {
            return Err(Error::InvalidConfig("gating shape mismatch".into()));
        }
        if self.policy.max_experts > k {
            return Err(Error::InvalidConfig(format!(
                "policy.max_experts {} exceeds num_experts {k}",
                self.policy.max_experts
            )));
        }
        if self.tokens_per_expert.len() != k {
            return Err(Error::InvalidConfig("tokens_per_expert length mismatch".into()));
        }
        if self.tokens_per_expert.iter().sum::<usize>() == 0 {
            return Err(Error::InvalidConfig("at least one token required".into()));
        }
        if self.layer == 0 || self.layer > self.cfg.num_layers {
            return Err(Error::LayerOutOfRange { layer: self.layer, num_layers: self.cfg.num_layers });
        }
        Ok(())
    }

    pub fn total_tokens(&self) -> usize {
        self.tokens_per_expert.iter().sum()
    }
}

/// Objective trajectory of one descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationEntry<T> {
    /// Objective after the iteration's two half-steps, joules.
    pub objective: T,
    pub alpha_changed: bool,
    pub beta_changed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace<T> {
    pub entries: Vec<IterationEntry<T>>,
    /// False when the iteration cap fired before a fixed point.
    pub converged: bool,
}

/// Benchmark scheme selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeKind<T> {
    /// Score-only Top-k selection, then optimal subcarrier allocation.
    TopK { k: usize },
    /// Descent with a flat threshold `z` at every layer.
    Homogeneous { base_threshold: T, max_experts: usize },
    /// Descent with `z = 1` and geometric layer thresholds `gamma0^layer`.
    Jesa { importance_base: T, max_experts: usize },
    /// DES against each link's best single-subcarrier rate with subcarrier
    /// exclusivity ignored: a valid lower bound on any feasible allocation.
    LowerBound { importance_base: T, max_experts: usize },
}

impl<T: Scalar> SchemeKind<T> {
    /// The threshold policy a descent-backed scheme runs under; `None` for
    /// the one-shot schemes (Top-k and the lower bound).
    pub fn bcd_policy(&self) -> Option<QosPolicy<T>> {
        match self {
            SchemeKind::TopK { .. } | SchemeKind::LowerBound { .. } => None,
            SchemeKind::Homogeneous { base_threshold, max_experts } => Some(QosPolicy {
                base_threshold: *base_threshold,
                importance_base: T::one(),
                max_experts: *max_experts,
                mode: ThresholdMode::Homogeneous,
            }),
            SchemeKind::Jesa { importance_base, max_experts } => Some(QosPolicy {
                base_threshold: T::one(),
                importance_base: *importance_base,
                max_experts: *max_experts,
                mode: ThresholdMode::Geometric,
            }),
        }
    }

    /// Stable label used in reports, e.g. `top_k(2)` or `jesa(0.9,2)`.
    pub fn label(&self) -> String {
        match self {
            SchemeKind::TopK { k } => format!("top_k({k})"),
            SchemeKind::Homogeneous { base_threshold, max_experts } => {
                format!("h({base_threshold},{max_experts})")
            }
            SchemeKind::Jesa { importance_base, max_experts } => {
                format!("jesa({importance_base},{max_experts})")
            }
            SchemeKind::LowerBound { importance_base, max_experts } => {
                format!("lb({importance_base},{max_experts})")
            }
        }
    }
}

/// Everything a benchmark needs from one scheme run on one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRun<T> {
    pub alpha: SelectionMatrix,
    pub beta: SubcarrierAssignment,
    pub report: EnergyReport<T>,
    pub bcd_iterations: usize,
    pub converged: bool,
    pub fallback_count: usize,
    pub token_count: usize,
    /// Mean attained QoS score (summed selected gating score per token).
    pub mean_attained_score: f64,
}

/// One layer of a full-query simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerOutcome<T> {
    pub layer: usize,
    pub run: SchemeRun<T>,
    /// Energy of returning the processed hidden states over the reverse
    /// links, reported separately and never part of the objective.
    pub backward_comm_total: T,
}

/// Assigns each of the `K * (K - 1)` directed links one distinct subcarrier,
/// uniformly at random without replacement.
pub fn random_init_assignment<T: Rng>(
    rng: &mut T,
    num_experts: usize,
    num_subcarriers: usize,
) -> Result<SubcarrierAssignment> {
    let links = num_experts * (num_experts - 1);
    if links > num_subcarriers {
        return Err(Error::CapacityExceeded { links, subcarriers: num_subcarriers });
    }
    let mut pool: Vec<usize> = (0..num_subcarriers).collect();
    for idx in 0..links {
        let pick = rng.random_range(idx..num_subcarriers);
        pool.swap(idx, pick);
    }
    let mut beta = SubcarrierAssignment::empty(num_experts, num_subcarriers);
    for link in 0..links {
        let (i, j) = link_pair(num_experts, link);
        beta.assign(i, j, pool[link]);
    }
    Ok(beta)
}

/// Deterministic equal-bandwidth split for standalone expert selection:
/// subcarriers are dealt round-robin so every directed link holds
/// `M / (K * (K - 1))` of them; the remainder stays idle.
pub fn equal_bandwidth_assignment<T: Scalar>(cfg: &SystemConfig<T>) -> Result<SubcarrierAssignment> {
    let links = cfg.num_links();
    let share = cfg.num_subcarriers / links;
    if share == 0 {
        return Err(Error::CapacityExceeded { links, subcarriers: cfg.num_subcarriers });
    }
    let mut beta = SubcarrierAssignment::empty(cfg.num_experts, cfg.num_subcarriers);
    for s in 0..share * links {
        let (i, j) = cfg.link_pair(s % links);
        beta.assign(i, j, s);
    }
    Ok(beta)
}

fn link_pair(num_experts: usize, link: usize) -> (usize, usize) {
    let source = link / (num_experts - 1);
    let column = link % (num_experts - 1);
    let target = if column < source { column } else { column + 1 };
    (source, target)
}

struct SweepStats {
    fallback_count: usize,
    token_count: usize,
    attained_score_sum: f64,
}

/// One DES pass over every token given the current assignment.
fn des_sweep<T: Scalar>(
    scenario: &Scenario<T>,
    beta: &SubcarrierAssignment,
    threshold: T,
) -> Result<(SelectionMatrix, SweepStats)> {
    let cfg = &scenario.cfg;
    let k = cfg.num_experts;
    let d = scenario.policy.max_experts;
    let mut alpha = SelectionMatrix::new(k, &scenario.tokens_per_expert);
    let mut stats = SweepStats { fallback_count: 0, token_count: 0, attained_score_sum: 0.0 };
    for i in 0..k {
        let mut link_rates = vec![T::infinity(); k];
        for j in 0..k {
            if j != i {
                link_rates[j] = beta.link_rate(&scenario.channel, i, j);
            }
        }
        for n in 0..scenario.tokens_per_expert[i] {
            let scores = scenario.gating.scores(scenario.layer, i, n);
            let candidates = candidate_costs(i, &link_rates, &scenario.profiles, cfg, scores);
            let result = select_experts_des(&candidates, threshold, d)?;
            debug_assert!(!result.selected.is_empty() && result.selected.len() <= d);
            debug_assert!(result.fallback_used || qos_satisfied(scores, &result.selected, threshold));
            stats.token_count += 1;
            if result.fallback_used {
                stats.fallback_count += 1;
            }
            let attained: T = result.selected.iter().map(|&j| scores[j]).sum();
            stats.attained_score_sum += attained.to_f64_lossy();
            alpha.set(i, n, result.selected);
        }
    }
    Ok((alpha, stats))
}

/// Optimal allocation for the traffic of `alpha`; with `complete`, the
/// zero-traffic links then take their highest-rate still-free subcarrier in
/// link order so every link keeps a usable rate for the next DES pass.
fn allocate_for<T: Scalar>(
    scenario: &Scenario<T>,
    alpha: &SelectionMatrix,
    complete: bool,
) -> Result<SubcarrierAssignment> {
    let cfg = &scenario.cfg;
    let traffic = TrafficMatrix::from_selection(alpha, cfg.hidden_state_bits);
    let problem = crate::assignment::build_assignment(&traffic, &scenario.channel, cfg)?;
    let solution = crate::assignment::solve_assignment(&problem)?;
    let mut beta = SubcarrierAssignment::empty(cfg.num_experts, cfg.num_subcarriers);
    let mut used = vec![false; cfg.num_subcarriers];
    for (row, &(i, j)) in problem.links.iter().enumerate() {
        let m = solution.assigned[row];
        beta.assign(i, j, m);
        used[m] = true;
    }
    if complete {
        if cfg.num_links() > cfg.num_subcarriers {
            return Err(Error::CapacityExceeded {
                links: cfg.num_links(),
                subcarriers: cfg.num_subcarriers,
            });
        }
        let active: std::collections::HashSet<(usize, usize)> =
            problem.links.iter().copied().collect();
        for link in 0..cfg.num_links() {
            let (i, j) = cfg.link_pair(link);
            if active.contains(&(i, j)) {
                continue;
            }
            let mut best: Option<usize> = None;
            for m in 0..cfg.num_subcarriers {
                if used[m] {
                    continue;
                }
                match best {
                    None => best = Some(m),
                    Some(b) => {
                        if scenario.channel.rate(i, j, m) > scenario.channel.rate(i, j, b) {
                            best = Some(m);
                        }
                    }
                }
            }
            let m = best.expect("K(K-1) <= M leaves a free subcarrier per link");
            beta.assign(i, j, m);
            used[m] = true;
        }
    }
    Ok(beta)
}

struct BcdOutcome<T> {
    alpha: SelectionMatrix,
    beta: SubcarrierAssignment,
    trace: IterationTrace<T>,
    final_stats: SweepStats,
}

fn jesa_bcd_detailed<T: Scalar>(scenario: &Scenario<T>, init_seed: u64) -> Result<BcdOutcome<T>> {
    scenario.validate()?;
    let cfg = &scenario.cfg;
    if cfg.num_links() > cfg.num_subcarriers {
        return Err(Error::CapacityExceeded {
            links: cfg.num_links(),
            subcarriers: cfg.num_subcarriers,
        });
    }
    let threshold = scenario.policy.layer_threshold(scenario.layer, cfg.num_layers)?;
    let mut rng = rng_from_seed(init_seed);
    let mut beta = random_init_assignment(&mut rng, cfg.num_experts, cfg.num_subcarriers)?;
    let mut prev_alpha: Option<SelectionMatrix> = None;

    let mut entries: Vec<IterationEntry<T>> = Vec::new();
    let mut converged = false;
    let mut outcome: Option<(SelectionMatrix, SubcarrierAssignment, SweepStats)> = None;
    #[cfg(debug_assertions)]
    let mut last_objective = T::infinity();

    for _ in 0..BCD_ITERATION_CAP {
        let (alpha, stats) = des_sweep(scenario, &beta, threshold)?;
        #[cfg(debug_assertions)]
        {
            // Selection half-step must not increase the objective.
            let mid = total_energy(&alpha, &beta, &scenario.channel, &scenario.profiles, cfg)?;
            let slack = T::from_f64_lossy(1e-12) * last_objective.min(T::max_value());
            debug_assert!(
                !last_objective.is_finite() || mid.total <= last_objective + slack,
                "selection step raised the objective"
            );
            last_objective = mid.total;
        }
        let beta_new = allocate_for(scenario, &alpha, true)?;
        debug_assert!(beta_new.is_exclusive());
        let report = total_energy(&alpha, &beta_new, &scenario.channel, &scenario.profiles, cfg)?;
        #[cfg(debug_assertions)]
        {
            let slack = T::from_f64_lossy(1e-12) * last_objective;
            debug_assert!(report.total <= last_objective + slack, "assignment step raised the objective");
            last_objective = report.total;
        }

        let alpha_changed = prev_alpha.as_ref() != Some(&alpha);
        let beta_changed = beta_new != beta;
        entries.push(IterationEntry { objective: report.total, alpha_changed, beta_changed });

        let fixed_point = !alpha_changed && !beta_changed;
        prev_alpha = Some(alpha.clone());
        beta = beta_new;
        outcome = Some((alpha, beta.clone(), stats));
        if fixed_point {
            converged = true;
            break;
        }
    }

    let (alpha, beta, final_stats) = outcome.expect("at least one iteration runs");
    Ok(BcdOutcome { alpha, beta, trace: IterationTrace { entries, converged }, final_stats })
}

/// Block coordinate descent for the joint problem at the scenario's layer.
///
/// Starts from a random exclusive assignment of all `K * (K - 1)` links
/// (hence requires `K * (K - 1) <= M`), alternates exact selection and
/// assignment steps, and stops when both blocks repeat or after
/// [`BCD_ITERATION_CAP`] iterations. The returned trace carries the
/// objective after every iteration; `converged = false` signals the cap.
pub fn jesa_bcd<T: Scalar>(
    scenario: &Scenario<T>,
    init_seed: u64,
) -> Result<(SelectionMatrix, SubcarrierAssignment, IterationTrace<T>)> {
    let outcome = jesa_bcd_detailed(scenario, init_seed)?;
    Ok((outcome.alpha, outcome.beta, outcome.trace))
}

/// Probability that all `K * (K - 1)` directed links have their maximum-rate
/// subcarrier on distinct subcarriers, assuming i.i.d. rates: the descent is
/// exactly optimal whenever that event occurs. Zero when `M < K * (K - 1)`.
pub fn theorem1_bound(num_experts: usize, num_subcarriers: usize) -> f64 {
    assert!(num_experts >= 2, "need at least two experts");
    assert!(num_subcarriers >= 1, "need at least one subcarrier");
    let links = num_experts * (num_experts - 1);
    if num_subcarriers < links {
        return 0.0;
    }
    let m = num_subcarriers as f64;
    (0..links).map(|i| (m - i as f64) / m).product()
}

/// Runs one benchmark scheme on the scenario's active layer.
pub fn run_scheme<T: Scalar>(
    scenario: &Scenario<T>,
    scheme: &SchemeKind<T>,
    seed: u64,
) -> Result<SchemeRun<T>> {
    scenario.validate()?;
    let cfg = &scenario.cfg;
    let k = cfg.num_experts;
    match scheme {
        SchemeKind::TopK { k: top } => {
            let mut alpha = SelectionMatrix::new(k, &scenario.tokens_per_expert);
            let mut token_count = 0;
            let mut attained_sum = 0.0;
            for i in 0..k {
                for n in 0..scenario.tokens_per_expert[i] {
                    let scores = scenario.gating.scores(scenario.layer, i, n);
                    let picked = select_top_k(scores, *top)?;
                    let attained: T = picked.selected.iter().map(|&j| scores[j]).sum();
                    attained_sum += attained.to_f64_lossy();
                    token_count += 1;
                    alpha.set(i, n, picked.selected);
                }
            }
            let beta = allocate_for(scenario, &alpha, false)?;
            let report = total_energy(&alpha, &beta, &scenario.channel, &scenario.profiles, cfg)?;
            Ok(SchemeRun {
                alpha,
                beta,
                report,
                bcd_iterations: 0,
                converged: true,
                fallback_count: 0,
                token_count,
                mean_attained_score: attained_sum / token_count.max(1) as f64,
            })
        }
        SchemeKind::Homogeneous { .. } | SchemeKind::Jesa { .. } => {
            let mut scen = scenario.clone();
            scen.policy = scheme.bcd_policy().expect("descent-backed scheme");
            bcd_scheme_run(&scen, seed)
        }
        SchemeKind::LowerBound { importance_base, max_experts } => {
            let policy = QosPolicy {
                base_threshold: T::one(),
                importance_base: *importance_base,
                max_experts: *max_experts,
                mode: ThresholdMode::Geometric,
            };
            let threshold = policy.layer_threshold(scenario.layer, cfg.num_layers)?;
            let mut alpha = SelectionMatrix::new(k, &scenario.tokens_per_expert);
            let mut token_count = 0;
            let mut fallback_count = 0;
            let mut attained_sum = 0.0;
            for i in 0..k {
                let mut link_rates = vec![T::infinity(); k];
                for j in 0..k {
                    if j != i {
                        link_rates[j] = scenario.channel.max_rate(i, j);
                    }
                }
                for n in 0..scenario.tokens_per_expert[i] {
                    let scores = scenario.gating.scores(scenario.layer, i, n);
                    let candidates =
                        candidate_costs(i, &link_rates, &scenario.profiles, cfg, scores);
                    let result = select_experts_des(&candidates, threshold, *max_experts)?;
                    token_count += 1;
                    if result.fallback_used {
                        fallback_count += 1;
                    }
                    let attained: T = result.selected.iter().map(|&j| scores[j]).sum();
                    attained_sum += attained.to_f64_lossy();
                    alpha.set(i, n, result.selected);
                }
            }
            // Every active link transmits on its best subcarrier; overlaps
            // are allowed, which is exactly why this is only a bound.
            let mut beta = SubcarrierAssignment::empty(k, cfg.num_subcarriers);
            let traffic = TrafficMatrix::from_selection(&alpha, cfg.hidden_state_bits);
            for (i, j) in traffic.active_links() {
                beta.assign(i, j, scenario.channel.max_rate_subcarrier(i, j));
            }
            let report = total_energy(&alpha, &beta, &scenario.channel, &scenario.profiles, cfg)?;
            Ok(SchemeRun {
                alpha,
                beta,
                report,
                bcd_iterations: 0,
                converged: true,
                fallback_count,
                token_count,
                mean_attained_score: attained_sum / token_count.max(1) as f64,
            })
        }
    }
}

fn bcd_scheme_run<T: Scalar>(scenario: &Scenario<T>, seed: u64) -> Result<SchemeRun<T>> {
    let outcome = jesa_bcd_detailed(scenario, seed)?;
    let report = total_energy(
        &outcome.alpha,
        &outcome.beta,
        &scenario.channel,
        &scenario.profiles,
        &scenario.cfg,
    )?;
    Ok(SchemeRun {
        alpha: outcome.alpha,
        beta: outcome.beta,
        report,
        bcd_iterations: outcome.trace.entries.len(),
        converged: outcome.trace.converged,
        fallback_count: outcome.final_stats.fallback_count,
        token_count: outcome.final_stats.token_count,
        mean_attained_score: outcome.final_stats.attained_score_sum
            / outcome.final_stats.token_count.max(1) as f64,
    })
}

/// Energy of the reverse transfer: each routed token's processed hidden
/// state returns over the same subcarriers in the opposite link direction.
pub fn backward_comm_energy<T: Scalar>(
    alpha: &SelectionMatrix,
    beta: &SubcarrierAssignment,
    channel: &ChannelRealization<T>,
    cfg: &SystemConfig<T>,
) -> Result<T> {
    let k = cfg.num_experts;
    let mut total = T::zero();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let count = alpha.route_count(i, j);
            if count == 0 {
                continue;
            }
            let bits = cfg.hidden_state_bits * T::from_usize(count).unwrap();
            let subs = beta.link_subcarriers(i, j);
            let reverse_rate: T = subs.iter().map(|&m| channel.rate(j, i, m)).sum();
            if !(reverse_rate > T::zero()) {
                return Err(Error::InfeasibleLink { link: Some((j, i)), bits: bits.to_f64_lossy() });
            }
            let lanes = T::from_usize(subs.len()).unwrap();
            total += bits / reverse_rate * lanes * cfg.tx_power_per_subcarrier;
        }
    }
    Ok(total)
}

/// The scenario as seen at `layer` during a full-query simulation: the
/// active layer switched and, unless the channel is held, the block fading
/// redrawn from a seed derived from the channel's own seed.
pub fn layer_scenario<T: Scalar>(scenario: &Scenario<T>, layer: usize) -> Result<Scenario<T>> {
    if layer == 0 || layer > scenario.cfg.num_layers {
        return Err(Error::LayerOutOfRange { layer, num_layers: scenario.cfg.num_layers });
    }
    let mut scen = scenario.clone();
    scen.layer = layer;
    if !scen.hold_channel {
        scen.channel =
            sample_channel(derive_seed(scenario.channel.rng_seed, layer as u64), &scen.cfg);
    }
    Ok(scen)
}

/// Runs the scheme once per layer with per-layer thresholds and per-layer
/// block fading (see [`layer_scenario`]). Backward transfers are priced per
/// layer but kept out of the optimization.
pub fn simulate_query<T: Scalar>(
    scenario: &Scenario<T>,
    scheme: &SchemeKind<T>,
    master_seed: u64,
) -> Result<Vec<LayerOutcome<T>>> {
    scenario.validate()?;
    let mut out = Vec::with_capacity(scenario.cfg.num_layers);
    for layer in 1..=scenario.cfg.num_layers {
        let scen = layer_scenario(scenario, layer)?;
        let run = run_scheme(&scen, scheme, derive_seed(master_seed, layer as u64))?;
        let backward = backward_comm_energy(&run.alpha, &run.beta, &scen.channel, &scen.cfg)?;
        out.push(LayerOutcome { layer, run, backward_comm_total: backward });
    }
    Ok(out)
}

/// Exhaustive joint optimum of the scenario's layer: enumerates every
/// admissible per-token selection combination (threshold-feasible subsets,
/// or the Top-D fallback when none exists) and, for each resulting traffic
/// pattern, every exclusive link-to-subcarrier map via exact dynamic
/// programming over subcarriers. Independent of the production solvers.
///
/// Guarded to `K * (K - 1) <= 6` links, 16 subcarriers and two million
/// selection combinations.
pub fn joint_bruteforce<T: Scalar>(scenario: &Scenario<T>) -> Result<T> {
    scenario.validate()?;
    let cfg = &scenario.cfg;
    let k = cfg.num_experts;
    let links = cfg.num_links();
    if links > 6 || cfg.num_subcarriers > 16 {
        return Err(Error::EnumerationGuard(format!(
            "joint oracle supports up to 6 links and 16 subcarriers, got {links} x {}",
            cfg.num_subcarriers
        )));
    }
    let threshold = scenario.policy.layer_threshold(scenario.layer, cfg.num_layers)?;
    let d = scenario.policy.max_experts;

    // Admissible target sets per token, in (source, token) order.
    let mut token_sources = Vec::new();
    let mut choices: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut combos: usize = 1;
    for i in 0..k {
        for n in 0..scenario.tokens_per_expert[i] {
            let scores = scenario.gating.scores(scenario.layer, i, n);
            let mut admissible = Vec::new();
            for mask in 1u32..(1u32 << k) {
                if (mask.count_ones() as usize) > d {
                    continue;
                }
                let sel: Vec<usize> = (0..k).filter(|&j| mask & (1 << j) != 0).collect();
                let score: T = sel.iter().map(|&j| scores[j]).sum();
                if score >= threshold {
                    admissible.push(sel);
                }
            }
            if admissible.is_empty() {
                let candidates: Vec<CandidateExpert<T>> = scores
                    .iter()
                    .enumerate()
                    .map(|(j, &g)| CandidateExpert { expert: j, score: g, cost: T::one() })
                    .collect();
                let mut order: Vec<&CandidateExpert<T>> = candidates.iter().collect();
                order.sort_by(|a, b| {
                    b.score.partial_cmp(&a.score).unwrap().then_with(|| a.expert.cmp(&b.expert))
                });
                let mut top: Vec<usize> = order.iter().take(d.min(k)).map(|c| c.expert).collect();
                top.sort_unstable();
                admissible.push(top);
            }
            combos = combos.saturating_mul(admissible.len());
            if combos > 2_000_000 {
                return Err(Error::EnumerationGuard(
                    "joint oracle restricted to two million selection combinations".into(),
                ));
            }
            token_sources.push(i);
            choices.push(admissible);
        }
    }

    // Per-token unit shipping cost per link and subcarrier.
    let m = cfg.num_subcarriers;
    let mut unit = vec![vec![T::infinity(); m]; links];
    for link in 0..links {
        let (i, j) = cfg.link_pair(link);
        for s in 0..m {
            let rate = scenario.channel.rate(i, j, s);
            if rate > T::zero() {
                unit[link][s] = cfg.tx_power_per_subcarrier * cfg.hidden_state_bits / rate;
            }
        }
    }

    // Min-cost exclusive assignment for a vector of per-link token counts,
    // by dynamic programming over subcarriers; memoized on the counts.
    let mut memo: HashMap<u64, T> = HashMap::new();
    let mut assignment_cost = |counts: &[usize]| -> T {
        let mut key = 0u64;
        for &c in counts {
            key = key << 8 | (c as u64 & 0xff);
        }
        if let Some(&cached) = memo.get(&key) {
            return cached;
        }
        let active: Vec<usize> = (0..links).filter(|&l| counts[l] > 0).collect();
        let cost = if active.len() > m {
            T::infinity()
        } else {
            let full = (1usize << active.len()) - 1;
            let mut dp = vec![T::infinity(); full + 1];
            dp[0] = T::zero();
            for s in 0..m {
                let mut next = dp.clone();
                for mask in 0..=full {
                    if !dp[mask].is_finite() {
                        continue;
                    }
                    for (bit, &link) in active.iter().enumerate() {
                        if mask & (1 << bit) != 0 {
                            continue;
                        }
                        let w = unit[link][s];
                        if !w.is_finite() {
                            continue;
                        }
                        let cand = dp[mask] + T::from_usize(counts[link]).unwrap() * w;
                        let slot = &mut next[mask | (1 << bit)];
                        if cand < *slot {
                            *slot = cand;
                        }
                    }
                }
                dp = next;
            }
            dp[full]
        };
        memo.insert(key, cost);
        cost
    };

    let offsets: T = scenario.profiles.iter().map(|p| p.comp_energy_offset).sum();
    let tokens = choices.len();
    let mut pick = vec![0usize; tokens];
    let mut best = T::infinity();
    loop {
        let mut counts = vec![0usize; links];
        let mut inbound = vec![0usize; k];
        for t in 0..tokens {
            let i = token_sources[t];
            for &j in &choices[t][pick[t]] {
                inbound[j] += 1;
                if j != i {
                    counts[cfg.link_index(i, j)] += 1;
                }
            }
        }
        let mut comp = T::zero();
        for j in 0..k {
            comp += scenario.profiles[j].comp_energy_per_token * T::from_usize(inbound[j]).unwrap();
        }
        let total = comp + offsets + assignment_cost(&counts);
        if total < best {
            best = total;
        }

        // Odometer over the per-token choice lists.
        let mut t = 0;
        loop {
            if t == tokens {
                break;
            }
            pick[t] += 1;
            if pick[t] < choices[t].len() {
                break;
            }
            pick[t] = 0;
            t += 1;
        }
        if t == tokens {
            break;
        }
    }

    if !best.is_finite() {
        return Err(Error::InfeasibleAssignment);
    }
    Ok(best)
}
