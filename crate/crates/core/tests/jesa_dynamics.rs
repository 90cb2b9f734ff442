//! Descent dynamics: monotone objectives, guaranteed termination,
//! conditional optimality at the fixed point, and the Monte-Carlo
//! joint-optimality rate against the analytic bound.

#![allow(clippy::needless_range_loop)]

use dmoe_core::assignment::{build_assignment, solve_assignment};
use dmoe_core::gating::{synth_gating, GatingSynthSpec, QosPolicy, ThresholdMode};
use dmoe_core::jesa::{jesa_bcd, joint_bruteforce, theorem1_bound, Scenario};
use dmoe_core::rng::{derive_seed, rng_from_seed};
use dmoe_core::selection::{candidate_costs, select_experts_des};
use dmoe_core::sysmodel::{sample_channel, ExpertProfile, SystemConfig, TrafficMatrix};
use rand::Rng;

fn scenario_for(
    k: usize,
    m: usize,
    tokens_per_expert: Vec<usize>,
    policy: QosPolicy<f64>,
    seed: u64,
) -> Scenario<f64> {
    let cfg = SystemConfig {
        num_experts: k,
        num_subcarriers: m,
        num_layers: 1,
        subcarrier_bandwidth: 1e6,
        tx_power_per_subcarrier: 1e-2,
        noise_power: 1e-3,
        hidden_state_bits: 65536.0,
        mean_path_loss: 1e-2,
    };
    let profiles: Vec<_> = (0..k)
        .map(|j| ExpertProfile::new(j, (j as f64 + 1.0) * 1e-3, 0.0).unwrap())
        .collect();
    let channel = sample_channel(derive_seed(seed, 0xC), &cfg);
    let gating = synth_gating(
        &GatingSynthSpec {
            concentration: 0.5,
            specialist_boost: 4.0,
            rng_seed: derive_seed(seed, 0x6),
        },
        &cfg,
        &tokens_per_expert,
    )
    .unwrap();
    Scenario { cfg, profiles, channel, gating, policy, tokens_per_expert, layer: 1, hold_channel: false }
}

/// Re-solves both blocks at the returned fixed point through the public
/// API and demands that nothing moves.
fn assert_conditionally_optimal(scenario: &Scenario<f64>, alpha: &dmoe_core::sysmodel::SelectionMatrix, beta: &dmoe_core::sysmodel::SubcarrierAssignment) {
    let cfg = &scenario.cfg;
    let threshold = scenario.policy.layer_threshold(scenario.layer, cfg.num_layers).unwrap();
    for i in 0..cfg.num_experts {
        let mut link_rates = vec![f64::INFINITY; cfg.num_experts];
        for j in 0..cfg.num_experts {
            if j != i {
                link_rates[j] = beta.link_rate(&scenario.channel, i, j);
            }
        }
        for n in 0..scenario.tokens_per_expert[i] {
            let scores = scenario.gating.scores(scenario.layer, i, n);
            let candidates = candidate_costs(i, &link_rates, &scenario.profiles, cfg, scores);
            let redo = select_experts_des(&candidates, threshold, scenario.policy.max_experts).unwrap();
            assert_eq!(redo.selected, alpha.get(i, n), "selection moved at ({i}, {n})");
        }
    }
    let traffic = TrafficMatrix::from_selection(alpha, cfg.hidden_state_bits);
    let problem = build_assignment(&traffic, &scenario.channel, cfg).unwrap();
    let solution = solve_assignment(&problem).unwrap();
    for (row, &(i, j)) in problem.links.iter().enumerate() {
        assert_eq!(
            beta.link_subcarriers(i, j),
            &[solution.assigned[row]],
            "assignment moved on link ({i} -> {j})"
        );
    }
}

#[test]
fn descent_contract_on_1000_random_scenarios() {
    let mut rng = rng_from_seed(0xBCD);
    for trial in 0..1000u64 {
        let k = rng.random_range(2..=4usize);
        let m = rng.random_range(k * (k - 1)..=32);
        let mut tokens: Vec<usize> = (0..k).map(|_| rng.random_range(0..=2)).collect();
        if tokens.iter().sum::<usize>() == 0 {
            tokens[0] = 1;
        }
        let policy = if rng.random_bool(0.5) {
            QosPolicy {
                base_threshold: 1.0,
                importance_base: rng.random_range(0.8..=1.0),
                max_experts: rng.random_range(1..=k),
                mode: ThresholdMode::Geometric,
            }
        } else {
            QosPolicy {
                base_threshold: rng.random_range(0.0..=1.0),
                importance_base: 1.0,
                max_experts: rng.random_range(1..=k),
                mode: ThresholdMode::Homogeneous,
            }
        };
        let scenario = scenario_for(k, m, tokens, policy, derive_seed(0x5EED, trial));
        let (alpha, beta, trace) = jesa_bcd(&scenario, derive_seed(0x171, trial)).unwrap();

        assert!(trace.converged, "trial {trial} hit the iteration cap");
        let last = trace.entries.last().unwrap();
        assert!(!last.alpha_changed && !last.beta_changed);
        let mut prev = f64::INFINITY;
        for entry in &trace.entries {
            assert!(
                entry.objective <= prev + 1e-12 * prev.abs().max(1.0),
                "trial {trial}: objective rose from {prev} to {}",
                entry.objective
            );
            prev = entry.objective;
        }
        assert!(beta.is_exclusive());
        assert_conditionally_optimal(&scenario, &alpha, &beta);
    }
}

#[test]
fn joint_optimality_rate_k3_m12_beats_analytic_bound() {
    let trials = 2000u64;
    let bound = theorem1_bound(3, 12);
    let mut matches = 0usize;
    for trial in 0..trials {
        let policy = QosPolicy {
            base_threshold: 1.0,
            importance_base: 0.9,
            max_experts: 2,
            mode: ThresholdMode::Geometric,
        };
        let scenario = scenario_for(3, 12, vec![1, 1, 1], policy, derive_seed(0x731, trial));
        let (_, _, trace) = jesa_bcd(&scenario, derive_seed(0x1417, trial)).unwrap();
        let achieved = trace.entries.last().unwrap().objective;
        let optimum = joint_bruteforce(&scenario).unwrap();
        assert!(
            achieved >= optimum - 1e-9 * optimum,
            "trial {trial}: descent {achieved} beat the exhaustive optimum {optimum}"
        );
        if achieved <= optimum * (1.0 + 1e-9) {
            matches += 1;
        }
    }
    let fraction = matches as f64 / trials as f64;
    let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
    println!(
        "joint optimality: empirical {fraction:.4} vs bound {bound:.4} (3 sigma {:.4})",
        3.0 * sigma
    );
    assert!(
        fraction >= bound - 3.0 * sigma,
        "empirical fraction {fraction} below bound {bound} - 3 sigma"
    );
}

#[test]
fn descent_never_beats_joint_enumeration_on_mixed_sizes() {
    for group in [(2usize, 6usize), (3, 8)] {
        let (k, m) = group;
        let bound = theorem1_bound(k, m);
        let trials = 100u64;
        let mut matches = 0usize;
        for trial in 0..trials {
            let mut rng = rng_from_seed(derive_seed(0x909, trial * 7 + k as u64));
            let mut tokens: Vec<usize> = (0..k).map(|_| rng.random_range(0..=2)).collect();
            if tokens.iter().sum::<usize>() == 0 {
                tokens[0] = 1;
            }
            let policy = QosPolicy {
                base_threshold: 1.0,
                importance_base: rng.random_range(0.8..=1.0),
                max_experts: rng.random_range(1..=2),
                mode: ThresholdMode::Geometric,
            };
            let scenario = scenario_for(k, m, tokens, policy, derive_seed(0xAB, trial * 3 + k as u64));
            let (_, _, trace) = jesa_bcd(&scenario, derive_seed(0xCD, trial)).unwrap();
            let achieved = trace.entries.last().unwrap().objective;
            let optimum = joint_bruteforce(&scenario).unwrap();
            assert!(achieved >= optimum - 1e-9 * optimum);
            if achieved <= optimum * (1.0 + 1e-9) {
                matches += 1;
            }
        }
        let fraction = matches as f64 / trials as f64;
        let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
        println!("K={k}, M={m}: empirical {fraction:.3}, bound {bound:.3}");
        assert!(fraction >= bound - 3.0 * sigma);
    }
}
