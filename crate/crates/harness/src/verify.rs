//! Self-contained oracle suites behind the `verify` CLI verb: the fast
//! solvers replayed against their exhaustive counterparts on random
//! instances.

use anyhow::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use dmoe_core::assignment::{solve_assignment, solve_assignment_bruteforce, AssignmentProblem};
use dmoe_core::rng::rng_from_seed;
use dmoe_core::selection::{
    fractional_bound, ratio_sorted, root_node, select_experts_bruteforce, select_experts_des,
    CandidateExpert,
};

/// Outcome of one verification suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub instances: usize,
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn random_selection_instance(rng: &mut ChaCha8Rng) -> (Vec<CandidateExpert<f64>>, f64, usize) {
    let k = rng.random_range(2..=12usize);
    let raw: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
    let total: f64 = raw.iter().sum();
    let candidates = raw
        .iter()
        .enumerate()
        .map(|(j, &w)| CandidateExpert {
            expert: j,
            score: w / total,
            cost: 10f64.powf(rng.random_range(-4.0f64..-1.0)),
        })
        .collect();
    (candidates, rng.random_range(0.0..1.0), rng.random_range(1..=k))
}

/// Bounded search versus exhaustive enumeration.
pub fn verify_selection(instances: usize, seed: u64) -> Result<SuiteOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut failures = Vec::new();
    for trial in 0..instances {
        let (candidates, threshold, d) = random_selection_instance(&mut rng);
        let des = select_experts_des(&candidates, threshold, d)?;
        let oracle = select_experts_bruteforce(&candidates, threshold, d)?;
        let scale = oracle.energy.abs().max(1e-300);
        if des.selected != oracle.selected || (des.energy - oracle.energy).abs() > 1e-12 * scale {
            failures.push(format!(
                "instance {trial}: search {:?}/{} vs oracle {:?}/{}",
                des.selected, des.energy, oracle.selected, oracle.energy
            ));
        }
    }
    Ok(SuiteOutcome { name: "selection vs exhaustive", instances, failures })
}

/// LP bound admissibility against the enumeration optimum.
pub fn verify_bound(instances: usize, seed: u64) -> Result<SuiteOutcome> {
    let mut rng = rng_from_seed(seed.wrapping_add(1));
    let mut failures = Vec::new();
    for trial in 0..instances {
        let (candidates, threshold, _) = random_selection_instance(&mut rng);
        let sorted = ratio_sorted(&candidates);
        let bound = fractional_bound(&root_node(&sorted), &sorted, threshold);
        let optimum = select_experts_bruteforce(&candidates, threshold, candidates.len())?;
        if !optimum.fallback_used && bound > optimum.energy * (1.0 + 1e-12) {
            failures.push(format!(
                "instance {trial}: bound {bound} exceeds optimum {}",
                optimum.energy
            ));
        }
    }
    Ok(SuiteOutcome { name: "bound admissibility", instances, failures })
}

/// Matching solver versus factorial enumeration.
pub fn verify_assignment(instances: usize, seed: u64) -> Result<SuiteOutcome> {
    let mut rng = rng_from_seed(seed.wrapping_add(2));
    let mut failures = Vec::new();
    for trial in 0..instances {
        let links = rng.random_range(1..=6usize);
        let m = rng.random_range(links..=8usize);
        let weights: Vec<Vec<f64>> = (0..links)
            .map(|_| {
                let bits = 65536.0 * rng.random_range(1..=3usize) as f64;
                (0..m)
                    .map(|_| 1e-2 * bits / 10f64.powf(rng.random_range(4.0f64..7.0)))
                    .collect()
            })
            .collect();
        let problem = AssignmentProblem {
            links: (0..links).map(|l| (0, l + 1)).collect(),
            weights,
            num_subcarriers: m,
        };
        let fast = solve_assignment(&problem)?;
        let oracle = solve_assignment_bruteforce(&problem)?;
        if fast.assigned != oracle.assigned || fast.total_cost != oracle.total_cost {
            failures.push(format!(
                "instance {trial}: matcher {:?}/{} vs oracle {:?}/{}",
                fast.assigned, fast.total_cost, oracle.assigned, oracle.total_cost
            ));
        }
    }
    Ok(SuiteOutcome { name: "assignment vs enumeration", instances, failures })
}

/// Runs all suites with per-suite derived seeds.
pub fn verify_all(instances: usize, seed: u64) -> Result<Vec<SuiteOutcome>> {
    Ok(vec![
        verify_selection(instances, seed)?,
        verify_bound(instances, seed)?,
        verify_assignment(instances, seed)?,
    ])
}
