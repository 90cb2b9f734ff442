//! Oracle checks for the subcarrier matcher against factorial enumeration.

use dmoe_core::assignment::{solve_assignment, solve_assignment_bruteforce, AssignmentProblem};
use dmoe_core::rng::rng_from_seed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng) -> AssignmentProblem<f64> {
    let links = rng.random_range(1..=6usize);
    let m = rng.random_range(links..=8usize);
    let weights = (0..links)
        .map(|_| {
            let bits = 65536.0 * rng.random_range(1..=3usize) as f64;
            (0..m)
                .map(|_| {
                    let rate = 10f64.powf(rng.random_range(4.0f64..7.0));
                    1e-2 * bits / rate
                })
                .collect()
        })
        .collect();
    let link_ids = (0..links).map(|l| (0, l + 1)).collect();
    AssignmentProblem { links: link_ids, weights, num_subcarriers: m }
}

#[test]
fn matcher_equals_enumeration_on_500_instances() {
    let mut rng = rng_from_seed(0xA551);
    for trial in 0..500 {
        let problem = random_problem(&mut rng);
        let fast = solve_assignment(&problem).unwrap();
        let oracle = solve_assignment_bruteforce(&problem).unwrap();
        assert_eq!(
            fast.assigned, oracle.assigned,
            "trial {trial}: assignments diverged on {problem:?}"
        );
        assert_eq!(fast.total_cost, oracle.total_cost, "trial {trial}: costs diverged");
    }
}

#[test]
fn results_are_exclusive_and_complete() {
    let mut rng = rng_from_seed(0xC3);
    for _ in 0..200 {
        let problem = random_problem(&mut rng);
        let result = solve_assignment(&problem).unwrap();
        assert_eq!(result.assigned.len(), problem.links.len());
        let mut used = vec![false; problem.num_subcarriers];
        for &m in &result.assigned {
            assert!(!used[m], "subcarrier {m} reused");
            used[m] = true;
        }
    }
}

#[test]
fn isolated_link_takes_its_best_subcarrier() {
    let mut rng = rng_from_seed(0x151);
    for _ in 0..100 {
        let m = rng.random_range(1..=8usize);
        let rates: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(4.0f64..7.0))).collect();
        let weights: Vec<f64> = rates.iter().map(|r| 1e-2 * 65536.0 / r).collect();
        let problem = AssignmentProblem {
            links: vec![(0, 1)],
            weights: vec![weights.clone()],
            num_subcarriers: m,
        };
        let result = solve_assignment(&problem).unwrap();
        let mut best = 0;
        for s in 1..m {
            if rates[s] > rates[best] {
                best = s;
            }
        }
        assert_eq!(result.assigned, vec![best]);
    }
}

#[test]
fn raising_one_links_rates_never_raises_cost() {
    let mut rng = rng_from_seed(0x404);
    for _ in 0..200 {
        let problem = random_problem(&mut rng);
        let baseline = solve_assignment(&problem).unwrap();
        let mut scaled = problem.clone();
        let target = rng.random_range(0..scaled.weights.len());
        let factor = rng.random_range(1.0f64..10.0);
        for w in &mut scaled.weights[target] {
            *w /= factor; // scaling all rates up scales the row down
        }
        let improved = solve_assignment(&scaled).unwrap();
        assert!(
            improved.total_cost <= baseline.total_cost * (1.0 + 1e-12),
            "cost rose from {} to {}",
            baseline.total_cost,
            improved.total_cost
        );
    }
}
