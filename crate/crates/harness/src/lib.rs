//! Benchmark harness around the DMoE allocation solvers: JSON scenario
//! specs with simulation defaults, deterministic seeded benchmark grids,
//! CSV/JSON result emission, Monte-Carlo joint-optimality estimation and
//! self-contained oracle verification suites.

// Negated comparisons like `!(x > 0)` deliberately treat NaN as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod report;
pub mod scenario;
pub mod verify;

pub use bench::{montecarlo_theorem1, run_benchmark, run_sweep, Theorem1Report};
pub use report::{CellError, ReportRow, RunReport};
pub use scenario::{load_scenario, save_scenario, GatingSpec, ScenarioSpec, TokensSpec};
