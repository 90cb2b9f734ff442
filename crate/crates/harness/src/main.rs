//! `dmoe` — benchmark CLI for energy-optimal expert selection and
//! subcarrier allocation in a distributed mixture-of-experts edge system.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use dmoe_harness::scenario::{load_scenario, ScenarioSpec};
use dmoe_harness::{montecarlo_theorem1, run_benchmark, run_sweep, verify};

#[derive(Parser)]
#[command(name = "dmoe", version, about = "DMoE energy benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArgs {
    /// Scenario JSON file; omit for the built-in defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override the number of experts.
    #[arg(long)]
    num_experts: Option<usize>,
    /// Override the number of subcarriers.
    #[arg(long)]
    num_subcarriers: Option<usize>,
    /// Override the number of layers.
    #[arg(long)]
    num_layers: Option<usize>,
    /// Override the number of replicate scenarios.
    #[arg(long)]
    num_seeds: Option<usize>,
}

impl SpecArgs {
    fn resolve(&self) -> Result<ScenarioSpec> {
        let mut spec = match &self.spec {
            Some(path) => load_scenario(path)?,
            None => ScenarioSpec::default(),
        };
        if let Some(k) = self.num_experts {
            spec.num_experts = k;
        }
        if let Some(m) = self.num_subcarriers {
            spec.num_subcarriers = m;
        }
        if let Some(l) = self.num_layers {
            spec.num_layers = l;
        }
        if let Some(s) = self.num_seeds {
            spec.num_seeds = s;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the spec's scheme list over the replicate grid and emit results.
    Run {
        #[command(flatten)]
        spec: SpecArgs,
        /// Master seed; all cell randomness derives from it.
        #[arg(long)]
        seed: u64,
        /// Output directory for results.csv and results.json.
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
    },
    /// Sweep the gamma0 and k grids instead of the spec's scheme list.
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        /// Comma-separated importance bases, e.g. 0.85,0.9,0.95,1.0.
        #[arg(long, value_delimiter = ',')]
        gamma0: Option<Vec<f64>>,
        /// Comma-separated Top-k values, e.g. 1,2.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
    },
    /// Replay the fast solvers against their exhaustive oracles.
    Verify {
        /// Random instances per suite.
        #[arg(long, default_value_t = 500)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Estimate the joint-optimality rate against the analytic bound.
    Theorem1 {
        #[command(flatten)]
        spec: SpecArgs,
        /// Number of experts (convenience alias for --num-experts).
        #[arg(long)]
        experts: Option<usize>,
        /// Number of subcarriers (convenience alias for --num-subcarriers).
        #[arg(long)]
        subcarriers: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { spec, seed, out_dir } => {
            let spec = spec.resolve()?;
            let report = run_benchmark(&spec, seed)?;
            report.emit(&out_dir)?;
            print_report_summary(&report, &out_dir);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { spec, seed, out_dir, gamma0, k } => {
            let mut spec = spec.resolve()?;
            if let Some(grid) = gamma0 {
                spec.gamma0_grid = grid;
            }
            if let Some(grid) = k {
                spec.k_grid = grid;
            }
            spec.validate()?;
            let report = run_sweep(&spec, seed)?;
            report.emit(&out_dir)?;
            print_report_summary(&report, &out_dir);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { instances, seed } => {
            let outcomes = verify::verify_all(instances, seed)?;
            let mut all_ok = true;
            for outcome in &outcomes {
                let status = if outcome.passed() { "PASS" } else { "FAIL" };
                println!("{status} {} ({} instances)", outcome.name, outcome.instances);
                for failure in outcome.failures.iter().take(5) {
                    println!("    {failure}");
                }
                all_ok &= outcome.passed();
            }
            Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Theorem1 { spec, experts, subcarriers, trials, seed } => {
            let mut spec = spec.resolve()?;
            if let Some(k) = experts {
                spec.num_experts = k;
            }
            if let Some(m) = subcarriers {
                spec.num_subcarriers = m;
            }
            spec.validate()?;
            let report = montecarlo_theorem1(&spec, trials, seed)?;
            println!(
                "K={} M={}: joint-optimality bound {:.6}",
                report.num_experts, report.num_subcarriers, report.bound
            );
            println!(
                "empirical {:.6} ({} / {} trials, std err {:.6})",
                report.empirical, report.matches, report.trials, report.std_err
            );
            let floor = report.bound - 3.0 * report.std_err;
            if report.empirical >= floor {
                println!("PASS empirical rate within 3 standard errors of the bound");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("FAIL empirical rate {:.6} below {floor:.6}", report.empirical);
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn print_report_summary(report: &dmoe_harness::RunReport, out_dir: &std::path::Path) {
    println!(
        "{} rows, {} cell errors -> {}",
        report.rows.len(),
        report.errors.len(),
        out_dir.join("results.csv").display()
    );
    for (scheme, mean_total) in report.scheme_totals() {
        println!("  {scheme}: mean total {mean_total:.6e} J");
    }
    for err in report.errors.iter().take(5) {
        println!("  cell error [{} seed {}]: {}", err.scheme, err.seed, err.message);
    }
}
