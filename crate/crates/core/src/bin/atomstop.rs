use std::path::PathBuf;
use std::process::ExitCode;

use atomstop::pipeline::{run_bounds, run_report, run_simulate, run_solve, RunConfig};
use clap::{Parser, Subcommand};

/// Distribution-constrained optimal stopping of Brownian motion.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Payoff, mean-volatility and support-constrained values on the x-grid.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the stage equations and cache the policy.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo under the cached policy.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Aggregate summaries under a directory and compare runs.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> atomstop::Result<bool> {
    match cli.command {
        Command::Bounds { config, out } => {
            let cfg = RunConfig::from_path(&config)?;
            let (rows, ok) = run_bounds(&cfg, &out)?;
            println!("wrote {} rows to {}", rows.len(), out.join("bounds.csv").display());
            Ok(ok)
        }
        Command::Solve { config, out } => {
            let cfg = RunConfig::from_path(&config)?;
            let (solved, summary) = run_solve(&cfg, &out)?;
            println!(
                "v* = {:.6}  bounds [{:.6}, {:.6}]  ordering {}  concavity {:.2e}  ({:.1} s)",
                summary.v_star,
                summary.bounds_at_x0.mean_vol_value,
                summary.bounds_at_x0.support_value,
                if summary.ordering_ok { "ok" } else { "violated" },
                summary.concavity_max_second_difference,
                solved.wall_time_s
            );
            Ok(summary.all_ok)
        }
        Command::Simulate { config, out, paths, seed } => {
            let cfg = RunConfig::from_path(&config)?;
            let outcome = run_simulate(&cfg, &out, paths, seed)?;
            let r = &outcome.report;
            println!(
                "mean payoff {:.6} ± {:.6} vs v* {:.6}; masses {}; martingale {}; clamped {:.2e}",
                r.mean_payoff,
                r.payoff_std_error,
                r.v_star,
                if r.masses_ok { "ok" } else { "off" },
                if r.martingale_ok { "ok" } else { "off" },
                r.clamp_fraction
            );
            Ok(outcome.all_ok)
        }
        Command::Report { out } => {
            let report = run_report(&out)?;
            for c in &report.comparisons {
                println!("{} vs {}: value ratio {:.4}, sqrt-QV ratio {:.4}", c.other, c.baseline, c.ratio_at_x0, c.sqrt_qv_ratio);
            }
            Ok(report.all_ok)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
