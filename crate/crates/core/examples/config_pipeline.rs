//! The file-based pipeline driven by a TOML run configuration: bounds,
//! solve, simulate and report, writing CSV and JSON artifacts.
//!
//! cargo run --release --example config_pipeline [-- <out-dir>]

use std::path::PathBuf;

use atomstop::pipeline::{run_bounds, run_report, run_simulate, run_solve, RunConfig};

const CONFIG: &str = r#"
name = "binary"
x0 = 0.0

[payoff]
kind = "call"
strike = 0.0

[[atoms]]
t = 10.0
p = 0.5

[[atoms]]
t = 20.0
p = 0.5

[grid]
dx = 0.4
dy = 0.02
dt = 0.16

[mc]
paths = 20000
seed = 3
"#;

pub fn run_in(out: PathBuf) -> atomstop::Result<()> {
    let cfg = RunConfig::from_toml_str(CONFIG)?;
    let dir = out.join("binary");
    let (_, bounds_ok) = run_bounds(&cfg, &dir)?;
    let (_, summary) = run_solve(&cfg, &dir)?;
    let sim = run_simulate(&cfg, &dir, None, None)?;
    let report = run_report(&out)?;
    println!("bounds ordered: {bounds_ok}");
    println!("v* = {:.5}, gates {:?}", summary.v_star, summary.gates);
    println!("simulation checks pass: {}", sim.all_ok);
    println!("report over {} run(s), all ok: {}", report.runs.len(), report.all_ok);
    println!("artifacts in {}", dir.display());
    Ok(())
}

pub fn run(quick: bool) -> atomstop::Result<()> {
    let given = if quick { None } else { std::env::args().skip(1).find(|a| !a.starts_with("--")) };
    run_in(given.map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("atomstop-example")))
}

fn main() -> atomstop::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
