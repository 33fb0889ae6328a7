//! Three-atom outlook μ = 0.45δ₁₀ + 0.45δ₂₀ + 0.1δ₁₀₀ against the two-atom
//! one: value ratio at x = 0 next to the ratio of √E[τ].
//! The three-atom problem has a two-dimensional simplex state.
//!
//! cargo run --release --example trinary_outlook [-- --quick]

use atomstop::distribution::{expected_qv, AtomicDistribution};
use atomstop::grid::SolverConfig;
use atomstop::hjb::solve_all;
use atomstop::payoff::PayoffSpec;

pub fn run(quick: bool) -> atomstop::Result<()> {
    let call = PayoffSpec::call(0.0);
    let mu2 = AtomicDistribution::new(&[10.0, 20.0], &[0.5, 0.5])?;
    let mu3 = AtomicDistribution::new(&[10.0, 20.0, 100.0], &[0.45, 0.45, 0.10])?;
    let (cfg2, cfg3) = if quick {
        let c = SolverConfig { dx: 0.8, dy: 0.05, dt: 0.64, record_policy: false, ..SolverConfig::default() };
        (c.clone(), c)
    } else {
        let base = SolverConfig { record_policy: false, ..SolverConfig::default() };
        (base.clone(), SolverConfig { dy: 0.02, ..base })
    };
    let v2 = solve_all(&mu2, &call, 0.0, &cfg2)?;
    let v3 = solve_all(&mu3, &call, 0.0, &cfg3)?;
    println!("v2* = {:.6} ({:.1} s)", v2.v_star, v2.wall_time_s);
    println!("v3* = {:.6} ({:.1} s)", v3.v_star, v3.wall_time_s);
    println!("value ratio {:.4}", v3.v_star / v2.v_star);
    println!("sqrt expected-QV ratio {:.4}", (expected_qv(&mu3) / expected_qv(&mu2)).sqrt());
    Ok(())
}

fn main() -> atomstop::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
