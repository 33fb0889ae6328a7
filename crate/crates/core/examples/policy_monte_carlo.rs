//! Simulate the controlled pair (X, Y) under the solved policy, check the
//! stopping law and the payoff against v*, and compare with a policy whose
//! control is switched off.
//!
//! cargo run --release --example policy_monte_carlo [-- --quick]

use atomstop::distribution::AtomicDistribution;
use atomstop::grid::SolverConfig;
use atomstop::hjb::solve_all;
use atomstop::mc::{conditional_density, mc_report, simulate_paths, ControlPerturbation, McConfig, Observation};
use atomstop::payoff::PayoffSpec;

pub fn run(quick: bool) -> atomstop::Result<()> {
    let mu = AtomicDistribution::new(&[10.0, 20.0], &[0.5, 0.5])?;
    let call = PayoffSpec::call(0.0);
    let grid = SolverConfig { dx: 0.2, dy: 0.01, dt: 0.04, ..SolverConfig::default() };
    let solved = solve_all(&mu, &call, 0.0, &grid)?;
    let paths = if quick { 20_000 } else { 200_000 };

    let mc = McConfig { paths, seed: 1, ..McConfig::default() };
    let report = mc_report(&simulate_paths(&solved, &mc)?, &solved)?;
    println!("optimal control: mean payoff {:.4} ± {:.4}, v* {:.4}", report.mean_payoff, report.payoff_std_error, report.v_star);
    for m in &report.masses {
        println!("  P[tau = t_{}] = {:.4} (target {})", m.atom, m.empirical, m.expected);
    }
    for c in &report.martingale {
        println!("  {:<20} mean {:+.5} ± {:.5}", c.label, c.mean, c.std_error);
    }
    println!("  clamped steps {:.2e}", report.clamp_fraction);

    let off = McConfig { perturbation: ControlPerturbation::Zero, ..mc.clone() };
    let ensemble = simulate_paths(&solved, &off)?;
    let report = mc_report(&ensemble, &solved)?;
    println!(
        "control off: mean payoff {:.4} ± {:.4} (independent randomization {:.4})",
        report.mean_payoff, report.payoff_std_error, report.independent_randomization_value
    );

    let optimal = simulate_paths(&solved, &mc)?;
    let density = conditional_density(&optimal, 1, Observation::AtStop, 41)?;
    println!("density of X_10 given tau = 10 (mass {:.3}):", density.mass);
    for (x, d) in density.centers().iter().zip(&density.density).step_by(4) {
        println!("  {x:>6.2} {}", "#".repeat((d * 400.0) as usize));
    }
    Ok(())
}

fn main() -> atomstop::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
