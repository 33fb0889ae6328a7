//! Two-atom outlook μ = ½δ₁₀ + ½δ₂₀ with a call struck at zero: solve the
//! stage equations and compare with the closed-form bracket.
//!
//! cargo run --release --example binary_outlook [-- --quick]

use atomstop::closed_form::{mean_volatility_value, support_constrained_value};
use atomstop::distribution::AtomicDistribution;
use atomstop::grid::SolverConfig;
use atomstop::hjb::{check_concavity, solve_all};
use atomstop::payoff::PayoffSpec;

pub fn run(quick: bool) -> atomstop::Result<()> {
    let mu = AtomicDistribution::new(&[10.0, 20.0], &[0.5, 0.5])?;
    let call = PayoffSpec::call(0.0);
    let cfg = if quick {
        SolverConfig { dx: 0.4, dy: 0.02, dt: 0.16, record_policy: false, ..SolverConfig::default() }
    } else {
        SolverConfig { record_policy: false, ..SolverConfig::default() }
    };
    let solved = solve_all(&mu, &call, 0.0, &cfg)?;
    let lower = mean_volatility_value(&call, &mu, 0.0);
    let upper = support_constrained_value(&call, &mu, 0.0);
    println!("v* = {:.6} in [{lower:.6}, {upper:.6}] ({:.1} s)", solved.v_star, solved.wall_time_s);
    println!("stencil saturation {:.2e}", solved.saturation_fraction());
    println!("max pure-y second difference of w_1: {:.2e}", check_concavity(&solved.stage(1).start).max_second_difference);
    let slice = solved.value_slice();
    let axis = solved.x_axis;
    for x in [-6.0, -3.0, 0.0, 3.0, 6.0] {
        let i = axis.nearest(x);
        println!("  w_1(0, {:>5.1}, p) = {:.5}", axis.node(i), slice[i]);
    }
    Ok(())
}

fn main() -> atomstop::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
