//! Reference values that bracket the constrained stopping value:
//! the payoff itself, the mean-volatility value and the support-constrained
//! (Bermudan) value, for the two- and three-atom outlooks.
//!
//! cargo run --release --example closed_form_bounds

use atomstop::closed_form::{heat_value, mean_volatility_value, support_constrained_on_grid};
use atomstop::distribution::{expected_qv, AtomicDistribution};
use atomstop::payoff::PayoffSpec;

pub fn run(_quick: bool) -> atomstop::Result<()> {
    let call = PayoffSpec::call(0.0);
    let outlooks = [
        ("binary", AtomicDistribution::new(&[10.0, 20.0], &[0.5, 0.5])?),
        ("trinary", AtomicDistribution::new(&[10.0, 20.0, 100.0], &[0.45, 0.45, 0.10])?),
    ];
    for (name, mu) in &outlooks {
        println!("{name}: E[tau] = {}, sqrt = {:.4}", expected_qv(mu), expected_qv(mu).sqrt());
        let xs: Vec<f64> = (-8..=8).map(|i| i as f64).collect();
        let support = support_constrained_on_grid(&call, mu, &xs)?;
        println!("{:>6} {:>10} {:>10} {:>10}", "x", "payoff", "mean-vol", "support");
        for (x, s) in xs.iter().zip(&support).step_by(2) {
            println!("{x:>6} {:>10.6} {:>10.6} {s:>10.6}", call.eval(*x), mean_volatility_value(&call, mu, *x));
        }
    }
    // independent randomization: stop at t_k with probability p_k regardless of the path
    let mu2 = &outlooks[0].1;
    let independent: f64 = mu2.times().iter().zip(mu2.weights()).map(|(&t, &p)| p * heat_value(&call, t, 0.0).unwrap()).sum();
    println!("binary, independent randomization at x=0: {independent:.6}");
    Ok(())
}

fn main() -> atomstop::Result<()> {
    run(false)
}
