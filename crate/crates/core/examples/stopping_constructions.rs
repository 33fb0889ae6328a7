//! Stopping times with a prescribed atomic law, built from Gaussian
//! increment tails and from Brownian-bridge maxima.
//!
//! cargo run --release --example stopping_constructions [-- --quick]

use atomstop::distribution::AtomicDistribution;
use atomstop::mc::chi_square;
use atomstop::payoff::PayoffSpec;
use atomstop::rng::substream;
use atomstop::stopping::{bridge_cdf_inv, sample_stopping_time, ScheduleKind, ThresholdSchedule};

pub fn run(quick: bool) -> atomstop::Result<()> {
    let n = if quick { 20_000 } else { 100_000 };
    let call = PayoffSpec::call(0.0);
    println!("median of the bridge sup-norm: {:.6}", bridge_cdf_inv(0.5)?);
    for mu in [
        AtomicDistribution::new(&[10.0, 20.0], &[0.5, 0.5])?,
        AtomicDistribution::new(&[10.0, 20.0, 100.0], &[0.45, 0.45, 0.10])?,
    ] {
        for kind in [ScheduleKind::GaussianIncrement, ScheduleKind::BridgeMax] {
            let schedule = ThresholdSchedule::new(kind, &mu)?;
            let mut counts = vec![0u64; mu.atoms()];
            let mut payoff = 0.0;
            for i in 0..n {
                let s = sample_stopping_time(&schedule, 0.0, &mut substream(11, i as u64));
                counts[s.atom_index - 1] += 1;
                payoff += call.eval(s.terminal_x);
            }
            let (stat, p) = chi_square(&counts, mu.weights());
            let freq: Vec<String> = counts.iter().map(|&c| format!("{:.4}", c as f64 / n as f64)).collect();
            println!(
                "{kind:?} {:?}: thresholds {:?}\n  frequencies [{}], chi2 {stat:.2} (p = {p:.3}), mean call payoff {:.4}",
                mu.weights(),
                schedule.thresholds.iter().map(|c| (c * 1e4).round() / 1e4).collect::<Vec<_>>(),
                freq.join(", "),
                payoff / n as f64
            );
        }
    }
    Ok(())
}

fn main() -> atomstop::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
