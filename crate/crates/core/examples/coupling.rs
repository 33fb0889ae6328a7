//! Coupling a stopping time with law p to one with law p' on the same
//! noise, and comparing the mismatch probability with the 4^r bound.
//!
//! cargo run --release --example coupling [-- --quick]

use atomstop::distribution::AtomicDistribution;
use atomstop::rng::substream;
use atomstop::stopping::{couple_stopping_time, gaussian_tail_thresholds, CouplingPlan};

pub fn run(quick: bool) -> atomstop::Result<()> {
    let n = if quick { 20_000 } else { 100_000 };
    let cases = [
        (AtomicDistribution::new(&[10.0, 20.0], &[0.5, 0.5])?, vec![0.6, 0.4]),
        (AtomicDistribution::new(&[10.0, 20.0, 100.0], &[0.45, 0.45, 0.10])?, vec![1.0 / 3.0; 3]),
    ];
    for (mu, target) in cases {
        let plan = CouplingPlan::new(&gaussian_tail_thresholds(&mu), &target)?;
        let mismatched = (0..n)
            .filter(|&i| {
                let (a, b) = couple_stopping_time(&plan, 0.0, &mut substream(5, i as u64));
                a.atom_index != b.atom_index
            })
            .count();
        println!("{:?} -> {:?}", mu.weights(), target);
        println!("  stage rules: {:?}", plan.rules);
        println!(
            "  P[tau != tau'] exact {:.5}, empirical {:.5}, bound {:.3}",
            plan.exact_mismatch,
            mismatched as f64 / n as f64,
            plan.bound()
        );
        println!("  per-stage symmetric difference {:?} vs bounds {:?}", plan.stage_symmetric_difference, plan.stage_bounds());
    }
    Ok(())
}

fn main() -> atomstop::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
