//! The monotone wide-stencil update on a small grid: admissible directions
//! near the simplex boundary, the maximizing direction, and monotonicity
//! under a perturbation of one neighbour.
//!
//! cargo run --example wide_stencil

use atomstop::distribution::AtomicDistribution;
use atomstop::grid::{SolverConfig, StageGrid, XAxis};
use atomstop::stencil::{admissible_directions, stencil_update};

pub fn run(_quick: bool) -> atomstop::Result<()> {
    let mu = AtomicDistribution::new(&[1.0, 2.0, 3.0], &[0.3, 0.3, 0.4])?;
    let cfg = SolverConfig { dx: 0.1, dy: 0.05, dt: 0.01, stencil_width: Some(2), ..SolverConfig::default() };
    let grid = StageGrid::new(1, &mu, XAxis::new(0.0, cfg.dx, 0.5), &cfg)?;
    for j in [0, 1, 22, grid.ny() - 1] {
        let dirs = admissible_directions(&grid.lattice, j, grid.width);
        println!("node {:?}: {} admissible directions", grid.lattice.node(j), dirs.len());
    }
    // kinked along x = y_1 - 0.3, so the best direction moves y_1 against x
    let ny = grid.ny();
    let mut values: Vec<f64> = (0..grid.nx() * ny)
        .map(|m| {
            let x = grid.x.node(m / ny);
            let y = grid.lattice.free_coords(m % ny);
            (x - y[0] + 0.3).abs() - 0.2 * y[1] * y[1]
        })
        .collect();
    let (i, j) = (grid.x.center_index(), grid.lattice.index_of(&[6, 6]).expect("node"));
    let (before, kappa) = stencil_update(&grid, &values, i, j)?;
    println!("update at ({i}, {j}) = {before:.6}, direction {:?}, alpha {:?}", kappa.offset, kappa.alpha(cfg.dx, cfg.dy));
    values[(i + 1) * ny + j] += 0.5;
    let (after, _) = stencil_update(&grid, &values, i, j)?;
    println!("after raising a neighbour by 0.5: {after:.6} (monotone: {})", after >= before);
    Ok(())
}

fn main() -> atomstop::Result<()> {
    run(false)
}
