//! Wide-stencil approximation of `sup_α (1, α)ᵀ D²u (1, α)`.
//!
//! The x-neighbours `x ± dx` are paired with the y-lattice points `y ± κ dy`,
//! so direction `κ` realises the control `α = κ dy / dx`. Only directions
//! whose two reflections both stay in the stage simplex are admissible.

use crate::error::{Error, Result};
use crate::grid::StageGrid;
use crate::lattice::SimplexLattice;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StencilDirection {
    pub offset: Vec<i32>,
}

impl StencilDirection {
    pub fn zero(dim: usize) -> Self {
        Self { offset: vec![0; dim] }
    }

    pub fn is_zero(&self) -> bool {
        self.offset.iter().all(|&k| k == 0)
    }

    pub fn sup_norm(&self) -> i32 {
        self.offset.iter().map(|k| k.abs()).max().unwrap_or(0)
    }

    /// Control magnitude `‖κ‖₂ dy / dx`.
    pub fn alpha(&self, dx: f64, dy: f64) -> f64 {
        let norm = self.offset.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
        norm * dy / dx
    }
}

/// Largest `|κ_m|` per coordinate and the bound on `|Σ κ|` at node `j`.
fn reflection_bounds(lattice: &SimplexLattice, j: usize, width: usize) -> (Vec<i64>, i64) {
    let node = lattice.node(j);
    let per: Vec<i64> = node.iter().map(|&i| (i as i64).min(width as i64)).collect();
    let slack = lattice.divisions() as i64 - node.iter().map(|&i| i as i64).sum::<i64>();
    (per, slack)
}

/// Calls `visit` with every admissible offset at node `j`, zero first.
pub(crate) fn for_each_admissible(lattice: &SimplexLattice, j: usize, width: usize, mut visit: impl FnMut(&[i64])) {
    let dim = lattice.dim();
    let zero = vec![0i64; dim];
    visit(&zero);
    if dim == 0 {
        return;
    }
    let (per, slack) = reflection_bounds(lattice, j, width);
    let mut k: Vec<i64> = per.iter().map(|&b| -b).collect();
    loop {
        if k.iter().any(|&c| c != 0) && k.iter().sum::<i64>().abs() <= slack {
            visit(&k);
        }
        let mut m = 0;
        loop {
            if m == dim {
                return;
            }
            if k[m] < per[m] {
                k[m] += 1;
                break;
            }
            k[m] = -per[m];
            m += 1;
        }
    }
}

/// All `κ` with `‖κ‖_∞ ≤ width` such that `y ± κ dy` both lie in the stage
/// simplex. Always contains the zero direction; a vertex admits nothing else.
pub fn admissible_directions(lattice: &SimplexLattice, j: usize, width: usize) -> Vec<StencilDirection> {
    let mut out = Vec::new();
    for_each_admissible(lattice, j, width, |k| {
        out.push(StencilDirection { offset: k.iter().map(|&c| c as i32).collect() })
    });
    out
}

/// Relative tolerance within which a direction counts as maximizing.
pub const TIE_TOLERANCE: f64 = 1e-13;

#[inline]
pub(crate) fn tie_margin(current: f64) -> f64 {
    if current.is_finite() {
        TIE_TOLERANCE * (1.0 + current.abs())
    } else {
        0.0
    }
}

/// Integer offset of node `j` shifted by `k`, if it is a lattice node.
#[inline]
pub(crate) fn shifted(lattice: &SimplexLattice, j: usize, k: &[i64], sign: i64) -> Option<usize> {
    let node = lattice.node(j);
    let p: Vec<i64> = node.iter().zip(k).map(|(&i, &c)| i as i64 + sign * c).collect();
    lattice.index_of(&p)
}

/// Explicit monotone update at an x-interior node `(i, j)` of a time level
/// stored row-major as `values[i * ny + j]`:
///
/// `u_n = u + dt/(2 dx²) · max_κ [u(x+dx, y+κ) − 2u + u(x−dx, y−κ)]`.
///
/// Returns the new value and the maximizing direction: the first direction
/// in enumeration order (zero first) within [`TIE_TOLERANCE`] (relative) of
/// the maximum, so the zero direction wins rounding-level ties. The value
/// always uses the exact maximum.
pub fn stencil_update(grid: &StageGrid, values: &[f64], i: usize, j: usize) -> Result<(f64, StencilDirection)> {
    let bound = grid.x.dx * grid.x.dx;
    if grid.dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt: grid.dt, bound });
    }
    let ny = grid.ny();
    if i == 0 || i + 1 >= grid.nx() {
        return Err(Error::InvalidGrid(format!("node {i} is on the x-boundary")));
    }
    let centre = values[i * ny + j];
    let up = &values[(i + 1) * ny..(i + 2) * ny];
    let down = &values[(i - 1) * ny..i * ny];
    let mut candidates = Vec::new();
    for_each_admissible(&grid.lattice, j, grid.width, |k| {
        let plus = shifted(&grid.lattice, j, k, 1).expect("admissible");
        let minus = shifted(&grid.lattice, j, k, -1).expect("admissible");
        candidates.push((up[plus] + down[minus], k.to_vec()));
    });
    let best = candidates.iter().fold(f64::NEG_INFINITY, |m, c| m.max(c.0));
    let (_, k) = candidates.iter().find(|c| c.0 >= best - tie_margin(best)).expect("zero direction is admissible");
    let arg = StencilDirection { offset: k.iter().map(|&c| c as i32).collect() };
    let lambda = grid.dt / (2.0 * grid.x.dx * grid.x.dx);
    Ok((centre + lambda * (best - 2.0 * centre), arg))
}
