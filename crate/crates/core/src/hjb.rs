//! Backward solution of the stage HJB equations
//!
//! `u_t + ½ sup_α (1, α)ᵀ D²u (1, α) = 0` on `[t_{k-1}, t_k) × ℝ × Δ_k`,
//! `u(t_k, x, y) = y_k f(x) + (1 − y_k) v_{k+1}(x, P_k(y))`,
//!
//! chained from the last stage down to the first. The last stage has no
//! control and reduces to the backward heat equation.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::closed_form::heat_value;
use crate::distribution::AtomicDistribution;
use crate::error::{Error, Result};
use crate::grid::{DirectionSearch, SolverConfig, StageGrid, XAxis};
use crate::lattice::SimplexLattice;
use crate::payoff::PayoffSpec;
use crate::stencil::tie_margin;

/// Largest free simplex dimension the solver handles even with the override.
pub const MAX_FREE_DIMENSION: usize = 4;
/// Largest free dimension accepted without the override (three atoms).
pub const DEFAULT_MAX_FREE_DIMENSION: usize = 2;
/// Concavity diagnostic threshold on pure-y second differences.
pub const CONCAVITY_TOLERANCE: f64 = 1e-6;

/// One time level of `w_k` on its stage grid, stored row-major in x.
#[derive(Debug, Clone)]
pub struct ValueField {
    pub grid: Arc<StageGrid>,
    pub time: f64,
    pub values: Vec<f64>,
}

impl ValueField {
    pub fn stage(&self) -> usize {
        self.grid.stage
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.ny() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let ny = self.grid.ny();
        &self.values[i * ny..(i + 1) * ny]
    }

    /// Linear in x, simplicial in the free y-coordinates.
    pub fn interpolate(&self, x: f64, free_y: &[f64]) -> f64 {
        let (i, theta) = self.grid.x.locate(x);
        let weights = self.grid.lattice.interpolation_weights(free_y);
        let at_row = |row: usize| weights.iter().map(|&(j, w)| w * self.at(row, j)).sum::<f64>();
        (1.0 - theta) * at_row(i) + theta * at_row(i + 1)
    }

    /// Value at x-node `i` and arbitrary free y-coordinates.
    pub fn interpolate_y(&self, i: usize, free_y: &[f64]) -> f64 {
        self.grid.lattice.interpolation_weights(free_y).iter().map(|&(j, w)| w * self.at(i, j)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Argmax stencil directions for every level and node of a stage.
#[derive(Debug, Clone)]
pub struct PolicyField {
    pub grid: Arc<StageGrid>,
    /// `κ` components, `dim` per (level, x, y) entry.
    pub data: Vec<i8>,
}

impl PolicyField {
    fn offset(&self, level: usize, i: usize, j: usize) -> usize {
        let g = &self.grid;
        ((level * g.nx() + i) * g.ny() + j) * g.free_dimension()
    }

    /// Direction applied over `[t_{k-1} + n dt, t_{k-1} + (n+1) dt)`.
    pub fn direction(&self, level: usize, i: usize, j: usize) -> &[i8] {
        let d = self.grid.free_dimension();
        let o = self.offset(level, i, j);
        &self.data[o..o + d]
    }

    /// Control `α = κ dy / dx` in free coordinates.
    pub fn control(&self, level: usize, i: usize, j: usize) -> Vec<f64> {
        let scale = self.grid.lattice.spacing() / self.grid.x.dx;
        self.direction(level, i, j).iter().map(|&k| k as f64 * scale).collect()
    }

    /// Level containing time `t` (clamped to the stage).
    pub fn level_at(&self, t: f64) -> usize {
        let g = &self.grid;
        (((t - g.t_start) / g.dt + 1e-9).floor().max(0.0) as usize).min(g.steps - 1)
    }
}

#[derive(Debug, Clone)]
pub struct StageSolution {
    pub grid: Arc<StageGrid>,
    /// `w_k(t_{k-1}, ·, ·) = v_k`.
    pub start: ValueField,
    /// `w_k(t_k, ·, ·)`, the terminal coupling.
    pub terminal: ValueField,
    pub policy: Option<PolicyField>,
    /// Fraction of interior updates whose argmax hit `‖κ‖_∞ = W`.
    pub saturation_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub mu: AtomicDistribution,
    pub payoff: PayoffSpec,
    pub x0: f64,
    pub config: SolverConfig,
    pub x_axis: XAxis,
    /// Stage solutions, index `k - 1`.
    pub stages: Vec<StageSolution>,
    pub v_star: f64,
    pub wall_time_s: f64,
}

impl SolveOutput {
    pub fn stage(&self, k: usize) -> &StageSolution {
        &self.stages[k - 1]
    }

    /// `w_1(0, ·, p)` at every x-node.
    pub fn value_slice(&self) -> Vec<f64> {
        let free = free_part(self.mu.weights(), 1);
        let start = &self.stage(1).start;
        (0..self.x_axis.len()).map(|i| start.interpolate_y(i, &free)).collect()
    }

    /// Saturation fraction over all controlled stages, weighted by update count.
    pub fn saturation_fraction(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for s in &self.stages {
            if s.grid.free_dimension() > 0 {
                let n = (s.grid.steps * s.grid.nx() * s.grid.ny()) as f64;
                num += s.saturation_fraction * n;
                den += n;
            }
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

/// Free coordinates `(y_k, …, y_{r-1})` of a full simplex vector.
pub fn free_part(y: &[f64], stage: usize) -> Vec<f64> {
    y[stage - 1..y.len() - 1].to_vec()
}

/// `u(t_k, x, y) = y_k f(x) + (1 − y_k) v_next(x, P_k(y))`, with `v_next`
/// interpolated on its own lattice and the continuation term dropped at `e_k`.
/// For the last stage (`next = None`) the condition is `f` itself.
pub fn terminal_condition(grid: Arc<StageGrid>, f: &PayoffSpec, next: Option<&ValueField>) -> Result<ValueField> {
    let k = grid.stage;
    let r = grid.atoms;
    let nx = grid.nx();
    let ny = grid.ny();
    let xs = grid.x.nodes();
    let payoff: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
    let mut values = vec![0.0; nx * ny];
    match next {
        None => {
            if k != r {
                return Err(Error::StageMismatch { expected: r, got: k });
            }
            values.copy_from_slice(&payoff);
        }
        Some(next) => {
            if next.stage() != k + 1 {
                return Err(Error::StageMismatch { expected: k + 1, got: next.stage() });
            }
            if next.grid.x != grid.x {
                return Err(Error::InvalidGrid("stages must share the x-axis".into()));
            }
            for j in 0..ny {
                let y = grid.lattice.full_coords(j, k, r);
                let stop = y[k - 1];
                let tail = 1.0 - stop;
                let weights = if grid.lattice.node(j)[0] as usize == grid.lattice.divisions() {
                    Vec::new()
                } else {
                    let image: Vec<f64> = y[k..r - 1].iter().map(|v| v / tail).collect();
                    next.grid.lattice.interpolation_weights(&image)
                };
                for i in 0..nx {
                    let cont: f64 = weights.iter().map(|&(l, w)| w * next.at(i, l)).sum();
                    values[i * ny + j] = stop * payoff[i] + tail * cont;
                }
            }
        }
    }
    Ok(ValueField { time: grid.t_end, grid, values })
}

#[derive(Clone, Copy, PartialEq)]
enum Search {
    Exhaustive,
    Local,
}

/// One explicit backward step over all x-interior rows.
struct Sweep<'a> {
    grid: &'a StageGrid,
    lambda: f64,
    search: Search,
    /// Per node: `min(i_m, W)` and the simplex slack `N − Σ i`.
    bounds: Vec<([i64; MAX_FREE_DIMENSION], i64)>,
    /// Flat offset of each node in the lattice's dense box index.
    flat: Vec<i64>,
    strides: [i64; MAX_FREE_DIMENSION],
}

/// `max_i a[i] + b[i]` over equal-length slices, four lanes at a time.
#[inline]
fn max_pair_sum(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut lanes = [f64::NEG_INFINITY; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            let v = x[l] + y[l];
            lanes[l] = if v > lanes[l] { v } else { lanes[l] };
        }
    }
    let mut m = lanes[0].max(lanes[1]).max(lanes[2].max(lanes[3]));
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        m = m.max(x + y);
    }
    m
}

/// A time level's neighbouring rows, with reversed copies for one free dimension.
struct Rows<'r> {
    up: &'r [f64],
    down: &'r [f64],
    rev_up: Vec<f64>,
    rev_down: Vec<f64>,
}

impl<'a> Sweep<'a> {
    fn new(grid: &'a StageGrid, search: Search) -> Self {
        let lat = &grid.lattice;
        let d = lat.dim();
        let w = grid.width as i64;
        let mut strides = [0i64; MAX_FREE_DIMENSION];
        strides[..d].copy_from_slice(&lat.strides());
        let mut bounds = Vec::with_capacity(lat.len());
        let mut flat = Vec::with_capacity(lat.len());
        for j in 0..lat.len() {
            let mut p = [0i64; MAX_FREE_DIMENSION];
            let mut b = [0i64; MAX_FREE_DIMENSION];
            for m in 0..d {
                p[m] = lat.node(j)[m] as i64;
                b[m] = p[m].min(w);
            }
            bounds.push((b, lat.divisions() as i64 - p[..d].iter().sum::<i64>()));
            flat.push((0..d).map(|m| p[m] * strides[m]).sum());
        }
        Self { grid, lambda: grid.dt / (2.0 * grid.x.dx * grid.x.dx), search, bounds, flat, strides }
    }

    #[inline]
    fn admissible(&self, j: usize, k: &[i64]) -> bool {
        let (b, slack) = &self.bounds[j];
        k.iter().zip(b).all(|(c, m)| c.abs() <= *m) && k.iter().sum::<i64>().abs() <= *slack
    }

    /// Lattice index of `y_j + sign κ`; `κ` must be admissible at `j`.
    #[inline]
    fn index(&self, j: usize, k: &[i64], sign: i64) -> usize {
        let shift: i64 = k.iter().zip(&self.strides).map(|(c, s)| c * s).sum();
        self.grid.lattice.dense_slot(self.flat[j] + sign * shift)
    }

    #[inline]
    fn eval(&self, rows: &Rows, j: usize, k: &[i64]) -> f64 {
        rows.up[self.index(j, k, 1)] + rows.down[self.index(j, k, -1)]
    }

    /// Visits the admissible nonzero directions at `j` in odometer order
    /// until `visit` returns false.
    fn for_each_direction(&self, j: usize, mut visit: impl FnMut(&[i64]) -> bool) {
        let d = self.grid.lattice.dim();
        let (b, _) = self.bounds[j];
        let mut k = [0i64; MAX_FREE_DIMENSION];
        for m in 0..d {
            k[m] = -b[m];
        }
        loop {
            if k[..d].iter().any(|&c| c != 0) && self.admissible(j, &k[..d]) && !visit(&k[..d]) {
                return;
            }
            let mut m = 0;
            loop {
                if m == d {
                    return;
                }
                if k[m] < b[m] {
                    k[m] += 1;
                    break;
                }
                k[m] = -b[m];
                m += 1;
            }
        }
    }

    /// Returns `(max, argmax)` of `up[y+κ] + down[y−κ]` over the search set.
    fn maximize(&self, rows: &Rows, j: usize, warm: &[i8]) -> (f64, [i64; MAX_FREE_DIMENSION]) {
        let d = self.grid.lattice.dim();
        let mut arg = [0i64; MAX_FREE_DIMENSION];
        let base = rows.up[j] + rows.down[j];
        if d == 0 {
            return (base, arg);
        }
        match self.search {
            Search::Exhaustive if d == 1 => {
                let kmax = self.bounds[j].0[0].min(self.bounds[j].1) as usize;
                if kmax == 0 {
                    return (base, arg);
                }
                let ny = rows.up.len();
                let r = ny - 1 - j;
                // κ > 0: up[j+κ] + down[j−κ];  κ < 0: up[j−κ'] + down[j+κ']
                let pos = max_pair_sum(&rows.up[j + 1..=j + kmax], &rows.rev_down[r + 1..=r + kmax]);
                let neg = max_pair_sum(&rows.rev_up[r + 1..=r + kmax], &rows.down[j + 1..=j + kmax]);
                let best = base.max(pos).max(neg);
                let floor = best - tie_margin(best);
                if base >= floor {
                    return (best, arg);
                }
                let hit = (1..=kmax)
                    .rev()
                    .map(|k| -(k as i64))
                    .chain(1..=kmax as i64)
                    .find(|&k| {
                        let v = if k > 0 {
                            rows.up[j + k as usize] + rows.down[j - k as usize]
                        } else {
                            rows.up[j - (-k) as usize] + rows.down[j + (-k) as usize]
                        };
                        v >= floor
                    })
                    .expect("maximum is attained");
                arg[0] = hit;
                (best, arg)
            }
            Search::Exhaustive => {
                let mut best = base;
                self.for_each_direction(j, |k| {
                    best = best.max(self.eval(rows, j, k));
                    true
                });
                let floor = best - tie_margin(best);
                if base < floor {
                    self.for_each_direction(j, |k| {
                        if self.eval(rows, j, k) >= floor {
                            arg[..d].copy_from_slice(k);
                            false
                        } else {
                            true
                        }
                    });
                }
                (best, arg)
            }
            Search::Local => {
                let mut arg_value = base;
                let mut best = base;
                let mut start = [0i64; MAX_FREE_DIMENSION];
                for m in 0..d {
                    start[m] = warm[m] as i64;
                }
                if start[..d].iter().any(|&c| c != 0) && self.admissible(j, &start[..d]) {
                    let v = self.eval(rows, j, &start[..d]);
                    best = best.max(v);
                    if v > arg_value + tie_margin(arg_value) {
                        arg_value = v;
                        arg = start;
                    }
                }
                let moves = 3usize.pow(d as u32);
                loop {
                    let mut improved = false;
                    let mut next = arg;
                    let mut next_value = arg_value;
                    for code in 0..moves {
                        let mut c = code;
                        let mut k = arg;
                        let mut nonzero = false;
                        for slot in k.iter_mut().take(d) {
                            let step = (c % 3) as i64 - 1;
                            c /= 3;
                            nonzero |= step != 0;
                            *slot += step;
                        }
                        if !nonzero || !self.admissible(j, &k[..d]) {
                            continue;
                        }
                        let v = self.eval(rows, j, &k[..d]);
                        best = best.max(v);
                        if v > next_value + tie_margin(next_value) {
                            next_value = v;
                            next = k;
                            improved = true;
                        }
                    }
                    if !improved {
                        break;
                    }
                    arg = next;
                    arg_value = next_value;
                }
                (best, arg)
            }
        }
    }

    /// Computes level `n` from level `n + 1`. Returns the saturated-update count.
    fn step(&self, old: &[f64], new: &mut [f64], warm: &[i8], policy: &mut [i8]) -> usize {
        let g = self.grid;
        let (nx, ny, d) = (g.nx(), g.ny(), g.free_dimension());
        let width = g.width as i64;
        let pd = d.max(1);
        let reversed = d == 1 && self.search == Search::Exhaustive;
        let saturated: usize = new
            .par_chunks_mut(ny)
            .zip(policy.par_chunks_mut(ny * pd))
            .enumerate()
            .filter(|(i, _)| *i > 0 && *i + 1 < nx)
            .map(|(i, (row, pol))| {
                let up = &old[(i + 1) * ny..(i + 2) * ny];
                let down = &old[(i - 1) * ny..i * ny];
                let rows = Rows {
                    up,
                    down,
                    rev_up: if reversed { up.iter().rev().copied().collect() } else { Vec::new() },
                    rev_down: if reversed { down.iter().rev().copied().collect() } else { Vec::new() },
                };
                let centre = &old[i * ny..(i + 1) * ny];
                let warm_row = &warm[i * ny * pd..(i + 1) * ny * pd];
                let mut count = 0;
                for j in 0..ny {
                    let (best, arg) = self.maximize(&rows, j, &warm_row[j * d..(j + 1) * d]);
                    row[j] = centre[j] + self.lambda * (best - 2.0 * centre[j]);
                    for m in 0..d {
                        pol[j * d + m] = arg[m] as i8;
                    }
                    if d > 0 && arg[..d].iter().any(|c| c.abs() == width) {
                        count += 1;
                    }
                }
                count
            })
            .sum();
        // linear extrapolation at the x-boundary (u_xx = 0)
        for j in 0..ny {
            new[j] = 2.0 * new[ny + j] - new[2 * ny + j];
            new[(nx - 1) * ny + j] = 2.0 * new[(nx - 2) * ny + j] - new[(nx - 3) * ny + j];
        }
        for m in 0..ny * pd {
            policy[m] = 0;
            policy[(nx - 1) * ny * pd + m] = 0;
        }
        saturated
    }
}

/// One explicit step of the production sweep: level `n` from level `n + 1`
/// (`values`, row-major in x), x-boundary rows extrapolated linearly.
/// Returns the new level and the argmax directions (`free_dimension` per node).
pub fn step_level(grid: &StageGrid, search: DirectionSearch, values: &[f64]) -> Result<(Vec<f64>, Vec<i8>)> {
    let bound = grid.x.dx * grid.x.dx;
    if grid.dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt: grid.dt, bound });
    }
    if values.len() != grid.nx() * grid.ny() || grid.nx() < 3 {
        return Err(Error::InvalidGrid("level does not match the stage grid".into()));
    }
    let d = grid.free_dimension();
    let cfg = SolverConfig { search, ..SolverConfig::default() };
    let sweep = Sweep::new(grid, resolve_search(&cfg, d));
    let mut new = vec![0.0; values.len()];
    let warm = vec![0i8; values.len() * d.max(1)];
    let mut policy = vec![0i8; values.len() * d.max(1)];
    sweep.step(values, &mut new, &warm, &mut policy);
    policy.truncate(values.len() * d);
    Ok((new, policy))
}

/// Upper concave envelope of equally spaced samples, in place.
fn concave_envelope(values: &mut [f64]) {
    let n = values.len();
    if n < 3 {
        return;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for j in 0..n {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b if it lies on or below the chord a-j
            let chord = values[a] + (values[j] - values[a]) * (b - a) as f64 / (j - a) as f64;
            if values[b] <= chord {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(j);
    }
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for j in a + 1..b {
            values[j] = values[a] + (values[b] - values[a]) * (j - a) as f64 / (b - a) as f64;
        }
    }
}

fn resolve_search(cfg: &SolverConfig, dim: usize) -> Search {
    match cfg.search {
        DirectionSearch::Exhaustive => Search::Exhaustive,
        DirectionSearch::LocalAscent => Search::Local,
        DirectionSearch::Auto if dim <= 1 => Search::Exhaustive,
        DirectionSearch::Auto => Search::Local,
    }
}

/// Backward sweep of the explicit monotone scheme from `terminal` at `t_k`
/// to `t_{k-1}`, recording the argmax directions when configured.
pub fn solve_stage(terminal: ValueField, cfg: &SolverConfig) -> Result<StageSolution> {
    let grid = terminal.grid.clone();
    let bound = grid.x.dx * grid.x.dx;
    if grid.dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt: grid.dt, bound });
    }
    if grid.nx() < 3 {
        return Err(Error::InvalidGrid("x-axis needs at least three nodes".into()));
    }
    let d = grid.free_dimension();
    if cfg.concave_envelope && d > 1 {
        return Err(Error::InvalidGrid("concave envelope is only available with one free dimension".into()));
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let level_len = nx * ny * d;
    let scratch_len = nx * ny * d.max(1);
    let sweep = Sweep::new(&grid, resolve_search(cfg, d));
    let mut record = if cfg.record_policy && d > 0 { Some(vec![0i8; level_len * grid.steps]) } else { None };
    let mut old = terminal.values.clone();
    let mut new = vec![0.0; nx * ny];
    let mut warm = vec![0i8; scratch_len];
    let mut current = vec![0i8; scratch_len];
    let mut saturated = 0usize;
    for n in (0..grid.steps).rev() {
        saturated += sweep.step(&old, &mut new, &warm, &mut current);
        if cfg.concave_envelope && d == 1 {
            new.par_chunks_mut(ny).for_each(concave_envelope);
        }
        if let Some(rec) = record.as_mut() {
            rec[n * level_len..(n + 1) * level_len].copy_from_slice(&current[..level_len]);
        }
        std::mem::swap(&mut warm, &mut current);
        std::mem::swap(&mut old, &mut new);
    }
    let interior = (grid.steps * (nx - 2) * ny) as f64;
    let start = ValueField { grid: grid.clone(), time: grid.t_start, values: old };
    Ok(StageSolution {
        policy: record.map(|data| PolicyField { grid: grid.clone(), data }),
        saturation_fraction: if d > 0 { saturated as f64 / interior } else { 0.0 },
        start,
        terminal,
        grid,
    })
}

/// Last stage by the closed-form heat semigroup: `v_r(x) = E[f(x + W_{t_r − t_{r-1}})]`.
fn last_stage_closed_form(grid: Arc<StageGrid>, f: &PayoffSpec) -> Result<StageSolution> {
    let gap = grid.t_end - grid.t_start;
    let values = grid.x.nodes().iter().map(|&x| heat_value(f, gap, x)).collect::<Result<Vec<_>>>()?;
    let terminal = terminal_condition(grid.clone(), f, None)?;
    Ok(StageSolution {
        start: ValueField { grid: grid.clone(), time: grid.t_start, values },
        terminal,
        policy: None,
        saturation_fraction: 0.0,
        grid,
    })
}

/// Solves every stage from `r` down to 1 and evaluates `v* = w_1(0, x₀, p)`.
pub fn solve_all(mu: &AtomicDistribution, f: &PayoffSpec, x0: f64, cfg: &SolverConfig) -> Result<SolveOutput> {
    let clock = Instant::now();
    cfg.validate()?;
    let r = mu.atoms();
    let dimension = r - 1;
    if dimension > MAX_FREE_DIMENSION || (dimension > DEFAULT_MAX_FREE_DIMENSION && !cfg.allow_high_dimension) {
        return Err(Error::UnsupportedDimension { dimension });
    }
    let x_axis = XAxis::new(x0, cfg.dx, cfg.halfwidth_multiplier * mu.last_time().sqrt());
    let mut stages: Vec<StageSolution> = Vec::with_capacity(r);
    for k in (1..=r).rev() {
        let grid = Arc::new(StageGrid::new(k, mu, x_axis, cfg)?);
        let solution = if k == r {
            if cfg.stage_r_shortcut {
                last_stage_closed_form(grid, f)?
            } else {
                solve_stage(terminal_condition(grid, f, None)?, cfg)?
            }
        } else {
            let next = &stages.last().expect("later stage solved first").start;
            solve_stage(terminal_condition(grid, f, Some(next))?, cfg)?
        };
        stages.push(solution);
    }
    stages.reverse();
    let start = &stages[0].start;
    let v_star = start.interpolate(x0, &free_part(mu.weights(), 1));
    Ok(SolveOutput {
        mu: mu.clone(),
        payoff: f.clone(),
        x0,
        config: cfg.clone(),
        x_axis,
        stages,
        v_star,
        wall_time_s: clock.elapsed().as_secs_f64(),
    })
}

/// Largest centred second difference along pure-y lattice directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub max_second_difference: f64,
    /// `(x-node, y-node)` of the maximum, if any direction was admissible.
    pub location: Option<(usize, usize)>,
    pub violations: usize,
    pub ok: bool,
}

/// Scans every node and every lattice edge direction (`e_m` and `e_m − e_l`)
/// for positive second differences; values above [`CONCAVITY_TOLERANCE`]
/// are violations of concavity in `y`.
pub fn check_concavity(field: &ValueField) -> ConcavityReport {
    let lat: &SimplexLattice = &field.grid.lattice;
    let d = lat.dim();
    let mut directions: Vec<Vec<i64>> = Vec::new();
    for m in 0..d {
        let mut e = vec![0; d];
        e[m] = 1;
        directions.push(e);
        for l in m + 1..d {
            let mut e = vec![0; d];
            e[m] = 1;
            e[l] = -1;
            directions.push(e);
        }
    }
    let mut report = ConcavityReport { max_second_difference: f64::NEG_INFINITY, location: None, violations: 0, ok: true };
    for j in 0..lat.len() {
        let node: Vec<i64> = lat.node(j).iter().map(|&c| c as i64).collect();
        for e in &directions {
            let plus: Vec<i64> = node.iter().zip(e).map(|(a, b)| a + b).collect();
            let minus: Vec<i64> = node.iter().zip(e).map(|(a, b)| a - b).collect();
            let (Some(jp), Some(jm)) = (lat.index_of(&plus), lat.index_of(&minus)) else { continue };
            for i in 0..field.grid.nx() {
                let sd = field.at(i, jp) - 2.0 * field.at(i, j) + field.at(i, jm);
                if sd > CONCAVITY_TOLERANCE {
                    report.violations += 1;
                }
                if sd > report.max_second_difference {
                    report.max_second_difference = sd;
                    report.location = Some((i, j));
                }
            }
        }
    }
    if report.location.is_none() {
        report.max_second_difference = 0.0;
    }
    report.ok = report.violations == 0;
    report
}
