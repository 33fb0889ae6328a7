//! Discretization parameters and per-stage grids.

use serde::{Deserialize, Serialize};

use crate::distribution::AtomicDistribution;
use crate::error::{Error, Result};
use crate::lattice::SimplexLattice;

/// How the stencil maximum over directions is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSearch {
    /// Exhaustive for one free dimension, local ascent above.
    #[default]
    Auto,
    /// Every admissible direction at every node.
    Exhaustive,
    /// Hill-climb over neighbouring directions, warm-started from the
    /// previous time level. Exact when the stencil objective is unimodal,
    /// which holds whenever the field is discretely concave in `y`.
    LocalAscent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    pub halfwidth_multiplier: f64,
    /// `‖κ‖_∞` bound; defaults to `ceil(4 dx / dy)`.
    pub stencil_width: Option<usize>,
    pub search: DirectionSearch,
    /// Permit free simplex dimension above 2 (more than three atoms).
    pub allow_high_dimension: bool,
    pub record_policy: bool,
    /// Evaluate the last stage with the closed-form heat semigroup instead of
    /// a PDE sweep.
    pub stage_r_shortcut: bool,
    /// Replace each time level by its upper concave envelope in `y`
    /// (one free dimension only). Off by default.
    pub concave_envelope: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dx: 0.1,
            dy: 0.005,
            dt: 0.01,
            halfwidth_multiplier: 5.0,
            stencil_width: None,
            search: DirectionSearch::Auto,
            allow_high_dimension: false,
            record_policy: true,
            stage_r_shortcut: true,
            concave_envelope: false,
        }
    }
}

impl SolverConfig {
    pub fn width(&self) -> usize {
        self.stencil_width.unwrap_or_else(|| (4.0 * self.dx / self.dy - 1e-9).ceil().max(1.0) as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::InvalidGrid(format!("dx must be positive, got {}", self.dx)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.halfwidth_multiplier > 0.0) {
            return Err(Error::InvalidGrid("halfwidth_multiplier must be positive".into()));
        }
        if self.dt > self.dx * self.dx * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt: self.dt, bound: self.dx * self.dx });
        }
        SimplexLattice::with_spacing(0, self.dy)?;
        if self.width() > i8::MAX as usize {
            return Err(Error::InvalidGrid(format!("stencil width {} exceeds {}", self.width(), i8::MAX)));
        }
        Ok(())
    }
}

/// Uniform x-nodes `x0 + (i - half) dx`, `i = 0..2 half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XAxis {
    pub center: f64,
    pub dx: f64,
    pub half: usize,
}

impl XAxis {
    pub fn new(center: f64, dx: f64, halfwidth: f64) -> Self {
        let half = (halfwidth / dx - 1e-9).ceil().max(2.0) as usize;
        Self { center, dx, half }
    }

    pub fn len(&self) -> usize {
        2 * self.half + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        self.center + (i as f64 - self.half as f64) * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn center_index(&self) -> usize {
        self.half
    }

    /// Cell `i` and fraction `θ` with `x ≈ (1-θ) x_i + θ x_{i+1}`, clamped to the axis.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let u = ((x - self.center) / self.dx + self.half as f64).clamp(0.0, (self.len() - 1) as f64);
        let i = (u.floor() as usize).min(self.len() - 2);
        (i, u - i as f64)
    }

    pub fn nearest(&self, x: f64) -> usize {
        let u = ((x - self.center) / self.dx + self.half as f64).round();
        u.clamp(0.0, (self.len() - 1) as f64) as usize
    }
}

/// Space-time grid of one stage `[t_{k-1}, t_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageGrid {
    pub stage: usize,
    pub atoms: usize,
    pub x: XAxis,
    pub lattice: SimplexLattice,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub dt: f64,
    pub width: usize,
}

impl StageGrid {
    pub fn new(stage: usize, mu: &AtomicDistribution, x: XAxis, cfg: &SolverConfig) -> Result<Self> {
        let atoms = mu.atoms();
        let lattice = SimplexLattice::with_spacing(atoms - stage, cfg.dy)?;
        let (t_start, t_end) = (mu.time(stage - 1), mu.time(stage));
        let steps = ((t_end - t_start) / cfg.dt - 1e-9).ceil().max(1.0) as usize;
        let dt = (t_end - t_start) / steps as f64;
        if dt > cfg.dx * cfg.dx * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, bound: cfg.dx * cfg.dx });
        }
        Ok(Self { stage, atoms, x, lattice, t_start, t_end, steps, dt, width: cfg.width() })
    }

    pub fn free_dimension(&self) -> usize {
        self.lattice.dim()
    }

    pub fn ny(&self) -> usize {
        self.lattice.len()
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    /// Start time of level `n`.
    pub fn level_time(&self, n: usize) -> f64 {
        self.t_start + n as f64 * self.dt
    }
}
