//! Atomic target laws for the stopping time and the nested simplices
//! `Δ_k = {y ∈ Δ : y_1 = … = y_{k-1} = 0}` on which the conditional
//! stopping probabilities live.
//!
//! Stages are 1-based throughout, matching the atom indices.

use crate::error::{Error, Result};

/// Tolerance for simplex membership at construction.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Tolerance for simplex membership after arithmetic (interpolation, clamping).
pub const SIMPLEX_ARITH_TOL: f64 = 1e-9;
/// Weights may be supplied with this much rounding; they are renormalized.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// `μ = Σ p_k δ_{t_k}` with `0 < t_1 < … < t_r` and positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicDistribution {
    times: Vec<f64>,
    weights: Vec<f64>,
}

impl AtomicDistribution {
    /// Validates and normalizes raw atom times and weights.
    pub fn new(times: &[f64], weights: &[f64]) -> Result<Self> {
        if times.is_empty() || times.len() != weights.len() {
            return Err(Error::ShapeMismatch { times: times.len(), weights: weights.len() });
        }
        for (i, &t) in times.iter().enumerate() {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::NonPositiveTime { index: i, value: t });
            }
            if i > 0 && !(t > times[i - 1]) {
                return Err(Error::NonIncreasingTimes { index: i, value: t, previous: times[i - 1] });
            }
        }
        for (i, &p) in weights.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::NonPositiveWeight { index: i, value: p });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSumMismatch { sum });
        }
        Ok(Self { times: times.to_vec(), weights: weights.iter().map(|p| p / sum).collect() })
    }

    /// Point mass at `t`.
    pub fn single(t: f64) -> Result<Self> {
        Self::new(&[t], &[1.0])
    }

    pub fn atoms(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `t_k` for 1-based `k`; `t_0 = 0`.
    pub fn time(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.times[k - 1]
        }
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k - 1]
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// Stage length `t_k - t_{k-1}`.
    pub fn gap(&self, k: usize) -> f64 {
        self.time(k) - self.time(k - 1)
    }

    /// `p_k / (p_k + … + p_r)`: probability of stopping at `t_k` given no earlier stop.
    pub fn tail_ratio(&self, k: usize) -> f64 {
        let tail: f64 = self.weights[k - 1..].iter().sum();
        (self.weights[k - 1] / tail).min(1.0)
    }

    /// Same atom times with different weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        Self::new(&self.times, weights)
    }

    /// Starting point of the conditional-probability martingale, `p ∈ Δ_1`.
    pub fn initial_point(&self) -> StageSimplexPoint {
        StageSimplexPoint { stage: 1, coords: self.weights.clone() }
    }
}

/// Mean of the atomic law, `Σ p_k t_k`. In the superhedging reading this is the
/// expected quadratic variation of the price.
pub fn expected_qv(mu: &AtomicDistribution) -> f64 {
    mu.times.iter().zip(&mu.weights).map(|(t, p)| t * p).sum()
}

/// A point of `Δ_k`, stored with its leading zeros so every stage indexes
/// coordinates the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSimplexPoint {
    stage: usize,
    coords: Vec<f64>,
}

impl StageSimplexPoint {
    pub fn new(stage: usize, coords: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(stage, coords, SIMPLEX_TOL)
    }

    pub fn with_tolerance(stage: usize, coords: Vec<f64>, tol: f64) -> Result<Self> {
        let r = coords.len();
        let fail = |reason: String| Err(Error::NotInSimplex { stage, reason });
        if stage == 0 || stage > r {
            return fail(format!("stage must lie in 1..={r}"));
        }
        if let Some((i, y)) = coords.iter().enumerate().find(|(_, y)| !(**y >= -tol && **y <= 1.0 + tol)) {
            return fail(format!("y[{}] = {y} outside [0, 1]", i + 1));
        }
        if let Some(i) = coords[..stage - 1].iter().position(|&y| y != 0.0) {
            return fail(format!("y[{}] must be exactly zero", i + 1));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > tol {
            return fail(format!("coordinates sum to {sum}"));
        }
        Ok(Self { stage, coords })
    }

    /// The vertex `e_k` of `Δ_k` for an `r`-atom problem.
    pub fn vertex(stage: usize, r: usize) -> Self {
        let mut coords = vec![0.0; r];
        coords[stage - 1] = 1.0;
        Self { stage, coords }
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn atoms(&self) -> usize {
        self.coords.len()
    }

    /// Number of free coordinates, `r - k`.
    pub fn free_dimension(&self) -> usize {
        self.coords.len() - self.stage
    }

    /// Conditional probability of stopping at the current stage's atom.
    pub fn stop_probability(&self) -> f64 {
        self.coords[self.stage - 1]
    }
}

/// Image of the perspective map.
#[derive(Debug, Clone, PartialEq)]
pub enum Perspective {
    Point(StageSimplexPoint),
    /// `y = e_k`: no image in `Δ_{k+1}`; the continuation term carries weight zero.
    Vertex,
}

/// `P_k(y) = (0, …, 0, y_{k+1}, …, y_r) / (y_{k+1} + … + y_r)`.
pub fn perspective_map(y: &StageSimplexPoint) -> Result<Perspective> {
    let k = y.stage;
    let r = y.coords.len();
    if k >= r {
        return Err(Error::StageOverflow { stage: k, atoms: r });
    }
    if (y.coords[k - 1] - 1.0).abs() <= SIMPLEX_TOL {
        return Ok(Perspective::Vertex);
    }
    let tail: f64 = y.coords[k..].iter().sum();
    if !(tail > 0.0) {
        return Ok(Perspective::Vertex);
    }
    let mut coords = vec![0.0; r];
    for l in k..r {
        coords[l] = y.coords[l] / tail;
    }
    Ok(Perspective::Point(StageSimplexPoint { stage: k + 1, coords }))
}
