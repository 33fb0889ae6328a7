//! Monte Carlo under the solved policy: the controlled pair
//! `dX = dW`, `dY = α dW` with `α = κ dy / dx` read from the policy field,
//! stops resolved at each atom time with probability `Y^{(k)}_{t_k}`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::closed_form::{heat_value, mean_volatility_value, support_constrained_value};
use crate::error::{Error, Result};
use crate::hjb::{free_part, SolveOutput, MAX_FREE_DIMENSION};
use crate::normal::norm_pdf;
use crate::rng::{open_uniform, standard_normal, substream};
use crate::stopping::bridge_cdf_inv;

const CHUNK: usize = 4096;
/// Simplex excursions larger than this count as clamping events.
pub const CLAMP_REPORT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResolveMode {
    /// Stop with probability `q` using an auxiliary uniform.
    #[default]
    Bernoulli,
    /// Threshold the sup-norm of the Brownian bridge over the last step at
    /// `√h Φ_BB⁻¹(q)`, sampled on a sub-grid with exact band-crossing
    /// corrections between sub-grid points.
    Adapted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IncrementKind {
    #[default]
    Gaussian,
    /// `±√dt` with equal probability.
    Rademacher,
}

/// Deliberate modifications of the solved control, for dominance checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ControlPerturbation {
    #[default]
    None,
    Zero,
    Scale(f64),
    Negate,
}

impl ControlPerturbation {
    fn apply(self, alpha: f64) -> f64 {
        match self {
            Self::None => alpha,
            Self::Zero => 0.0,
            Self::Scale(s) => s * alpha,
            Self::Negate => -alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub paths: usize,
    pub seed: u64,
    pub resolve_mode: ResolveMode,
    pub increments: IncrementKind,
    /// Euler steps per solver time level.
    pub steps_per_level: usize,
    /// Bridge sub-grid size in adapted mode.
    pub bridge_substeps: usize,
    pub perturbation: ControlPerturbation,
    pub bins: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            paths: 1_000_000,
            seed: 20240611,
            resolve_mode: ResolveMode::Bernoulli,
            increments: IncrementKind::Gaussian,
            steps_per_level: 1,
            bridge_substeps: 16,
            perturbation: ControlPerturbation::None,
            bins: 81,
        }
    }
}

/// One simulated path. Per-stage vectors cover stages `1..=atom_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub atom_index: usize,
    pub stop_time: f64,
    pub x_stop: f64,
    pub payoff: f64,
    /// `X_{t_k}`.
    pub x_at: Vec<f64>,
    /// Full simplex vector `Y_{t_k}` before the stop is resolved.
    pub y_at: Vec<Vec<f64>>,
    /// `w_k` at `(t_{k−1}, X, Y)`, at `t_k` before resolution, and after it
    /// (the payoff if stopped, `v_{k+1}(X, P_k(Y))` otherwise).
    pub checkpoints: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub paths: Vec<PathRecord>,
    pub seed: u64,
    pub config: McConfig,
    pub atom_times: Vec<f64>,
    pub weights: Vec<f64>,
    pub x0: f64,
    pub v_star: f64,
    /// Euler steps taken by live paths during controlled stages.
    pub controlled_steps: u64,
    /// Steps whose update left the simplex by more than [`CLAMP_REPORT_TOL`].
    pub clamped_steps: u64,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn clamp_fraction(&self) -> f64 {
        if self.controlled_steps == 0 {
            0.0
        } else {
            self.clamped_steps as f64 / self.controlled_steps as f64
        }
    }
}

/// Clip the full simplex vector (free coordinates plus the dependent last
/// one) to `[0, 1]` and renormalize. Returns the largest excursion.
pub fn clamp_to_simplex(free: &mut [f64]) -> f64 {
    let mut excursion = 0.0f64;
    for v in free.iter_mut() {
        excursion = excursion.max(-*v).max(*v - 1.0);
        *v = v.clamp(0.0, 1.0);
    }
    let s: f64 = free.iter().sum();
    if s > 1.0 {
        excursion = excursion.max(s - 1.0);
        free.iter_mut().for_each(|v| *v /= s);
    }
    excursion
}

/// Probability that a Brownian bridge from `a` to `b` over time `s` stays in
/// `(−c, c)`, by the method of images.
pub fn band_stay_probability(a: f64, b: f64, s: f64, c: f64) -> f64 {
    if a.abs() >= c || b.abs() >= c {
        return 0.0;
    }
    let w = 2.0 * c;
    let (a, b) = (a + c, b + c);
    let d2 = (b - a) * (b - a);
    let mut p = 0.0;
    for n in -50i32..=50 {
        let shift = 2.0 * n as f64 * w;
        let t1 = (-((b - a + shift).powi(2) - d2) / (2.0 * s)).exp();
        let t2 = (-((b + a + shift).powi(2) - d2) / (2.0 * s)).exp();
        p += t1 - t2;
    }
    p.clamp(0.0, 1.0)
}

/// Resolves the stop at an atom time for a path whose `k`-th coordinate is
/// `q`. In adapted mode `h` is the length of the final Euler step.
pub fn resolve_stop<R: Rng + ?Sized>(q: f64, mode: ResolveMode, h: f64, substeps: usize, rng: &mut R) -> Result<bool> {
    if !(q >= -1e-9 && q <= 1.0 + 1e-9) {
        return Err(Error::QOutOfRange(q));
    }
    let q = q.clamp(0.0, 1.0);
    match mode {
        ResolveMode::Bernoulli => Ok(open_uniform(rng) <= q),
        ResolveMode::Adapted => {
            if q == 0.0 {
                return Ok(false);
            }
            if q == 1.0 {
                return Ok(true);
            }
            let c = h.sqrt() * bridge_cdf_inv(q)?;
            let m = substeps.max(1);
            let ds = h / m as f64;
            let mut prev = 0.0;
            let mut stay = 1.0;
            for i in 0..m {
                let remaining = h - i as f64 * ds;
                // pinned bridge from `prev` at time `i ds` to 0 at `h`
                let next = if i + 1 == m {
                    0.0
                } else {
                    let mean = prev * (remaining - ds) / remaining;
                    let var = ds * (remaining - ds) / remaining;
                    mean + var.sqrt() * standard_normal(rng)
                };
                stay *= band_stay_probability(prev, next, ds, c);
                if stay == 0.0 {
                    return Ok(false);
                }
                prev = next;
            }
            Ok(open_uniform(rng) <= stay)
        }
    }
}

struct Walker {
    rng: ChaCha8Rng,
    x: f64,
    y: [f64; MAX_FREE_DIMENSION],
    alive: bool,
    record: PathRecord,
}

/// Simulates `cfg.paths` paths under the policy fields of `solved`.
pub fn simulate_paths(solved: &SolveOutput, cfg: &McConfig) -> Result<PathEnsemble> {
    let r = solved.mu.atoms();
    for k in 1..r {
        if solved.stage(k).policy.is_none() {
            return Err(Error::MissingPolicy(k));
        }
    }
    let chunks: Vec<(Vec<PathRecord>, u64, u64)> = (0..cfg.paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| simulate_chunk(solved, cfg, c * CHUNK, ((c + 1) * CHUNK).min(cfg.paths)))
        .collect::<Result<_>>()?;
    let mut paths = Vec::with_capacity(cfg.paths);
    let (mut steps, mut clamped) = (0, 0);
    for (p, s, c) in chunks {
        paths.extend(p);
        steps += s;
        clamped += c;
    }
    Ok(PathEnsemble {
        paths,
        seed: cfg.seed,
        config: cfg.clone(),
        atom_times: solved.mu.times().to_vec(),
        weights: solved.mu.weights().to_vec(),
        x0: solved.x0,
        v_star: solved.v_star,
        controlled_steps: steps,
        clamped_steps: clamped,
    })
}

fn draw_increment(rng: &mut ChaCha8Rng, kind: IncrementKind, sqrt_dt: f64) -> f64 {
    match kind {
        IncrementKind::Gaussian => sqrt_dt * standard_normal(rng),
        IncrementKind::Rademacher => {
            if rng.random::<bool>() {
                sqrt_dt
            } else {
                -sqrt_dt
            }
        }
    }
}

fn simulate_chunk(solved: &SolveOutput, cfg: &McConfig, from: usize, to: usize) -> Result<(Vec<PathRecord>, u64, u64)> {
    let mu = &solved.mu;
    let r = mu.atoms();
    let p0 = free_part(mu.weights(), 1);
    let mut walkers: Vec<Walker> = (from..to)
        .map(|idx| {
            let mut y = [0.0; MAX_FREE_DIMENSION];
            y[..p0.len()].copy_from_slice(&p0);
            Walker {
                rng: substream(cfg.seed, idx as u64),
                x: solved.x0,
                y,
                alive: true,
                record: PathRecord {
                    atom_index: 0,
                    stop_time: 0.0,
                    x_stop: 0.0,
                    payoff: 0.0,
                    x_at: Vec::with_capacity(r),
                    y_at: Vec::with_capacity(r),
                    checkpoints: Vec::with_capacity(r),
                },
            }
        })
        .collect();
    let (mut steps_taken, mut clamped) = (0u64, 0u64);
    let f = &solved.payoff;
    for k in 1..=r {
        let stage = solved.stage(k);
        let d = stage.grid.free_dimension();
        for w in walkers.iter_mut().filter(|w| w.alive) {
            let start = stage.start.interpolate(w.x, &w.y[..d]);
            w.record.checkpoints.push([start, 0.0, 0.0]);
        }
        if k == r {
            let gap = mu.gap(k);
            // no control left: one exact Gaussian step, or a walk on the solver's dt
            let n = match cfg.increments {
                IncrementKind::Gaussian => 1,
                IncrementKind::Rademacher => (gap / solved.config.dt - 1e-9).ceil().max(1.0) as usize,
            };
            let sqrt_h = (gap / n as f64).sqrt();
            for w in walkers.iter_mut().filter(|w| w.alive) {
                for _ in 0..n {
                    w.x += draw_increment(&mut w.rng, cfg.increments, sqrt_h);
                }
                let payoff = f.eval(w.x);
                w.record.x_at.push(w.x);
                w.record.y_at.push(vec![0.0; r - 1].into_iter().chain([1.0]).collect());
                let cp = w.record.checkpoints.last_mut().expect("pushed above");
                cp[1] = payoff;
                cp[2] = payoff;
                finish(w, k, mu.time(k), payoff);
            }
            break;
        }
        let policy = stage.policy.as_ref().expect("checked above");
        let grid = &stage.grid;
        let sub = cfg.steps_per_level.max(1);
        let h = grid.dt / sub as f64;
        let sqrt_h = h.sqrt();
        let scale = grid.lattice.spacing() / grid.x.dx;
        let n_div = grid.lattice.divisions() as f64;
        for level in 0..grid.steps {
            for _ in 0..sub {
                for w in walkers.iter_mut().filter(|w| w.alive) {
                    let i = grid.x.nearest(w.x);
                    let j = if d == 1 {
                        (w.y[0].clamp(0.0, 1.0) * n_div).round() as usize
                    } else {
                        grid.lattice.nearest(&w.y[..d])
                    };
                    let kappa = policy.direction(level, i, j);
                    let dw = draw_increment(&mut w.rng, cfg.increments, sqrt_h);
                    if !dw.is_finite() {
                        return Err(Error::NonFinitePath { path: from });
                    }
                    w.x += dw;
                    for m in 0..d {
                        w.y[m] += cfg.perturbation.apply(kappa[m] as f64 * scale) * dw;
                    }
                    steps_taken += 1;
                    if clamp_to_simplex(&mut w.y[..d]) > CLAMP_REPORT_TOL {
                        clamped += 1;
                    }
                }
            }
        }
        let next_start = &solved.stage(k + 1).start;
        for w in walkers.iter_mut().filter(|w| w.alive) {
            if !w.x.is_finite() {
                return Err(Error::NonFinitePath { path: from });
            }
            let q = w.y[0];
            let mut full = vec![0.0; k - 1];
            full.extend_from_slice(&w.y[..d]);
            full.push((1.0 - w.y[..d].iter().sum::<f64>()).max(0.0));
            let pre = stage.terminal.interpolate(w.x, &w.y[..d]);
            w.record.x_at.push(w.x);
            w.record.y_at.push(full);
            let stop = resolve_stop(q, cfg.resolve_mode, h, cfg.bridge_substeps, &mut w.rng)?;
            let post = if stop {
                f.eval(w.x)
            } else {
                let tail = 1.0 - q;
                let mut next = [0.0; MAX_FREE_DIMENSION];
                for m in 1..d {
                    next[m - 1] = if tail > 0.0 { w.y[m] / tail } else { 0.0 };
                }
                w.y = next;
                next_start.interpolate(w.x, &w.y[..d - 1])
            };
            let cp = w.record.checkpoints.last_mut().expect("pushed above");
            cp[1] = pre;
            cp[2] = post;
            if stop {
                let payoff = f.eval(w.x);
                finish(w, k, mu.time(k), payoff);
            }
        }
    }
    Ok((walkers.into_iter().map(|w| w.record).collect(), steps_taken, clamped))
}

fn finish(w: &mut Walker, k: usize, t: f64, payoff: f64) {
    w.alive = false;
    w.record.atom_index = k;
    w.record.stop_time = t;
    w.record.x_stop = w.x;
    w.record.payoff = payoff;
}

/// Which X-value a conditional density is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    /// `X_{t_k}` on `{τ = t_k}`.
    #[default]
    AtStop,
    /// `X_{t_1}` on `{τ = t_k}`.
    AtFirstAtom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub atom: usize,
    pub atom_time: f64,
    pub observation: Observation,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    /// `P[τ = t_k]` estimated from the ensemble.
    pub mass: f64,
    /// Conditioned samples falling outside the bins.
    pub outside: u64,
}

impl DensityEstimate {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    /// Density value of the bin containing `x` (zero outside the bins).
    pub fn at(&self, x: f64) -> f64 {
        let w = self.bin_width();
        let b = ((x - self.edges[0]) / w).floor();
        if b < 0.0 || b as usize >= self.density.len() {
            0.0
        } else {
            self.density[b as usize]
        }
    }

    /// `∫ min(d₁, d₂)`; both estimates must share bins.
    pub fn overlap(&self, other: &DensityEstimate) -> f64 {
        self.density.iter().zip(&other.density).map(|(a, b)| a.min(*b)).sum::<f64>() * self.bin_width()
    }
}

fn observed_x(path: &PathRecord, observation: Observation) -> f64 {
    match observation {
        Observation::AtStop => path.x_stop,
        Observation::AtFirstAtom => path.x_at[0],
    }
}

/// Histogram of the observed X on `{τ = t_k}` over `bins` uniform bins on
/// `[lo, hi]`, normalized to integrate to one over the bins.
pub fn conditional_density_on(
    ensemble: &PathEnsemble,
    k: usize,
    observation: Observation,
    bins: usize,
    lo: f64,
    hi: f64,
) -> Result<DensityEstimate> {
    let selected: Vec<f64> =
        ensemble.paths.iter().filter(|p| p.atom_index == k).map(|p| observed_x(p, observation)).collect();
    if selected.len() < 100 {
        return Err(Error::InsufficientSamples { atom: k, found: selected.len(), required: 100 });
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    let mut outside = 0;
    for x in &selected {
        let b = ((x - lo) / width).floor();
        if b < 0.0 || b as usize >= bins {
            outside += 1;
        } else {
            counts[b as usize] += 1;
        }
    }
    let inside = (selected.len() as u64 - outside).max(1) as f64;
    let density = counts.iter().map(|&c| c as f64 / (inside * width)).collect();
    Ok(DensityEstimate {
        atom: k,
        atom_time: ensemble.atom_times[k - 1],
        observation,
        edges,
        counts,
        density,
        mass: selected.len() as f64 / ensemble.len() as f64,
        outside,
    })
}

/// Default bins: `x₀ ± 4 √t` with `t` the observation time.
pub fn conditional_density(ensemble: &PathEnsemble, k: usize, observation: Observation, bins: usize) -> Result<DensityEstimate> {
    let t = match observation {
        Observation::AtStop => ensemble.atom_times[k - 1],
        Observation::AtFirstAtom => ensemble.atom_times[0],
    };
    let half = 4.0 * t.sqrt();
    conditional_density_on(ensemble, k, observation, bins, ensemble.x0 - half, ensemble.x0 + half)
}

/// Gaussian kernel estimate at `points` with Silverman's bandwidth.
pub fn kernel_density(samples: &[f64], points: &[f64]) -> Vec<f64> {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let h = 1.06 * sd * n.powf(-0.2);
    points.iter().map(|&x| samples.iter().map(|s| norm_pdf((x - s) / h)).sum::<f64>() / (n * h)).collect()
}

/// Pearson χ² statistic and its p-value for `observed` counts against
/// `expected` probabilities (cells with expected count below 5 are pooled
/// into their neighbour).
pub fn chi_square(observed: &[u64], expected: &[f64]) -> (f64, f64) {
    let n: u64 = observed.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, p) in observed.iter().zip(expected) {
        acc.0 += *o as f64;
        acc.1 += p * n as f64;
        if acc.1 >= 5.0 {
            cells.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => cells.push(acc),
        }
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1) as f64;
    let p = 1.0 - ChiSquared::new(dof).expect("positive degrees of freedom").cdf(stat);
    (stat, p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassCheck {
    pub atom: usize,
    pub expected: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementCheck {
    pub label: String,
    pub samples: usize,
    pub mean: f64,
    pub std_error: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub paths: usize,
    pub seed: u64,
    pub masses: Vec<MassCheck>,
    pub masses_ok: bool,
    pub mean_payoff: f64,
    pub payoff_std_error: f64,
    pub v_star: f64,
    pub payoff_ok: bool,
    pub martingale: Vec<IncrementCheck>,
    pub martingale_ok: bool,
    pub clamp_fraction: f64,
    pub clamp_ok: bool,
    pub mean_stop_x: f64,
    pub var_stop_x: f64,
    pub mean_stop_time: f64,
    pub mean_volatility_value: f64,
    pub support_constrained_value: f64,
    pub independent_randomization_value: f64,
}

/// Sample mean and standard error, summed in index order.
pub fn mean_and_se(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    for v in values {
        n += 1;
        let delta = v - mean;
        mean += delta / n as f64;
        m2 += delta * (v - mean);
    }
    if n < 2 {
        return (mean, f64::INFINITY, n);
    }
    (mean, (m2 / (n - 1) as f64 / n as f64).sqrt(), n)
}

/// Martingale increments allowed this much absolute bias on top of three
/// standard errors (scheme discretization and nearest-node lookup).
pub const MARTINGALE_BIAS_ALLOWANCE: f64 = 5e-3;

pub fn mc_report(ensemble: &PathEnsemble, solved: &SolveOutput) -> Result<McReport> {
    let n = ensemble.len();
    let masses: Vec<MassCheck> = ensemble
        .weights
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let count = ensemble.paths.iter().filter(|x| x.atom_index == i + 1).count();
            let empirical = count as f64 / n as f64;
            let std_error = (p * (1.0 - p) / n as f64).sqrt();
            MassCheck { atom: i + 1, expected: p, empirical, std_error, ok: (empirical - p).abs() <= 3.0 * std_error + 1e-12 }
        })
        .collect();
    let (mean_payoff, payoff_std_error, _) = mean_and_se(ensemble.paths.iter().map(|p| p.payoff));
    let v_star = ensemble.v_star;
    let payoff_ok = (mean_payoff - v_star).abs() <= (0.01 * v_star.abs()).max(4.0 * payoff_std_error);
    let r = ensemble.atom_times.len();
    let mut martingale = Vec::new();
    for k in 1..=r {
        let reached = || ensemble.paths.iter().filter(move |p| p.checkpoints.len() >= k).map(move |p| p.checkpoints[k - 1]);
        // increments are weighted by reaching stage k, so the unconditional
        // mean over all paths is tested
        let label_diffusion = format!("stage {k} diffusion");
        let label_resolution = format!("stage {k} resolution");
        let diffusion = ensemble.paths.iter().map(|p| p.checkpoints.get(k - 1).map_or(0.0, |c| c[1] - c[0]));
        let resolution = ensemble.paths.iter().map(|p| p.checkpoints.get(k - 1).map_or(0.0, |c| c[2] - c[1]));
        let count = reached().count();
        for (label, values) in [(label_diffusion, diffusion.collect::<Vec<_>>()), (label_resolution, resolution.collect())] {
            let (mean, se, _) = mean_and_se(values.into_iter());
            martingale.push(IncrementCheck {
                label,
                samples: count,
                mean,
                std_error: se,
                ok: mean.abs() <= 3.0 * se + MARTINGALE_BIAS_ALLOWANCE,
            });
        }
    }
    let (start_mean, start_se, _) = mean_and_se(ensemble.paths.iter().map(|p| p.checkpoints[0][0] - v_star));
    martingale.insert(
        0,
        IncrementCheck {
            label: "start value".into(),
            samples: n,
            mean: start_mean,
            std_error: start_se,
            ok: start_mean.abs() <= 1e-9,
        },
    );
    let (mean_stop_x, _, _) = mean_and_se(ensemble.paths.iter().map(|p| p.x_stop));
    let var_stop_x = ensemble.paths.iter().map(|p| (p.x_stop - mean_stop_x).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    let (mean_stop_time, _, _) = mean_and_se(ensemble.paths.iter().map(|p| p.stop_time));
    let f = &solved.payoff;
    let independent = solved
        .mu
        .times()
        .iter()
        .zip(solved.mu.weights())
        .map(|(&t, &p)| Ok(p * heat_value(f, t, solved.x0)?))
        .sum::<Result<f64>>()?;
    let clamp_fraction = ensemble.clamp_fraction();
    Ok(McReport {
        paths: n,
        seed: ensemble.seed,
        masses_ok: masses.iter().all(|m| m.ok),
        masses,
        mean_payoff,
        payoff_std_error,
        v_star,
        payoff_ok,
        martingale_ok: martingale.iter().all(|m| m.ok),
        martingale,
        clamp_fraction,
        clamp_ok: clamp_fraction < 0.01,
        mean_stop_x,
        var_stop_x,
        mean_stop_time,
        mean_volatility_value: mean_volatility_value(f, &solved.mu, solved.x0),
        support_constrained_value: support_constrained_value(f, &solved.mu, solved.x0),
        independent_randomization_value: independent,
    })
}
