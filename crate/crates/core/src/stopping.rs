//! Explicit stopping times with a prescribed atomic law, built from
//! per-stage statistics that are independent across stages:
//!
//! * Gaussian increments: stop at `t_k` if `W_{t_k} − W_{t_{k−1}} ≤ c_k`;
//! * bridge maxima: stop at `t_k` if the sup-norm of the Brownian bridge on
//!   `[t_{k−1}, t_k]` (standardized) is `≤ c_k`. The bridge is independent of
//!   the skeleton `(W_{t_1}, …, W_{t_r})`, so this stopping time is too.
//!
//! Both stop at stage `k` (given survival) with probability
//! `p_k / (p_k + … + p_r)`. A second stopping time for perturbed weights
//! can be coupled to the first on the same noise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::AtomicDistribution;
use crate::error::{Error, Result};
use crate::normal::{norm_cdf, norm_inv};
use crate::rng::{open_uniform, standard_normal};

const BRIDGE_SERIES_TOL: f64 = 1e-14;
const BRIDGE_INVERSE_TOL: f64 = 1e-12;
/// Below this level the dual theta-series converges faster.
const BRIDGE_SMALL_M: f64 = 0.75;

/// `Φ_BB(m) = P[max_{s≤1} |B_s| ≤ m]` for a standard Brownian bridge `B`.
pub fn bridge_cdf(m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::DomainError(format!("bridge_cdf needs m >= 0, got {m}")));
    }
    if m == 0.0 {
        return Ok(0.0);
    }
    if m < BRIDGE_SMALL_M {
        // √(2π)/m Σ_{j odd} exp(−j²π²/(8m²))
        let scale = (2.0 * std::f64::consts::PI).sqrt() / m;
        let mut sum = 0.0;
        let mut j = 1.0f64;
        loop {
            let term = (-j * j * std::f64::consts::PI.powi(2) / (8.0 * m * m)).exp();
            sum += term;
            if scale * term < BRIDGE_SERIES_TOL {
                break;
            }
            j += 2.0;
        }
        return Ok((scale * sum).clamp(0.0, 1.0));
    }
    let mut sum = 1.0;
    let mut j = 1.0f64;
    loop {
        let term = 2.0 * (-2.0 * j * j * m * m).exp();
        sum += if j as u64 % 2 == 1 { -term } else { term };
        if term < BRIDGE_SERIES_TOL {
            break;
        }
        j += 1.0;
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Inverse of [`bridge_cdf`] by bisection.
pub fn bridge_cdf_inv(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::DomainError(format!("bridge_cdf_inv needs q in (0, 1), got {q}")));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while bridge_cdf(hi)? < q {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = bridge_cdf(mid)?;
        if (v - q).abs() < BRIDGE_INVERSE_TOL {
            return Ok(mid);
        }
        if v < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    GaussianIncrement,
    BridgeMax,
}

/// Thresholds `c_1 … c_{r−1}`; the last stage stops every survivor.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSchedule {
    pub kind: ScheduleKind,
    pub thresholds: Vec<f64>,
    pub mu: AtomicDistribution,
}

/// `c_k = √(t_k − t_{k−1}) Φ⁻¹(p_k / (p_k + … + p_r))`.
pub fn gaussian_tail_thresholds(mu: &AtomicDistribution) -> ThresholdSchedule {
    let thresholds = (1..mu.atoms()).map(|k| mu.gap(k).sqrt() * norm_inv(mu.tail_ratio(k))).collect();
    ThresholdSchedule { kind: ScheduleKind::GaussianIncrement, thresholds, mu: mu.clone() }
}

/// `c_k = Φ_BB⁻¹(p_k / (p_k + … + p_r))`.
pub fn bridge_max_thresholds(mu: &AtomicDistribution) -> Result<ThresholdSchedule> {
    let thresholds = (1..mu.atoms()).map(|k| bridge_cdf_inv(mu.tail_ratio(k))).collect::<Result<_>>()?;
    Ok(ThresholdSchedule { kind: ScheduleKind::BridgeMax, thresholds, mu: mu.clone() })
}

impl ThresholdSchedule {
    pub fn new(kind: ScheduleKind, mu: &AtomicDistribution) -> Result<Self> {
        match kind {
            ScheduleKind::GaussianIncrement => Ok(gaussian_tail_thresholds(mu)),
            ScheduleKind::BridgeMax => bridge_max_thresholds(mu),
        }
    }

    /// Exact probability of stopping at stage `k` given survival to it.
    pub fn stage_stop_probability(&self, k: usize) -> f64 {
        if k == self.mu.atoms() {
            1.0
        } else {
            match self.kind {
                ScheduleKind::GaussianIncrement => norm_cdf(self.thresholds[k - 1] / self.mu.gap(k).sqrt()),
                ScheduleKind::BridgeMax => bridge_cdf(self.thresholds[k - 1]).expect("thresholds are non-negative"),
            }
        }
    }

    /// Law of the stopping time implied by the thresholds.
    pub fn implied_weights(&self) -> Vec<f64> {
        let mut alive = 1.0;
        (1..=self.mu.atoms())
            .map(|k| {
                let stop = alive * self.stage_stop_probability(k);
                alive -= stop;
                stop
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopSample {
    /// 1-based atom index.
    pub atom_index: usize,
    pub stop_time: f64,
    /// `x₀ + W_τ`.
    pub terminal_x: f64,
    /// Stage statistics compared with the thresholds, stages `1..=atom_index`
    /// (none for the last stage).
    pub marks: Vec<f64>,
    /// `x₀ + W_{t_k}` for every atom time, including those after the stop.
    pub skeleton: Vec<f64>,
}

/// The noise behind one draw: skeleton increments and per-stage uniforms
/// (the stage statistic pushed through its own distribution function).
struct StageNoise {
    increments: Vec<f64>,
    uniforms: Vec<f64>,
}

fn draw_noise<R: Rng + ?Sized>(schedule: &ThresholdSchedule, rng: &mut R) -> StageNoise {
    let r = schedule.mu.atoms();
    let mut increments = Vec::with_capacity(r);
    let mut uniforms = Vec::with_capacity(r);
    for k in 1..=r {
        let z = standard_normal(rng);
        increments.push(schedule.mu.gap(k).sqrt() * z);
        uniforms.push(match schedule.kind {
            ScheduleKind::GaussianIncrement => norm_cdf(z),
            ScheduleKind::BridgeMax => open_uniform(rng),
        });
    }
    StageNoise { increments, uniforms }
}

impl StageNoise {
    fn skeleton(&self, x0: f64) -> Vec<f64> {
        self.increments
            .iter()
            .scan(x0, |x, dw| {
                *x += dw;
                Some(*x)
            })
            .collect()
    }

    fn mark(&self, kind: ScheduleKind, k: usize) -> f64 {
        match kind {
            ScheduleKind::GaussianIncrement => self.increments[k - 1],
            ScheduleKind::BridgeMax => bridge_cdf_inv(self.uniforms[k - 1]).unwrap_or(0.0),
        }
    }

    fn sample(&self, schedule: &ThresholdSchedule, atom_index: usize, skeleton: Vec<f64>) -> StopSample {
        let r = schedule.mu.atoms();
        let marks = (1..=atom_index.min(r - 1)).map(|k| self.mark(schedule.kind, k)).collect();
        StopSample {
            atom_index,
            stop_time: schedule.mu.time(atom_index),
            terminal_x: skeleton[atom_index - 1],
            marks,
            skeleton,
        }
    }
}

/// Stage at which the thresholded statistic first falls below its threshold.
fn first_stop(schedule: &ThresholdSchedule, noise: &StageNoise) -> usize {
    let r = schedule.mu.atoms();
    (1..r)
        .find(|&k| match schedule.kind {
            ScheduleKind::GaussianIncrement => noise.increments[k - 1] <= schedule.thresholds[k - 1],
            ScheduleKind::BridgeMax => noise.uniforms[k - 1] <= schedule.stage_stop_probability(k),
        })
        .unwrap_or(r)
}

/// One draw of the stopping time and the Brownian skeleton started at `x0`.
pub fn sample_stopping_time<R: Rng + ?Sized>(schedule: &ThresholdSchedule, x0: f64, rng: &mut R) -> StopSample {
    let noise = draw_noise(schedule, rng);
    let atom = first_stop(schedule, &noise);
    noise.sample(schedule, atom, noise.skeleton(x0))
}

/// How the coupled stopping set at one stage relates to the original one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StageRule {
    /// Coupled survivors stop if the original stops here, or if the stage
    /// uniform is at least `w`.
    Enlarge { w: f64 },
    /// Coupled survivors stop only if the original stops here and the stage
    /// uniform is at most `w`.
    Restrict { w: f64 },
    /// Last stage: every survivor stops.
    All,
}

/// Joint survival probabilities of (original, coupled) before a stage.
#[derive(Debug, Clone, Copy, PartialEq)]
struct JointState {
    both: f64,
    coupled_only: f64,
}

/// Coupling of the schedule's stopping time `τ ∼ p` with `τ′ ∼ p′` built
/// stage by stage on the same noise, with `{τ = t_k} ∩ {τ′ ≥ t_k}`
/// either contained in `{τ′ = t_k}` (enlarge) or containing it (restrict).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPlan {
    pub schedule: ThresholdSchedule,
    pub target: AtomicDistribution,
    pub rules: Vec<StageRule>,
    /// Exact `P[τ ≠ τ′]`.
    pub exact_mismatch: f64,
    /// Exact `P[{τ = t_k} △ {τ′ = t_k}]` per stage.
    pub stage_symmetric_difference: Vec<f64>,
}

fn enlarge_mass(state: JointState, a: f64, w: f64) -> f64 {
    let union = if w >= a { a + (1.0 - w) } else { 1.0 };
    state.both * union + state.coupled_only * (1.0 - w)
}

impl CouplingPlan {
    pub fn new(schedule: &ThresholdSchedule, target_weights: &[f64]) -> Result<Self> {
        let mu = &schedule.mu;
        if target_weights.len() != mu.atoms() {
            return Err(Error::WeightMismatch(format!("expected {} weights, got {}", mu.atoms(), target_weights.len())));
        }
        let target = mu.with_weights(target_weights).map_err(|e| Error::WeightMismatch(e.to_string()))?;
        let r = mu.atoms();
        let mut state = JointState { both: 1.0, coupled_only: 0.0 };
        let mut rules = Vec::with_capacity(r);
        let mut matched = Vec::with_capacity(r);
        for k in 1..=r {
            let a = schedule.stage_stop_probability(k);
            let want = target.weight(k);
            let (rule, coupled_from_both, both_stop) = if k == r {
                (StageRule::All, state.both, state.both)
            } else if want >= state.both * a {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if enlarge_mass(state, a, mid) > want {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let w = 0.5 * (lo + hi);
                let union = if w >= a { a + (1.0 - w) } else { 1.0 };
                (StageRule::Enlarge { w }, state.both * union, state.both * a)
            } else {
                let w = if state.both > 0.0 { want / state.both } else { 0.0 };
                (StageRule::Restrict { w }, state.both * w, state.both * w)
            };
            let coupled_stop = match rule {
                StageRule::Enlarge { w } => coupled_from_both + state.coupled_only * (1.0 - w),
                StageRule::All => coupled_from_both + state.coupled_only,
                StageRule::Restrict { .. } => coupled_from_both,
            };
            debug_assert!((coupled_stop - want).abs() < 1e-9);
            let orig_stop = state.both * a;
            state = JointState {
                both: state.both - orig_stop - coupled_from_both + both_stop,
                coupled_only: state.coupled_only + orig_stop - both_stop - (coupled_stop - coupled_from_both),
            };
            rules.push(rule);
            matched.push(both_stop);
        }
        let exact_mismatch = (1.0 - matched.iter().sum::<f64>()).max(0.0);
        let stage_symmetric_difference =
            (1..=r).map(|k| (mu.weight(k) + target.weight(k) - 2.0 * matched[k - 1]).max(0.0)).collect();
        Ok(Self { schedule: schedule.clone(), target, rules, exact_mismatch, stage_symmetric_difference })
    }

    /// `4^r ‖p − p′‖₁`.
    pub fn bound(&self) -> f64 {
        coupling_bound(self.schedule.mu.weights(), self.target.weights())
    }

    /// `Σ_{ℓ ≤ k} 4^{k−ℓ} |p_ℓ − p′_ℓ|` for each stage `k`.
    pub fn stage_bounds(&self) -> Vec<f64> {
        let (p, q) = (self.schedule.mu.weights(), self.target.weights());
        (0..p.len())
            .map(|k| (0..=k).map(|l| 4f64.powi((k - l) as i32) * (p[l] - q[l]).abs()).sum())
            .collect()
    }
}

pub fn coupling_bound(p: &[f64], q: &[f64]) -> f64 {
    4f64.powi(p.len() as i32) * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Draws `(τ, τ′)` on shared noise according to `plan`.
pub fn couple_stopping_time<R: Rng + ?Sized>(plan: &CouplingPlan, x0: f64, rng: &mut R) -> (StopSample, StopSample) {
    let schedule = &plan.schedule;
    let r = schedule.mu.atoms();
    let noise = draw_noise(schedule, rng);
    let original = first_stop(schedule, &noise);
    let coupled = (1..=r)
        .find(|&k| {
            let u = noise.uniforms[k - 1];
            let orig_here = original == k;
            match plan.rules[k - 1] {
                StageRule::All => true,
                StageRule::Enlarge { w } => orig_here || u >= w,
                StageRule::Restrict { w } => orig_here && u <= w,
            }
        })
        .unwrap_or(r);
    let skeleton = noise.skeleton(x0);
    (noise.sample(schedule, original, skeleton.clone()), noise.sample(schedule, coupled, skeleton))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn mu(times: &[f64], weights: &[f64]) -> AtomicDistribution {
        AtomicDistribution::new(times, weights).unwrap()
    }

    #[test]
    fn bridge_cdf_values() {
        assert_eq!(bridge_cdf(0.0).unwrap(), 0.0);
        assert!(bridge_cdf(3.0).unwrap() > 1.0 - 1e-7);
        assert!(bridge_cdf(-0.1).is_err());
        assert!((bridge_cdf_inv(0.5).unwrap() - 0.82757).abs() < 1e-5);
        assert!(bridge_cdf_inv(1.0).is_err());
        // the two series agree where both converge well
        for m in [0.6, 0.7, 0.75, 0.8, 0.9] {
            let theta = {
                let s = (2.0 * std::f64::consts::PI).sqrt() / m;
                s * (0..50).map(|i| (-(2.0 * i as f64 + 1.0).powi(2) * std::f64::consts::PI.powi(2) / (8.0 * m * m)).exp()).sum::<f64>()
            };
            let alt = 1.0 + 2.0 * (1..200).map(|j| (-1f64).powi(j) * (-2.0 * (j * j) as f64 * m * m).exp()).sum::<f64>();
            assert!((theta - alt).abs() < 1e-13, "{m}");
            assert!((bridge_cdf(m).unwrap() - alt).abs() < 1e-13);
        }
    }

    #[test]
    fn bridge_inverse_round_trips() {
        for q in [1e-6, 0.01, 0.2, 0.5, 0.81818, 0.999] {
            let c = bridge_cdf_inv(q).unwrap();
            assert!((bridge_cdf(c).unwrap() - q).abs() < 1e-12, "{q}");
        }
    }

    #[test]
    fn gaussian_thresholds() {
        assert_eq!(gaussian_tail_thresholds(&mu(&[10.0, 20.0], &[0.5, 0.5])).thresholds, vec![0.0]);
        let s = gaussian_tail_thresholds(&mu(&[10.0, 20.0], &[0.25, 0.75]));
        // Φ(c/√10) = 1/4 by bisection on the distribution function
        let (mut lo, mut hi) = (-10.0, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm_cdf(mid) < 0.25 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((s.thresholds[0] - 10f64.sqrt() * lo).abs() < 1e-9);
        assert!((s.thresholds[0] + 2.132924).abs() < 1e-6);
        let s3 = gaussian_tail_thresholds(&mu(&[10.0, 20.0, 100.0], &[0.45, 0.45, 0.10]));
        assert!(s3.thresholds[1] > 0.0);
        assert!((norm_cdf(s3.thresholds[1] / 10f64.sqrt()) - 0.45 / 0.55).abs() < 1e-12);
    }

    #[test]
    fn implied_weights_reconstruct_the_law() {
        let m = mu(&[1.0, 2.0, 5.0, 6.0], &[0.1, 0.2, 0.3, 0.4]);
        for kind in [ScheduleKind::GaussianIncrement, ScheduleKind::BridgeMax] {
            let s = ThresholdSchedule::new(kind, &m).unwrap();
            for (a, b) in s.implied_weights().iter().zip(m.weights()) {
                assert!((a - b).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn single_atom_always_stops_there() {
        let s = gaussian_tail_thresholds(&AtomicDistribution::single(3.0).unwrap());
        let mut rng = substream(1, 0);
        for _ in 0..100 {
            let x = sample_stopping_time(&s, 0.0, &mut rng);
            assert_eq!(x.atom_index, 1);
            assert!(x.marks.is_empty());
        }
    }

    #[test]
    fn samples_are_consistent() {
        let s = bridge_max_thresholds(&mu(&[1.0, 2.0, 4.0], &[0.3, 0.3, 0.4])).unwrap();
        let mut rng = substream(2, 0);
        for _ in 0..200 {
            let x = sample_stopping_time(&s, 1.5, &mut rng);
            assert_eq!(x.stop_time, s.mu.time(x.atom_index));
            assert_eq!(x.terminal_x, x.skeleton[x.atom_index - 1]);
            assert_eq!(x.marks.len(), x.atom_index.min(2));
            if x.atom_index < 3 {
                assert!(x.marks[x.atom_index - 1] <= s.thresholds[x.atom_index - 1] + 1e-9);
            }
            for k in 0..x.atom_index.min(3) - 1 {
                assert!(x.marks[k] > s.thresholds[k] - 1e-9);
            }
        }
    }

    #[test]
    fn coupling_plan_exact_cases() {
        let base = mu(&[10.0, 20.0], &[0.5, 0.5]);
        let s = gaussian_tail_thresholds(&base);
        let same = CouplingPlan::new(&s, &[0.5, 0.5]).unwrap();
        assert!(same.exact_mismatch.abs() < 1e-12);
        let plan = CouplingPlan::new(&s, &[0.6, 0.4]).unwrap();
        assert!((plan.exact_mismatch - 0.1).abs() < 1e-12);
        assert!((plan.bound() - 3.2).abs() < 1e-12);
        let down = CouplingPlan::new(&s, &[0.3, 0.7]).unwrap();
        assert!((down.exact_mismatch - 0.2).abs() < 1e-12);
        assert!(matches!(CouplingPlan::new(&s, &[0.5]), Err(Error::WeightMismatch(_))));
        assert!(matches!(CouplingPlan::new(&s, &[0.5, 0.6]), Err(Error::WeightMismatch(_))));
    }

    #[test]
    fn identity_coupling_never_mismatches() {
        let m = mu(&[1.0, 2.0, 3.0], &[0.45, 0.45, 0.1]);
        for kind in [ScheduleKind::GaussianIncrement, ScheduleKind::BridgeMax] {
            let s = ThresholdSchedule::new(kind, &m).unwrap();
            let plan = CouplingPlan::new(&s, m.weights()).unwrap();
            let mut rng = substream(4, 0);
            for _ in 0..2000 {
                let (a, b) = couple_stopping_time(&plan, 0.0, &mut rng);
                assert_eq!(a.atom_index, b.atom_index);
            }
        }
    }
}
