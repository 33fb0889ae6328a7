//! Oracles shared by the integration tests and the acceptance harness.
//! Nothing here calls into the library's numerics.

#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn big_phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `E[(x + σZ)⁺]`.
pub fn call_heat(x: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return x.max(0.0);
    }
    x * big_phi(x / sigma) + sigma * phi(x / sigma)
}

/// `E[g(x + σZ)]` by composite Simpson on `±12σ`.
pub fn gauss_expect(x: f64, sigma: f64, g: impl Fn(f64) -> f64) -> f64 {
    let n = 4000;
    let h = 24.0 / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let z = -12.0 + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * phi(z) * g(x + sigma * z);
    }
    s * h / 3.0
}

/// Minimizer and minimum of a convex function on `[lo, hi]`.
pub fn golden(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-7 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    let m = 0.5 * (lo + hi);
    (m, f(m))
}

/// Tabulated function on a uniform grid, linear in between, flat outside.
struct Table {
    lo: f64,
    h: f64,
    v: Vec<f64>,
}

impl Table {
    fn new(lo: f64, hi: f64, n: usize, g: impl Fn(f64) -> f64) -> Self {
        let h = (hi - lo) / (n - 1) as f64;
        Self { lo, h, v: (0..n).map(|i| g(lo + i as f64 * h)).collect() }
    }

    fn at(&self, x: f64) -> f64 {
        let u = ((x - self.lo) / self.h).clamp(0.0, (self.v.len() - 1) as f64);
        let i = (u.floor() as usize).min(self.v.len() - 2);
        let t = u - i as f64;
        (1.0 - t) * self.v[i] + t * self.v[i + 1]
    }
}

/// Lagrangian dual of the constrained call(0) problem from `x = 0` with two
/// or three atoms: the infimum over multipliers `λ` (last one zero) of
/// `Σ λ_k p_k + E[max over stopping rules of f(W_τ) − λ_τ]`. An upper bound
/// on the constrained value and equal to it for these convex problems.
pub fn dual_call_value(times: &[f64], weights: &[f64]) -> f64 {
    let f = |x: f64| x.max(0.0);
    match times.len() {
        2 => {
            let (s1, s2) = (times[0].sqrt(), (times[1] - times[0]).sqrt());
            golden(-20.0, 8.0, |l| l * weights[0] + gauss_expect(0.0, s1, |x| (f(x) - l).max(call_heat(x, s2)))).1
        }
        3 => {
            let s1 = times[0].sqrt();
            let s2 = (times[1] - times[0]).sqrt();
            let s3 = (times[2] - times[1]).sqrt();
            let outer = |l2: f64| {
                let span = 12.0 * s1 + 6.0;
                let g = Table::new(-span, span, 1601, |x| gauss_expect(x, s2, |z| (f(z) - l2).max(call_heat(z, s3))));
                golden(-20.0, 8.0, |l1| l1 * weights[0] + l2 * weights[1] + gauss_expect(0.0, s1, |x| (f(x) - l1).max(g.at(x)))).1
            };
            golden(-20.0, 8.0, outer).1
        }
        _ => panic!("dual oracle covers two or three atoms"),
    }
}

/// Pearson statistic and upper-tail p-value against expected probabilities.
pub fn chi_square_test(counts: &[u64], probs: &[f64]) -> (f64, f64) {
    let n: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (counts.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);
    (stat, p)
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Random weights with every entry at least `floor`.
pub fn random_weights(rng: &mut impl rand::Rng, r: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..r).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| floor + (1.0 - r as f64 * floor) * w / s).collect()
}
