//! Gauss–Hermite rules for Gaussian expectations `E[g(x + σZ)]`.

use std::f64::consts::PI;

/// Default node count for validation quadrature.
pub const DEFAULT_NODES: usize = 128;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Nodes for a standard normal variable.
    nodes: Vec<f64>,
    /// Probability weights, summing to one.
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// `n`-point rule, exact for polynomials of degree `2n - 1` against the
    /// standard normal law. Nodes are the eigenvalues of the Hermite Jacobi
    /// matrix, isolated by Sturm-sequence bisection; weights come from the
    /// orthonormal recurrence at each node.
    pub fn gauss_hermite(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        // Jacobi matrix for weight exp(-u^2): zero diagonal, off-diagonal sqrt(j/2).
        let off_sq: Vec<f64> = (1..n).map(|j| j as f64 / 2.0).collect();
        let bound = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
        let pim4 = PI.powf(-0.25);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for u in jacobi_eigenvalues(&off_sq, bound) {
            // w = 2 / p_n'(u)^2 for the orthonormal family, p_n' = sqrt(2n) p_{n-1}
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = u * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            let pp = (2.0 * n as f64).sqrt() * p2;
            nodes.push(u * 2f64.sqrt());
            weights.push(2.0 / (pp * pp) / PI.sqrt());
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[g(x + σZ)]`.
    pub fn expect(&self, x: f64, sigma: f64, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(z, w)| w * g(x + sigma * z)).sum()
    }
}

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix with zero
/// diagonal and squared off-diagonal `off_sq`, all inside `[-bound, bound]`.
fn jacobi_eigenvalues(off_sq: &[f64], bound: f64) -> Vec<f64> {
    let n = off_sq.len() + 1;
    let count_below = |z: f64| {
        let mut count = 0;
        let mut d = -z;
        for j in 0..n {
            if j > 0 {
                d = -z - off_sq[j - 1] / d;
            }
            if d == 0.0 {
                d = -f64::EPSILON;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    (0..n)
        .map(|i| {
            let (mut lo, mut hi) = (-bound, bound);
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if count_below(mid) > i {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct LegendreRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LegendreRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let off_sq: Vec<f64> = (1..n).map(|j| (j * j) as f64 / (4.0 * (j * j) as f64 - 1.0)).collect();
        let nodes = jacobi_eigenvalues(&off_sq, 1.0);
        let weights = nodes
            .iter()
            .map(|&u| {
                let (mut p0, mut p1) = (1.0, u);
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * u * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                let (pn, pn1) = if n == 1 { (u, 1.0) } else { (p1, p0) };
                let deriv = n as f64 * (u * pn - pn1) / (u * u - 1.0);
                2.0 / ((1.0 - u * u) * deriv * deriv)
            })
            .collect();
        Self { nodes, weights }
    }

    /// `∫_a^b g`.
    pub fn integrate(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        half * self.nodes.iter().zip(&self.weights).map(|(u, w)| w * g(mid + half * u)).sum::<f64>()
    }

    /// `E[g(x + σZ)]` for `g` smooth between the given breakpoints (in the
    /// `x + σZ` variable). Each piece of `[-12, 12]` standard deviations gets
    /// its own rule, so kinks do not degrade convergence.
    pub fn expect_piecewise(&self, x: f64, sigma: f64, breakpoints: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        const TAIL: f64 = 12.0;
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .map(|b| (b - x) / sigma)
            .filter(|z| z.abs() < TAIL)
            .collect();
        cuts.push(-TAIL);
        cuts.push(TAIL);
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        let integrand = |z: f64| g(x + sigma * z) * (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        cuts.windows(2).map(|w| self.integrate(w[0], w[1], integrand)).sum()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_NODES)
    }
}
