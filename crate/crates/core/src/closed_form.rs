//! Reference values that do not need the HJB solver: the heat semigroup on
//! piecewise-linear payoffs, the mean-volatility value and the
//! support-constrained (Bermudan) value.

use crate::distribution::{expected_qv, AtomicDistribution};
use crate::error::{Error, Result};
use crate::normal::{norm_cdf, norm_pdf};
use crate::payoff::PayoffSpec;
use crate::quadrature::{LegendreRule, QuadratureRule};

/// `E[(m + W_t)^+] = m Φ(m/√t) + √t φ(m/√t)`.
pub fn hinge_heat(m: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return m.max(0.0);
    }
    let s = t.sqrt();
    let d = m / s;
    m * norm_cdf(d) + s * norm_pdf(d)
}

/// `E[f(x + W_t)]`, exact for piecewise-linear payoffs.
pub fn heat_value(f: &PayoffSpec, t: f64, x: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(f.eval(x));
    }
    let (a, b) = f.affine_part();
    Ok(f.hinges().iter().fold(a + b * x, |acc, h| acc + h.weight * hinge_heat(x - h.strike, t)))
}

/// Same expectation by Gauss–Hermite quadrature; used to cross-check
/// [`heat_value`] and to propagate non-piecewise-linear functions.
pub fn heat_value_quadrature(g: impl Fn(f64) -> f64, t: f64, x: f64, rule: &QuadratureRule) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(rule.expect(x, t.sqrt(), g))
}

/// Quadrature route for a piecewise-linear payoff: Gauss–Legendre pieces
/// split at the hinges, independent of the error-function identities.
pub fn heat_value_split_quadrature(f: &PayoffSpec, t: f64, x: f64, rule: &LegendreRule) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(f.eval(x));
    }
    let kinks: Vec<f64> = f.hinges().iter().map(|h| h.strike).collect();
    Ok(rule.expect_piecewise(x, t.sqrt(), &kinks, |y| f.eval(y)))
}

/// Heat value with quadratic variation fixed at the mean of `μ`.
pub fn mean_volatility_value(f: &PayoffSpec, mu: &AtomicDistribution, x: f64) -> f64 {
    heat_value(f, expected_qv(mu), x).expect("mean of μ is positive")
}

/// Piecewise-linear interpolant of gridded values, extended linearly beyond
/// the end nodes with the end-segment slopes.
pub fn grid_interpolant(xs: &[f64], values: &[f64]) -> Result<PayoffSpec> {
    if xs.len() != values.len() || xs.len() < 2 {
        return Err(Error::InvalidGrid("interpolant needs at least two matching nodes".into()));
    }
    let n = xs.len();
    let left = (values[1] - values[0]) / (xs[1] - xs[0]);
    let right = (values[n - 1] - values[n - 2]) / (xs[n - 1] - xs[n - 2]);
    PayoffSpec::piecewise_linear(xs.iter().copied().zip(values.iter().copied()).collect(), left, right)
}

/// Bermudan value with exercise allowed at any atom time of `μ` (weights
/// ignored), evaluated at time 0 on the nodes `xs`.
///
/// Backward induction `V_r = f`, `V_k = max(f, E[V_{k+1}])`; continuation
/// values are carried between dates as the piecewise-linear interpolant of
/// their grid values, which the heat semigroup propagates in closed form.
pub fn support_constrained_on_grid(f: &PayoffSpec, mu: &AtomicDistribution, xs: &[f64]) -> Result<Vec<f64>> {
    let r = mu.atoms();
    let mut current = f.clone();
    for k in (1..r).rev() {
        let gap = mu.gap(k + 1);
        let values = xs
            .iter()
            .map(|&x| Ok(f.eval(x).max(heat_value(&current, gap, x)?)))
            .collect::<Result<Vec<_>>>()?;
        current = grid_interpolant(xs, &values)?;
    }
    xs.iter().map(|&x| heat_value(&current, mu.time(1), x)).collect()
}

/// Pointwise support-constrained value on a default grid centred at `x`
/// (spacing 0.1, half-width `5 √t_r`).
pub fn support_constrained_value(f: &PayoffSpec, mu: &AtomicDistribution, x: f64) -> f64 {
    let dx = 0.1;
    let half = (5.0 * mu.last_time().sqrt() / dx).ceil() as i64;
    let xs: Vec<f64> = (-half..=half).map(|i| x + i as f64 * dx).collect();
    let values = support_constrained_on_grid(f, mu, &xs).expect("grid is valid");
    values[half as usize]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mu2() -> AtomicDistribution {
        AtomicDistribution::new(&[10.0, 20.0], &[0.5, 0.5]).unwrap()
    }

    fn mu3() -> AtomicDistribution {
        AtomicDistribution::new(&[10.0, 20.0, 100.0], &[0.45, 0.45, 0.10]).unwrap()
    }

    #[test]
    fn call_at_the_money() {
        let f = PayoffSpec::call(0.0);
        let v = heat_value(&f, 15.0, 0.0).unwrap();
        assert!((v - (15.0 / (2.0 * PI)).sqrt()).abs() < 1e-14);
        assert!((v - 1.545097).abs() < 1e-6);
    }

    #[test]
    fn zero_time_and_linear() {
        let f = PayoffSpec::piecewise_linear(vec![(-1.0, 2.0), (0.5, 0.0), (2.0, 1.0)], -1.0, 0.3).unwrap();
        for x in [-3.0, -1.0, 0.1, 4.0] {
            assert_eq!(heat_value(&f, 0.0, x).unwrap(), f.eval(x));
        }
        let lin = PayoffSpec::affine(2.0, 1.0);
        for t in [0.5, 10.0, 100.0] {
            assert!((heat_value(&lin, t, 1.5).unwrap() - 4.0).abs() < 1e-12);
        }
        assert!(matches!(heat_value(&lin, -1.0, 0.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn mean_volatility_examples() {
        let f = PayoffSpec::call(0.0);
        assert!((mean_volatility_value(&f, &mu2(), 0.0) - 1.545097).abs() < 1e-6);
        assert!((mean_volatility_value(&f, &mu3(), 0.0) - 1.933944).abs() < 1e-6);
        let single = AtomicDistribution::single(7.0).unwrap();
        assert_eq!(mean_volatility_value(&f, &single, 0.3), heat_value(&f, 7.0, 0.3).unwrap());
    }

    #[test]
    fn bermudan_of_convex_payoff_waits() {
        let f = PayoffSpec::call(0.0);
        let v = support_constrained_value(&f, &mu2(), 0.0);
        assert!((v - (20.0 / (2.0 * PI)).sqrt()).abs() < 1e-3, "{v}");
        assert!((v - 1.784124).abs() < 1e-3);
        let put = PayoffSpec::put(1.0);
        let v = support_constrained_value(&put, &mu3(), 0.5);
        assert!((v - heat_value(&put, 100.0, 0.5).unwrap()).abs() < 1e-3);
        let single = AtomicDistribution::single(4.0).unwrap();
        let v = support_constrained_value(&f, &single, 0.2);
        assert!((v - heat_value(&f, 4.0, 0.2).unwrap()).abs() < 1e-12);
    }

    // Brute-force Bermudan oracle on a fine quadrature in the exercise variable.
    #[test]
    fn bermudan_matches_quadrature_induction_for_concave_payoff() {
        // capped call: exercising early can help
        let f = PayoffSpec::piecewise_linear(vec![(0.0, 0.0), (1.0, 1.0)], 0.0, 0.0).unwrap();
        let mu = AtomicDistribution::new(&[1.0, 3.0], &[0.5, 0.5]).unwrap();
        let rule = QuadratureRule::gauss_hermite(200);
        let oracle = |x: f64| {
            let cont = |y: f64| f.eval(y).max(heat_value(&f, 2.0, y).unwrap());
            rule.expect(x, 1.0, cont)
        };
        let xs: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.025).collect();
        let grid = support_constrained_on_grid(&f, &mu, &xs).unwrap();
        for x in [-1.0, 0.0, 0.5, 1.0, 2.0] {
            let i = ((x + 10.0) / 0.025f64).round() as usize;
            assert!((grid[i] - oracle(x)).abs() < 2e-3, "x={x}: {} vs {}", grid[i], oracle(x));
        }
    }

    #[test]
    fn ordering_for_convex_payoff() {
        let f = PayoffSpec::call(0.0);
        for mu in [mu2(), mu3()] {
            for x in [-5.0, -1.0, 0.0, 2.0, 6.0] {
                let lower = mean_volatility_value(&f, &mu, x);
                let upper = support_constrained_value(&f, &mu, x);
                assert!(f.eval(x) <= lower && lower <= upper);
            }
        }
    }

    #[test]
    fn semigroup_property() {
        let f = PayoffSpec::call(0.5);
        let rule = QuadratureRule::default();
        for (s, t, x) in [(1.0, 2.0, 0.0), (5.0, 5.0, 1.0), (10.0, 20.0, -3.0)] {
            let inner = |y: f64| heat_value(&f, s, y).unwrap();
            let twice = heat_value_quadrature(inner, t, x, &rule).unwrap();
            let once = heat_value(&f, s + t, x).unwrap();
            assert!((twice - once).abs() < 1e-6, "{twice} vs {once}");
        }
    }

    #[test]
    fn quadrature_agrees_with_closed_form() {
        let f = PayoffSpec::call(0.0);
        let rule = LegendreRule::new(128);
        let mut worst: f64 = 0.0;
        for x in [-20.0, -5.0, -1.0, 0.0, 0.3, 2.0, 7.5, 20.0] {
            for t in [0.5, 1.0, 10.0, 50.0, 100.0] {
                let exact = heat_value(&f, t, x).unwrap();
                let quad = heat_value_split_quadrature(&f, t, x, &rule).unwrap();
                worst = worst.max((exact - quad).abs());
            }
        }
        assert!(worst < 1e-8, "worst {worst}");
    }
}
