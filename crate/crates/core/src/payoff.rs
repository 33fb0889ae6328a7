//! Lipschitz payoffs. Every supported payoff is piecewise linear, stored as an
//! affine part plus a sum of hinges `c_i (x - K_i)^+`, which is the form the
//! heat semigroup acts on in closed form.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PayoffKind {
    Call { strike: f64 },
    Put { strike: f64 },
    PiecewiseLinear { knots: Vec<(f64, f64)>, left_slope: f64, right_slope: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hinge {
    pub strike: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffSpec {
    kind: PayoffKind,
    intercept: f64,
    slope: f64,
    hinges: Vec<Hinge>,
    lipschitz: f64,
}

impl PayoffSpec {
    /// `max(x - K, 0)`.
    pub fn call(strike: f64) -> Self {
        Self {
            kind: PayoffKind::Call { strike },
            intercept: 0.0,
            slope: 0.0,
            hinges: vec![Hinge { strike, weight: 1.0 }],
            lipschitz: 1.0,
        }
    }

    /// `max(K - x, 0) = (K - x) + (x - K)^+`.
    pub fn put(strike: f64) -> Self {
        Self {
            kind: PayoffKind::Put { strike },
            intercept: strike,
            slope: -1.0,
            hinges: vec![Hinge { strike, weight: 1.0 }],
            lipschitz: 1.0,
        }
    }

    /// `a x + b`, stored as a one-knot piecewise-linear payoff.
    pub fn affine(a: f64, b: f64) -> Self {
        Self::piecewise_linear(vec![(0.0, b)], a, a).expect("affine payoff is valid")
    }

    /// Linear interpolation through `knots` (strictly increasing abscissae),
    /// extended with the given slopes outside the knot range.
    pub fn piecewise_linear(knots: Vec<(f64, f64)>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidPayoff("at least one knot is required".into()));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite())
            || !left_slope.is_finite()
            || !right_slope.is_finite()
        {
            return Err(Error::InvalidPayoff("knots and slopes must be finite".into()));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidPayoff("knot abscissae must be strictly increasing".into()));
        }
        let mut slopes = Vec::with_capacity(knots.len() + 1);
        slopes.push(left_slope);
        for w in knots.windows(2) {
            slopes.push((w[1].1 - w[0].1) / (w[1].0 - w[0].0));
        }
        slopes.push(right_slope);
        let hinges = knots
            .iter()
            .enumerate()
            .map(|(i, &(x, _))| Hinge { strike: x, weight: slopes[i + 1] - slopes[i] })
            .filter(|h| h.weight != 0.0)
            .collect();
        let lipschitz = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let (x0, f0) = knots[0];
        Ok(Self {
            intercept: f0 - left_slope * x0,
            slope: left_slope,
            hinges,
            lipschitz,
            kind: PayoffKind::PiecewiseLinear { knots, left_slope, right_slope },
        })
    }

    pub fn kind(&self) -> &PayoffKind {
        &self.kind
    }

    /// Exact global Lipschitz constant (largest absolute slope).
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Affine part `(intercept, slope)` of the hinge decomposition.
    pub fn affine_part(&self) -> (f64, f64) {
        (self.intercept, self.slope)
    }

    pub fn hinges(&self) -> &[Hinge] {
        &self.hinges
    }

    pub fn is_affine(&self) -> bool {
        self.hinges.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.hinges
            .iter()
            .fold(self.intercept + self.slope * x, |acc, h| acc + h.weight * (x - h.strike).max(0.0))
    }

    /// True when every hinge weight is non-negative.
    pub fn is_convex(&self) -> bool {
        self.hinges.iter().all(|h| h.weight >= 0.0)
    }
}
