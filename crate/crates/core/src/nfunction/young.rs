use alloc::vec::Vec;

use crate::math::powf;
use crate::{Error, Result};

/// Elementary convex profile of a Young function term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YoungShape {
    /// `t^p`.
    Power(f64),
    /// Convex minorant of `min(t^lo, t^hi)`: the primitive of
    /// `min(lo·s^{lo-1}, hi·s^{hi-1})`. Equals `t^hi` below the crossover
    /// `s* = (lo/hi)^{1/(hi-lo)}` and `t^lo - (s*^lo - s*^hi)` above it.
    SoftMinPower { lo: f64, hi: f64 },
    /// `max(t^lo, t^hi)`.
    MaxPower { lo: f64, hi: f64 },
}

impl YoungShape {
    fn eval(&self, t: f64) -> f64 {
        match *self {
            YoungShape::Power(p) => powf(t, p),
            YoungShape::SoftMinPower { lo, hi } => {
                if hi <= lo {
                    return powf(t, lo);
                }
                let s = powf(lo / hi, 1.0 / (hi - lo));
                if t <= s {
                    powf(t, hi)
                } else {
                    powf(t, lo) - (powf(s, lo) - powf(s, hi))
                }
            }
            YoungShape::MaxPower { lo, hi } => powf(t, lo).max(powf(t, hi)),
        }
    }
}

/// One term `coef · shape(arg_scale · t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungTerm {
    pub coef: f64,
    pub arg_scale: f64,
    pub shape: YoungShape,
}

/// A Young function `m: [0,∞) → [0,∞)` assembled from nonnegative sums of
/// convex power-type terms.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungFunction {
    terms: Vec<YoungTerm>,
}

impl YoungFunction {
    pub fn new(terms: Vec<YoungTerm>) -> Self {
        Self { terms }
    }

    pub fn power(coef: f64, p: f64) -> Self {
        Self::new(alloc::vec![YoungTerm {
            coef,
            arg_scale: 1.0,
            shape: YoungShape::Power(p),
        }])
    }

    pub fn terms(&self) -> &[YoungTerm] {
        &self.terms
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        self.terms
            .iter()
            .filter(|term| term.coef != 0.0)
            .map(|term| term.coef * term.shape.eval(term.arg_scale * t))
            .sum()
    }

    /// Sampled check of the Young-function axioms: `m(0)=0`, positivity,
    /// midpoint convexity and superlinearity at 0 and ∞ on a geometric grid.
    ///
    /// Superlinearity is tested by requiring `m(t)/t` to increase strictly
    /// along `t = 10^k`, `k = -6..=6`, and to grow by at least a factor ten
    /// between the ends of the grid. This is a heuristic, not a proof.
    pub fn check(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::ConstructionFailure(alloc::format!("Young function {what}")));
        if self.eval(0.0) != 0.0 {
            return fail("does not vanish at 0");
        }
        let grid: Vec<f64> = (-6..=6).map(|k| powf(10.0, k as f64)).collect();
        let mut last_ratio = 0.0;
        for &t in &grid {
            let m = self.eval(t);
            if !(m > 0.0) || !m.is_finite() {
                return fail("is not positive and finite away from 0");
            }
            let ratio = m / t;
            if ratio <= last_ratio {
                return fail("is not superlinear on the sample grid");
            }
            last_ratio = ratio;
        }
        let r0 = self.eval(grid[0]) / grid[0];
        let r1 = self.eval(grid[grid.len() - 1]) / grid[grid.len() - 1];
        if r1 < 10.0 * r0 {
            return fail("is not superlinear on the sample grid");
        }
        for i in 0..grid.len() {
            for j in i..grid.len() {
                let (s, t) = (grid[i], grid[j]);
                let mid = self.eval(0.5 * (s + t));
                let avg = 0.5 * (self.eval(s) + self.eval(t));
                if mid > avg * (1.0 + 1e-12) {
                    return fail("is not convex on the sample grid");
                }
            }
        }
        Ok(())
    }
}
