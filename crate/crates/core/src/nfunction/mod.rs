//! Generalized anisotropic N-functions `M(x, ξ)` and their conjugates.
//!
//! An N-function is convex and even in `ξ`, vanishes at `ξ = 0` and is
//! sandwiched between two isotropic Young functions `m₁(|ξ|) ≤ M(x,ξ) ≤ m₂(|ξ|)`.
//! The catalog covers constant powers, variable exponents, double phase and
//! their anisotropic (orthotropic) versions, plus user-supplied integrands.

mod conjugate;
mod young;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

pub use conjugate::{
    check_biconjugation, check_fenchel_young, duality_suite, random_triples, BiconjugationReport, ConjugateEvaluator,
    ConjugateSettings, ConvexIntegrand, DualityReport, DualityTolerances, FenchelYoungEntry, FenchelYoungReport,
};
pub use young::{YoungFunction, YoungShape, YoungTerm};

use crate::error::invalid;
use crate::fem::Domain;
use crate::math::{dot, norm, powf, sqrt};
use crate::{Error, Result};

/// Variable exponent `p(x) = clamp(base + gradient·x, min, max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField {
    pub base: f64,
    pub gradient: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl ExponentField {
    pub fn constant(p: f64) -> Self {
        Self {
            base: p,
            gradient: Vec::new(),
            min: p,
            max: p,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.base + dot(&self.gradient, x)).clamp(self.min, self.max)
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.min > 1.0) || !(self.min <= self.max) || !self.max.is_finite() {
            return Err(invalid(
                "exponent",
                format!("need 1 < p- <= p+ < inf, got [{}, {}]", self.min, self.max),
            ));
        }
        if !self.gradient.is_empty() && self.gradient.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.gradient.len(),
            });
        }
        Ok(())
    }

    /// Attained range of `p` over the domain (the affine part is extremal at corners).
    pub fn range_on(&self, domain: &Domain) -> (f64, f64) {
        corner_range(domain, |x| self.eval(x))
    }
}

/// Nonnegative coefficient `a(x) = coef · |offset + gradient·x|^holder`.
///
/// With `holder = 1` this is an affine weight in absolute value; smaller
/// exponents give weights that are exactly `holder`-Hölder across the zero set
/// `{offset + gradient·x = 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub coef: f64,
    pub offset: f64,
    pub gradient: Vec<f64>,
    pub holder: f64,
}

impl CoefficientField {
    pub fn constant(c: f64) -> Self {
        Self {
            coef: c,
            offset: 1.0,
            gradient: Vec::new(),
            holder: 1.0,
        }
    }

    /// `a(x) = coef · |x_axis - shift|^holder`.
    pub fn distance_power(dim: usize, axis: usize, shift: f64, coef: f64, holder: f64) -> Self {
        let mut gradient = vec![0.0; dim];
        gradient[axis] = 1.0;
        Self {
            coef,
            offset: -shift,
            gradient,
            holder,
        }
    }

    #[inline]
    pub fn linear_part(&self, x: &[f64]) -> f64 {
        self.offset + dot(&self.gradient, x)
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let l = self.linear_part(x).abs();
        if l == 0.0 || self.coef == 0.0 {
            0.0
        } else if self.holder == 1.0 {
            self.coef * l
        } else {
            self.coef * powf(l, self.holder)
        }
    }

    /// True when the weight is not identically constant.
    pub fn varies(&self) -> bool {
        self.coef != 0.0 && self.gradient.iter().any(|g| *g != 0.0)
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.coef >= 0.0) {
            return Err(invalid("weight.coef", "double phase weights must be nonnegative"));
        }
        if !(self.holder > 0.0 && self.holder <= 1.0) {
            return Err(invalid("weight.holder", "Hölder exponent must lie in (0, 1]"));
        }
        if !self.gradient.is_empty() && self.gradient.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.gradient.len(),
            });
        }
        Ok(())
    }

    /// Largest value on the domain.
    pub fn max_on(&self, domain: &Domain) -> f64 {
        corner_range(domain, |x| self.eval(x)).1
    }

    /// Smallest value on the domain.
    pub fn min_on(&self, domain: &Domain) -> f64 {
        let (lo, hi) = corner_range(domain, |x| self.linear_part(x));
        if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else {
            corner_range(domain, |x| self.eval(x)).0
        }
    }
}

fn corner_range(domain: &Domain, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let d = domain.dim();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut x = [0.0; 2];
    for mask in 0..(1usize << d) {
        for (k, xk) in x.iter_mut().enumerate().take(d) {
            let (a, b) = domain.extent(k);
            *xk = if mask & (1 << k) == 0 { a } else { b };
        }
        let v = f(&x[..d]);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

type ValueFn = Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type GradientFn = Box<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// User-supplied integrand. The caller is responsible for convexity and
/// evenness in `ξ`; [`NFunction::check_invariants`] samples both.
pub struct CustomIntegrand {
    pub label: String,
    pub value: ValueFn,
    pub gradient: Option<GradientFn>,
    pub conjugate: Option<ValueFn>,
}

impl fmt::Debug for CustomIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomIntegrand")
            .field("label", &self.label)
            .field("gradient", &self.gradient.is_some())
            .field("conjugate", &self.conjugate.is_some())
            .finish()
    }
}

/// Catalog families of N-functions.
#[derive(Debug)]
pub enum Family {
    /// `scale · |ξ|^p`.
    ConstantPower {
        p: f64,
        scale: f64,
    },
    /// `scale · |ξ|^{p(x)}`.
    VariableExponent {
        exponent: ExponentField,
        scale: f64,
    },
    /// `|ξ|^p / n_p + a(x) |ξ|^q / n_q` with `n_r = r` when `normalized`, else 1.
    DoublePhase {
        p: f64,
        q: f64,
        weight: CoefficientField,
        normalized: bool,
    },
    /// `Σ_i |ξ_i|^{p_i(x)}`.
    AnisotropicVariable {
        exponents: Vec<ExponentField>,
    },
    /// `Σ_i |ξ_i|^{p_i} / n_{p_i} + a_i(x) |ξ_i|^{q_i} / n_{q_i}`.
    AnisotropicDoublePhase {
        p: Vec<f64>,
        q: Vec<f64>,
        weights: Vec<CoefficientField>,
        normalized: bool,
    },
    Custom(CustomIntegrand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyTag {
    ConstantPower,
    VariableExponent,
    DoublePhase,
    AnisotropicVariable,
    AnisotropicDoublePhase,
    Custom,
}

impl FamilyTag {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyTag::ConstantPower => "constant-power",
            FamilyTag::VariableExponent => "variable-exponent",
            FamilyTag::DoublePhase => "double-phase",
            FamilyTag::AnisotropicVariable => "anisotropic-variable",
            FamilyTag::AnisotropicDoublePhase => "anisotropic-double-phase",
            FamilyTag::Custom => "custom",
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A generalized N-function on a domain Ω ⊂ ℝᵈ, acting on ξ ∈ ℝᵈ.
#[derive(Debug)]
pub struct NFunction {
    domain: Domain,
    family: Family,
    lower: YoungFunction,
    upper: YoungFunction,
}

#[inline]
fn norm_factor(normalized: bool, r: f64) -> f64 {
    if normalized {
        1.0 / r
    } else {
        1.0
    }
}

/// Conjugate of `c·t^p` evaluated at `s ≥ 0`.
#[inline]
pub(crate) fn power_conjugate(c: f64, p: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    (1.0 - 1.0 / p) * powf(p * c, -1.0 / (p - 1.0)) * powf(s, p / (p - 1.0))
}

impl NFunction {
    pub fn constant_power(domain: Domain, p: f64, scale: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(invalid("p", "constant power needs 1 < p < inf"));
        }
        if !(scale > 0.0) {
            return Err(invalid("scale", "must be positive"));
        }
        let m = YoungFunction::power(scale, p);
        Self::build(domain, Family::ConstantPower { p, scale }, m.clone(), m)
    }

    pub fn variable_exponent(domain: Domain, exponent: ExponentField, scale: f64) -> Result<Self> {
        exponent.validate(domain.dim())?;
        if !(scale > 0.0) {
            return Err(invalid("scale", "must be positive"));
        }
        let (lo, hi) = exponent.range_on(&domain);
        let lower = YoungFunction::new(vec![YoungTerm {
            coef: scale,
            arg_scale: 1.0,
            shape: YoungShape::SoftMinPower { lo, hi },
        }]);
        let upper = YoungFunction::new(vec![YoungTerm {
            coef: scale,
            arg_scale: 1.0,
            shape: YoungShape::MaxPower { lo, hi },
        }]);
        Self::build(domain, Family::VariableExponent { exponent, scale }, lower, upper)
    }

    pub fn double_phase(domain: Domain, p: f64, q: f64, weight: CoefficientField, normalized: bool) -> Result<Self> {
        check_phase_exponents(p, q)?;
        weight.validate(domain.dim())?;
        let a_max = weight.max_on(&domain);
        let lower = YoungFunction::power(norm_factor(normalized, p), p);
        let mut terms = lower.terms().to_vec();
        if a_max > 0.0 {
            terms.push(YoungTerm {
                coef: a_max * norm_factor(normalized, q),
                arg_scale: 1.0,
                shape: YoungShape::Power(q),
            });
        }
        Self::build(
            domain,
            Family::DoublePhase {
                p,
                q,
                weight,
                normalized,
            },
            lower,
            YoungFunction::new(terms),
        )
    }

    pub fn anisotropic_variable(domain: Domain, exponents: Vec<ExponentField>) -> Result<Self> {
        let d = domain.dim();
        if exponents.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: exponents.len(),
            });
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for e in &exponents {
            e.validate(d)?;
            let (a, b) = e.range_on(&domain);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        // the largest component carries at least |ξ|/√d
        let lower = YoungFunction::new(vec![YoungTerm {
            coef: 1.0,
            arg_scale: 1.0 / sqrt(d as f64),
            shape: YoungShape::SoftMinPower { lo, hi },
        }]);
        let upper = YoungFunction::new(vec![YoungTerm {
            coef: d as f64,
            arg_scale: 1.0,
            shape: YoungShape::MaxPower { lo, hi },
        }]);
        Self::build(domain, Family::AnisotropicVariable { exponents }, lower, upper)
    }

    pub fn anisotropic_double_phase(
        domain: Domain,
        p: Vec<f64>,
        q: Vec<f64>,
        weights: Vec<CoefficientField>,
        normalized: bool,
    ) -> Result<Self> {
        let d = domain.dim();
        for len in [p.len(), q.len(), weights.len()] {
            if len != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: len,
                });
            }
        }
        let mut upper_terms = Vec::new();
        let (mut lo, mut hi, mut cmin) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..d {
            check_phase_exponents(p[i], q[i])?;
            weights[i].validate(d)?;
            lo = lo.min(p[i]);
            hi = hi.max(p[i]);
            cmin = cmin.min(norm_factor(normalized, p[i]));
            upper_terms.push(YoungTerm {
                coef: norm_factor(normalized, p[i]),
                arg_scale: 1.0,
                shape: YoungShape::Power(p[i]),
            });
            let a_max = weights[i].max_on(&domain);
            if a_max > 0.0 {
                upper_terms.push(YoungTerm {
                    coef: a_max * norm_factor(normalized, q[i]),
                    arg_scale: 1.0,
                    shape: YoungShape::Power(q[i]),
                });
            }
        }
        let lower = YoungFunction::new(vec![YoungTerm {
            coef: cmin,
            arg_scale: 1.0 / sqrt(d as f64),
            shape: YoungShape::SoftMinPower { lo, hi },
        }]);
        Self::build(
            domain,
            Family::AnisotropicDoublePhase {
                p,
                q,
                weights,
                normalized,
            },
            lower,
            YoungFunction::new(upper_terms),
        )
    }

    /// Wraps a user integrand with caller-supplied envelopes.
    pub fn custom(
        domain: Domain,
        integrand: CustomIntegrand,
        lower: YoungFunction,
        upper: YoungFunction,
    ) -> Result<Self> {
        Self::build(domain, Family::Custom(integrand), lower, upper)
    }

    fn build(domain: Domain, family: Family, lower: YoungFunction, upper: YoungFunction) -> Result<Self> {
        lower.check()?;
        upper.check()?;
        Ok(Self {
            domain,
            family,
            lower,
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn tag(&self) -> FamilyTag {
        match self.family {
            Family::ConstantPower { .. } => FamilyTag::ConstantPower,
            Family::VariableExponent { .. } => FamilyTag::VariableExponent,
            Family::DoublePhase { .. } => FamilyTag::DoublePhase,
            Family::AnisotropicVariable { .. } => FamilyTag::AnisotropicVariable,
            Family::AnisotropicDoublePhase { .. } => FamilyTag::AnisotropicDoublePhase,
            Family::Custom(_) => FamilyTag::Custom,
        }
    }

    /// Lower envelope `m₁`.
    pub fn lower(&self) -> &YoungFunction {
        &self.lower
    }

    /// Upper envelope `m₂`.
    pub fn upper(&self) -> &YoungFunction {
        &self.upper
    }

    /// True when `M` does not depend on `x`.
    pub fn is_x_independent(&self) -> bool {
        match &self.family {
            Family::ConstantPower { .. } => true,
            Family::VariableExponent { exponent, .. } => {
                exponent.min == exponent.max || exponent.gradient.iter().all(|g| *g == 0.0)
            }
            Family::DoublePhase { weight, .. } => !weight.varies(),
            Family::AnisotropicVariable { exponents } => exponents
                .iter()
                .all(|e| e.min == e.max || e.gradient.iter().all(|g| *g == 0.0)),
            Family::AnisotropicDoublePhase { weights, .. } => weights.iter().all(|w| !w.varies()),
            Family::Custom(_) => false,
        }
    }

    /// `M(x, ξ)`, rejecting points outside the closure of Ω.
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::DomainViolation { point: x.to_vec() });
        }
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: xi.len(),
            });
        }
        Ok(self.value(x, xi))
    }

    /// `M(x, ξ)` without domain checks.
    pub fn value(&self, x: &[f64], xi: &[f64]) -> f64 {
        match &self.family {
            Family::ConstantPower { p, scale } => scale * powf(norm(xi), *p),
            Family::VariableExponent { exponent, scale } => scale * powf(norm(xi), exponent.eval(x)),
            Family::DoublePhase {
                p,
                q,
                weight,
                normalized,
            } => {
                let r = norm(xi);
                let a = weight.eval(x);
                let mut v = norm_factor(*normalized, *p) * powf(r, *p);
                if a > 0.0 {
                    v += a * norm_factor(*normalized, *q) * powf(r, *q);
                }
                v
            }
            Family::AnisotropicVariable { exponents } => {
                exponents.iter().zip(xi).map(|(e, c)| powf(c.abs(), e.eval(x))).sum()
            }
            Family::AnisotropicDoublePhase {
                p,
                q,
                weights,
                normalized,
            } => (0..xi.len())
                .map(|i| {
                    let r = xi[i].abs();
                    let a = weights[i].eval(x);
                    let mut v = norm_factor(*normalized, p[i]) * powf(r, p[i]);
                    if a > 0.0 {
                        v += a * norm_factor(*normalized, q[i]) * powf(r, q[i]);
                    }
                    v
                })
                .sum(),
            Family::Custom(c) => (c.value)(x, xi),
        }
    }

    /// Closed-form `M*(x, η)` when the family admits one.
    pub fn closed_form_conjugate(&self, x: &[f64], eta: &[f64]) -> Option<f64> {
        match &self.family {
            Family::ConstantPower { p, scale } => Some(power_conjugate(*scale, *p, norm(eta))),
            Family::VariableExponent { exponent, scale } => Some(power_conjugate(*scale, exponent.eval(x), norm(eta))),
            Family::DoublePhase {
                p, weight, normalized, ..
            } => (weight.eval(x) == 0.0).then(|| power_conjugate(norm_factor(*normalized, *p), *p, norm(eta))),
            Family::AnisotropicVariable { exponents } => Some(
                exponents
                    .iter()
                    .zip(eta)
                    .map(|(e, s)| power_conjugate(1.0, e.eval(x), s.abs()))
                    .sum(),
            ),
            Family::AnisotropicDoublePhase {
                p, weights, normalized, ..
            } => {
                if weights.iter().any(|w| w.eval(x) != 0.0) {
                    return None;
                }
                Some(
                    (0..eta.len())
                        .map(|i| power_conjugate(norm_factor(*normalized, p[i]), p[i], eta[i].abs()))
                        .sum(),
                )
            }
            Family::Custom(c) => c.conjugate.as_ref().map(|f| f(x, eta)),
        }
    }

    /// Radial profile `φ(x, r)` and derivative `φ'(x, r)` for isotropic families,
    /// or per-coordinate profile for orthotropic ones (`axis` selects the coordinate).
    fn profile(&self, x: &[f64], axis: usize, r: f64) -> (f64, f64) {
        let pw = |c: f64, p: f64, r: f64| -> (f64, f64) {
            if r == 0.0 {
                (0.0, 0.0)
            } else {
                let rp1 = powf(r, p - 1.0);
                (c * rp1 * r, c * p * rp1)
            }
        };
        let add = |a: (f64, f64), b: (f64, f64)| (a.0 + b.0, a.1 + b.1);
        match &self.family {
            Family::ConstantPower { p, scale } => pw(*scale, *p, r),
            Family::VariableExponent { exponent, scale } => pw(*scale, exponent.eval(x), r),
            Family::DoublePhase {
                p,
                q,
                weight,
                normalized,
            } => {
                let base = pw(norm_factor(*normalized, *p), *p, r);
                let a = weight.eval(x);
                if a > 0.0 {
                    add(base, pw(a * norm_factor(*normalized, *q), *q, r))
                } else {
                    base
                }
            }
            Family::AnisotropicVariable { exponents } => pw(1.0, exponents[axis].eval(x), r),
            Family::AnisotropicDoublePhase {
                p,
                q,
                weights,
                normalized,
            } => {
                let base = pw(norm_factor(*normalized, p[axis]), p[axis], r);
                let a = weights[axis].eval(x);
                if a > 0.0 {
                    add(base, pw(a * norm_factor(*normalized, q[axis]), q[axis], r))
                } else {
                    base
                }
            }
            Family::Custom(_) => (0.0, 0.0),
        }
    }

    fn is_orthotropic(&self) -> bool {
        matches!(
            self.family,
            Family::AnisotropicVariable { .. } | Family::AnisotropicDoublePhase { .. }
        )
    }

    /// `M_ε(x, ξ)`: the norm (per coordinate for orthotropic families) is
    /// replaced by `√(·² + ε²)` and the value at `ξ = 0` is subtracted.
    /// Custom integrands are returned unchanged.
    pub fn smoothed_value(&self, x: &[f64], xi: &[f64], eps: f64) -> f64 {
        if let Family::Custom(c) = &self.family {
            return (c.value)(x, xi);
        }
        if self.is_orthotropic() {
            (0..xi.len())
                .map(|i| {
                    let r = sqrt(xi[i] * xi[i] + eps * eps);
                    self.profile(x, i, r).0 - self.profile(x, i, eps).0
                })
                .sum()
        } else {
            let r = sqrt(dot(xi, xi) + eps * eps);
            self.profile(x, 0, r).0 - self.profile(x, 0, eps).0
        }
    }

    /// `∇_ξ M_ε(x, ξ)` written into `out`. At `ξ = 0` with `ε = 0` the zero
    /// subgradient is selected. Custom integrands use their own gradient or
    /// central differences when none is supplied.
    pub fn smoothed_gradient(&self, x: &[f64], xi: &[f64], eps: f64, out: &mut [f64]) {
        if let Family::Custom(c) = &self.family {
            match &c.gradient {
                Some(g) => g(x, xi, out),
                None => central_gradient(|z| (c.value)(x, z), xi, out),
            }
            return;
        }
        if self.is_orthotropic() {
            for i in 0..xi.len() {
                let r = sqrt(xi[i] * xi[i] + eps * eps);
                out[i] = if r == 0.0 {
                    0.0
                } else {
                    self.profile(x, i, r).1 * xi[i] / r
                };
            }
        } else {
            let r = sqrt(dot(xi, xi) + eps * eps);
            let s = if r == 0.0 { 0.0 } else { self.profile(x, 0, r).1 / r };
            for (o, c) in out.iter_mut().zip(xi) {
                *o = s * c;
            }
        }
    }

    /// Samples the pointwise N-function axioms.
    pub fn check_invariants<R: Rng + ?Sized>(&self, rng: &mut R, samples: usize) -> InvariantReport {
        let d = self.dim();
        let mut report = InvariantReport {
            samples,
            ..Default::default()
        };
        let mut x = vec![0.0; d];
        let mut u = vec![0.0; d];
        let mut xi = vec![0.0; d];
        let mut eta = vec![0.0; d];
        let mut neg = vec![0.0; d];
        let mut mid = vec![0.0; d];
        for _ in 0..samples {
            for v in u.iter_mut() {
                *v = rng.gen();
            }
            self.domain.from_unit(&u, &mut x);
            crate::math::random_direction(rng, &mut xi);
            crate::math::random_direction(rng, &mut eta);
            let (s, t) = (
                crate::math::log_uniform(rng, 1e-2, 1e2),
                crate::math::log_uniform(rng, 1e-2, 1e2),
            );
            xi.iter_mut().for_each(|v| *v *= s);
            eta.iter_mut().for_each(|v| *v *= t);
            let zero = self.value(&x, &vec![0.0; d]);
            if zero != 0.0 {
                report.push(format!("M(x,0) = {zero:e} at x = {x:?}"));
            }
            let m = self.value(&x, &xi);
            neg.iter_mut().zip(&xi).for_each(|(n, v)| *n = -v);
            let mneg = self.value(&x, &neg);
            if (m - mneg).abs() > 1e-12 * m.abs().max(1.0) {
                report.push(format!("M(x,ξ) ≠ M(x,-ξ) at x = {x:?}, ξ = {xi:?}"));
            }
            let me = self.value(&x, &eta);
            mid.iter_mut()
                .enumerate()
                .for_each(|(k, v)| *v = 0.5 * (xi[k] + eta[k]));
            let mm = self.value(&x, &mid);
            if mm > 0.5 * (m + me) * (1.0 + 1e-12) + 1e-300 {
                report.push(format!(
                    "midpoint convexity fails at x = {x:?}, ξ = {xi:?}, η = {eta:?}"
                ));
            }
            let r = norm(&xi);
            let (lo, hi) = (self.lower.eval(r), self.upper.eval(r));
            if lo > m * (1.0 + 1e-12) || m > hi * (1.0 + 1e-12) {
                report.push(format!(
                    "envelope m₁ ≤ M ≤ m₂ fails: {lo:e} ≤ {m:e} ≤ {hi:e} at ξ = {xi:?}"
                ));
            }
        }
        report
    }
}

fn check_phase_exponents(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0) || !(p <= q) || !q.is_finite() {
        return Err(invalid(
            "p,q",
            format!("double phase needs 1 < p <= q < inf, got p={p}, q={q}"),
        ));
    }
    Ok(())
}

pub(crate) fn central_gradient(f: impl Fn(&[f64]) -> f64, xi: &[f64], out: &mut [f64]) {
    let mut z = xi.to_vec();
    for i in 0..xi.len() {
        let h = 1e-6 * (1.0 + xi[i].abs());
        z[i] = xi[i] + h;
        let fp = f(&z);
        z[i] = xi[i] - h;
        let fm = f(&z);
        z[i] = xi[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
}

/// Outcome of [`NFunction::check_invariants`].
#[derive(Debug, Clone, Default)]
pub struct InvariantReport {
    pub samples: usize,
    pub violations: Vec<String>,
}

impl InvariantReport {
    fn push(&mut self, msg: String) {
        if self.violations.len() < 32 {
            self.violations.push(msg);
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Domain {
        Domain::unit_square()
    }

    #[test]
    fn eval_examples() {
        let m = NFunction::constant_power(square(), 2.0, 1.0).unwrap();
        assert!((m.eval(&[0.5, 0.5], &[1.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);

        let exp = ExponentField {
            base: 2.0,
            gradient: vec![1.0, 0.0],
            min: 1.5,
            max: 4.0,
        };
        let m = NFunction::variable_exponent(square(), exp, 1.0).unwrap();
        // 2^{2.5}
        let v = m.eval(&[0.5, 0.0], &[2.0, 0.0]).unwrap();
        assert!((v - 5.656_854_249_492_381).abs() < 1e-12);

        let w = CoefficientField::distance_power(2, 0, 0.0, 1.0, 1.0);
        let m = NFunction::double_phase(square(), 2.0, 3.0, w, false).unwrap();
        assert!((m.eval(&[0.5, 0.0], &[1.0, 0.0]).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn outside_domain_is_rejected() {
        let m = NFunction::constant_power(square(), 2.0, 1.0).unwrap();
        assert!(matches!(
            m.eval(&[1.5, 0.5], &[1.0, 0.0]),
            Err(Error::DomainViolation { .. })
        ));
        assert!(matches!(
            m.eval(&[0.5, 0.5], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn parameter_validation() {
        assert!(NFunction::constant_power(square(), 1.0, 1.0).is_err());
        assert!(NFunction::double_phase(square(), 3.0, 2.0, CoefficientField::constant(1.0), false).is_err());
        assert!(NFunction::double_phase(square(), 2.0, 3.0, CoefficientField::constant(-1.0), false).is_err());
        let bad = ExponentField {
            base: 2.0,
            gradient: vec![1.0, 0.0],
            min: 1.0,
            max: 3.0,
        };
        assert!(NFunction::variable_exponent(square(), bad, 1.0).is_err());
    }

    #[test]
    fn power_conjugate_matches_formula() {
        // p = 3, |η| = 3 → 2
        assert!((power_conjugate(1.0, 3.0, 3.0) - 2.0).abs() < 1e-14);
        // |ξ|²: η = 2 → 1
        assert!((power_conjugate(1.0, 2.0, 2.0) - 1.0).abs() < 1e-15);
        // |ξ|²/2 is self-conjugate
        assert!((power_conjugate(0.5, 2.0, 1.7) - 0.5 * 1.7 * 1.7).abs() < 1e-14);
    }

    #[test]
    fn smoothed_gradients() {
        let m = NFunction::constant_power(square(), 3.0, 1.0 / 3.0).unwrap();
        let mut g = [0.0; 2];
        m.smoothed_gradient(&[0.3, 0.3], &[1.0, 2.0], 0.0, &mut g);
        let r = sqrt(5.0);
        assert!((g[0] - r).abs() < 1e-14 && (g[1] - 2.0 * r).abs() < 1e-14);
        m.smoothed_gradient(&[0.3, 0.3], &[0.0, 0.0], 0.0, &mut g);
        assert_eq!(g, [0.0, 0.0]);
    }
}
