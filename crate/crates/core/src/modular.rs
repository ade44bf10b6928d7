//! Modulars, Luxemburg norms and related integral diagnostics.
//!
//! Fields live at quadrature points: a [`DiscreteField`] stores one vector per
//! point of a [`Quadrature`] table, so modulars of nonlinear images are plain
//! weighted sums.

use alloc::vec;
use alloc::vec::Vec;

use crate::fem::Quadrature;
use crate::math::norm;
use crate::nfunction::ConvexIntegrand;
use crate::{Error, Result};

/// Values of a scalar or vector field at the points of a quadrature table.
#[derive(Debug, Clone)]
pub struct DiscreteField<'q> {
    quadrature: &'q Quadrature,
    components: usize,
    values: Vec<f64>,
}

impl<'q> DiscreteField<'q> {
    pub fn new(quadrature: &'q Quadrature, components: usize, values: Vec<f64>) -> Result<Self> {
        let expected = quadrature.len() * components;
        if components == 0 || values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self {
            quadrature,
            components,
            values,
        })
    }

    pub fn zeros(quadrature: &'q Quadrature, components: usize) -> Self {
        Self {
            quadrature,
            components,
            values: vec![0.0; quadrature.len() * components],
        }
    }

    /// Samples `f(x, out)` at every quadrature point.
    pub fn from_fn<F: FnMut(&[f64], &mut [f64])>(quadrature: &'q Quadrature, components: usize, mut f: F) -> Self {
        let mut values = vec![0.0; quadrature.len() * components];
        for (q, out) in values.chunks_exact_mut(components).enumerate() {
            f(quadrature.point(q), out);
        }
        Self {
            quadrature,
            components,
            values,
        }
    }

    pub fn quadrature(&self) -> &'q Quadrature {
        self.quadrature
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Number of quadrature points.
    pub fn len(&self) -> usize {
        self.quadrature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quadrature.is_empty()
    }

    pub fn value(&self, q: usize) -> &[f64] {
        &self.values[q * self.components..(q + 1) * self.components]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            quadrature: self.quadrature,
            components: self.components,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.components != other.components || self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        Ok(Self {
            quadrature: self.quadrature,
            components: self.components,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Largest pointwise Euclidean norm.
    pub fn sup_norm(&self) -> f64 {
        (0..self.len()).map(|q| norm(self.value(q))).fold(0.0, f64::max)
    }

    /// `∫ |ξ| dx`.
    pub fn l1_norm(&self) -> f64 {
        self.quadrature.integrate(|q, _| norm(self.value(q)))
    }
}

fn check_dim<I: ConvexIntegrand + ?Sized>(m: &I, xi: &DiscreteField<'_>) -> Result<()> {
    if m.dim() != xi.components() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: xi.components(),
        });
    }
    Ok(())
}

fn scaled_modular<I: ConvexIntegrand + ?Sized>(m: &I, xi: &DiscreteField<'_>, c: f64) -> Result<f64> {
    let quad = xi.quadrature();
    let mut buf = vec![0.0; xi.components()];
    let mut sum = 0.0;
    for q in 0..quad.len() {
        for (b, v) in buf.iter_mut().zip(xi.value(q)) {
            *b = c * v;
        }
        sum += quad.weight(q) * m.value(quad.point(q), &buf)?;
    }
    Ok(sum)
}

/// `∫_Ω M(x, ξ(x)) dx` by quadrature.
pub fn modular<I: ConvexIntegrand + ?Sized>(m: &I, xi: &DiscreteField<'_>) -> Result<f64> {
    check_dim(m, xi)?;
    scaled_modular(m, xi, 1.0)
}

/// Modular and Luxemburg norm of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularReport {
    pub modular: f64,
    pub norm: f64,
    pub iterations: usize,
}

pub const LUXEMBURG_TOL: f64 = 1e-10;

/// Luxemburg norm `inf{λ > 0 : ∫ M(x, ξ/λ) ≤ 1}`.
///
/// The bracket is found by doubling or halving from the sup norm of `ξ`, then
/// bisected to relative width [`LUXEMBURG_TOL`]. The upper end is returned,
/// so the modular at the result never exceeds one.
pub fn luxemburg_norm<I: ConvexIntegrand + ?Sized>(m: &I, xi: &DiscreteField<'_>) -> Result<ModularReport> {
    check_dim(m, xi)?;
    let value = scaled_modular(m, xi, 1.0)?;
    if xi.is_zero() {
        return Ok(ModularReport {
            modular: value,
            norm: 0.0,
            iterations: 0,
        });
    }
    let over = |lambda: f64| -> Result<bool> {
        let v = scaled_modular(m, xi, 1.0 / lambda)?;
        Ok(!(v <= 1.0))
    };
    let mut iterations = 0;
    let start = xi.sup_norm().max(f64::MIN_POSITIVE);
    let (mut lo, mut hi);
    if over(start)? {
        lo = start;
        hi = 2.0 * start;
        while over(hi)? {
            iterations += 1;
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NonfiniteIntegrand { index: 0 });
            }
        }
    } else {
        hi = start;
        lo = 0.5 * start;
        while !over(lo)? {
            iterations += 1;
            hi = lo;
            lo *= 0.5;
            if lo == 0.0 {
                break;
            }
        }
    }
    while hi - lo > LUXEMBURG_TOL * hi {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if over(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ModularReport {
        modular: value,
        norm: hi,
        iterations,
    })
}

/// Outcome of the modular/norm comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub modular: f64,
    pub norm: f64,
    /// `norm − modular` when the norm is at most one, `modular − norm` otherwise.
    pub margin: f64,
    pub passed: bool,
}

/// Checks `‖ξ‖ ≤ 1 ⇒ ∫M(ξ) ≤ ‖ξ‖` and `‖ξ‖ > 1 ⇒ ∫M(ξ) ≥ ‖ξ‖`.
pub fn check_modular_norm_comparison<I: ConvexIntegrand + ?Sized>(
    m: &I,
    xi: &DiscreteField<'_>,
) -> Result<ComparisonReport> {
    let r = luxemburg_norm(m, xi)?;
    let margin = if r.norm <= 1.0 {
        r.norm - r.modular
    } else {
        r.modular - r.norm
    };
    // The norm is only known to a relative bisection width.
    let slack = 4.0 * LUXEMBURG_TOL * r.norm.max(r.modular).max(1.0);
    Ok(ComparisonReport {
        modular: r.modular,
        norm: r.norm,
        margin,
        passed: margin >= -slack,
    })
}

/// `∫_Ω M(x, (ξ − ζ)/λ) dx`.
pub fn modular_distance<I: ConvexIntegrand + ?Sized>(
    m: &I,
    xi: &DiscreteField<'_>,
    zeta: &DiscreteField<'_>,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(crate::error::invalid("lambda", "must be positive"));
    }
    check_dim(m, xi)?;
    let diff = xi.sub(zeta)?;
    scaled_modular(m, &diff, 1.0 / lambda)
}

/// Small-set integrals of a family of fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrabilityReport {
    /// Measure thresholds, ascending.
    pub deltas: Vec<f64>,
    /// Largest `∫_E |ξ_n|` over the family and sets `|E| < δ`.
    pub sup_integrals: Vec<f64>,
    /// Modular of each member.
    pub modulars: Vec<f64>,
}

impl IntegrabilityReport {
    pub fn sup_modular(&self) -> f64 {
        self.modulars.iter().cloned().fold(0.0, f64::max)
    }
}

fn largest_small_set_integral(xi: &DiscreteField<'_>, deltas: &[f64]) -> Vec<f64> {
    let quad = xi.quadrature();
    let mut atoms: Vec<(f64, f64)> = (0..quad.len()).map(|q| (norm(xi.value(q)), quad.weight(q))).collect();
    atoms.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let mut best = 0.0f64;
    deltas
        .iter()
        .map(|&delta| {
            let (mut measure, mut integral) = (0.0, 0.0);
            for &(density, w) in &atoms {
                if measure + w < delta {
                    measure += w;
                    integral += density * w;
                }
            }
            // Sets admissible for a smaller δ remain admissible.
            best = best.max(integral);
            best
        })
        .collect()
}

/// For each `δ`, the supremum over the family of the largest integral of
/// `|ξ_n|` over unions of quadrature atoms of total measure below `δ`. Atoms
/// are picked greedily by density.
pub fn uniform_integrability_probe<I: ConvexIntegrand + ?Sized>(
    m: &I,
    fields: &[DiscreteField<'_>],
    deltas: &[f64],
) -> Result<IntegrabilityReport> {
    if fields.is_empty() {
        return Err(crate::error::invalid("fields", "family must be nonempty"));
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut report = IntegrabilityReport {
        sup_integrals: vec![0.0; sorted.len()],
        deltas: sorted,
        modulars: Vec::with_capacity(fields.len()),
    };
    for xi in fields {
        report.modulars.push(modular(m, xi)?);
        for (s, v) in report
            .sup_integrals
            .iter_mut()
            .zip(largest_small_set_integral(xi, &report.deltas))
        {
            *s = s.max(v);
        }
    }
    Ok(report)
}

/// `T_k(s) = max(−k, min(k, s))`.
pub fn truncation(s: f64, k: f64) -> f64 {
    s.clamp(-k, k)
}

/// Truncates `u` at level `k` and zeroes `∇u` where `|u| > k`.
pub fn truncate<'q>(
    u: &DiscreteField<'q>,
    grad: &DiscreteField<'q>,
    k: f64,
) -> Result<(DiscreteField<'q>, DiscreteField<'q>)> {
    if !(k > 0.0) {
        return Err(crate::error::invalid("k", "must be positive"));
    }
    if u.components() != 1 || grad.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: grad.len(),
        });
    }
    let mut tu = u.clone();
    let mut tg = grad.clone();
    let d = grad.components();
    for (q, v) in tu.values_mut().iter_mut().enumerate() {
        if v.abs() > k {
            tg.values_mut()[q * d..(q + 1) * d].iter_mut().for_each(|g| *g = 0.0);
        }
        *v = truncation(*v, k);
    }
    Ok((tu, tg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_mesh, Domain, QuadratureRule};
    use crate::nfunction::{CoefficientField, NFunction};
    use proptest::prelude::*;

    fn quad_1d(n: usize) -> Quadrature {
        let mesh = build_mesh(Domain::unit_interval(), n).unwrap();
        Quadrature::on_mesh(&mesh, &QuadratureRule::gauss_legendre_3())
    }

    fn square(d: Domain) -> NFunction {
        NFunction::constant_power(d, 2.0, 1.0).unwrap()
    }

    #[test]
    fn modular_examples() {
        let q = quad_1d(4);
        let m = square(Domain::unit_interval());
        assert_eq!(modular(&m, &DiscreteField::zeros(&q, 1)).unwrap(), 0.0);
        let two = DiscreteField::from_fn(&q, 1, |_, o| o[0] = 2.0);
        assert!((modular(&m, &two).unwrap() - 4.0).abs() < 1e-13);

        let mesh = build_mesh(Domain::unit_square(), 3).unwrap();
        let q2 = Quadrature::on_mesh(&mesh, &QuadratureRule::triangle_7());
        let w = CoefficientField::distance_power(2, 0, 0.0, 1.0, 1.0);
        let dp = NFunction::double_phase(Domain::unit_square(), 2.0, 3.0, w, false).unwrap();
        let e1 = DiscreteField::from_fn(&q2, 2, |_, o| {
            o[0] = 1.0;
            o[1] = 0.0;
        });
        assert!((modular(&dp, &e1).unwrap() - 1.5).abs() < 1e-13);
    }

    #[test]
    fn dimension_is_checked() {
        let q = quad_1d(4);
        let m = square(Domain::unit_square());
        assert!(modular(&m, &DiscreteField::zeros(&q, 1)).is_err());
        assert!(DiscreteField::new(&q, 1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn luxemburg_examples() {
        let q = quad_1d(4);
        let m = square(Domain::unit_interval());
        for (c, expect) in [(2.0, 2.0), (0.5, 0.5), (0.0, 0.0)] {
            let f = DiscreteField::from_fn(&q, 1, |_, o| o[0] = c);
            let r = luxemburg_norm(&m, &f).unwrap();
            assert!((r.norm - expect).abs() <= 1e-9 * expect.max(1.0), "{c}: {}", r.norm);
            if expect > 0.0 {
                let at = modular(&m, &f.scaled(1.0 / r.norm)).unwrap();
                assert!((1.0 - 1e-9..=1.0).contains(&at));
            }
        }
    }

    #[test]
    fn comparison_examples() {
        let q = quad_1d(4);
        let m = square(Domain::unit_interval());
        let big = check_modular_norm_comparison(&m, &DiscreteField::from_fn(&q, 1, |_, o| o[0] = 2.0)).unwrap();
        assert!(big.passed && (big.modular - 4.0).abs() < 1e-12 && (big.margin - 2.0).abs() < 1e-8);
        let small = check_modular_norm_comparison(&m, &DiscreteField::from_fn(&q, 1, |_, o| o[0] = 0.5)).unwrap();
        assert!(small.passed && (small.margin - 0.25).abs() < 1e-8);
        let zero = check_modular_norm_comparison(&m, &DiscreteField::zeros(&q, 1)).unwrap();
        assert!(zero.passed && zero.norm == 0.0 && zero.modular == 0.0);
    }

    #[test]
    fn distance_examples() {
        let q = quad_1d(4);
        let m = square(Domain::unit_interval());
        let two = DiscreteField::from_fn(&q, 1, |_, o| o[0] = 2.0);
        let one = DiscreteField::from_fn(&q, 1, |_, o| o[0] = 1.0);
        assert_eq!(modular_distance(&m, &two, &two, 3.0).unwrap(), 0.0);
        assert!((modular_distance(&m, &two, &one, 1.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((modular_distance(&m, &two, &one, 2.0).unwrap() - 0.25).abs() < 1e-13);
        assert!(modular_distance(&m, &two, &one, 0.0).is_err());
    }

    #[test]
    fn integrability_examples() {
        let q = quad_1d(100);
        let m = square(Domain::unit_interval());
        let deltas = [0.01, 0.1, 0.5];
        let zero = uniform_integrability_probe(&m, &[DiscreteField::zeros(&q, 1)], &deltas).unwrap();
        assert!(zero.sup_integrals.iter().all(|v| *v == 0.0));

        let c = 3.0;
        let constant =
            uniform_integrability_probe(&m, &[DiscreteField::from_fn(&q, 1, |_, o| o[0] = c)], &deltas).unwrap();
        for (d, v) in constant.deltas.iter().zip(&constant.sup_integrals) {
            assert!(*v <= c * d && *v >= c * (d - 0.01), "{d}: {v}");
        }

        // ξ_n = n χ_(0, 1/n²): unit modular, small-set integrals of order √δ.
        let fine = quad_1d(1024);
        let family: Vec<_> = [2.0f64, 4.0, 8.0, 16.0]
            .iter()
            .map(|&n| DiscreteField::from_fn(&fine, 1, |x, o| o[0] = if x[0] < 1.0 / (n * n) { n } else { 0.0 }))
            .collect();
        let r = uniform_integrability_probe(&m, &family, &[0.001, 0.01, 0.1]).unwrap();
        for v in &r.modulars {
            assert!((v - 1.0).abs() < 1e-9);
        }
        assert!(r.sup_integrals[0] < r.sup_integrals[1] && r.sup_integrals[1] < r.sup_integrals[2]);
        assert!(r.sup_integrals[0] < 0.1);
        assert!(uniform_integrability_probe(&m, &[], &deltas).is_err());
    }

    #[test]
    fn truncation_examples() {
        let q = quad_1d(8);
        let five = DiscreteField::from_fn(&q, 1, |_, o| o[0] = 5.0);
        let g = DiscreteField::from_fn(&q, 1, |_, o| o[0] = 1.0);
        let (t, tg) = truncate(&five, &g, 3.0).unwrap();
        assert!(t.values().iter().all(|v| *v == 3.0) && tg.is_zero());

        let id = DiscreteField::from_fn(&q, 1, |x, o| o[0] = x[0]);
        let (t, tg) = truncate(&id, &g, 0.5).unwrap();
        for k in 0..q.len() {
            let x = q.point(k)[0];
            assert_eq!(t.value(k)[0], x.min(0.5));
            assert_eq!(tg.value(k)[0], if x > 0.5 { 0.0 } else { 1.0 });
        }
        let (t, tg) = truncate(&id, &g, 2.0).unwrap();
        assert_eq!(t.values(), id.values());
        assert_eq!(tg.values(), g.values());
        assert!(truncate(&id, &g, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn norm_is_homogeneous(c in -20.0f64..20.0, a in -3.0f64..3.0, b in -3.0f64..3.0, p in 1.2f64..4.0) {
            let q = quad_1d(6);
            let m = NFunction::constant_power(Domain::unit_interval(), p, 1.0).unwrap();
            let f = DiscreteField::from_fn(&q, 1, |x, o| o[0] = a + b * x[0]);
            let n1 = luxemburg_norm(&m, &f).unwrap().norm;
            let n2 = luxemburg_norm(&m, &f.scaled(c)).unwrap().norm;
            prop_assert!((n2 - c.abs() * n1).abs() <= 1e-8 * n2.max(1.0));
        }

        #[test]
        fn modular_grows_along_rays(t in 1.0f64..5.0, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let q = quad_1d(6);
            let m = NFunction::constant_power(Domain::unit_interval(), 2.5, 1.0).unwrap();
            let f = DiscreteField::from_fn(&q, 1, |x, o| o[0] = a + b * x[0]);
            prop_assert!(modular(&m, &f.scaled(t)).unwrap() >= modular(&m, &f).unwrap());
        }

        #[test]
        fn larger_lambda_shrinks_distance(l in 1.0f64..8.0, a in -3.0f64..3.0) {
            let q = quad_1d(6);
            let m = NFunction::constant_power(Domain::unit_interval(), 3.0, 1.0).unwrap();
            let f = DiscreteField::from_fn(&q, 1, |x, o| o[0] = a * x[0]);
            let z = DiscreteField::zeros(&q, 1);
            prop_assert!(modular_distance(&m, &f, &z, 2.0 * l).unwrap() <= modular_distance(&m, &f, &z, l).unwrap());
        }
    }
}
