use alloc::vec;

use super::{GalerkinSolution, GalerkinSystem};
use crate::math::{dot, norm};
use crate::modular::{luxemburg_norm, modular, DiscreteField};
use crate::nfunction::{ConjugateEvaluator, ConjugateSettings};
use crate::Result;

/// Uniform energy bounds of a Galerkin solution.
///
/// With `R = ∫M*(x, 4F/c₁) + ½‖h₁‖₁` testing the equation with `u_n` gives
/// `¼∫M(x,c₁∇u) + ½∫A·∇u + ∫b(x,u)u ≤ R`, hence
/// `∫A·∇u ≤ 2R`, `∫b(x,u)u ≤ R` and `‖∇u‖_M ≤ (4R + 1)/c₁`.
/// The discrete identity also carries `∫Φ(u)·∇u` and `s(α)·α`, which vanish
/// up to quadrature and solver tolerance; their magnitudes are added to `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `∫A(x,∇u)·∇u`.
    pub energy_a: f64,
    /// `‖∇u‖_{L_M}`.
    pub norm_lm: f64,
    /// `∫b(x,u)u`.
    pub energy_b: f64,
    /// `∫M*(x, 4F/c₁)`.
    pub source_modular: f64,
    /// `R` including the defect terms.
    pub bound: f64,
    pub phi_term: f64,
    pub pairing: f64,
}

impl EnergyReport {
    pub fn bound_a(&self) -> f64 {
        2.0 * self.bound
    }

    pub fn bound_b(&self) -> f64 {
        self.bound
    }

    pub fn bound_norm(&self, c1: f64) -> f64 {
        (4.0 * self.bound + 1.0) / c1
    }

    /// Smallest of the three relative margins `1 − value/bound`.
    pub fn margin(&self, c1: f64) -> f64 {
        let rel = |v: f64, b: f64| {
            if b > 0.0 {
                1.0 - v / b
            } else if v <= 0.0 {
                1.0
            } else {
                f64::NEG_INFINITY
            }
        };
        rel(self.energy_a, self.bound_a())
            .min(rel(self.energy_b, self.bound_b()))
            .min(rel(self.norm_lm, self.bound_norm(c1)))
    }

    pub fn passed(&self, c1: f64) -> bool {
        let tol = 1e-9;
        self.energy_a <= self.bound_a() * (1.0 + tol) + 1e-14
            && self.energy_b <= self.bound_b() * (1.0 + tol) + 1e-14
            && self.energy_b >= -1e-14
            && self.norm_lm <= self.bound_norm(c1) * (1.0 + tol)
    }
}

pub fn energy_diagnostics(
    sys: &GalerkinSystem<'_>,
    sol: &GalerkinSolution,
    conjugate: ConjugateSettings,
) -> Result<EnergyReport> {
    let basis = sys.basis();
    let data = sys.data();
    let quad = basis.quadrature();
    let m = data.nfunction();
    let k = data.a.constants();
    let d = basis.dim();
    let (u, grad) = basis.interpolate(&sol.alpha)?;
    let mut a = vec![0.0; d];
    let mut phi = vec![0.0; d];
    let (mut energy_a, mut energy_b, mut phi_term) = (0.0, 0.0, 0.0);
    for q in 0..quad.len() {
        let x = quad.point(q);
        let w = quad.weight(q);
        let g = grad.value(q);
        let uq = u.value(q)[0];
        data.a.eval(x, g, &mut a);
        data.phi.eval(uq, &mut phi);
        energy_a += w * dot(&a, g);
        phi_term += w * dot(&phi, g);
        energy_b += w * data.b.eval(x, uq) * uq;
    }
    let norm_lm = luxemburg_norm(m, &grad)?.norm;
    let conj = ConjugateEvaluator::new(m, conjugate);
    let scaled = DiscreteField::from_fn(quad, d, |x, out| {
        data.f.eval(x, out);
        out.iter_mut().for_each(|v| *v *= 4.0 / k.c1);
    });
    let source_modular = modular(&conj, &scaled)?;
    let s = sys.residual(&sol.alpha)?;
    let pairing = dot(&s, &sol.alpha);
    let h1 = k.h1 * m.domain().measure();
    let bound = source_modular + 0.5 * h1 + phi_term.abs() + pairing.abs();
    Ok(EnergyReport {
        energy_a,
        norm_lm,
        energy_b,
        source_modular,
        bound,
        phi_term,
        pairing,
    })
}

/// `‖A(·,∇u)‖_{L_{M*}}` against
/// `(2 max(c₁,c₄)/(c₁c₃)) [(1/c₂ + 1) + (c₁c₃/2 + 1) ∫(A·∇u + h₁ + h₂/c₂)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualBoundReport {
    pub norm: f64,
    pub bound: f64,
}

impl DualBoundReport {
    pub fn margin(&self) -> f64 {
        self.bound - self.norm
    }

    pub fn passed(&self) -> bool {
        self.norm <= self.bound * (1.0 + 1e-9)
    }
}

pub fn dual_bound_check(
    sys: &GalerkinSystem<'_>,
    sol: &GalerkinSolution,
    conjugate: ConjugateSettings,
) -> Result<DualBoundReport> {
    let basis = sys.basis();
    let data = sys.data();
    let quad = basis.quadrature();
    let m = data.nfunction();
    let k = data.a.constants();
    let d = basis.dim();
    let (_, grad) = basis.interpolate(&sol.alpha)?;
    let mut values = vec![0.0; quad.len() * d];
    let mut energy_a = 0.0;
    for q in 0..quad.len() {
        let out = &mut values[q * d..(q + 1) * d];
        data.a.eval(quad.point(q), grad.value(q), out);
        energy_a += quad.weight(q) * dot(out, grad.value(q));
    }
    let field = DiscreteField::new(quad, d, values)?;
    let conj = ConjugateEvaluator::new(m, conjugate);
    let norm = luxemburg_norm(&conj, &field)?.norm;
    let measure = m.domain().measure();
    let bracket = (1.0 / k.c2 + 1.0) + (k.c1 * k.c3 / 2.0 + 1.0) * (energy_a + k.h1 * measure + k.h2 * measure / k.c2);
    let bound = 2.0 * k.c1.max(k.c4) / (k.c1 * k.c3) * bracket;
    Ok(DualBoundReport { norm, bound })
}

/// `∫Φ(u)·∇u`, which vanishes for the exact integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiLemmaReport {
    pub integral: f64,
    /// `1e−8 · sup|Φ| · ‖∇u‖₁`.
    pub tolerance: f64,
}

impl PhiLemmaReport {
    pub fn passed(&self) -> bool {
        self.integral.abs() <= self.tolerance
    }
}

pub fn phi_lemma_check(sys: &GalerkinSystem<'_>, sol: &GalerkinSolution) -> Result<PhiLemmaReport> {
    let basis = sys.basis();
    let data = sys.data();
    let quad = basis.quadrature();
    let (u, grad) = basis.interpolate(&sol.alpha)?;
    let mut phi = vec![0.0; basis.dim()];
    let integral = quad.integrate(|q, _| {
        data.phi.eval(u.value(q)[0], &mut phi);
        dot(&phi, grad.value(q))
    });
    let tolerance = 1e-8 * data.phi.bound() * quad.integrate(|q, _| norm(grad.value(q)));
    Ok(PhiLemmaReport { integral, tolerance })
}

/// `∫(A(x,∇u¹) − A(x,∇u²))·∇(u¹ − u²)` for two coefficient vectors on the
/// same basis.
pub fn monotonicity_residual(sys: &GalerkinSystem<'_>, alpha1: &[f64], alpha2: &[f64]) -> Result<f64> {
    let basis = sys.basis();
    let data = sys.data();
    let quad = basis.quadrature();
    let d = basis.dim();
    let (_, g1) = basis.interpolate(alpha1)?;
    let (_, g2) = basis.interpolate(alpha2)?;
    let (mut a1, mut a2) = (vec![0.0; d], vec![0.0; d]);
    Ok(quad.integrate(|q, x| {
        data.a.eval(x, g1.value(q), &mut a1);
        data.a.eval(x, g2.value(q), &mut a2);
        (0..d)
            .map(|i| (a1[i] - a2[i]) * (g1.value(q)[i] - g2.value(q)[i]))
            .sum()
    }))
}
