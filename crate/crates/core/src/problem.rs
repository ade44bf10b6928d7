//! Data `(A, Φ, b, F)` of the Dirichlet problem and sampled checks of the
//! structural assumptions.
//!
//! The operator `A` is built from the N-function: either `A = ∇_ξ M_ε`
//! ([`canonical_operator`]) or the p-Laplacian `|ξ|^{p-2}ξ`. The constants of
//! the coercivity and growth conditions are fitted by sampling.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::invalid;
use crate::fem::{build_mesh, Quadrature, QuadratureRule};
use crate::math::{atan, cos, dot, log_uniform, norm, powf, random_direction, sin, sqrt};
use crate::modular::{modular, DiscreteField};
use crate::nfunction::{central_gradient, CoefficientField, ConjugateEvaluator, ConjugateSettings, NFunction};
use crate::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-8;

/// Candidate values for the structure constants, largest first.
pub const CONSTANT_GRID: [f64; 6] = [
    2.0,
    core::f64::consts::SQRT_2,
    1.0,
    core::f64::consts::FRAC_1_SQRT_2,
    0.5,
    0.25,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// `A = ∇_ξ M_ε`.
    Canonical { eps: f64 },
    /// `A = (|ξ|² + ε²)^{(p-2)/2} ξ`.
    PLaplacian { p: f64, eps: f64 },
}

/// Constants of
/// `A·ξ ≥ M(x, c₁ξ) − h₁` and `c₂ M*(x, c₃A) ≤ M(x, c₄ξ) + h₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub h1: f64,
    pub h2: f64,
}

impl Default for StructureConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 2.0,
            h1: 0.0,
            h2: 0.0,
        }
    }
}

/// The principal part `A(x, ξ)` together with its N-function and constants.
#[derive(Debug, Clone)]
pub struct VectorFieldA {
    m: Arc<NFunction>,
    kind: OperatorKind,
    constants: StructureConstants,
}

impl VectorFieldA {
    /// Uses the given constants as they are.
    pub fn with_constants(m: Arc<NFunction>, kind: OperatorKind, constants: StructureConstants) -> Result<Self> {
        match kind {
            OperatorKind::Canonical { eps } | OperatorKind::PLaplacian { eps, .. } if !(eps >= 0.0) => {
                return Err(invalid("eps", "must be nonnegative"));
            }
            OperatorKind::PLaplacian { p, .. } if !(p > 1.0 && p.is_finite()) => {
                return Err(invalid("p", format!("p-Laplacian needs 1 < p < inf, got {p}")));
            }
            _ => {}
        }
        let c = constants;
        if [c.c1, c.c2, c.c3, c.c4].iter().any(|v| !(*v > 0.0)) || !(c.h1 >= 0.0) || !(c.h2 >= 0.0) {
            return Err(invalid("constants", "c1..c4 must be positive and h1, h2 nonnegative"));
        }
        Ok(Self { m, kind, constants })
    }

    /// Builds the operator and fits its constants on samples.
    pub fn fitted<R: Rng + ?Sized>(
        m: Arc<NFunction>,
        kind: OperatorKind,
        settings: &FitSettings,
        rng: &mut R,
    ) -> Result<Self> {
        let mut a = Self::with_constants(m, kind, StructureConstants::default())?;
        a.constants = fit_constants(&a, settings, rng)?;
        Ok(a)
    }

    pub fn p_laplacian<R: Rng + ?Sized>(
        m: Arc<NFunction>,
        p: f64,
        eps: f64,
        settings: &FitSettings,
        rng: &mut R,
    ) -> Result<Self> {
        Self::fitted(m, OperatorKind::PLaplacian { p, eps }, settings, rng)
    }

    pub fn nfunction(&self) -> &NFunction {
        &self.m
    }

    pub fn nfunction_arc(&self) -> &Arc<NFunction> {
        &self.m
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn constants(&self) -> &StructureConstants {
        &self.constants
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// `A(x, ξ)` written into `out`.
    pub fn eval(&self, x: &[f64], xi: &[f64], out: &mut [f64]) {
        match self.kind {
            OperatorKind::Canonical { eps } => self.m.smoothed_gradient(x, xi, eps, out),
            OperatorKind::PLaplacian { p, eps } => {
                let r2 = dot(xi, xi) + eps * eps;
                let s = if r2 == 0.0 { 0.0 } else { powf(r2, 0.5 * (p - 2.0)) };
                for (o, v) in out.iter_mut().zip(xi) {
                    *o = s * v;
                }
            }
        }
    }

    /// The potential whose gradient is `A`, when it is known in closed form.
    pub fn potential(&self, x: &[f64], xi: &[f64]) -> f64 {
        match self.kind {
            OperatorKind::Canonical { eps } => self.m.smoothed_value(x, xi, eps),
            OperatorKind::PLaplacian { p, eps } => {
                (powf(dot(xi, xi) + eps * eps, 0.5 * p) - powf(eps * eps, 0.5 * p)) / p
            }
        }
    }
}

/// `A = ∇_ξ M_ε` with fitted constants.
///
/// This is one convenient operator satisfying the structural conditions for a
/// given `M`; nothing singles it out among admissible choices.
pub fn canonical_operator<R: Rng + ?Sized>(
    m: Arc<NFunction>,
    eps: f64,
    settings: &FitSettings,
    rng: &mut R,
) -> Result<VectorFieldA> {
    VectorFieldA::fitted(m, OperatorKind::Canonical { eps }, settings, rng)
}

/// Sampling parameters for fitting and validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSettings {
    pub samples: usize,
    /// Range of `|ξ|`, sampled log-uniformly.
    pub xi_range: (f64, f64),
    /// Largest fitted `h₁`, `h₂` accepted.
    pub slack: f64,
    pub conjugate: ConjugateSettings,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            samples: 200,
            xi_range: (1e-2, 1e2),
            slack: 1e-6,
            conjugate: ConjugateSettings::default(),
        }
    }
}

fn sample_point<R: Rng + ?Sized>(m: &NFunction, rng: &mut R, x: &mut [f64]) {
    let mut u = [0.0; 2];
    for v in u.iter_mut().take(x.len()) {
        *v = rng.gen();
    }
    m.domain().from_unit(&u[..x.len()], x);
}

fn sample_xi<R: Rng + ?Sized>(rng: &mut R, range: (f64, f64), xi: &mut [f64]) {
    random_direction(rng, xi);
    let r = log_uniform(rng, range.0, range.1);
    xi.iter_mut().for_each(|v| *v *= r);
}

fn scaled(c: f64, v: &[f64]) -> Vec<f64> {
    v.iter().map(|t| c * t).collect()
}

fn fit_constants<R: Rng + ?Sized>(a: &VectorFieldA, settings: &FitSettings, rng: &mut R) -> Result<StructureConstants> {
    let m = a.nfunction();
    let d = m.dim();
    let conj = ConjugateEvaluator::new(m, settings.conjugate);
    let grid = CONSTANT_GRID;
    // Per sample: A·ξ, M(x, cξ) and M*(x, cA) for every grid value c.
    let mut dots = Vec::with_capacity(settings.samples);
    let mut m_at = Vec::with_capacity(settings.samples);
    let mut conj_at = Vec::with_capacity(settings.samples);
    let (mut x, mut xi, mut av) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for _ in 0..settings.samples {
        sample_point(m, rng, &mut x);
        sample_xi(rng, settings.xi_range, &mut xi);
        a.eval(&x, &xi, &mut av);
        dots.push(dot(&av, &xi));
        m_at.push(grid.map(|c| m.value(&x, &scaled(c, &xi))));
        let mut row = [0.0; 6];
        for (k, c) in grid.iter().enumerate() {
            row[k] = conj.eval(&x, &scaled(*c, &av))?;
        }
        conj_at.push(row);
    }
    let rounding = |v: f64| 1e-12 * v.abs();

    let mut coercive = None;
    for (k, c1) in grid.iter().enumerate() {
        let h1 = (0..dots.len())
            .map(|i| (m_at[i][k] - dots[i] - rounding(dots[i])).max(0.0))
            .fold(0.0, f64::max);
        if h1 <= settings.slack {
            coercive = Some((*c1, h1));
            break;
        }
    }
    let (c1, h1) = coercive.ok_or_else(|| Error::ConstructionFailure("no coercivity constant on the grid".into()))?;

    for (k3, c3) in grid.iter().enumerate() {
        for c2 in grid.iter() {
            for (k4, c4) in grid.iter().enumerate().rev() {
                let h2 = (0..dots.len())
                    .map(|i| (c2 * conj_at[i][k3] - m_at[i][k4] - rounding(m_at[i][k4])).max(0.0))
                    .fold(0.0, f64::max);
                if h2 <= settings.slack {
                    return Ok(StructureConstants {
                        c1,
                        c2: *c2,
                        c3: *c3,
                        c4: *c4,
                        h1,
                        h2,
                    });
                }
            }
        }
    }
    Err(Error::ConstructionFailure(
        "growth condition not certified for any constants on the grid".into(),
    ))
}

/// One component of the convection term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiComponent {
    Zero,
    Sin(f64),
    Cos(f64),
    Arctan(f64),
}

impl PhiComponent {
    fn eval(&self, s: f64) -> f64 {
        match *self {
            PhiComponent::Zero => 0.0,
            PhiComponent::Sin(c) => c * sin(s),
            PhiComponent::Cos(c) => c * cos(s),
            PhiComponent::Arctan(c) => c * atan(s),
        }
    }

    fn sup(&self) -> f64 {
        match *self {
            PhiComponent::Zero => 0.0,
            PhiComponent::Sin(c) | PhiComponent::Cos(c) => c.abs(),
            PhiComponent::Arctan(c) => c.abs() * core::f64::consts::FRAC_PI_2,
        }
    }

    fn lipschitz(&self) -> f64 {
        match *self {
            PhiComponent::Zero => 0.0,
            PhiComponent::Sin(c) | PhiComponent::Cos(c) | PhiComponent::Arctan(c) => c.abs(),
        }
    }
}

/// Bounded continuous `Φ: ℝ → ℝᵈ`, given componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvectionPhi {
    components: Vec<PhiComponent>,
    bound: f64,
    lipschitz: Option<f64>,
}

impl ConvectionPhi {
    pub fn new(components: Vec<PhiComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("phi", "needs at least one component"));
        }
        if components.iter().any(|c| !c.sup().is_finite()) {
            return Err(invalid("phi", "coefficients must be finite"));
        }
        let bound = sqrt(components.iter().map(|c| c.sup() * c.sup()).sum());
        let lipschitz = Some(sqrt(components.iter().map(|c| c.lipschitz() * c.lipschitz()).sum()));
        Ok(Self {
            components,
            bound,
            lipschitz,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            components: vec![PhiComponent::Zero; dim],
            bound: 0.0,
            lipschitz: Some(0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[PhiComponent] {
        &self.components
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| *c == PhiComponent::Zero)
    }

    pub fn eval(&self, s: f64, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(s);
        }
    }
}

/// Shape of the lower-order term in `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BKernel {
    Zero,
    Linear,
    Cubic,
    Arctan,
    /// `negative·s` for `s < 0`, `positive·s` for `s ≥ 0`.
    Piecewise {
        negative: f64,
        positive: f64,
    },
}

impl BKernel {
    fn eval(&self, s: f64) -> f64 {
        match *self {
            BKernel::Zero => 0.0,
            BKernel::Linear => s,
            BKernel::Cubic => s * s * s,
            BKernel::Arctan => atan(s),
            BKernel::Piecewise { negative, positive } => {
                if s < 0.0 {
                    negative * s
                } else {
                    positive * s
                }
            }
        }
    }

    fn strictly_increasing(&self) -> bool {
        match *self {
            BKernel::Zero => false,
            BKernel::Linear | BKernel::Cubic | BKernel::Arctan => true,
            BKernel::Piecewise { negative, positive } => negative > 0.0 && positive > 0.0,
        }
    }
}

/// `b(x, s) = scale · w(x) · k(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerOrderB {
    kernel: BKernel,
    scale: f64,
    weight: CoefficientField,
    strictly_increasing: bool,
}

impl LowerOrderB {
    pub fn new(kernel: BKernel, scale: f64, weight: CoefficientField, domain: &crate::fem::Domain) -> Result<Self> {
        if !scale.is_finite() || !weight.coef.is_finite() {
            return Err(invalid("b", "scale and weight must be finite"));
        }
        let strictly_increasing = kernel.strictly_increasing() && scale > 0.0 && weight.min_on(domain) > 0.0;
        Ok(Self {
            kernel,
            scale,
            weight,
            strictly_increasing,
        })
    }

    pub fn zero() -> Self {
        Self {
            kernel: BKernel::Zero,
            scale: 0.0,
            weight: CoefficientField::constant(0.0),
            strictly_increasing: false,
        }
    }

    /// `b(x, s) = scale · k(s)` with unit weight.
    pub fn simple(kernel: BKernel, scale: f64) -> Self {
        Self {
            kernel,
            scale,
            weight: CoefficientField::constant(1.0),
            strictly_increasing: kernel.strictly_increasing() && scale > 0.0,
        }
    }

    pub fn kernel(&self) -> BKernel {
        self.kernel
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.strictly_increasing
    }

    pub fn is_zero(&self) -> bool {
        self.kernel == BKernel::Zero || self.scale == 0.0
    }

    pub fn eval(&self, x: &[f64], s: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.scale * self.weight.eval(x) * self.kernel.eval(s)
    }
}

type SourceFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Right-hand side `F: Ω → ℝᵈ`, tested as `∫ F·∇v`.
#[derive(Clone)]
pub struct SourceF {
    dim: usize,
    scale: f64,
    f: Option<Arc<SourceFn>>,
}

impl core::fmt::Debug for SourceF {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SourceF")
            .field("dim", &self.dim)
            .field("scale", &self.scale)
            .field("zero", &self.f.is_none())
            .finish()
    }
}

impl SourceF {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dim,
            scale: 1.0,
            f: Some(Arc::new(f)),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            scale: 1.0,
            f: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_none() || self.scale == 0.0
    }

    /// `c · F`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            scale: self.scale * c,
            f: self.f.clone(),
        }
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match &self.f {
            None => out.iter_mut().for_each(|o| *o = 0.0),
            Some(f) => {
                f(x, out);
                if self.scale != 1.0 {
                    out.iter_mut().for_each(|o| *o *= self.scale);
                }
            }
        }
    }
}

/// The full data set of the problem.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub a: VectorFieldA,
    pub phi: ConvectionPhi,
    pub b: LowerOrderB,
    pub f: SourceF,
}

impl ProblemData {
    pub fn new(a: VectorFieldA, phi: ConvectionPhi, b: LowerOrderB, f: SourceF) -> Result<Self> {
        let d = a.dim();
        for found in [phi.dim(), f.dim()] {
            if found != d {
                return Err(Error::DimensionMismatch { expected: d, found });
            }
        }
        Ok(Self { a, phi, b, f })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn nfunction(&self) -> &NFunction {
        self.a.nfunction()
    }

    /// Same data with `F` replaced by `c·F`.
    pub fn with_scaled_source(&self, c: f64) -> Self {
        Self {
            f: self.f.scaled(c),
            ..self.clone()
        }
    }
}

/// Result of one sampled condition.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureCheck {
    pub name: &'static str,
    pub samples: usize,
    /// Smallest observed margin; negative values beyond the tolerance fail.
    pub worst_margin: f64,
    /// First violating sample.
    pub witness: Option<String>,
}

impl StructureCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            samples: 0,
            worst_margin: f64::INFINITY,
            witness: None,
        }
    }

    /// Records a sample with margin `margin` that fails below `-tol`.
    fn record(&mut self, margin: f64, tol: f64, witness: impl FnOnce() -> String) {
        self.samples += 1;
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        self.worst_margin = self.worst_margin.min(margin);
        if margin < -tol && self.witness.is_none() {
            self.witness = Some(witness());
        }
    }

    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StructureReport {
    pub checks: Vec<StructureCheck>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(StructureCheck::passed)
    }

    pub fn check(&self, name: &str) -> Option<&StructureCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &StructureCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Scalar samples used for `Φ` and `b`, fixed values first.
fn scalar_samples<R: Rng + ?Sized>(rng: &mut R, budget: usize) -> Vec<f64> {
    let mut s = vec![1.0, -1.0, 10.0, -10.0, 0.1, -0.1, 0.0];
    while s.len() < budget.max(7) {
        let r = log_uniform(rng, 1e-3, 1e2);
        s.push(if rng.gen::<bool>() { r } else { -r });
    }
    s
}

/// Samples the structural conditions on A, Φ, b and the source.
pub fn validate_structure<R: Rng + ?Sized>(
    data: &ProblemData,
    settings: &FitSettings,
    rng: &mut R,
) -> Result<StructureReport> {
    let a = &data.a;
    let m = a.nfunction();
    let d = m.dim();
    let k = a.constants();
    let conj = ConjugateEvaluator::new(m, settings.conjugate);
    let budget = settings.samples;

    let mut zero = StructureCheck::new("A(x,0)=0");
    let mut coercive = StructureCheck::new("coercivity");
    let mut growth = StructureCheck::new("growth");
    let mut monotone = StructureCheck::new("monotonicity");
    let (mut x, mut xi, mut eta) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let (mut ax, mut ae) = (vec![0.0; d], vec![0.0; d]);
    let origin = vec![0.0; d];
    for _ in 0..budget {
        sample_point(m, rng, &mut x);
        sample_xi(rng, settings.xi_range, &mut xi);
        sample_xi(rng, settings.xi_range, &mut eta);

        a.eval(&x, &origin, &mut ax);
        zero.record(-norm(&ax), 0.0, || format!("x={x:?}, |A(x,0)|={:e}", norm(&ax)));

        a.eval(&x, &xi, &mut ax);
        let axi = dot(&ax, &xi);
        let lhs = m.value(&x, &scaled(k.c1, &xi));
        coercive.record(axi - lhs + k.h1, 1e-12 * axi.abs(), || {
            format!("x={x:?}, ξ={xi:?}: A·ξ={axi:e} < M(x,c₁ξ)−h₁={:e}", lhs - k.h1)
        });

        let mstar = k.c2 * conj.eval(&x, &scaled(k.c3, &ax))?;
        let rhs = m.value(&x, &scaled(k.c4, &xi)) + k.h2;
        growth.record(rhs - mstar, 1e-12 * rhs.abs(), || {
            format!("x={x:?}, ξ={xi:?}: c₂M*(x,c₃A)={mstar:e} > M(x,c₄ξ)+h₂={rhs:e}")
        });

        a.eval(&x, &eta, &mut ae);
        let diff: f64 = (0..d).map(|i| (ax[i] - ae[i]) * (xi[i] - eta[i])).sum();
        let scale = norm(&ax) * norm(&xi) + norm(&ae) * norm(&eta);
        monotone.record(diff, 1e-12 * scale, || {
            format!("x={x:?}, ξ={xi:?}, η={eta:?}: (A(ξ)−A(η))·(ξ−η)={diff:e}")
        });
    }

    let scalars = scalar_samples(rng, budget);
    let mut bound = StructureCheck::new("Φ bounded");
    let mut lipschitz = StructureCheck::new("Φ Lipschitz");
    let (mut p1, mut p2) = (vec![0.0; d], vec![0.0; d]);
    for w in scalars.windows(2) {
        let (s, t) = (w[0], w[1]);
        data.phi.eval(s, &mut p1);
        data.phi.eval(t, &mut p2);
        let n = norm(&p1);
        bound.record(data.phi.bound() - n, 1e-12 * data.phi.bound(), || {
            format!("s={s}: |Φ(s)|={n:e} > {:e}", data.phi.bound())
        });
        if let Some(l) = data.phi.lipschitz() {
            let diff = sqrt(p1.iter().zip(&p2).map(|(a, b)| (a - b) * (a - b)).sum());
            let allowed = l * (s - t).abs();
            lipschitz.record(allowed - diff, 1e-12 * allowed + 1e-15, || {
                format!("s={s}, t={t}: |Φ(s)−Φ(t)|={diff:e} > L|s−t|={allowed:e}")
            });
        }
    }

    let mut b_monotone = StructureCheck::new("b nondecreasing");
    let mut b_sign = StructureCheck::new("b sign condition");
    for (i, &s) in scalars.iter().enumerate() {
        sample_point(m, rng, &mut x);
        let bs = data.b.eval(&x, s);
        let sign = if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            0.0
        };
        b_sign.record(bs * sign, 0.0, || format!("x={x:?}, s={s}: b(x,s)={bs:e}"));
        let t = scalars[(i + 1) % scalars.len()];
        let u = scalars[(i + 2) % scalars.len()];
        let mut triple = [s, t, u];
        triple.sort_by(f64::total_cmp);
        let vals = triple.map(|v| data.b.eval(&x, v));
        let margin = (vals[1] - vals[0]).min(vals[2] - vals[1]);
        b_monotone.record(margin, 1e-12 * vals[2].abs().max(vals[0].abs()), || {
            format!("x={x:?}, s={triple:?}: b={vals:?}")
        });
    }

    let mesh = build_mesh(*m.domain(), 8)?;
    let quad = Quadrature::on_mesh(&mesh, &QuadratureRule::for_dim(d));
    let mut b_int = StructureCheck::new("b(·,s) integrable");
    for s in [1.0, -1.0, 10.0, -10.0] {
        let v = quad.integrate(|_, x| data.b.eval(x, s).abs());
        b_int.record(if v.is_finite() { 0.0 } else { f64::NEG_INFINITY }, 0.0, || {
            format!("∫|b(x,{s})| is not finite")
        });
    }

    let mut source = StructureCheck::new("F in E_M* (λ ∈ {1,10,100})");
    let field = DiscreteField::from_fn(&quad, d, |x, out| data.f.eval(x, out));
    for lambda in [1.0, 10.0, 100.0] {
        let v = modular(&conj, &field.scaled(lambda));
        let ok = matches!(v, Ok(v) if v.is_finite());
        source.record(if ok { 0.0 } else { f64::NEG_INFINITY }, 0.0, || {
            format!("∫M*(x,{lambda}F) not finite: {v:?}")
        });
    }

    Ok(StructureReport {
        checks: vec![
            zero, coercive, growth, monotone, bound, lipschitz, b_monotone, b_sign, b_int, source,
        ],
    })
}

/// Compares `A` with central differences of its potential at random
/// `(x, ξ)` with `|ξ| ∈ [0.1, 10]`; returns the largest relative deviation.
pub fn gradient_consistency<R: Rng + ?Sized>(a: &VectorFieldA, samples: usize, rng: &mut R) -> f64 {
    let m = a.nfunction();
    let d = m.dim();
    let (mut x, mut xi, mut av, mut fd) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        sample_point(m, rng, &mut x);
        sample_xi(rng, (0.1, 10.0), &mut xi);
        a.eval(&x, &xi, &mut av);
        central_gradient(|z| a.potential(&x, z), &xi, &mut fd);
        let err = norm(&av.iter().zip(&fd).map(|(p, q)| p - q).collect::<Vec<_>>());
        worst = worst.max(err / norm(&av).max(1e-300));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Domain;
    use crate::nfunction::ExponentField;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn quick() -> FitSettings {
        FitSettings {
            samples: 60,
            ..Default::default()
        }
    }

    fn zero_data(a: VectorFieldA) -> ProblemData {
        let d = a.dim();
        ProblemData::new(a, ConvectionPhi::zero(d), LowerOrderB::zero(), SourceF::zero(d)).unwrap()
    }

    #[test]
    fn p_laplacian_two_fits_sqrt_two() {
        let m = Arc::new(NFunction::constant_power(Domain::unit_interval(), 2.0, 0.5).unwrap());
        let a = VectorFieldA::p_laplacian(m, 2.0, 0.0, &quick(), &mut rng()).unwrap();
        let mut out = [0.0];
        a.eval(&[0.3], &[1.7], &mut out);
        assert_eq!(out[0], 1.7);
        assert_eq!(a.constants().c1, core::f64::consts::SQRT_2);
        assert!(a.constants().h1 <= 1e-6);
        let report = validate_structure(&zero_data(a), &quick(), &mut rng()).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn canonical_examples() {
        let dom = Domain::unit_square();
        let half = Arc::new(NFunction::constant_power(dom, 2.0, 0.5).unwrap());
        let a = canonical_operator(half, 0.0, &quick(), &mut rng()).unwrap();
        let mut out = [0.0; 2];
        a.eval(&[0.2, 0.2], &[0.3, -1.1], &mut out);
        assert!((out[0] - 0.3).abs() < 1e-15 && (out[1] + 1.1).abs() < 1e-15);

        let cubic = Arc::new(NFunction::constant_power(dom, 3.0, 1.0 / 3.0).unwrap());
        let a = canonical_operator(cubic, 0.0, &quick(), &mut rng()).unwrap();
        let xi = [0.6, -0.8];
        a.eval(&[0.5, 0.5], &xi, &mut out);
        assert!((out[0] - 0.6).abs() < 1e-14 && (out[1] + 0.8).abs() < 1e-14);

        let w = CoefficientField::distance_power(2, 0, 0.0, 1.0, 1.0);
        let dp = Arc::new(NFunction::double_phase(dom, 2.0, 3.0, w, true).unwrap());
        let a = canonical_operator(dp, 0.0, &quick(), &mut rng()).unwrap();
        let (x, xi) = ([0.4, 0.1], [2.0, 1.0]);
        a.eval(&x, &xi, &mut out);
        let r = norm(&xi);
        for i in 0..2 {
            assert!((out[i] - (xi[i] + 0.4 * r * xi[i])).abs() < 1e-13);
        }
    }

    #[test]
    fn every_family_yields_a_valid_operator() {
        let dom = Domain::unit_square();
        let mut e = ExponentField::constant(2.0);
        e.gradient = vec![0.5, 0.0];
        let family = [
            NFunction::constant_power(dom, 1.5, 1.0).unwrap(),
            NFunction::variable_exponent(dom, e.clone(), 1.0).unwrap(),
            NFunction::anisotropic_variable(dom, vec![e, ExponentField::constant(3.0)]).unwrap(),
        ];
        for m in family {
            let a = canonical_operator(Arc::new(m), DEFAULT_EPS, &quick(), &mut rng()).unwrap();
            let report = validate_structure(&zero_data(a.clone()), &quick(), &mut rng()).unwrap();
            assert!(report.passed(), "{report:?}");
            assert!(gradient_consistency(&a, 50, &mut rng()) < 1e-6);
        }
    }

    #[test]
    fn negated_b_is_rejected_at_one() {
        let m = Arc::new(NFunction::constant_power(Domain::unit_interval(), 2.0, 0.5).unwrap());
        let a = canonical_operator(m, 0.0, &quick(), &mut rng()).unwrap();
        let mut data = zero_data(a);
        data.b = LowerOrderB::simple(BKernel::Linear, -1.0);
        let report = validate_structure(&data, &quick(), &mut rng()).unwrap();
        assert!(!report.passed());
        let sign = report.check("b sign condition").unwrap();
        assert!(sign.witness.as_ref().unwrap().contains("s=1:"));
        assert!(report.failures().all(|c| c.name.starts_with("b ")));
        assert!(report.check("coercivity").unwrap().passed());
    }

    #[test]
    fn catalog_phi_and_b() {
        let phi = ConvectionPhi::new(vec![PhiComponent::Sin(0.1), PhiComponent::Cos(0.1)]).unwrap();
        assert!((phi.bound() - 0.1 * core::f64::consts::SQRT_2).abs() < 1e-15);
        let mut out = [0.0; 2];
        phi.eval(0.0, &mut out);
        assert_eq!(out, [0.0, 0.1]);
        let b = LowerOrderB::new(
            BKernel::Arctan,
            1.0,
            CoefficientField::constant(1.0),
            &Domain::unit_square(),
        )
        .unwrap();
        assert!(b.is_strictly_increasing());
        let w = CoefficientField::distance_power(2, 0, 0.0, 1.0, 1.0);
        let b = LowerOrderB::new(BKernel::Linear, 1.0, w, &Domain::unit_square()).unwrap();
        assert!(!b.is_strictly_increasing());
        assert!(!LowerOrderB::simple(
            BKernel::Piecewise {
                negative: 0.0,
                positive: 1.0
            },
            1.0
        )
        .is_strictly_increasing());
    }

    #[test]
    fn source_scaling() {
        let f = SourceF::new(1, |x, o| o[0] = x[0]);
        let mut o = [0.0];
        f.scaled(2.0).eval(&[0.25], &mut o);
        assert_eq!(o[0], 0.5);
        SourceF::zero(1).eval(&[0.25], &mut o);
        assert_eq!(o[0], 0.0);
    }
}
