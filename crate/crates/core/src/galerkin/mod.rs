//! Galerkin approximation of the Dirichlet problem on P1 hat spaces.
//!
//! [`GalerkinSystem::residual`] evaluates the map
//!
//! ```text
//! s_j(α) = ∫ A(x,∇u)·∇w_j + Φ(u)·∇w_j + b(x,u) w_j − F·∇w_j dx,   u = Σ α_k w_k,
//! ```
//!
//! whose zeros are the Galerkin solutions. [`GalerkinSystem::solve`] finds one
//! by damped Newton iteration with a finite-difference Jacobian. When Newton
//! stagnates the solver minimizes `|s(α)|²` by projected gradient descent in a
//! ball `|α| ≤ R` on whose sphere `s(α)·α ≥ 0` was observed, then retries Newton.

mod diagnostics;
mod study;
mod uniqueness;

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

pub use diagnostics::{
    dual_bound_check, energy_diagnostics, monotonicity_residual, phi_lemma_check, DualBoundReport, EnergyReport,
    PhiLemmaReport,
};
pub use study::{convergence_study, weak_form_residuals, LevelReport, StudyReport, StudySettings, TestPanel};
pub use uniqueness::{heaviside, uniqueness_probe, UniquenessLevel, UniquenessReport};

use crate::fem::BasisSet;
use crate::linalg::DenseMatrix;
use crate::math::{dot, norm, norm_inf, random_direction};
use crate::problem::ProblemData;
use crate::{Error, Result};

/// Initial guess of the nonlinear solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Zero,
    /// Solution of the Poisson-type problem `∫∇u·∇w_j = ∫F·∇w_j`.
    Linear,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Stop when `|s(α)|_∞` falls below this value.
    pub tolerance: f64,
    /// Relative central-difference step for the Jacobian.
    pub fd_step: f64,
    /// Smallest Newton damping factor tried before declaring stagnation.
    pub min_damping: f64,
    /// Gradient steps of the fallback per round.
    pub fallback_iterations: usize,
    /// Fallback rounds (each followed by a Newton retry).
    pub fallback_rounds: usize,
    /// Sphere directions sampled when growing the coercivity radius.
    pub sphere_samples: usize,
    /// Seed of the sphere sampling of the fallback.
    pub seed: u64,
    pub start: Start,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 60,
            tolerance: 1e-10,
            fd_step: 1e-6,
            min_damping: 1.0 / 4096.0,
            fallback_iterations: 400,
            fallback_rounds: 3,
            sphere_samples: 32,
            seed: 0x5eed,
            start: Start::Linear,
        }
    }
}

/// Basis, data and solver settings of one discretization level.
#[derive(Debug, Clone)]
pub struct GalerkinSystem<'a> {
    basis: &'a BasisSet,
    data: &'a ProblemData,
    settings: SolverSettings,
    /// `F` at the quadrature points.
    source: Vec<f64>,
}

/// A zero of the residual map, or the best point found.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinSolution {
    pub alpha: Vec<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
    pub converged: bool,
    pub used_fallback: bool,
    /// `|s(α)|_∞` after each iteration.
    pub history: Vec<f64>,
}

impl<'a> GalerkinSystem<'a> {
    pub fn new(basis: &'a BasisSet, data: &'a ProblemData, settings: SolverSettings) -> Result<Self> {
        let d = basis.dim();
        if data.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: data.dim(),
            });
        }
        if data.nfunction().domain() != basis.mesh().domain() {
            return Err(crate::error::invalid(
                "domain",
                "mesh and N-function live on different domains",
            ));
        }
        if !(settings.tolerance > 0.0) || !(settings.fd_step > 0.0) {
            return Err(crate::error::invalid(
                "solver",
                "tolerance and fd_step must be positive",
            ));
        }
        let quad = basis.quadrature();
        let mut source = vec![0.0; quad.len() * d];
        for q in 0..quad.len() {
            data.f.eval(quad.point(q), &mut source[q * d..(q + 1) * d]);
        }
        Ok(Self {
            basis,
            data,
            settings,
            source,
        })
    }

    pub fn basis(&self) -> &'a BasisSet {
        self.basis
    }

    pub fn data(&self) -> &'a ProblemData {
        self.data
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn source_at(&self, q: usize) -> &[f64] {
        let d = self.basis.dim();
        &self.source[q * d..(q + 1) * d]
    }

    /// Contributions of cell `c` to the residual entries of its vertices.
    fn cell_residual(&self, c: usize, alpha: &[f64], out: &mut [f64; 3]) -> Result<()> {
        let basis = self.basis;
        let quad = basis.quadrature();
        let d = basis.dim();
        let mut grad = [0.0; 2];
        let mut a = [0.0; 2];
        let mut phi = [0.0; 2];
        *out = [0.0; 3];
        let verts = basis.mesh().cell(c);
        for q in basis.cell_points(c) {
            let x = quad.point(q);
            let u = basis.value_at_point(alpha, q, &mut grad[..d]);
            self.data.a.eval(x, &grad[..d], &mut a[..d]);
            self.data.phi.eval(u, &mut phi[..d]);
            let b = self.data.b.eval(x, u);
            let f = self.source_at(q);
            let lam = quad.barycentric(q);
            let w = quad.weight(q);
            for (local, v) in verts.iter().enumerate() {
                if basis.dof_of(*v).is_none() {
                    continue;
                }
                let g = basis.local_gradient(c, local);
                let mut flux = 0.0;
                for i in 0..d {
                    flux += (a[i] + phi[i] - f[i]) * g[i];
                }
                let val = w * (flux + b * lam[local]);
                if !val.is_finite() {
                    return Err(Error::NonfiniteIntegrand { index: q });
                }
                out[local] += val;
            }
        }
        Ok(())
    }

    /// `s(α)`.
    pub fn residual(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        if alpha.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: alpha.len(),
            });
        }
        let mut s = vec![0.0; self.len()];
        let mut local = [0.0; 3];
        let mesh = self.basis.mesh();
        for c in 0..mesh.cell_count() {
            self.cell_residual(c, alpha, &mut local)?;
            for (l, v) in mesh.cell(c).iter().enumerate() {
                if let Some(k) = self.basis.dof_of(*v) {
                    s[k] += local[l];
                }
            }
        }
        Ok(s)
    }

    /// Central-difference Jacobian of `s`, assembled cell by cell.
    pub fn jacobian(&self, alpha: &[f64]) -> Result<DenseMatrix> {
        let n = self.len();
        let mut jac = DenseMatrix::zeros(n, n);
        let mut work = alpha.to_vec();
        let (mut plus, mut minus) = ([0.0; 3], [0.0; 3]);
        let mesh = self.basis.mesh();
        for k in 0..n {
            let h = self.settings.fd_step * (1.0 + alpha[k].abs());
            for &c in self.basis.support(k) {
                work[k] = alpha[k] + h;
                self.cell_residual(c, &work, &mut plus)?;
                work[k] = alpha[k] - h;
                self.cell_residual(c, &work, &mut minus)?;
                work[k] = alpha[k];
                for (l, v) in mesh.cell(c).iter().enumerate() {
                    if let Some(row) = self.basis.dof_of(*v) {
                        jac.add(row, k, (plus[l] - minus[l]) / (2.0 * h));
                    }
                }
            }
        }
        Ok(jac)
    }

    /// `∫F·∇w_j`.
    pub fn load_vector(&self) -> Vec<f64> {
        let basis = self.basis;
        let quad = basis.quadrature();
        let mesh = basis.mesh();
        let d = basis.dim();
        let mut f = vec![0.0; self.len()];
        for c in 0..mesh.cell_count() {
            for q in basis.cell_points(c) {
                let w = quad.weight(q);
                let src = self.source_at(q);
                for (l, v) in mesh.cell(c).iter().enumerate() {
                    if let Some(k) = basis.dof_of(*v) {
                        let g = basis.local_gradient(c, l);
                        f[k] += w * (0..d).map(|i| src[i] * g[i]).sum::<f64>();
                    }
                }
            }
        }
        f
    }

    fn initial_guess(&self) -> Result<Vec<f64>> {
        match &self.settings.start {
            Start::Zero => Ok(vec![0.0; self.len()]),
            Start::Given(a) if a.len() == self.len() => Ok(a.clone()),
            Start::Given(a) => Err(Error::DimensionMismatch {
                expected: self.len(),
                found: a.len(),
            }),
            Start::Linear => {
                if self.is_empty() {
                    return Ok(Vec::new());
                }
                self.basis.stiffness_matrix().solve(&self.load_vector())
            }
        }
    }

    /// Smallest radius `R ≥ r0` (doubling) with `s(α)·α ≥ 0` on all sampled
    /// directions of the sphere `|α| = R`.
    pub fn coercivity_radius<R: Rng + ?Sized>(&self, r0: f64, rng: &mut R) -> Result<f64> {
        let n = self.len();
        let mut dir = vec![0.0; n];
        let mut radius = r0.max(1.0);
        'grow: for _ in 0..60 {
            for j in 0..self.settings.sphere_samples.max(1) {
                if j < n.min(self.settings.sphere_samples / 2) {
                    dir.iter_mut().for_each(|v| *v = 0.0);
                    dir[j] = if j % 2 == 0 { 1.0 } else { -1.0 };
                } else {
                    random_direction(rng, &mut dir);
                }
                let alpha: Vec<f64> = dir.iter().map(|v| radius * v).collect();
                let s = self.residual(&alpha)?;
                if dot(&s, &alpha) < 0.0 {
                    radius *= 2.0;
                    continue 'grow;
                }
            }
            return Ok(radius);
        }
        Err(Error::ConstructionFailure("no coercivity radius found".into()))
    }

    /// Finds a zero of `s` starting from the configured initial guess.
    pub fn solve(&self) -> Result<GalerkinSolution> {
        let alpha = self.initial_guess()?;
        self.solve_from(alpha)
    }

    pub fn solve_from(&self, mut alpha: Vec<f64>) -> Result<GalerkinSolution> {
        let mut history = Vec::new();
        let mut iterations = 0;
        let mut used_fallback = false;
        let mut rng = <rand::rngs::SmallRng as rand::SeedableRng>::seed_from_u64(self.settings.seed);
        let mut s = self.residual(&alpha)?;
        history.push(norm_inf(&s));
        for round in 0..=self.settings.fallback_rounds {
            let (a, r, it) = self.newton(alpha, s, &mut history)?;
            alpha = a;
            s = r;
            iterations += it;
            if norm_inf(&s) <= self.settings.tolerance {
                return Ok(GalerkinSolution {
                    residual_inf: norm_inf(&s),
                    alpha,
                    iterations,
                    converged: true,
                    used_fallback,
                    history,
                });
            }
            if round == self.settings.fallback_rounds {
                break;
            }
            used_fallback = true;
            let radius = self.coercivity_radius(norm(&alpha), &mut rng)?;
            let (a, r, it) = self.descend(alpha, s, radius, &mut history)?;
            alpha = a;
            s = r;
            iterations += it;
        }
        Err(Error::NotConverged {
            best: alpha,
            residual: norm_inf(&s),
            iterations,
            history,
        })
    }

    /// Damped Newton; a Levenberg–Marquardt step replaces a rejected or
    /// singular Newton step. Returns on convergence or stagnation.
    fn newton(
        &self,
        mut alpha: Vec<f64>,
        mut s: Vec<f64>,
        history: &mut Vec<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let n = self.len();
        let mut iterations = 0;
        let mut mu = 0.0f64;
        while iterations < self.settings.max_iterations && norm_inf(&s) > self.settings.tolerance {
            iterations += 1;
            let jac = self.jacobian(&alpha)?;
            let rhs: Vec<f64> = s.iter().map(|v| -v).collect();
            let mut accepted = match jac.solve(&rhs) {
                Ok(step) => self.line_search(&alpha, &s, &step)?,
                Err(Error::SingularMatrix) => None,
                Err(e) => return Err(e),
            };
            if accepted.is_none() {
                // Normal equations (JᵀJ + μ D) δ = −Jᵀs.
                let g = jac.mul_transpose_vec(&s);
                let mut jtj = DenseMatrix::zeros(n, n);
                let mut scale = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        let v: f64 = (0..n).map(|k| jac.get(k, i) * jac.get(k, j)).sum();
                        jtj.set(i, j, v);
                    }
                    scale = scale.max(jtj.get(i, i));
                }
                mu = mu.max(1e-8);
                while mu < 1e12 {
                    let mut sys = jtj.clone();
                    for i in 0..n {
                        sys.add(i, i, mu * (jtj.get(i, i) + 1e-12 * scale + f64::MIN_POSITIVE));
                    }
                    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                    if let Ok(step) = sys.solve(&neg) {
                        if let Some(found) = self.armijo(&alpha, &s, &step, 1.0)? {
                            accepted = Some(found);
                            mu *= 0.1;
                            break;
                        }
                    }
                    mu *= 10.0;
                }
            } else {
                mu *= 0.1;
            }
            match accepted {
                Some((a, r)) => {
                    alpha = a;
                    s = r;
                    history.push(norm_inf(&s));
                }
                None => break,
            }
        }
        Ok((alpha, s, iterations))
    }

    fn line_search(&self, alpha: &[f64], s: &[f64], step: &[f64]) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        self.armijo(alpha, s, step, self.settings.min_damping)
    }

    /// Backtracks `t = 1, 1/2, …` down to `t_min` until `|s|₂` decreases
    /// sufficiently.
    fn armijo(&self, alpha: &[f64], s: &[f64], step: &[f64], t_min: f64) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let base = norm(s);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = alpha.iter().zip(step).map(|(a, d)| a + t * d).collect();
            match self.residual(&trial) {
                Ok(r) if norm(&r) <= (1.0 - 1e-4 * t) * base => return Ok(Some((trial, r))),
                Ok(_) | Err(Error::NonfiniteIntegrand { .. }) => {}
                Err(e) => return Err(e),
            }
            t *= 0.5;
            if t < t_min {
                return Ok(None);
            }
        }
    }

    /// Projected gradient descent on `½|s(α)|²` in the ball `|α| ≤ radius`.
    fn descend(
        &self,
        mut alpha: Vec<f64>,
        mut s: Vec<f64>,
        radius: f64,
        history: &mut Vec<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let mut step_len = 1.0;
        let mut iterations = 0;
        for _ in 0..self.settings.fallback_iterations {
            if norm_inf(&s) <= self.settings.tolerance {
                break;
            }
            iterations += 1;
            let g = self.jacobian(&alpha)?.mul_transpose_vec(&s);
            let gn = norm(&g);
            if gn == 0.0 {
                break;
            }
            let phi = 0.5 * dot(&s, &s);
            let mut moved = false;
            let mut t = step_len * 2.0;
            while t > 1e-16 {
                let mut trial: Vec<f64> = alpha.iter().zip(&g).map(|(a, d)| a - t * d / gn).collect();
                let r = norm(&trial);
                if r > radius {
                    trial.iter_mut().for_each(|v| *v *= radius / r);
                }
                if let Ok(rs) = self.residual(&trial) {
                    if 0.5 * dot(&rs, &rs) <= phi - 1e-4 * t * gn {
                        alpha = trial;
                        s = rs;
                        step_len = t;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            history.push(norm_inf(&s));
            if !moved {
                break;
            }
        }
        Ok((alpha, s, iterations))
    }
}

/// Solves one system; convenience wrapper around [`GalerkinSystem::solve`].
pub fn solve_galerkin(system: &GalerkinSystem<'_>) -> Result<GalerkinSolution> {
    system.solve()
}

#[cfg(test)]
mod tests;
