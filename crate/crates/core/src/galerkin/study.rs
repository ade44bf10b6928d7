use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{
    dual_bound_check, energy_diagnostics, phi_lemma_check, DualBoundReport, EnergyReport, GalerkinSystem,
    PhiLemmaReport, SolverSettings,
};
use crate::fem::{build_mesh, BasisSet, Domain, Quadrature};
use crate::math::{cos, loglog_slope, sin, sqrt};
use crate::modular::{modular_distance, truncate};
use crate::nfunction::ConjugateSettings;
use crate::problem::ProblemData;
use crate::Result;

/// Tensor-product sine modes `v(x) = Π sin(m_k π (x_k − a_k)/(b_k − a_k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPanel {
    pub modes: Vec<[usize; 2]>,
}

impl TestPanel {
    /// Modes 1..5 in 1D, the 3×3 tensor modes in 2D.
    pub fn standard(dim: usize) -> Self {
        let modes = if dim == 1 {
            (1..=5).map(|k| [k, 0]).collect()
        } else {
            (1..=3).flat_map(|i| (1..=3).map(move |j| [i, j])).collect()
        };
        Self { modes }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `v(x)` and `∇v(x)` of mode `k`.
    pub fn eval(&self, k: usize, domain: &Domain, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = domain.dim();
        let mut vals = [1.0; 2];
        let mut ders = [0.0; 2];
        for axis in 0..d {
            let (a, b) = domain.extent(axis);
            let w = self.modes[k][axis] as f64 * PI / (b - a);
            let t = w * (x[axis] - a);
            vals[axis] = sin(t);
            ders[axis] = w * cos(t);
        }
        let v: f64 = vals[..d].iter().product();
        for axis in 0..d {
            grad[axis] = ders[axis] * (0..d).filter(|j| *j != axis).map(|j| vals[j]).product::<f64>();
        }
        v
    }
}

/// `|∫A(x,∇u)·∇v + Φ(u)·∇v + b(x,u)v − F·∇v|` for every mode of the panel,
/// with `u` sampled on the points of `target`.
pub fn weak_form_residuals(
    basis: &BasisSet,
    data: &ProblemData,
    alpha: &[f64],
    target: &Quadrature,
    panel: &TestPanel,
) -> Result<Vec<f64>> {
    let d = basis.dim();
    let domain = basis.mesh().domain();
    let (u, grad) = basis.sample_on(alpha, target)?;
    let mut out = vec![0.0; panel.len()];
    let (mut a, mut phi, mut f, mut gv) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for q in 0..target.len() {
        let x = target.point(q);
        let w = target.weight(q);
        let uq = u.value(q)[0];
        data.a.eval(x, grad.value(q), &mut a);
        data.phi.eval(uq, &mut phi);
        data.f.eval(x, &mut f);
        let b = data.b.eval(x, uq);
        for (k, o) in out.iter_mut().enumerate() {
            let v = panel.eval(k, domain, x, &mut gv);
            let flux: f64 = (0..d).map(|i| (a[i] + phi[i] - f[i]) * gv[i]).sum();
            *o += w * (flux + b * v);
        }
    }
    Ok(out.into_iter().map(f64::abs).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySettings {
    pub resolutions: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub truncation_levels: Vec<f64>,
    pub solver: SolverSettings,
    pub conjugate: ConjugateSettings,
    pub panel: Option<TestPanel>,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            resolutions: vec![4, 8, 16],
            lambdas: vec![1.0, 2.0, 4.0, 8.0],
            truncation_levels: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            solver: SolverSettings::default(),
            conjugate: ConjugateSettings::default(),
            panel: None,
        }
    }
}

/// Everything measured on one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub resolution: usize,
    pub n: usize,
    pub h: f64,
    pub iterations: usize,
    pub residual_inf: f64,
    pub used_fallback: bool,
    pub alpha: Vec<f64>,
    pub energy: EnergyReport,
    pub energy_passed: bool,
    pub dual: DualBoundReport,
    pub phi: PhiLemmaReport,
    /// `∫b(x,u)u ≥ 0`.
    pub sign_passed: bool,
    /// Modular distance to the previous level, one entry per `λ`.
    pub modular_dist_prev: Vec<f64>,
    /// Weak-form residual per panel mode, on the finest quadrature.
    pub weak_form: Vec<f64>,
    pub l2_error: Option<f64>,
}

impl LevelReport {
    pub fn weak_form_norm(&self) -> f64 {
        sqrt(self.weak_form.iter().map(|v| v * v).sum())
    }

    pub fn passed(&self) -> bool {
        self.energy_passed && self.dual.passed() && self.phi.passed() && self.sign_passed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub lambdas: Vec<f64>,
    pub levels: Vec<LevelReport>,
    /// `(k, ∫M(∇T_k(u) − ∇u))` on the finest level.
    pub truncation: Vec<(f64, f64)>,
    pub l2_slope: Option<f64>,
}

impl StudyReport {
    /// Whether consecutive-level distances strictly decrease, per `λ`.
    pub fn distances_decrease(&self) -> Vec<bool> {
        (0..self.lambdas.len())
            .map(|j| {
                let seq: Vec<f64> = self.levels.iter().skip(1).map(|l| l.modular_dist_prev[j]).collect();
                seq.windows(2).all(|w| w[1] < w[0])
            })
            .collect()
    }

    /// Smallest `λ` whose distance sequence decreases.
    pub fn smallest_monotone_lambda(&self) -> Option<f64> {
        self.lambdas
            .iter()
            .zip(self.distances_decrease())
            .find(|(_, ok)| *ok)
            .map(|(l, _)| *l)
    }

    /// Whether the weak-form panel norm at the finest level is below the coarsest.
    pub fn weak_form_decreases(&self) -> bool {
        match (self.levels.first(), self.levels.last()) {
            (Some(a), Some(b)) if self.levels.len() > 1 => b.weak_form_norm() < a.weak_form_norm(),
            _ => false,
        }
    }

    pub fn truncation_vanishes(&self) -> bool {
        self.truncation.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    pub fn lemmas_hold(&self) -> bool {
        self.levels.iter().all(LevelReport::passed)
    }
}

/// Solves on every resolution and collects the diagnostics.
pub fn convergence_study(
    data: &ProblemData,
    settings: &StudySettings,
    exact: Option<&dyn Fn(&[f64]) -> f64>,
) -> Result<StudyReport> {
    let res = &settings.resolutions;
    if res.len() < 3 || res.windows(2).any(|w| w[1] <= w[0]) {
        return Err(crate::error::invalid(
            "resolutions",
            "need at least three increasing resolutions",
        ));
    }
    let domain = *data.nfunction().domain();
    let d = domain.dim();
    let panel = settings.panel.clone().unwrap_or_else(|| TestPanel::standard(d));
    let m = data.nfunction();
    let bases: Vec<BasisSet> = res
        .iter()
        .map(|&r| build_mesh(domain, r).map(BasisSet::new))
        .collect::<Result<_>>()?;
    let finest = bases[bases.len() - 1].quadrature();

    let mut levels: Vec<LevelReport> = Vec::with_capacity(res.len());
    for (i, basis) in bases.iter().enumerate() {
        let sys = GalerkinSystem::new(basis, data, settings.solver.clone())?;
        let sol = sys.solve()?;
        let energy = energy_diagnostics(&sys, &sol, settings.conjugate)?;
        let dual = dual_bound_check(&sys, &sol, settings.conjugate)?;
        let phi = phi_lemma_check(&sys, &sol)?;
        let modular_dist_prev = if i == 0 {
            Vec::new()
        } else {
            let (_, coarse) = bases[i - 1].sample_on(&levels[i - 1].alpha, basis.quadrature())?;
            let (_, fine) = basis.interpolate(&sol.alpha)?;
            settings
                .lambdas
                .iter()
                .map(|&l| modular_distance(m, &fine, &coarse, l))
                .collect::<Result<_>>()?
        };
        let weak_form = weak_form_residuals(basis, data, &sol.alpha, finest, &panel)?;
        let l2_error = match exact {
            Some(u_exact) => {
                let (u, _) = basis.interpolate(&sol.alpha)?;
                let quad = basis.quadrature();
                Some(sqrt(quad.integrate(|q, x| {
                    let e = u.value(q)[0] - u_exact(x);
                    e * e
                })))
            }
            None => None,
        };
        levels.push(LevelReport {
            resolution: res[i],
            n: basis.len(),
            h: basis.mesh().h(),
            iterations: sol.iterations,
            residual_inf: sol.residual_inf,
            used_fallback: sol.used_fallback,
            energy_passed: energy.passed(data.a.constants().c1),
            sign_passed: energy.energy_b >= -1e-14,
            alpha: sol.alpha,
            energy,
            dual,
            phi,
            modular_dist_prev,
            weak_form,
            l2_error,
        });
    }

    let (u, grad) = bases[bases.len() - 1].interpolate(&levels[levels.len() - 1].alpha)?;
    let truncation = settings
        .truncation_levels
        .iter()
        .map(|&k| {
            let (_, tg) = truncate(&u, &grad, k)?;
            Ok((k, modular_distance(m, &tg, &grad, 1.0)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let l2_slope = exact.map(|_| {
        let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
        let e: Vec<f64> = levels.iter().map(|l| l.l2_error.unwrap_or(0.0)).collect();
        loglog_slope(&h, &e)
    });
    Ok(StudyReport {
        lambdas: settings.lambdas.clone(),
        levels,
        truncation,
        l2_slope,
    })
}
