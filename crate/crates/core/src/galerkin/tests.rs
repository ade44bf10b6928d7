use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fem::{build_mesh, Domain};
use crate::nfunction::{ConjugateSettings, NFunction};
use crate::problem::{
    canonical_operator, BKernel, ConvectionPhi, FitSettings, LowerOrderB, OperatorKind, PhiComponent, SourceF,
    StructureConstants, VectorFieldA,
};

fn fit() -> FitSettings {
    FitSettings {
        samples: 40,
        ..Default::default()
    }
}

fn power_operator(dom: Domain, p: f64) -> VectorFieldA {
    let m = Arc::new(NFunction::constant_power(dom, p, 1.0 / p).unwrap());
    canonical_operator(
        m,
        crate::problem::DEFAULT_EPS,
        &fit(),
        &mut ChaCha8Rng::seed_from_u64(1),
    )
    .unwrap()
}

fn laplace(dom: Domain) -> VectorFieldA {
    let m = Arc::new(NFunction::constant_power(dom, 2.0, 0.5).unwrap());
    VectorFieldA::with_constants(
        m,
        OperatorKind::PLaplacian { p: 2.0, eps: 0.0 },
        StructureConstants {
            c1: core::f64::consts::SQRT_2,
            c2: 1.0,
            c3: 2.0,
            c4: 2.0,
            h1: 0.0,
            h2: 0.0,
        },
    )
    .unwrap()
}

fn data(a: VectorFieldA, f: SourceF) -> ProblemData {
    let d = a.dim();
    ProblemData::new(a, ConvectionPhi::zero(d), LowerOrderB::zero(), f).unwrap()
}

fn basis_1d(n: usize) -> BasisSet {
    BasisSet::new(build_mesh(Domain::unit_interval(), n).unwrap())
}

#[test]
fn zero_data_gives_zero_solution() {
    let dom = Domain::unit_interval();
    let mut d = data(power_operator(dom, 3.0), SourceF::zero(1));
    d.b = LowerOrderB::simple(BKernel::Linear, 1.0);
    let basis = basis_1d(8);
    let sys = GalerkinSystem::new(
        &basis,
        &d,
        SolverSettings {
            start: Start::Zero,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(sys.residual(&vec![0.0; sys.len()]).unwrap().iter().all(|v| *v == 0.0));
    let sol = sys.solve().unwrap();
    assert!(sol.converged && sol.iterations <= 1);
    assert!(sol.alpha.iter().all(|v| *v == 0.0));
}

#[test]
fn residual_matches_hand_assembled_tridiagonal() {
    // Resolution 4: K = tridiag(−4, 8, −4), and F(x) = x gives ∫F w_j' = −h.
    let dom = Domain::unit_interval();
    let d = data(laplace(dom), SourceF::new(1, |x, o| o[0] = x[0]));
    let basis = basis_1d(4);
    let sys = GalerkinSystem::new(&basis, &d, SolverSettings::default()).unwrap();
    let alpha = [0.3, -1.2, 0.7];
    let s = sys.residual(&alpha).unwrap();
    let k = [[8.0, -4.0, 0.0], [-4.0, 8.0, -4.0], [0.0, -4.0, 8.0]];
    for j in 0..3 {
        let expect: f64 = (0..3).map(|i| k[j][i] * alpha[i]).sum::<f64>() + 0.25;
        assert!((s[j] - expect).abs() < 1e-13, "{j}: {} vs {expect}", s[j]);
    }
    let jac = sys.jacobian(&alpha).unwrap();
    for j in 0..3 {
        for i in 0..3 {
            assert!((jac.get(j, i) - k[j][i]).abs() < 1e-7);
        }
    }
}

#[test]
fn source_enters_additively() {
    let dom = Domain::unit_interval();
    let f = SourceF::new(1, |x, o| o[0] = (3.0 * x[0]).sin());
    let d1 = data(power_operator(dom, 3.0), f.clone());
    let d2 = d1.with_scaled_source(2.0);
    let d0 = d1.with_scaled_source(0.0);
    let basis = basis_1d(6);
    let alpha = [0.2, 0.1, -0.4, 0.3, 0.05];
    let s = |d: &ProblemData| {
        GalerkinSystem::new(&basis, d, SolverSettings::default())
            .unwrap()
            .residual(&alpha)
            .unwrap()
    };
    let (s0, s1, s2) = (s(&d0), s(&d1), s(&d2));
    let load = GalerkinSystem::new(&basis, &d1, SolverSettings::default())
        .unwrap()
        .load_vector();
    for j in 0..alpha.len() {
        assert!((s1[j] - s2[j] - load[j]).abs() < 1e-14);
        assert!((s0[j] - s1[j] - load[j]).abs() < 1e-14);
    }
}

#[test]
fn linear_case_reproduces_direct_solve() {
    let dom = Domain::unit_square();
    let d = data(
        laplace(dom),
        SourceF::new(2, |x, o| {
            o[0] = x[0] * x[1];
            o[1] = (x[0] - x[1]).cos();
        }),
    );
    let basis = BasisSet::new(build_mesh(dom, 6).unwrap());
    let sys = GalerkinSystem::new(
        &basis,
        &d,
        SolverSettings {
            start: Start::Zero,
            ..Default::default()
        },
    )
    .unwrap();
    let sol = sys.solve().unwrap();
    let direct = basis.stiffness_matrix().solve(&sys.load_vector()).unwrap();
    for (a, b) in sol.alpha.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-10);
    }
}

fn manufactured_p2() -> ProblemData {
    data(
        laplace(Domain::unit_interval()),
        SourceF::new(1, |x, o| o[0] = PI * (PI * x[0]).cos()),
    )
}

#[test]
fn manufactured_sine_converges_at_second_order() {
    let d = manufactured_p2();
    let mut h = Vec::new();
    let mut err = Vec::new();
    for n in [8, 16, 32, 64] {
        let basis = basis_1d(n);
        let sys = GalerkinSystem::new(&basis, &d, SolverSettings::default()).unwrap();
        let sol = sys.solve().unwrap();
        let (u, _) = basis.interpolate(&sol.alpha).unwrap();
        let e = basis
            .quadrature()
            .integrate(|q, x| (u.value(q)[0] - (PI * x[0]).sin()).powi(2))
            .sqrt();
        h.push(basis.mesh().h());
        err.push(e);
        if n == 64 {
            let en = energy_diagnostics(&sys, &sol, ConjugateSettings::default()).unwrap();
            assert!((en.energy_a - PI * PI / 2.0).abs() < 0.01 * PI * PI / 2.0);
            assert!(en.passed(d.a.constants().c1), "{en:?}");
            let dual = dual_bound_check(&sys, &sol, ConjugateSettings::default()).unwrap();
            assert!(dual.passed(), "{dual:?}");
        }
    }
    let slope = crate::math::loglog_slope(&h, &err);
    assert!((slope - 2.0).abs() <= 0.2, "slope {slope}");
}

/// Cell averages `(1/h)∫_c F` by composite Simpson on a dense grid.
fn cell_means(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let m = 400;
    (0..n)
        .map(|c| {
            let a = c as f64 * h;
            let dx = h / m as f64;
            let mut s = f(a) + f(a + h);
            for i in 1..m {
                s += f(a + i as f64 * dx) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * dx / 3.0 / h
        })
        .collect()
}

/// Damped Picard (Kačanov) iteration for `A(g) = |g|g` on the P1 space:
/// solve the weighted Laplacian with cell weights `|g_c|`, then relax.
fn picard_oracle(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let fbar = cell_means(n, f);
    // Cell slopes g_c; start from the linear problem (weights 1).
    let mut g = vec![1.0; n];
    let mut weights = vec![1.0; n];
    for it in 0..20_000 {
        // Tridiagonal system Σ_c ω_c g_c ∂w_j = Σ_c F̄_c ∂w_j for nodal values.
        let m = n - 1;
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for j in 0..m {
            diag[j] = (weights[j] + weights[j + 1]) / h;
            if j + 1 < m {
                off[j] = -weights[j + 1] / h;
            }
            rhs[j] = fbar[j] - fbar[j + 1];
        }
        // Thomas algorithm.
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        c[0] = off[0] / diag[0];
        d[0] = rhs[0] / diag[0];
        for j in 1..m {
            let den = diag[j] - off[j - 1] * c[j - 1];
            c[j] = off[j] / den;
            d[j] = (rhs[j] - off[j - 1] * d[j - 1]) / den;
        }
        let mut u = vec![0.0; m];
        u[m - 1] = d[m - 1];
        for j in (0..m - 1).rev() {
            u[j] = d[j] - c[j] * u[j + 1];
        }
        let nodal = |j: usize| if j == 0 || j == n { 0.0 } else { u[j - 1] };
        let theta = 0.5;
        let mut change = 0.0f64;
        for cidx in 0..n {
            let new = (nodal(cidx + 1) - nodal(cidx)) / h;
            let relaxed = theta * new + (1.0 - theta) * g[cidx];
            change = change.max((relaxed - g[cidx]).abs());
            g[cidx] = relaxed;
            weights[cidx] = g[cidx].abs().max(1e-14);
        }
        if change < 1e-15 && it > 10 {
            break;
        }
    }
    let mut nodes = vec![0.0; n + 1];
    for c in 0..n {
        nodes[c + 1] = nodes[c] + h * g[c];
    }
    nodes[1..n].to_vec()
}

/// Closed-form discrete solution: `|g_c| g_c = F̄_c + C` with `Σ g_c = 0`.
fn cellwise_oracle(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let fbar = cell_means(n, f);
    let inv = |t: f64| t.signum() * t.abs().sqrt();
    let total = |c: f64| fbar.iter().map(|fb| inv(fb + c)).sum::<f64>();
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let mut nodes = vec![0.0; n + 1];
    for k in 0..n {
        nodes[k + 1] = nodes[k] + h * inv(fbar[k] + c);
    }
    nodes[1..n].to_vec()
}

fn p3_source(x: f64) -> f64 {
    let t = 1.0 - 2.0 * x;
    t.abs() * t
}

#[test]
fn oracles_agree_with_each_other() {
    let a = picard_oracle(32, p3_source);
    let b = cellwise_oracle(32, p3_source);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-10, "{x} vs {y}");
    }
}

#[test]
fn p3_matches_fixed_point_oracle() {
    let d = data(
        power_operator(Domain::unit_interval(), 3.0),
        SourceF::new(1, |x, o| o[0] = p3_source(x[0])),
    );
    let basis = basis_1d(32);
    let sys = GalerkinSystem::new(&basis, &d, SolverSettings::default()).unwrap();
    let sol = sys.solve().unwrap();
    assert!(sol.converged && sol.residual_inf <= 1e-10);
    let oracle = picard_oracle(32, p3_source);
    let err = sol
        .alpha
        .iter()
        .zip(&oracle)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-6, "sup error {err}");
    // The exact solution x(1−x) is also close.
    for (k, a) in sol.alpha.iter().enumerate() {
        let x = (k + 1) as f64 / 32.0;
        assert!((a - x * (1.0 - x)).abs() < 1e-3);
    }
}

#[test]
fn p3_from_zero_start_converges() {
    let d = data(
        power_operator(Domain::unit_interval(), 3.0),
        SourceF::new(1, |x, o| o[0] = p3_source(x[0])),
    );
    let basis = basis_1d(12);
    let sys = GalerkinSystem::new(
        &basis,
        &d,
        SolverSettings {
            start: Start::Zero,
            ..Default::default()
        },
    )
    .unwrap();
    let sol = sys.solve().unwrap();
    assert!(sol.converged);
    let oracle = cellwise_oracle(12, p3_source);
    for (a, b) in sol.alpha.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn coercivity_radius_exists() {
    let d = manufactured_p2();
    let basis = basis_1d(8);
    let sys = GalerkinSystem::new(&basis, &d, SolverSettings::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = sys.coercivity_radius(1.0, &mut rng).unwrap();
    for _ in 0..20 {
        let mut dir = vec![0.0; sys.len()];
        crate::math::random_direction(&mut rng, &mut dir);
        let alpha: Vec<f64> = dir.iter().map(|v| r * v).collect();
        assert!(crate::math::dot(&sys.residual(&alpha).unwrap(), &alpha) >= 0.0);
    }
}

fn convective_data(dom: Domain) -> ProblemData {
    let d = dom.dim();
    let a = power_operator(dom, 2.0);
    let phi = ConvectionPhi::new(vec![PhiComponent::Sin(0.5), PhiComponent::Cos(0.5)][..d].to_vec()).unwrap();
    let b = LowerOrderB::simple(BKernel::Linear, 1.0);
    let f = SourceF::new(d, |x, o| {
        for (i, v) in o.iter_mut().enumerate() {
            *v = (2.0 + i as f64) * (3.0 * x[i]).sin();
        }
    });
    ProblemData::new(a, phi, b, f).unwrap()
}

#[test]
fn phi_lemma_and_sign_hold() {
    for dom in [Domain::unit_interval(), Domain::unit_square()] {
        let d = convective_data(dom);
        let basis = BasisSet::new(build_mesh(dom, 8).unwrap());
        let sys = GalerkinSystem::new(&basis, &d, SolverSettings::default()).unwrap();
        let sol = sys.solve().unwrap();
        let phi = phi_lemma_check(&sys, &sol).unwrap();
        assert!(phi.passed(), "{phi:?}");
        let en = energy_diagnostics(&sys, &sol, ConjugateSettings::default()).unwrap();
        assert!(en.energy_b >= 0.0 && en.passed(d.a.constants().c1), "{en:?}");
    }
}

#[test]
fn two_starts_agree_and_probe_passes() {
    let dom = Domain::unit_interval();
    let d = convective_data(dom);
    let basis = basis_1d(32);
    let zero = GalerkinSystem::new(
        &basis,
        &d,
        SolverSettings {
            start: Start::Zero,
            ..Default::default()
        },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let random: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let other = GalerkinSystem::new(
        &basis,
        &d,
        SolverSettings {
            start: Start::Given(random),
            ..Default::default()
        },
    )
    .unwrap();
    let (s1, s2) = (zero.solve().unwrap(), other.solve().unwrap());
    let report = uniqueness_probe(&zero, &s1, &s2, &[0.5, 0.1, 0.02], 1e-8).unwrap();
    assert!(report.sup_distance < 1e-8);
    assert!(report.passed(), "{report:?}");
    let same = uniqueness_probe(&zero, &s1, &s1, &[0.5, 0.1, 0.02], 1e-8).unwrap();
    assert!(same.levels.iter().all(|l| l.j1 == 0.0 && l.j2 == 0.0 && l.j3 == 0.0));
}

#[test]
fn heaviside_values() {
    assert_eq!(heaviside(0.25, 0.5), 0.5);
    assert_eq!(heaviside(-1.0, 0.5), 0.0);
    assert_eq!(heaviside(1.0, 0.5), 1.0);
}

#[test]
fn doubling_source_keeps_bounds() {
    let d1 = manufactured_p2();
    let d2 = d1.with_scaled_source(2.0);
    let basis = basis_1d(16);
    let mut bounds = Vec::new();
    for d in [&d1, &d2] {
        let sys = GalerkinSystem::new(&basis, d, SolverSettings::default()).unwrap();
        let sol = sys.solve().unwrap();
        let en = energy_diagnostics(&sys, &sol, ConjugateSettings::default()).unwrap();
        let dual = dual_bound_check(&sys, &sol, ConjugateSettings::default()).unwrap();
        assert!(en.passed(d.a.constants().c1) && dual.passed());
        bounds.push((en.source_modular, dual.bound));
    }
    assert!(bounds[1].0 >= bounds[0].0 && bounds[1].1 >= bounds[0].1);
}

#[test]
fn study_on_linear_problem() {
    let d = manufactured_p2();
    let settings = StudySettings {
        resolutions: vec![8, 16, 32, 64],
        ..Default::default()
    };
    let exact = |x: &[f64]| (PI * x[0]).sin();
    let r = convergence_study(&d, &settings, Some(&exact)).unwrap();
    assert!((r.l2_slope.unwrap() - 2.0).abs() < 0.2);
    assert!(r.distances_decrease().iter().all(|v| *v));
    assert_eq!(r.smallest_monotone_lambda(), Some(1.0));
    assert!(r.weak_form_decreases());
    assert!(r.lemmas_hold());
    assert!(r.truncation_vanishes());
    assert_eq!(r.truncation.last().unwrap().1, 0.0);
    // Mode 1 residual falls like h².
    let w: Vec<f64> = r.levels.iter().map(|l| l.weak_form[0]).collect();
    let h: Vec<f64> = r.levels.iter().map(|l| l.h).collect();
    assert!(crate::math::loglog_slope(&h[..3], &w[..3]) > 1.8, "{w:?}");
}

#[test]
fn study_with_zero_data_is_identically_zero() {
    let d = data(power_operator(Domain::unit_interval(), 2.0), SourceF::zero(1));
    let r = convergence_study(&d, &StudySettings::default(), None).unwrap();
    for l in &r.levels {
        assert!(l.alpha.iter().all(|v| *v == 0.0));
        assert!(l.weak_form.iter().all(|v| *v == 0.0));
        assert_eq!(l.energy.energy_a, 0.0);
        assert_eq!(l.dual.norm, 0.0);
    }
    assert!(convergence_study(
        &d,
        &StudySettings {
            resolutions: vec![4, 8],
            ..Default::default()
        },
        None
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_map_is_monotone(seed in 0u64..1000) {
        let d = data(
            power_operator(Domain::unit_interval(), 3.0),
            SourceF::new(1, |x, o| o[0] = p3_source(x[0])),
        );
        let mut d = d;
        d.b = LowerOrderB::simple(BKernel::Arctan, 1.0);
        let basis = basis_1d(10);
        let sys = GalerkinSystem::new(&basis, &d, SolverSettings::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a1: Vec<f64> = (0..sys.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a2: Vec<f64> = (0..sys.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (s1, s2) = (sys.residual(&a1).unwrap(), sys.residual(&a2).unwrap());
        let pairing: f64 = (0..a1.len()).map(|k| (s1[k] - s2[k]) * (a1[k] - a2[k])).sum();
        prop_assert!(pairing >= -1e-12);
        prop_assert!(monotonicity_residual(&sys, &a1, &a2).unwrap() >= -1e-12);
    }
}
