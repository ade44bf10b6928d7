use std::sync::Arc;

use musielak_core::fem::{build_mesh, BasisSet, Domain};
use musielak_core::galerkin::{monotonicity_residual, GalerkinSystem, SolverSettings};
use musielak_core::nfunction::NFunction;
use musielak_core::problem::{
    canonical_operator, BKernel, ConvectionPhi, FitSettings, LowerOrderB, ProblemData, SourceF, DEFAULT_EPS,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn l2_and_gradient(basis: &BasisSet, alpha: &[f64]) -> (f64, f64) {
    let (u, g) = basis.interpolate(alpha).unwrap();
    let q = basis.quadrature();
    let l2 = q.integrate(|k, _| u.value(k)[0].powi(2)).sqrt();
    let h1 = q.integrate(|k, _| g.value(k).iter().map(|v| v * v).sum()).sqrt();
    (l2, h1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // ‖u‖₂ ≤ ‖∇u‖₂ / (π√d) on the unit cube for u vanishing on the boundary.
    #[test]
    fn poincare_holds_for_hat_combinations(
        coeffs in prop::collection::vec(-3.0f64..3.0, 49),
        square in any::<bool>(),
    ) {
        let (dom, res) = if square { (Domain::unit_square(), 8) } else { (Domain::unit_interval(), 12) };
        let basis = BasisSet::new(build_mesh(dom, res).unwrap());
        let alpha = &coeffs[..basis.len()];
        let (l2, h1) = l2_and_gradient(&basis, alpha);
        let c = 1.0 / (std::f64::consts::PI * (dom.dim() as f64).sqrt());
        prop_assert!(l2 <= c * h1 * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn solutions_for_two_sources_are_monotone(s1 in -3.0f64..3.0, s2 in -3.0f64..3.0) {
        let dom = Domain::unit_interval();
        let m = Arc::new(NFunction::constant_power(dom, 3.0, 1.0 / 3.0).unwrap());
        let fit = FitSettings { samples: 40, ..Default::default() };
        let a = canonical_operator(m, DEFAULT_EPS, &fit, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let base = ProblemData::new(
            a,
            ConvectionPhi::zero(1),
            LowerOrderB::simple(BKernel::Cubic, 1.0),
            SourceF::new(1, |x, o| o[0] = (5.0 * x[0]).cos()),
        )
        .unwrap();
        let basis = BasisSet::new(build_mesh(dom, 16).unwrap());
        let solve = |k: f64| {
            let d = base.with_scaled_source(k);
            let sys = GalerkinSystem::new(&basis, &d, SolverSettings::default()).unwrap();
            let sol = sys.solve().unwrap();
            assert!(sol.converged);
            sol.alpha
        };
        let (a1, a2) = (solve(s1), solve(s2));
        let sys = GalerkinSystem::new(&basis, &base, SolverSettings::default()).unwrap();
        prop_assert!(monotonicity_residual(&sys, &a1, &a2).unwrap() >= -1e-12);
    }
}
