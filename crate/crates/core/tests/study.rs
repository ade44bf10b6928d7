use std::sync::Arc;
use std::time::Instant;

use musielak_core::fem::Domain;
use musielak_core::galerkin::{convergence_study, StudySettings};
use musielak_core::nfunction::{CoefficientField, NFunction};
use musielak_core::problem::{
    canonical_operator, BKernel, ConvectionPhi, FitSettings, LowerOrderB, PhiComponent, ProblemData, SourceF,
    DEFAULT_EPS,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn double_phase_problem() -> ProblemData {
    let sq = Domain::unit_square();
    let a = CoefficientField::distance_power(2, 0, 0.0, 1.0, 1.0);
    let m = Arc::new(NFunction::double_phase(sq, 2.0, 3.0, a, false).unwrap());
    let op = canonical_operator(
        m,
        DEFAULT_EPS,
        &FitSettings::default(),
        &mut ChaCha8Rng::seed_from_u64(11),
    )
    .unwrap();
    let phi = ConvectionPhi::new(vec![PhiComponent::Sin(0.1), PhiComponent::Cos(0.1)]).unwrap();
    let b = LowerOrderB::simple(BKernel::Arctan, 1.0);
    let f = SourceF::new(2, |x, o| {
        let pi = std::f64::consts::PI;
        o[0] = 2.0 * (2.0 * pi * x[0]).sin() * x[1];
        o[1] = 2.0 * (pi * x[1]).cos();
    });
    ProblemData::new(op, phi, b, f).unwrap()
}

#[test]
fn double_phase_study_is_monotone() {
    let t = Instant::now();
    let data = double_phase_problem();
    let r = convergence_study(&data, &StudySettings::default(), None).unwrap();
    for l in &r.levels {
        eprintln!(
            "res {} iters {} res {:.2e} fb {} dist {:?} wf {:.3e} energy {} dual {:.3}/{:.3}",
            l.resolution,
            l.iterations,
            l.residual_inf,
            l.used_fallback,
            l.modular_dist_prev,
            l.weak_form_norm(),
            l.energy_passed,
            l.dual.norm,
            l.dual.bound
        );
    }
    eprintln!("{:?}", t.elapsed());
    assert!(r.distances_decrease()[0]);
    assert!(r.weak_form_decreases());
    assert!(r.lemmas_hold());
}
