use std::time::Instant;

use musielak_core::fem::Domain;
use musielak_core::nfunction::{
    duality_suite, random_triples, CoefficientField, ConjugateSettings, CustomIntegrand, DualityTolerances,
    ExponentField, NFunction, YoungFunction, YoungShape, YoungTerm,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn affine(base: f64, gradient: [f64; 2], min: f64, max: f64) -> ExponentField {
    ExponentField {
        base,
        gradient: gradient.to_vec(),
        min,
        max,
    }
}

fn quartic() -> NFunction {
    let value = |_: &[f64], z: &[f64]| {
        let s = z[0] + z[1];
        0.5 * (z[0] * z[0] + z[1] * z[1]) + 0.25 * s.powi(4)
    };
    NFunction::custom(
        Domain::unit_square(),
        CustomIntegrand {
            label: "quartic".into(),
            value: Box::new(value),
            gradient: None,
            conjugate: None,
        },
        YoungFunction::power(0.5, 2.0),
        YoungFunction::new(vec![
            YoungTerm {
                coef: 0.5,
                arg_scale: 1.0,
                shape: YoungShape::Power(2.0),
            },
            YoungTerm {
                coef: 1.0,
                arg_scale: 1.0,
                shape: YoungShape::Power(4.0),
            },
        ]),
    )
    .unwrap()
}

fn catalog() -> Vec<NFunction> {
    let sq = Domain::unit_square();
    let x1 = CoefficientField::distance_power(2, 0, 0.0, 1.0, 1.0);
    let x2 = CoefficientField::distance_power(2, 1, 0.0, 1.0, 1.0);
    vec![
        NFunction::constant_power(sq, 3.0, 1.0).unwrap(),
        NFunction::variable_exponent(sq, affine(2.0, [1.0, 0.0], 2.0, 3.0), 1.0).unwrap(),
        NFunction::double_phase(sq, 2.0, 3.0, x1.clone(), false).unwrap(),
        NFunction::anisotropic_variable(
            sq,
            vec![affine(2.0, [0.5, 0.0], 2.0, 2.5), affine(3.0, [0.0, -1.0], 2.0, 3.0)],
        )
        .unwrap(),
        NFunction::anisotropic_double_phase(sq, vec![2.0, 2.5], vec![3.0, 4.0], vec![x1, x2], true).unwrap(),
        quartic(),
    ]
}

#[test]
fn catalog_passes_duality_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in catalog() {
        let t = Instant::now();
        let samples = random_triples(&m, 100, 0.1, 4.0, &mut rng);
        let r = duality_suite(
            &m,
            &ConjugateSettings::default(),
            &samples,
            DualityTolerances::default(),
        )
        .unwrap();
        eprintln!(
            "{}: fy {:.3e} biconj {:.3e} closed {:?} in {:?}",
            m.tag(),
            r.fenchel_young.min_margin(),
            r.biconjugation.max_deviation(),
            r.closed_form_deviation,
            t.elapsed()
        );
        assert!(r.passed(), "{}", m.tag());
    }
}
