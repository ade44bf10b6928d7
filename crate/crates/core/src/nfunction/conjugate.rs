use alloc::vec;
use alloc::vec::Vec;

use super::NFunction;
use rand::Rng;

use crate::math::{dot, log_uniform, maximize_concave, norm, powf, random_direction};
use crate::{Error, Result};

/// Anything that can be conjugated: an N-function, or a conjugate itself.
pub trait ConvexIntegrand {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64], xi: &[f64]) -> Result<f64>;

    /// Closed-form conjugate, when known.
    fn closed_form_conjugate(&self, _x: &[f64], _eta: &[f64]) -> Option<f64> {
        None
    }
}

impl ConvexIntegrand for NFunction {
    fn dim(&self) -> usize {
        NFunction::dim(self)
    }

    fn value(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(NFunction::value(self, x, xi))
    }

    fn closed_form_conjugate(&self, x: &[f64], eta: &[f64]) -> Option<f64> {
        NFunction::closed_form_conjugate(self, x, eta)
    }
}

/// Search parameters of the numerical Legendre–Fenchel transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateSettings {
    /// Initial radius of the search ball.
    pub r_max: f64,
    /// Number of points of the geometric radial seed grid along `η`.
    pub radial_grid: usize,
    /// Relative tolerance on the objective between sweeps.
    pub rel_tol: f64,
    /// Radius doublings allowed before giving up.
    pub max_doublings: usize,
    /// Coordinate sweeps allowed per radius.
    pub max_sweeps: usize,
    /// Use the closed-form conjugate of the source when it exists.
    pub use_closed_form: bool,
}

impl Default for ConjugateSettings {
    fn default() -> Self {
        Self {
            r_max: 16.0,
            radial_grid: 24,
            rel_tol: 1e-8,
            max_doublings: 60,
            max_sweeps: 200,
            use_closed_form: true,
        }
    }
}

/// Numerical conjugate `M*(x,η) = sup_ξ [ξ·η − M(x,ξ)]`.
///
/// The concave objective is maximized by golden-section line searches: first
/// along the ray through `η` (seeded from a geometric radial grid), then by
/// coordinate sweeps, each followed by a pattern move along the displacement
/// of the sweep. The search is confined to a ball whose radius doubles while
/// the maximizer sits on its boundary. The returned value is the largest
/// objective value evaluated, so it never exceeds the true supremum.
#[derive(Debug, Clone, Copy)]
pub struct ConjugateEvaluator<'a, I: ConvexIntegrand + ?Sized> {
    source: &'a I,
    settings: ConjugateSettings,
}

struct Search<'s, I: ConvexIntegrand + ?Sized> {
    source: &'s I,
    x: &'s [f64],
    eta: &'s [f64],
    best: f64,
}

impl<I: ConvexIntegrand + ?Sized> Search<'_, I> {
    fn objective(&mut self, xi: &[f64]) -> Result<f64> {
        let v = dot(xi, self.eta) - self.source.value(self.x, xi)?;
        if v > self.best {
            self.best = v;
        }
        Ok(v)
    }

    /// Maximizes along `xi + t·dir` (unit `dir`) inside the ball of radius `radius`.
    fn line(&mut self, xi: &mut [f64], dir: &[f64], radius: f64, step: f64, xtol: f64) -> Result<f64> {
        let b = dot(xi, dir);
        let c = dot(xi, xi) - radius * radius;
        let disc = (b * b - c).max(0.0);
        let root = crate::math::sqrt(disc);
        let (lo, hi) = (-b - root, -b + root);
        let mut trial = xi.to_vec();
        let r = maximize_concave(
            |t| {
                for k in 0..trial.len() {
                    trial[k] = xi[k] + t * dir[k];
                }
                self.objective(&trial)
            },
            0.0,
            step,
            lo.min(0.0),
            hi.max(0.0),
            xtol,
        )?;
        for k in 0..xi.len() {
            xi[k] += r.t * dir[k];
        }
        Ok(r.value)
    }
}

impl<'a, I: ConvexIntegrand + ?Sized> ConjugateEvaluator<'a, I> {
    pub fn new(source: &'a I, settings: ConjugateSettings) -> Self {
        Self { source, settings }
    }

    pub fn with_defaults(source: &'a I) -> Self {
        Self::new(source, ConjugateSettings::default())
    }

    pub fn source(&self) -> &'a I {
        self.source
    }

    pub fn settings(&self) -> &ConjugateSettings {
        &self.settings
    }

    /// `M*(x, η)`.
    pub fn eval(&self, x: &[f64], eta: &[f64]) -> Result<f64> {
        let d = self.source.dim();
        if eta.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: eta.len(),
            });
        }
        if self.settings.use_closed_form {
            if let Some(v) = self.source.closed_form_conjugate(x, eta) {
                return Ok(v);
            }
        }
        let s = &self.settings;
        let mut search = Search {
            source: self.source,
            x,
            eta,
            best: f64::NEG_INFINITY,
        };
        let mut xi = vec![0.0; d];
        let mut f = search.objective(&xi)?;
        let mut radius = s.r_max;
        let eta_norm = norm(eta);

        if eta_norm > 0.0 {
            let dir: Vec<f64> = eta.iter().map(|e| e / eta_norm).collect();
            let mut t_best = 0.0;
            let mut probe = vec![0.0; d];
            for k in 0..s.radial_grid.max(1) {
                let t = radius * powf(0.5, k as f64);
                probe.iter_mut().zip(&dir).for_each(|(p, e)| *p = t * e);
                let v = search.objective(&probe)?;
                if v > f {
                    f = v;
                    t_best = t;
                }
            }
            xi.iter_mut().zip(&dir).for_each(|(p, e)| *p = t_best * e);
            let step = if t_best > 0.0 {
                0.25 * t_best
            } else {
                radius * powf(0.5, s.radial_grid as f64)
            };
            f = search.line(&mut xi, &dir, radius, step, xtol(t_best, radius))?;
        }

        let mut doublings = 0usize;
        let mut unit = vec![0.0; d];
        loop {
            let mut sweeps = 0;
            loop {
                let start = xi.clone();
                let f_start = f;
                let scale = norm(&xi);
                for i in 0..d {
                    unit.iter_mut().for_each(|u| *u = 0.0);
                    unit[i] = 1.0;
                    let step = 0.05 * scale.max(radius * 1e-9);
                    f = search.line(&mut xi, &unit, radius, step, xtol(scale, radius))?;
                }
                let disp: Vec<f64> = xi.iter().zip(&start).map(|(a, b)| a - b).collect();
                let dn = norm(&disp);
                if d > 1 && dn > 0.0 {
                    unit.iter_mut().zip(&disp).for_each(|(u, v)| *u = v / dn);
                    let tol = xtol(norm(&xi), radius);
                    f = search.line(&mut xi, &unit, radius, dn, tol)?;
                }
                sweeps += 1;
                let gain = f - f_start;
                if gain <= s.rel_tol * f.abs() || sweeps >= s.max_sweeps {
                    break;
                }
            }
            if norm(&xi) < radius * (1.0 - 1e-6) {
                break;
            }
            if doublings >= s.max_doublings {
                return Err(Error::SearchRadiusExhausted { radius, doublings });
            }
            radius *= 2.0;
            doublings += 1;
        }
        Ok(search.best.max(f))
    }
}

fn xtol(scale: f64, radius: f64) -> f64 {
    1e-7 * scale.max(1e-12 * radius).max(1e-300)
}

impl<I: ConvexIntegrand + ?Sized> ConvexIntegrand for ConjugateEvaluator<'_, I> {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn value(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        self.eval(x, xi)
    }
}

/// One Fenchel–Young sample: `ξ·η ≤ M(x,ξ) + M*(x,η)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FenchelYoungEntry {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FenchelYoungReport {
    pub entries: Vec<FenchelYoungEntry>,
    /// Indices into `entries` with `margin < -tol`.
    pub violations: Vec<usize>,
    pub tolerance: f64,
}

impl FenchelYoungReport {
    pub fn min_margin(&self) -> f64 {
        self.entries.iter().map(|e| e.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the Fenchel–Young inequality on each `(x, ξ, η)` sample.
pub fn check_fenchel_young(
    m: &NFunction,
    conjugate: &ConjugateSettings,
    samples: &[(Vec<f64>, Vec<f64>, Vec<f64>)],
    tol: f64,
) -> Result<FenchelYoungReport> {
    let cj = ConjugateEvaluator::new(m, *conjugate);
    let mut report = FenchelYoungReport {
        tolerance: tol,
        ..Default::default()
    };
    for (k, (x, xi, eta)) in samples.iter().enumerate() {
        let lhs = dot(xi, eta);
        let rhs = m.eval(x, xi)? + cj.eval(x, eta)?;
        let margin = rhs - lhs;
        if margin < -tol {
            report.violations.push(k);
        }
        report.entries.push(FenchelYoungEntry {
            x: x.clone(),
            xi: xi.clone(),
            eta: eta.clone(),
            lhs,
            rhs,
            margin,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Default)]
pub struct BiconjugationReport {
    /// `(x, ξ, M, M**, relative deviation)` per sample.
    pub entries: Vec<(Vec<f64>, Vec<f64>, f64, f64, f64)>,
    pub tolerance: f64,
    pub worst: Option<usize>,
}

impl BiconjugationReport {
    pub fn max_deviation(&self) -> f64 {
        self.entries.iter().map(|e| e.4).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_deviation() <= self.tolerance
    }
}

/// Compares `M**` (two numerical transforms, closed forms disabled) with `M`.
///
/// The deviation is `|M** − M| / M`, or the absolute deviation where `M = 0`.
pub fn check_biconjugation(
    m: &NFunction,
    conjugate: &ConjugateSettings,
    samples: &[(Vec<f64>, Vec<f64>)],
    tol: f64,
) -> Result<BiconjugationReport> {
    let numeric = ConjugateSettings {
        use_closed_form: false,
        ..*conjugate
    };
    let inner = ConjugateEvaluator::new(m, numeric);
    let outer = ConjugateEvaluator::new(&inner, numeric);
    let mut report = BiconjugationReport {
        tolerance: tol,
        ..Default::default()
    };
    let mut worst = -1.0;
    for (k, (x, xi)) in samples.iter().enumerate() {
        let v = m.eval(x, xi)?;
        let vv = outer.eval(x, xi)?;
        let dev = if v > 0.0 { (vv - v).abs() / v } else { (vv - v).abs() };
        if dev > worst {
            worst = dev;
            report.worst = Some(k);
        }
        report.entries.push((x.clone(), xi.clone(), v, vv, dev));
    }
    Ok(report)
}

/// Tolerances of the catalog duality suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityTolerances {
    /// Smallest admissible Fenchel–Young margin is `-fenchel_young`.
    pub fenchel_young: f64,
    /// Relative `M**` deviation.
    pub biconjugation: f64,
    /// Closed form against search, relative to `max(1, M*)`.
    pub closed_form: f64,
}

impl Default for DualityTolerances {
    fn default() -> Self {
        Self {
            fenchel_young: 1e-10,
            biconjugation: 1e-5,
            closed_form: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualityReport {
    pub fenchel_young: FenchelYoungReport,
    pub biconjugation: BiconjugationReport,
    /// Largest closed-form deviation, `None` when the family has no closed form.
    pub closed_form_deviation: Option<f64>,
    pub tolerances: DualityTolerances,
}

impl DualityReport {
    pub fn closed_form_passed(&self) -> bool {
        self.closed_form_deviation
            .is_none_or(|d| d <= self.tolerances.closed_form)
    }

    pub fn passed(&self) -> bool {
        self.fenchel_young.passed() && self.biconjugation.passed() && self.closed_form_passed()
    }
}

/// Random `(x, ξ, η)` triples: `x` uniform in Ω, `ξ` and `η` along random
/// directions with log-uniform lengths in `[lo, hi]`.
pub fn random_triples<R: Rng + ?Sized>(
    m: &NFunction,
    count: usize,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let d = m.dim();
    let mut unit = vec![0.0; d];
    (0..count)
        .map(|_| {
            unit.iter_mut().for_each(|u| *u = rng.gen::<f64>());
            let mut x = vec![0.0; d];
            m.domain().from_unit(&unit, &mut x);
            let mut xi = vec![0.0; d];
            let mut eta = vec![0.0; d];
            random_direction(rng, &mut xi);
            random_direction(rng, &mut eta);
            let (a, b) = (log_uniform(rng, lo, hi), log_uniform(rng, lo, hi));
            xi.iter_mut().for_each(|v| *v *= a);
            eta.iter_mut().for_each(|v| *v *= b);
            (x, xi, eta)
        })
        .collect()
}

/// Fenchel–Young, biconjugation and closed-form agreement on shared samples.
pub fn duality_suite(
    m: &NFunction,
    conjugate: &ConjugateSettings,
    samples: &[(Vec<f64>, Vec<f64>, Vec<f64>)],
    tolerances: DualityTolerances,
) -> Result<DualityReport> {
    let fenchel_young = check_fenchel_young(m, conjugate, samples, tolerances.fenchel_young)?;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = samples.iter().map(|(x, xi, _)| (x.clone(), xi.clone())).collect();
    let biconjugation = check_biconjugation(m, conjugate, &pairs, tolerances.biconjugation)?;
    let numeric = ConjugateEvaluator::new(
        m,
        ConjugateSettings {
            use_closed_form: false,
            ..*conjugate
        },
    );
    let mut closed_form_deviation: Option<f64> = None;
    for (x, _, eta) in samples {
        if let Some(exact) = m.closed_form_conjugate(x, eta) {
            let dev = (numeric.eval(x, eta)? - exact).abs() / exact.max(1.0);
            closed_form_deviation = Some(closed_form_deviation.map_or(dev, |d| d.max(dev)));
        }
    }
    Ok(DualityReport {
        fenchel_young,
        biconjugation,
        closed_form_deviation,
        tolerances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Domain;
    use crate::nfunction::CoefficientField;

    fn numeric() -> ConjugateSettings {
        ConjugateSettings {
            use_closed_form: false,
            ..Default::default()
        }
    }

    #[test]
    fn square_conjugate_examples() {
        let m = NFunction::constant_power(Domain::unit_square(), 2.0, 1.0).unwrap();
        let c = ConjugateEvaluator::new(&m, numeric());
        let x = [0.5, 0.5];
        assert!((c.eval(&x, &[2.0, 0.0]).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(c.eval(&x, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn cubic_conjugate_matches_legendre_transform() {
        // dense scalar grid oracle for sup_t (3t - t³) = 2 at t = 1
        let grid_max = (0..=200_000)
            .map(|k| {
                let t = k as f64 * 1e-5;
                3.0 * t - t * t * t
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((grid_max - 2.0).abs() < 1e-9);
        let m = NFunction::constant_power(Domain::unit_square(), 3.0, 1.0).unwrap();
        let c = ConjugateEvaluator::new(&m, numeric());
        let v = c.eval(&[0.2, 0.2], &[0.0, 3.0]).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn off_axis_maximizer_is_found() {
        // orthotropic M with η on an axis still has its maximizer there, but
        // a non-separable M does not: ½|ξ|² + ¼(ξ₁+ξ₂)⁴ at η = (1, 0).
        let custom = crate::nfunction::CustomIntegrand {
            label: "quartic".into(),
            value: alloc::boxed::Box::new(|_, z: &[f64]| {
                let s = z[0] + z[1];
                0.5 * (z[0] * z[0] + z[1] * z[1]) + 0.25 * s * s * s * s
            }),
            gradient: None,
            conjugate: None,
        };
        let m = NFunction::custom(
            Domain::unit_square(),
            custom,
            crate::nfunction::YoungFunction::power(0.5, 2.0),
            crate::nfunction::YoungFunction::new(alloc::vec![
                crate::nfunction::YoungTerm {
                    coef: 0.5,
                    arg_scale: 1.0,
                    shape: crate::nfunction::YoungShape::Power(2.0)
                },
                crate::nfunction::YoungTerm {
                    coef: 1.0,
                    arg_scale: 1.0,
                    shape: crate::nfunction::YoungShape::Power(4.0)
                },
            ]),
        )
        .unwrap();
        let c = ConjugateEvaluator::new(&m, numeric());
        let v = c.eval(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        // brute-force grid oracle over [-2,2]²
        let mut best = f64::NEG_INFINITY;
        for i in 0..=800 {
            for j in 0..=800 {
                let (a, b) = (-2.0 + i as f64 * 0.005, -2.0 + j as f64 * 0.005);
                let s = a + b;
                best = best.max(a - 0.5 * (a * a + b * b) - 0.25 * s * s * s * s);
            }
        }
        assert!(v >= best - 1e-12 && v - best < 1e-4, "{v} vs {best}");
    }

    #[test]
    fn fenchel_young_examples() {
        let m = NFunction::constant_power(Domain::unit_square(), 2.0, 1.0).unwrap();
        let x = vec![0.5, 0.5];
        let samples = vec![
            (x.clone(), vec![1.0, 0.0], vec![2.0, 0.0]),
            (x.clone(), vec![0.0, 0.0], vec![3.0, -1.0]),
            (x.clone(), vec![1.0, 0.0], vec![1.0, 0.0]),
        ];
        let r = check_fenchel_young(&m, &numeric(), &samples, 1e-10).unwrap();
        assert!(r.passed());
        assert!(r.entries[0].margin.abs() < 1e-10);
        assert!((r.entries[2].margin - 0.25).abs() < 1e-10);
    }

    #[test]
    fn biconjugation_examples() {
        let half = NFunction::constant_power(Domain::unit_square(), 2.0, 0.5).unwrap();
        let x = vec![0.3, 0.6];
        let r = check_biconjugation(
            &half,
            &numeric(),
            &[(x.clone(), vec![0.7, -1.2]), (x.clone(), vec![0.0, 0.0])],
            1e-5,
        )
        .unwrap();
        assert!(r.passed(), "{:?}", r.entries);
        assert_eq!(r.entries[1].3, 0.0);

        let cubic = NFunction::constant_power(Domain::unit_square(), 3.0, 1.0).unwrap();
        let r = check_biconjugation(&cubic, &numeric(), &[(x, vec![1.0, 0.0])], 1e-5).unwrap();
        assert!((r.entries[0].3 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn double_phase_conjugate_against_scalar_oracle() {
        // radial: M*(η) = sup_t (t|η| − t² − a t³)
        let w = CoefficientField::distance_power(2, 0, 0.0, 1.0, 1.0);
        let m = NFunction::double_phase(Domain::unit_square(), 2.0, 3.0, w, false).unwrap();
        let c = ConjugateEvaluator::with_defaults(&m);
        let (x, eta) = ([0.4, 0.9], [1.5, -2.0]);
        let s = norm(&eta);
        let oracle = (0..=400_000)
            .map(|k| {
                let t = k as f64 * 1e-5;
                t * s - t * t - 0.4 * t * t * t
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let v = c.eval(&x, &eta).unwrap();
        assert!((v - oracle).abs() < 1e-8 * oracle, "{v} vs {oracle}");
    }

    #[test]
    fn radius_exhaustion_is_reported() {
        let m = NFunction::constant_power(Domain::unit_square(), 1.2, 1.0).unwrap();
        let settings = ConjugateSettings {
            r_max: 1.0,
            max_doublings: 2,
            use_closed_form: false,
            ..Default::default()
        };
        let c = ConjugateEvaluator::new(&m, settings);
        assert!(matches!(
            c.eval(&[0.5, 0.5], &[5.0, 0.0]),
            Err(Error::SearchRadiusExhausted { .. })
        ));
    }
}
