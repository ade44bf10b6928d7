//! Sampling falsifier for the balance condition
//!
//! ```text
//! sup_{y∈B} M(y, ξ) ≤ M(x, C ξ)   for x ∈ B, |ξ| > 1, 1 ≤ M(x, C ξ) ≤ 1/|B|,
//! ```
//!
//! over balls `B ⊂ Ω` with `|B| ≤ 1`. A pass only means that no counterexample
//! was found at the configured sampling density.
//!
//! For double phase weights `a(x) = c|l(x)|^α` the standard sufficient
//! condition is `q/p ≤ 1 + α/d` (some statements print the ratio inverted);
//! [`analytic_prescreen`] evaluates it, while the sampling check does not use it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::invalid;
use crate::fem::Domain;
use crate::math::{cos, dot, halton, log_uniform, norm, random_direction, sin, sqrt};
use crate::nfunction::{CoefficientField, Family, NFunction};
use crate::Result;

/// Sampling plan for one candidate constant `C_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceProbe {
    pub c_m: f64,
    /// Low-discrepancy ball centers over Ω.
    pub centers: usize,
    /// Extra centers on the zero sets of double phase weights.
    pub zero_set_centers: usize,
    pub radii: Vec<f64>,
    /// Points `x` per ball (center plus rings).
    pub x_per_ball: usize,
    /// Vectors `ξ` per point `x`.
    pub xi_per_x: usize,
    /// Dense samples of `y` per ball before local refinement.
    pub y_samples: usize,
}

impl Default for BalanceProbe {
    fn default() -> Self {
        Self {
            c_m: 2.0,
            centers: 48,
            zero_set_centers: 16,
            radii: vec![0.2, 0.1, 0.05, 0.02, 0.01, 0.005],
            x_per_ball: 5,
            xi_per_x: 8,
            y_samples: 48,
        }
    }
}

/// `|B_r|` in dimension `dim`.
pub fn ball_measure(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r,
        _ => PI * r * r,
    }
}

impl BalanceProbe {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.c_m > 1.0) || !self.c_m.is_finite() {
            return Err(invalid("c_m", "the balance constant must exceed 1"));
        }
        if self.radii.is_empty() {
            return Err(invalid("radii", "at least one radius is needed"));
        }
        for r in &self.radii {
            if !(*r > 0.0) || ball_measure(dim, *r) > 1.0 {
                return Err(invalid(
                    "radii",
                    alloc::format!("radius {r} must be positive with |B| <= 1"),
                ));
            }
        }
        if self.x_per_ball == 0 || self.xi_per_x == 0 || self.y_samples == 0 {
            return Err(invalid("probe", "sample counts must be positive"));
        }
        Ok(())
    }
}

/// A sampled violation.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceWitness {
    pub center: Vec<f64>,
    pub radius: f64,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    /// Maximizer of `y ↦ M(y, ξ)` found in the ball.
    pub y: Vec<f64>,
    /// `sup_y M(y, ξ)`.
    pub sup_value: f64,
    /// `M(x, C ξ)`.
    pub bound: f64,
    /// `sup_value / bound − 1`.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub c_m: f64,
    pub balls_tested: usize,
    pub points_tested: usize,
    pub xi_tested: usize,
    /// Balls whose modular window admitted no sampled `ξ`.
    pub empty_balls: usize,
    pub violations: usize,
    /// Worst violations first, at most [`MAX_WITNESSES`].
    pub witnesses: Vec<BalanceWitness>,
    pub prescreen: Option<bool>,
}

pub const MAX_WITNESSES: usize = 64;

impl BalanceReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// `q/p ≤ 1 + α/d` for double phase families with a varying weight.
/// `None` when the family has no such condition.
pub fn analytic_prescreen(m: &NFunction) -> Option<bool> {
    let d = m.dim() as f64;
    let ok = |p: f64, q: f64, w: &CoefficientField| !w.varies() || q / p <= 1.0 + w.holder / d + 1e-12;
    match m.family() {
        Family::DoublePhase { p, q, weight, .. } => Some(ok(*p, *q, weight)),
        Family::AnisotropicDoublePhase { p, q, weights, .. } => {
            Some((0..weights.len()).all(|i| ok(p[i], q[i], &weights[i])))
        }
        Family::ConstantPower { .. } | Family::VariableExponent { .. } | Family::AnisotropicVariable { .. } => {
            Some(true)
        }
        Family::Custom(_) => None,
    }
}

fn weights_of(m: &NFunction) -> Vec<&CoefficientField> {
    match m.family() {
        Family::DoublePhase { weight, .. } => vec![weight],
        Family::AnisotropicDoublePhase { weights, .. } => weights.iter().collect(),
        _ => Vec::new(),
    }
}

fn ball_centers(m: &NFunction, probe: &BalanceProbe) -> Vec<Vec<f64>> {
    let domain = m.domain();
    let d = domain.dim();
    let mut out = Vec::new();
    let mut u = [0.0; 2];
    for i in 0..probe.centers {
        halton(i as u64 + 1, d, &mut u);
        let mut x = vec![0.0; d];
        domain.from_unit(&u[..d], &mut x);
        out.push(x);
    }
    for w in weights_of(m).into_iter().filter(|w| w.varies()) {
        let g2 = dot(&w.gradient, &w.gradient);
        for i in 0..probe.zero_set_centers {
            halton(i as u64 + 1, d, &mut u);
            let mut x = vec![0.0; d];
            domain.from_unit(&u[..d], &mut x);
            let l = w.linear_part(&x);
            for (xk, gk) in x.iter_mut().zip(&w.gradient) {
                *xk -= l * gk / g2;
            }
            if domain.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

/// `k` points of the ball: the center, then rings at `r/2` and `0.95 r`.
fn ball_points(center: &[f64], r: f64, k: usize) -> Vec<Vec<f64>> {
    let d = center.len();
    let mut pts = vec![center.to_vec()];
    let mut j = 0usize;
    while pts.len() < k {
        let rho = if j.is_multiple_of(2) { 0.5 * r } else { 0.95 * r };
        let mut p = center.to_vec();
        if d == 1 {
            p[0] += if (j / 2).is_multiple_of(2) { rho } else { -rho };
        } else {
            let theta = 2.0 * PI * (j as f64 * 0.618_033_988_749_895);
            p[0] += rho * cos(theta);
            p[1] += rho * sin(theta);
        }
        pts.push(p);
        j += 1;
    }
    pts
}

/// Dense samples of the ball: Halton points in the disk plus its boundary.
fn dense_points(center: &[f64], r: f64, k: usize) -> Vec<Vec<f64>> {
    let d = center.len();
    let mut pts = Vec::with_capacity(k);
    if d == 1 {
        for i in 0..k {
            let t = -1.0 + 2.0 * i as f64 / (k - 1).max(1) as f64;
            pts.push(vec![center[0] + r * t]);
        }
        return pts;
    }
    let boundary = k / 3;
    for i in 0..boundary {
        let theta = 2.0 * PI * i as f64 / boundary as f64;
        pts.push(vec![center[0] + r * cos(theta), center[1] + r * sin(theta)]);
    }
    let mut u = [0.0; 2];
    for i in 0..k - boundary {
        halton(i as u64 + 1, 2, &mut u);
        let (rho, theta) = (r * sqrt(u[0]), 2.0 * PI * u[1]);
        pts.push(vec![center[0] + rho * cos(theta), center[1] + rho * sin(theta)]);
    }
    pts
}

/// `sup_{y∈B} M(y, ξ)` by dense sampling and a compass search from the best sample.
fn sup_over_ball(m: &NFunction, center: &[f64], r: f64, xi: &[f64], samples: usize) -> (Vec<f64>, f64) {
    let d = center.len();
    let mut best = center.to_vec();
    let mut best_v = m.value(center, xi);
    for y in dense_points(center, r, samples) {
        let v = m.value(&y, xi);
        if v > best_v {
            best_v = v;
            best = y;
        }
    }
    let mut step = 0.25 * r;
    let mut trial = vec![0.0; d];
    while step > 1e-7 * r {
        let mut moved = false;
        for k in 0..d {
            for s in [1.0, -1.0] {
                trial.copy_from_slice(&best);
                trial[k] += s * step;
                let off: Vec<f64> = trial.iter().zip(center).map(|(a, b)| a - b).collect();
                let dist = norm(&off);
                if dist > r {
                    for i in 0..d {
                        trial[i] = center[i] + off[i] * r / dist;
                    }
                }
                let v = m.value(&trial, xi);
                if v > best_v {
                    best_v = v;
                    best.copy_from_slice(&trial);
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (best, best_v)
}

/// Solves `M(x, C t θ) = s` for `t > 0`.
fn radius_for_level(m: &NFunction, x: &[f64], theta: &[f64], c: f64, s: f64) -> Option<f64> {
    let f = |t: f64| {
        let z: Vec<f64> = theta.iter().map(|v| c * t * v).collect();
        m.value(x, &z)
    };
    let mut hi = 1.0;
    let mut guard = 0;
    while f(hi) < s {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return None;
        }
    }
    Some(crate::math::bisect_increasing(f, s, 0.0, hi, 1e-13))
}

/// Runs the probe for one constant.
pub fn check_balance<R: Rng + ?Sized>(m: &NFunction, probe: &BalanceProbe, rng: &mut R) -> Result<BalanceReport> {
    let domain: &Domain = m.domain();
    let d = domain.dim();
    probe.validate(d)?;
    let c = probe.c_m;
    let mut report = BalanceReport {
        c_m: c,
        balls_tested: 0,
        points_tested: 0,
        xi_tested: 0,
        empty_balls: 0,
        violations: 0,
        witnesses: Vec::new(),
        prescreen: analytic_prescreen(m),
    };
    let mut theta = vec![0.0; d];
    for center in ball_centers(m, probe) {
        for &r in &probe.radii {
            if domain.distance_to_boundary(&center) < r {
                continue;
            }
            report.balls_tested += 1;
            let top = 1.0 / ball_measure(d, r);
            let mut admitted = 0usize;
            for x in ball_points(&center, r, probe.x_per_ball) {
                report.points_tested += 1;
                for j in 0..probe.xi_per_x {
                    if j < d {
                        theta.iter_mut().for_each(|v| *v = 0.0);
                        theta[j] = 1.0;
                    } else {
                        random_direction(rng, &mut theta);
                    }
                    let s = if j == 0 || top <= 1.0 {
                        top
                    } else {
                        log_uniform(rng, 1.0, top)
                    };
                    let Some(t) = radius_for_level(m, &x, &theta, c, s) else {
                        continue;
                    };
                    if !(t > 1.0) {
                        continue;
                    }
                    let xi: Vec<f64> = theta.iter().map(|v| t * v).collect();
                    let cxi: Vec<f64> = xi.iter().map(|v| c * v).collect();
                    let bound = m.value(&x, &cxi);
                    if !(bound >= 1.0 - 1e-9 && bound <= top * (1.0 + 1e-9)) {
                        continue;
                    }
                    admitted += 1;
                    report.xi_tested += 1;
                    let (y, sup) = sup_over_ball(m, &center, r, &xi, probe.y_samples);
                    if sup > bound * (1.0 + 1e-12) {
                        report.violations += 1;
                        report.witnesses.push(BalanceWitness {
                            center: center.clone(),
                            radius: r,
                            x: x.clone(),
                            xi,
                            y,
                            sup_value: sup,
                            bound,
                            violation: sup / bound - 1.0,
                        });
                    }
                }
            }
            if admitted == 0 {
                report.empty_balls += 1;
            }
        }
        if report.witnesses.len() > 4 * MAX_WITNESSES {
            trim(&mut report.witnesses);
        }
    }
    trim(&mut report.witnesses);
    Ok(report)
}

fn trim(w: &mut Vec<BalanceWitness>) {
    w.sort_by(|a, b| {
        b.violation
            .total_cmp(&a.violation)
            .then_with(|| a.radius.total_cmp(&b.radius))
            .then_with(|| a.center.partial_cmp(&b.center).unwrap_or(core::cmp::Ordering::Equal))
    });
    w.truncate(MAX_WITNESSES);
}

/// Runs the probe for each constant of `schedule` (ascending) and returns the
/// reports together with the smallest passing constant.
pub fn smallest_passing_constant<R: Rng + ?Sized>(
    m: &NFunction,
    base: &BalanceProbe,
    schedule: &[f64],
    rng: &mut R,
) -> Result<(Option<f64>, Vec<BalanceReport>)> {
    let mut reports = Vec::with_capacity(schedule.len());
    let mut found = None;
    for &c in schedule {
        let probe = BalanceProbe { c_m: c, ..base.clone() };
        let r = check_balance(m, &probe, rng)?;
        if found.is_none() && r.passed() {
            found = Some(c);
        }
        reports.push(r);
    }
    Ok((found, reports))
}
