use alloc::vec;
use alloc::vec::Vec;

use super::{GalerkinSolution, GalerkinSystem};
use crate::math::norm;
use crate::Result;

/// `H_δ(t)`: 0 for `t < 0`, `t/δ` on `[0, δ]`, 1 for `t > δ`.
pub fn heaviside(t: f64, delta: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else if t > delta {
        1.0
    } else {
        t / delta
    }
}

/// The three integrals for one `δ`, with `w = u¹ − u²` and the band
/// `{0 ≤ w ≤ δ}` taken per quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniquenessLevel {
    pub delta: f64,
    /// `(1/δ)∫_band (A(x,∇u¹) − A(x,∇u²))·∇w`.
    pub j1: f64,
    /// `(1/δ)∫_band (Φ(u¹) − Φ(u²))·∇w`.
    pub j2: f64,
    /// `∫(b(x,u¹) − b(x,u²)) H_δ(w)`.
    pub j3: f64,
    /// `L_Φ ∫_band |∇w|`.
    pub j2_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    /// Levels in the order of the schedule.
    pub levels: Vec<UniquenessLevel>,
    /// `‖u¹ − u²‖_{L¹}`.
    pub l1_distance: f64,
    /// Largest nodal difference `|α¹ − α²|_∞`.
    pub sup_distance: f64,
    pub tolerance: f64,
}

impl UniquenessReport {
    pub fn j1_nonnegative(&self, tol: f64) -> bool {
        self.levels.iter().all(|l| l.j1 >= -tol)
    }

    pub fn j2_within_bound(&self) -> bool {
        self.levels
            .iter()
            .all(|l| l.j2.abs() <= l.j2_bound * (1.0 + 1e-9) + 1e-15)
    }

    /// `|J₂(δ_min)| ≤ max(0.1 |J₂(δ_max)|, tol)`.
    pub fn j2_decreases(&self) -> bool {
        let lo = self.levels.iter().min_by(|a, b| a.delta.total_cmp(&b.delta));
        let hi = self.levels.iter().max_by(|a, b| a.delta.total_cmp(&b.delta));
        match (lo, hi) {
            (Some(lo), Some(hi)) => lo.j2.abs() <= (0.1 * hi.j2.abs()).max(self.tolerance),
            _ => true,
        }
    }

    pub fn solutions_agree(&self) -> bool {
        self.l1_distance <= self.tolerance
    }

    pub fn passed(&self) -> bool {
        self.j1_nonnegative(self.tolerance) && self.j2_within_bound() && self.j2_decreases() && self.solutions_agree()
    }
}

/// Evaluates the Heaviside-test integrals for two solutions of one system.
pub fn uniqueness_probe(
    sys: &GalerkinSystem<'_>,
    sol1: &GalerkinSolution,
    sol2: &GalerkinSolution,
    deltas: &[f64],
    tolerance: f64,
) -> Result<UniquenessReport> {
    let basis = sys.basis();
    let data = sys.data();
    let quad = basis.quadrature();
    let d = basis.dim();
    if !data.b.is_strictly_increasing() {
        return Err(crate::error::invalid("b", "uniqueness needs a strictly increasing b"));
    }
    let lip = data
        .phi
        .lipschitz()
        .ok_or_else(|| crate::error::invalid("phi", "uniqueness needs a Lipschitz Φ"))?;
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(crate::error::invalid("deltas", "must be positive"));
    }
    let (u1, g1) = basis.interpolate(&sol1.alpha)?;
    let (u2, g2) = basis.interpolate(&sol2.alpha)?;
    let (mut a1, mut a2, mut p1, mut p2, mut gw) =
        (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut levels: Vec<UniquenessLevel> = deltas
        .iter()
        .map(|&delta| UniquenessLevel {
            delta,
            j1: 0.0,
            j2: 0.0,
            j3: 0.0,
            j2_bound: 0.0,
        })
        .collect();
    let mut l1 = 0.0;
    for q in 0..quad.len() {
        let x = quad.point(q);
        let wq = quad.weight(q);
        let (s1, s2) = (u1.value(q)[0], u2.value(q)[0]);
        let w = s1 - s2;
        l1 += wq * w.abs();
        for i in 0..d {
            gw[i] = g1.value(q)[i] - g2.value(q)[i];
        }
        data.a.eval(x, g1.value(q), &mut a1);
        data.a.eval(x, g2.value(q), &mut a2);
        data.phi.eval(s1, &mut p1);
        data.phi.eval(s2, &mut p2);
        let da: f64 = (0..d).map(|i| (a1[i] - a2[i]) * gw[i]).sum();
        let dp: f64 = (0..d).map(|i| (p1[i] - p2[i]) * gw[i]).sum();
        let db = data.b.eval(x, s1) - data.b.eval(x, s2);
        for level in levels.iter_mut() {
            let delta = level.delta;
            if (0.0..=delta).contains(&w) {
                level.j1 += wq * da / delta;
                level.j2 += wq * dp / delta;
                level.j2_bound += wq * lip * norm(&gw);
            }
            level.j3 += wq * db * heaviside(w, delta);
        }
    }
    let diff: Vec<f64> = sol1.alpha.iter().zip(&sol2.alpha).map(|(a, b)| a - b).collect();
    let sup_distance = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(UniquenessReport {
        levels,
        l1_distance: l1,
        sup_distance,
        tolerance,
    })
}
