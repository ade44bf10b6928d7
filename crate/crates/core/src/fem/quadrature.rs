use alloc::vec::Vec;

use super::Mesh;
use crate::math::sqrt;

/// Reference quadrature rule in barycentric coordinates; weights sum to one.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    dim: usize,
    order: usize,
    barycentric: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Three-point Gauss–Legendre rule on a segment, exact for degree 5.
    pub fn gauss_legendre_3() -> Self {
        let r = 0.5 * sqrt(3.0 / 5.0);
        let pts = [0.5 - r, 0.5, 0.5 + r];
        Self {
            dim: 1,
            order: 5,
            barycentric: pts.iter().flat_map(|s| [1.0 - s, *s]).collect(),
            weights: alloc::vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
        }
    }

    /// Symmetric seven-point rule on a triangle, exact for degree 5.
    pub fn triangle_7() -> Self {
        let s15 = sqrt(15.0);
        let a1 = (6.0 - s15) / 21.0;
        let a2 = (6.0 + s15) / 21.0;
        let w1 = (155.0 - s15) / 1200.0;
        let w2 = (155.0 + s15) / 1200.0;
        let third = 1.0 / 3.0;
        let mut bary = Vec::with_capacity(21);
        let mut weights = Vec::with_capacity(7);
        bary.extend_from_slice(&[third, third, third]);
        weights.push(9.0 / 40.0);
        for (a, w) in [(a1, w1), (a2, w2)] {
            let b = 1.0 - 2.0 * a;
            for p in [[a, a, b], [a, b, a], [b, a, a]] {
                bary.extend_from_slice(&p);
                weights.push(w);
            }
        }
        Self {
            dim: 2,
            order: 5,
            barycentric: bary,
            weights,
        }
    }

    pub fn for_dim(dim: usize) -> Self {
        if dim == 1 {
            Self::gauss_legendre_3()
        } else {
            Self::triangle_7()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Highest polynomial degree integrated exactly.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn barycentric(&self, q: usize) -> &[f64] {
        let k = self.dim + 1;
        &self.barycentric[q * k..(q + 1) * k]
    }
}

/// Physical quadrature points of a whole mesh.
///
/// Points are stored cell by cell in mesh order; reductions over the table
/// always run in this order, which makes sums bitwise reproducible.
#[derive(Debug, Clone)]
pub struct Quadrature {
    dim: usize,
    points_per_cell: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    barycentric: Vec<f64>,
}

impl Quadrature {
    pub fn on_mesh(mesh: &Mesh, rule: &QuadratureRule) -> Self {
        let d = mesh.dim();
        let nc = mesh.cell_count();
        let nq = rule.len();
        let mut coords = Vec::with_capacity(nc * nq * d);
        let mut weights = Vec::with_capacity(nc * nq);
        let mut barycentric = Vec::with_capacity(nc * nq * (d + 1));
        for c in 0..nc {
            let verts = mesh.cell(c);
            let vol = mesh.cell_volume(c);
            for q in 0..nq {
                let lam = rule.barycentric(q);
                for k in 0..d {
                    coords.push(verts.iter().zip(lam).map(|(v, l)| l * mesh.vertex(*v)[k]).sum());
                }
                weights.push(rule.weights()[q] * vol);
                barycentric.extend_from_slice(lam);
            }
        }
        Self {
            dim: d,
            points_per_cell: nq,
            coords,
            weights,
            barycentric,
        }
    }

    /// Table built from explicit points and weights (no cell structure).
    pub fn from_points(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Self {
        assert_eq!(coords.len(), dim * weights.len());
        let n = weights.len();
        Self {
            dim,
            points_per_cell: 1,
            coords,
            weights,
            barycentric: alloc::vec![0.0; n * (dim + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, q: usize) -> &[f64] {
        &self.coords[q * self.dim..(q + 1) * self.dim]
    }

    pub fn weight(&self, q: usize) -> f64 {
        self.weights[q]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell_of(&self, q: usize) -> usize {
        q / self.points_per_cell
    }

    pub fn points_per_cell(&self) -> usize {
        self.points_per_cell
    }

    pub fn barycentric(&self, q: usize) -> &[f64] {
        let k = self.dim + 1;
        &self.barycentric[q * k..(q + 1) * k]
    }

    /// `∫ f dx` by the table, summed in storage order.
    pub fn integrate<F: FnMut(usize, &[f64]) -> f64>(&self, mut f: F) -> f64 {
        let mut s = 0.0;
        for q in 0..self.len() {
            s += self.weights[q] * f(q, self.point(q));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_mesh, Domain};
    use crate::math::powf;

    #[test]
    fn weights_are_positive_and_normalized() {
        for rule in [QuadratureRule::gauss_legendre_3(), QuadratureRule::triangle_7()] {
            assert!(rule.weights().iter().all(|w| *w > 0.0));
            assert!((rule.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn interval_rule_exact_to_degree_five() {
        let m = build_mesh(Domain::unit_interval(), 3).unwrap();
        let q = Quadrature::on_mesh(&m, &QuadratureRule::gauss_legendre_3());
        for k in 0..=5 {
            let v = q.integrate(|_, x| powf(x[0], k as f64));
            assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "degree {k}");
        }
        let v6 = q.integrate(|_, x| powf(x[0], 6.0));
        assert!((v6 - 1.0 / 7.0).abs() > 1e-10);
    }

    #[test]
    fn triangle_rule_exact_to_degree_five() {
        // ∫_{[0,1]^2} x^i y^j = 1/((i+1)(j+1))
        let m = build_mesh(Domain::unit_square(), 2).unwrap();
        let q = Quadrature::on_mesh(&m, &QuadratureRule::triangle_7());
        for i in 0..=5 {
            for j in 0..=(5 - i) {
                let v = q.integrate(|_, x| powf(x[0], i as f64) * powf(x[1], j as f64));
                let e = 1.0 / ((i + 1) * (j + 1)) as f64;
                assert!((v - e).abs() < 1e-14, "x^{i} y^{j}: {v} vs {e}");
            }
        }
    }
}
