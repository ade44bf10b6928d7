use alloc::vec;
use alloc::vec::Vec;

use super::{Mesh, Quadrature, QuadratureRule};
use crate::linalg::DenseMatrix;
use crate::modular::DiscreteField;
use crate::{Error, Result};

/// Nodal P1 hat functions `w_1, …, w_n` on the interior vertices of a mesh,
/// numbered in increasing vertex order, with tables at the quadrature points.
#[derive(Debug, Clone)]
pub struct BasisSet {
    mesh: Mesh,
    quadrature: Quadrature,
    dof_of_vertex: Vec<Option<usize>>,
    interior: Vec<usize>,
    cell_gradients: Vec<f64>,
    support: Vec<Vec<usize>>,
}

impl BasisSet {
    pub fn new(mesh: Mesh) -> Self {
        let rule = QuadratureRule::for_dim(mesh.dim());
        Self::with_rule(mesh, &rule)
    }

    pub fn with_rule(mesh: Mesh, rule: &QuadratureRule) -> Self {
        let quadrature = Quadrature::on_mesh(&mesh, rule);
        let mut dof_of_vertex = vec![None; mesh.vertex_count()];
        let mut interior = Vec::new();
        for (v, slot) in dof_of_vertex.iter_mut().enumerate() {
            if !mesh.is_boundary(v) {
                *slot = Some(interior.len());
                interior.push(v);
            }
        }
        let mut cell_gradients = Vec::with_capacity(mesh.cell_count() * (mesh.dim() + 1) * mesh.dim());
        let mut support = vec![Vec::new(); interior.len()];
        for c in 0..mesh.cell_count() {
            cell_gradients.extend(mesh.barycentric_gradients(c));
            for v in mesh.cell(c) {
                if let Some(k) = dof_of_vertex[*v] {
                    support[k].push(c);
                }
            }
        }
        Self {
            mesh,
            quadrature,
            dof_of_vertex,
            interior,
            cell_gradients,
            support,
        }
    }

    /// Dimension `n` of the space.
    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    /// Mesh vertex carrying basis function `k`.
    pub fn vertex_of(&self, k: usize) -> usize {
        self.interior[k]
    }

    pub fn dof_of(&self, vertex: usize) -> Option<usize> {
        self.dof_of_vertex[vertex]
    }

    /// Cells in the support of basis function `k`.
    pub fn support(&self, k: usize) -> &[usize] {
        &self.support[k]
    }

    /// Gradient of the local hat `local` on cell `c`.
    pub fn local_gradient(&self, c: usize, local: usize) -> &[f64] {
        let d = self.dim();
        let start = (c * (d + 1) + local) * d;
        &self.cell_gradients[start..start + d]
    }

    /// Range of quadrature indices belonging to cell `c`.
    pub fn cell_points(&self, c: usize) -> core::ops::Range<usize> {
        let k = self.quadrature.points_per_cell();
        c * k..(c + 1) * k
    }

    /// `u(x_q)` and `∇u(x_q)` for the coefficient vector `alpha`.
    pub fn value_at_point(&self, alpha: &[f64], q: usize, grad: &mut [f64]) -> f64 {
        let c = self.quadrature.cell_of(q);
        let lam = self.quadrature.barycentric(q);
        let mut u = 0.0;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (local, v) in self.mesh.cell(c).iter().enumerate() {
            if let Some(k) = self.dof_of_vertex[*v] {
                let a = alpha[k];
                u += a * lam[local];
                for (g, dg) in grad.iter_mut().zip(self.local_gradient(c, local)) {
                    *g += a * dg;
                }
            }
        }
        u
    }

    /// Tabulates `u_n = Σ α_k w_k` and `∇u_n` at all quadrature points.
    pub fn interpolate(&self, alpha: &[f64]) -> Result<(DiscreteField<'_>, DiscreteField<'_>)> {
        if alpha.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: alpha.len(),
            });
        }
        let d = self.dim();
        let nq = self.quadrature.len();
        let mut u = Vec::with_capacity(nq);
        let mut g = vec![0.0; nq * d];
        for q in 0..nq {
            u.push(self.value_at_point(alpha, q, &mut g[q * d..(q + 1) * d]));
        }
        Ok((
            DiscreteField::new(&self.quadrature, 1, u)?,
            DiscreteField::new(&self.quadrature, d, g)?,
        ))
    }

    /// `u_n(x)` and `∇u_n(x)` at an arbitrary point of the closed domain.
    pub fn evaluate_at(&self, alpha: &[f64], x: &[f64], grad: &mut [f64]) -> Option<f64> {
        let (c, lam) = self.mesh.locate(x)?;
        let mut u = 0.0;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (local, v) in self.mesh.cell(c).iter().enumerate() {
            if let Some(k) = self.dof_of_vertex[*v] {
                u += alpha[k] * lam[local];
                for (g, dg) in grad.iter_mut().zip(self.local_gradient(c, local)) {
                    *g += alpha[k] * dg;
                }
            }
        }
        Some(u)
    }

    /// Tabulates `u_n` and `∇u_n` at the points of another quadrature table,
    /// e.g. the one of a finer mesh.
    pub fn sample_on<'q>(
        &self,
        alpha: &[f64],
        target: &'q Quadrature,
    ) -> Result<(DiscreteField<'q>, DiscreteField<'q>)> {
        let d = self.dim();
        let mut u = Vec::with_capacity(target.len());
        let mut g = vec![0.0; target.len() * d];
        for q in 0..target.len() {
            let x = target.point(q);
            let v = self
                .evaluate_at(alpha, x, &mut g[q * d..(q + 1) * d])
                .ok_or_else(|| Error::DomainViolation { point: x.to_vec() })?;
            u.push(v);
        }
        Ok((DiscreteField::new(target, 1, u)?, DiscreteField::new(target, d, g)?))
    }

    /// Mass matrix `∫ w_i w_j`.
    pub fn mass_matrix(&self) -> DenseMatrix {
        let n = self.len();
        let mut m = DenseMatrix::zeros(n, n);
        for q in 0..self.quadrature.len() {
            let c = self.quadrature.cell_of(q);
            let lam = self.quadrature.barycentric(q);
            let w = self.quadrature.weight(q);
            let verts = self.mesh.cell(c);
            for (a, va) in verts.iter().enumerate() {
                let Some(i) = self.dof_of_vertex[*va] else { continue };
                for (b, vb) in verts.iter().enumerate() {
                    if let Some(j) = self.dof_of_vertex[*vb] {
                        m.add(i, j, w * lam[a] * lam[b]);
                    }
                }
            }
        }
        m
    }

    /// Stiffness matrix `∫ ∇w_i · ∇w_j`.
    pub fn stiffness_matrix(&self) -> DenseMatrix {
        let n = self.len();
        let mut k = DenseMatrix::zeros(n, n);
        for c in 0..self.mesh.cell_count() {
            let vol = self.mesh.cell_volume(c);
            let verts = self.mesh.cell(c);
            for (a, va) in verts.iter().enumerate() {
                let Some(i) = self.dof_of_vertex[*va] else { continue };
                for (b, vb) in verts.iter().enumerate() {
                    if let Some(j) = self.dof_of_vertex[*vb] {
                        let g: f64 = self
                            .local_gradient(c, a)
                            .iter()
                            .zip(self.local_gradient(c, b))
                            .map(|(x, y)| x * y)
                            .sum();
                        k.add(i, j, vol * g);
                    }
                }
            }
        }
        k
    }
}
