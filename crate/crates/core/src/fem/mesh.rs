use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{floor, sqrt};
use crate::{Error, Result};

/// Bounded domain Ω. Only intervals and axis-aligned rectangles are meshable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl Domain {
    pub fn unit_interval() -> Self {
        Domain::Interval { a: 0.0, b: 1.0 }
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }

    /// Builds a domain from a kind tag and its bounds (`[a, b]` or `[x0, x1, y0, y1]`).
    pub fn from_spec(kind: &str, bounds: &[f64]) -> Result<Self> {
        let d = match (kind, bounds) {
            ("interval", [a, b]) => Domain::Interval { a: *a, b: *b },
            ("rectangle", [x0, x1, y0, y1]) => Domain::Rectangle {
                x0: *x0,
                x1: *x1,
                y0: *y0,
                y1: *y1,
            },
            ("interval" | "rectangle", _) => {
                return Err(crate::error::invalid(
                    "domain.bounds",
                    format!("wrong number of bounds ({}) for {kind}", bounds.len()),
                ))
            }
            _ => return Err(Error::UnsupportedDomain(kind.into())),
        };
        let ok = match d {
            Domain::Interval { a, b } => a < b,
            Domain::Rectangle { x0, x1, y0, y1 } => x0 < x1 && y0 < y1,
        };
        if !ok {
            return Err(crate::error::invalid("domain.bounds", "bounds must be increasing"));
        }
        Ok(d)
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
        }
    }

    /// Lower and upper corner along `axis`.
    pub fn extent(&self, axis: usize) -> (f64, f64) {
        match (*self, axis) {
            (Domain::Interval { a, b }, 0) => (a, b),
            (Domain::Rectangle { x0, x1, .. }, 0) => (x0, x1),
            (Domain::Rectangle { y0, y1, .. }, 1) => (y0, y1),
            _ => (0.0, 0.0),
        }
    }

    /// Membership in the closure of Ω, with a relative slack of 1e-12.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        (0..self.dim()).all(|k| {
            let (lo, hi) = self.extent(k);
            let slack = 1e-12 * (hi - lo).max(1.0);
            x[k] >= lo - slack && x[k] <= hi + slack
        })
    }

    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        (0..self.dim())
            .map(|k| {
                let (lo, hi) = self.extent(k);
                (x[k] - lo).min(hi - x[k])
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Affine image of a point of the unit cube.
    pub fn from_unit(&self, u: &[f64], out: &mut [f64]) {
        for k in 0..self.dim() {
            let (lo, hi) = self.extent(k);
            out[k] = lo + u[k] * (hi - lo);
        }
    }
}

/// Simplicial mesh of an interval or rectangle.
#[derive(Debug, Clone)]
pub struct Mesh {
    domain: Domain,
    resolution: usize,
    vertices: Vec<f64>,
    cells: Vec<usize>,
    boundary: Vec<bool>,
    h: f64,
}

/// Uniform partition of an interval or structured triangulation of a rectangle.
///
/// A rectangle at resolution `n` has `n × n` squares, each cut along the
/// diagonal from its lower-left to its upper-right corner.
pub fn build_mesh(domain: Domain, resolution: usize) -> Result<Mesh> {
    if resolution < 2 {
        return Err(crate::error::invalid("resolution", "must be at least 2"));
    }
    let n = resolution;
    match domain {
        Domain::Interval { a, b } => {
            let hx = (b - a) / n as f64;
            let vertices = (0..=n).map(|i| a + i as f64 * hx).collect();
            let cells = (0..n).flat_map(|i| [i, i + 1]).collect();
            let mut boundary = vec![false; n + 1];
            boundary[0] = true;
            boundary[n] = true;
            Ok(Mesh {
                domain,
                resolution: n,
                vertices,
                cells,
                boundary,
                h: hx,
            })
        }
        Domain::Rectangle { x0, x1, y0, y1 } => {
            let hx = (x1 - x0) / n as f64;
            let hy = (y1 - y0) / n as f64;
            let mut vertices = Vec::with_capacity(2 * (n + 1) * (n + 1));
            let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
            for j in 0..=n {
                for i in 0..=n {
                    vertices.push(x0 + i as f64 * hx);
                    vertices.push(y0 + j as f64 * hy);
                    boundary.push(i == 0 || j == 0 || i == n || j == n);
                }
            }
            let vid = |i: usize, j: usize| j * (n + 1) + i;
            let mut cells = Vec::with_capacity(6 * n * n);
            for j in 0..n {
                for i in 0..n {
                    let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                    cells.extend_from_slice(&[v00, v10, v11]);
                    cells.extend_from_slice(&[v00, v11, v01]);
                }
            }
            Ok(Mesh {
                domain,
                resolution: n,
                vertices,
                cells,
                boundary,
                h: sqrt(hx * hx + hy * hy),
            })
        }
    }
}

impl Mesh {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Diameter of the largest cell.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn vertex_count(&self) -> usize {
        self.boundary.len()
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        let d = self.dim();
        &self.vertices[v * d..(v + 1) * d]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len() / (self.dim() + 1)
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.dim() + 1;
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn interior_vertex_count(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    /// Length or area of cell `c`.
    pub fn cell_volume(&self, c: usize) -> f64 {
        let v = self.cell(c);
        match self.dim() {
            1 => (self.vertex(v[1])[0] - self.vertex(v[0])[0]).abs(),
            _ => {
                let (a, b, p) = (self.vertex(v[0]), self.vertex(v[1]), self.vertex(v[2]));
                0.5 * ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])).abs()
            }
        }
    }

    /// Gradients of the barycentric coordinates of cell `c`, `dim` entries per vertex.
    pub fn barycentric_gradients(&self, c: usize) -> Vec<f64> {
        let v = self.cell(c);
        match self.dim() {
            1 => {
                let len = self.vertex(v[1])[0] - self.vertex(v[0])[0];
                vec![-1.0 / len, 1.0 / len]
            }
            _ => {
                let (a, b, p) = (self.vertex(v[0]), self.vertex(v[1]), self.vertex(v[2]));
                let det = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
                // λ1 = ((p1-a1)(x-a0) - (p0-a0)(y-a1))/det, λ2 = ((b0-a0)(y-a1) - (b1-a1)(x-a0))/det
                let g1 = [(p[1] - a[1]) / det, -(p[0] - a[0]) / det];
                let g2 = [-(b[1] - a[1]) / det, (b[0] - a[0]) / det];
                vec![-g1[0] - g2[0], -g1[1] - g2[1], g1[0], g1[1], g2[0], g2[1]]
            }
        }
    }

    /// Cell containing `x` and its barycentric coordinates.
    pub fn locate(&self, x: &[f64]) -> Option<(usize, [f64; 3])> {
        if !self.domain.contains(x) {
            return None;
        }
        let n = self.resolution;
        let index = |t: f64, lo: f64, hi: f64| -> (usize, f64) {
            let s = (t - lo) / (hi - lo) * n as f64;
            let i = (floor(s).max(0.0) as usize).min(n - 1);
            (i, (s - i as f64).clamp(0.0, 1.0))
        };
        match self.domain {
            Domain::Interval { a, b } => {
                let (i, s) = index(x[0], a, b);
                Some((i, [1.0 - s, s, 0.0]))
            }
            Domain::Rectangle { x0, x1, y0, y1 } => {
                let (i, s) = index(x[0], x0, x1);
                let (j, t) = index(x[1], y0, y1);
                let square = j * n + i;
                if s >= t {
                    // (v00, v10, v11)
                    Some((2 * square, [1.0 - s, s - t, t]))
                } else {
                    // (v00, v11, v01)
                    Some((2 * square + 1, [1.0 - t, s, t - s]))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_counts() {
        let m = build_mesh(Domain::unit_interval(), 4).unwrap();
        assert_eq!(m.cell_count(), 4);
        assert_eq!(m.interior_vertex_count(), 3);
        assert!((m.h() - 0.25).abs() < 1e-15);
        let vol: f64 = (0..m.cell_count()).map(|c| m.cell_volume(c)).sum();
        assert!((vol - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_counts() {
        // 2×2 squares → 8 triangles; only the centre vertex is interior.
        let m = build_mesh(Domain::unit_square(), 2).unwrap();
        assert_eq!(m.cell_count(), 8);
        assert_eq!(m.interior_vertex_count(), 1);
        let vol: f64 = (0..m.cell_count()).map(|c| m.cell_volume(c)).sum();
        assert!((vol - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_flags_match_geometry() {
        let m = build_mesh(
            Domain::Rectangle {
                x0: -1.0,
                x1: 2.0,
                y0: 0.0,
                y1: 0.5,
            },
            5,
        )
        .unwrap();
        for v in 0..m.vertex_count() {
            let on_edge = m.domain().distance_to_boundary(m.vertex(v)) < 1e-12;
            assert_eq!(on_edge, m.is_boundary(v));
        }
    }

    #[test]
    fn resolution_and_domain_errors() {
        assert!(build_mesh(Domain::unit_interval(), 1).is_err());
        assert_eq!(
            Domain::from_spec("disk", &[0.0, 1.0]),
            Err(Error::UnsupportedDomain("disk".into()))
        );
        assert!(Domain::from_spec("interval", &[1.0, 0.0]).is_err());
    }

    #[test]
    fn locate_recovers_point() {
        let m = build_mesh(Domain::unit_square(), 3).unwrap();
        for p in [[0.1, 0.7], [0.9, 0.05], [0.5, 0.5], [1.0, 1.0], [0.0, 0.0]] {
            let (c, lam) = m.locate(&p).unwrap();
            let v = m.cell(c);
            let mut x = [0.0; 2];
            for k in 0..3 {
                x[0] += lam[k] * m.vertex(v[k])[0];
                x[1] += lam[k] * m.vertex(v[k])[1];
                assert!(lam[k] >= -1e-14);
            }
            assert!((x[0] - p[0]).abs() < 1e-14 && (x[1] - p[1]).abs() < 1e-14);
        }
        assert!(m.locate(&[1.5, 0.5]).is_none());
    }
}
