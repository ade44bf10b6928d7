//! Discretization backbone: domains, structured meshes, quadrature and P1 hat bases.
//!
//! The Galerkin spaces `V_n` are spanned by nodal hat functions on interior
//! vertices. Hats are Lipschitz and compactly supported; they stand in for a
//! smooth Galerkin basis. Convergence studies re-solve on each refined mesh, so
//! the spaces of successive levels need not be nested.

mod basis;
mod mesh;
mod quadrature;

pub use basis::BasisSet;
pub use mesh::{build_mesh, Domain, Mesh};
pub use quadrature::{Quadrature, QuadratureRule};
