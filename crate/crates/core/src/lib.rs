//! Numerical toolkit for the Dirichlet problem with data `(A, Φ, b, F)` in
//! the weak form
//!
//! ```text
//! ∫ A(x, ∇u)·∇v + Φ(u)·∇v + b(x, u) v dx = ∫ F·∇v dx   for all v,   u = 0 on ∂Ω,
//! ```
//!
//! posed in anisotropic Musielak–Orlicz spaces generated by an N-function
//! `M(x, ξ)`. The crate provides:
//!
//! - [`nfunction`]: catalog N-functions, numerical Legendre–Fenchel conjugation,
//!   Fenchel–Young and biconjugation checks.
//! - [`modular`]: modulars, Luxemburg norms, modular distances, a uniform
//!   integrability probe and the truncation operator `T_k`.
//! - [`balance`]: a sampling falsifier for the balance condition that yields
//!   modular density of smooth functions.
//! - [`problem`]: the data `(A, Φ, b, F)` and sampled validators of the
//!   structural assumptions, plus the canonical operator `A = ∇_ξ M_ε`.
//! - [`fem`]: meshes of intervals and rectangles, P1 hat bases and quadrature.
//! - [`galerkin`]: the residual map of the finite-dimensional problem, a damped
//!   Newton solver with a coercivity-ball fallback, energy and dual-norm bounds,
//!   convergence studies and a uniqueness probe.
//!
//! The crate is `no_std` and needs only `alloc`. All sampling takes an explicit
//! random number generator so runs are reproducible from a single seed.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod balance;
pub mod error;
pub mod fem;
pub mod galerkin;
pub mod linalg;
pub mod math;
pub mod modular;
pub mod nfunction;
pub mod problem;

pub use error::{Error, Result};
