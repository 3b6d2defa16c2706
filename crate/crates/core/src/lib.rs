//! Nyström discretization of nonlocal eigenvalue operators
//! `B u = a u - ∫ J(·, y) u(y) dy` on Euclidean domains and embedded
//! manifolds, together with
//!
//! * spectrum computation and classification against the essential band,
//! * the Hadamard shape derivative of simple eigenvalues, cross-checked
//!   against finite differences on genuinely deformed quadratures,
//! * the eigenfunction derivative as the solution of a bordered system,
//! * rearrangements (Schwarz symmetrization) and the Faber–Krahn comparison
//!   between a domain and the ball of the same measure.
//!
//! The [`cli`] module wires everything into a config-driven runner.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod operator;
pub mod quadrature;
pub mod rearrange;
pub mod scenarios;
pub mod shape;

pub use error::{Error, Result};
