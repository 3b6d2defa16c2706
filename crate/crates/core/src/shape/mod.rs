//! Domain derivatives: the Hadamard formula for simple eigenvalues, a
//! finite-difference oracle that genuinely deforms the quadrature, the
//! pullback comparison and the eigenfunction derivative.

mod eigfun;
mod fd;
mod hadamard;
mod pullback;

pub use eigfun::{eigenfunction_derivative, EigfunDerivative};
pub use fd::{fd_derivative, FdEstimate, FdRow, DEFAULT_STEPS};
pub use hadamard::{
    boundary_trace, hadamard_derivative, HadamardOptions, HadamardReport, HadamardTerms, NormalTermRule,
};
pub use pullback::{pullback_check, Embedding, PullbackReport};
