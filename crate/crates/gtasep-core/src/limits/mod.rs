//! Limiting kernels and their continuum Fredholm determinants.
//!
//! Covers the special functions (Airy, modified Bessel), the extended
//! Airy(1/2) kernels, the transitional kernel family interpolating between
//! KPZ and fully correlated Gaussian behavior, and three ways to evaluate
//! gap determinants: Gauss-Nystrom for smooth kernels, uniform-grid
//! embedding where the transport delta becomes an exact lattice map, and a
//! minor-decomposition route that integrates the delta analytically.

mod airy;
mod fredholm;
mod kernels;

pub use airy::{airy, bessel_i};
pub use fredholm::{
    fredholm_det, fredholm_det_minor_decomposition, one_point_cdf, tail_limit_checks,
    ContinuumFredholmProblem, GridKind, GridSpec, TailChecks,
};
pub use kernels::{
    airy1_kernel, airy2_kernel, bessel_density, gauss_n_smooth, x1_smooth, KernelEval,
    LimitKernelId, Transport, TransAltEval, TransStepEval,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid instability: values moved by {0:e} under refinement")]
    GridInstability(f64),
    #[error("delta offset {0} is incommensurate with any refinement of the grid")]
    OffsetNotOnGrid(f64),
    #[error("kernel matrix could not be conditioned")]
    Conditioning,
}
