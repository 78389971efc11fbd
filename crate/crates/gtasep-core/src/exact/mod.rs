//! Exact finite-time objects: the Green function determinant, the matrix
//! kernel of the joint tagged-particle distributions, and the discrete
//! Fredholm determinant that evaluates them.
//!
//! Every contour evaluator here has an exact big-rational mirror in
//! [`oracle`] (Laurent-coefficient extraction), which is the independent
//! route the cross-checks run against.

mod assemble;
mod kernels;
mod oracle;

pub use assemble::{
    fredholm_value, joint_distribution, one_point_tail_grid, DiscreteKernelMatrix, JointDist,
    TruncationPolicy,
};
pub use kernels::{
    f_n, green_function, ktilde_alt, ktilde_step, ktilde_step_series, orthogonality_defect,
    phi_alt, phi_star, phi_step, psi_alt, psi_step, psi_tilde_step, EvalMethod,
};
pub use oracle::{
    f_n_exact, green_function_exact, ktilde_alt_exact, ktilde_step_exact, phi_star_exact,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error(transparent)]
    Quad(#[from] crate::quad::QuadError),
    #[error(transparent)]
    Series(#[from] crate::series::SeriesError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("truncation instability: margin run moved the value by {0:e}")]
    TruncationInstability(f64),
    #[error("kernel matrix could not be conditioned (overflowing entries)")]
    Conditioning,
}
