//! Dense numerical primitives: symmetric eigendecomposition, SVD, polar factor and
//! log-log least squares. Everything here is a pure function of its inputs.

mod eigen;
mod fit;
mod matrix;
mod polar;
mod svd;

pub use eigen::{sym_eig, EigenResult, JACOBI_TOL, SYMMETRY_TOL};
pub use fit::{loglog_slope, LogLogFit};
pub use matrix::DenseMatrix;
pub use polar::{polar_factor, DEFAULT_RANK_TOL};
pub use svd::{svd, SvdResult, SVD_ZERO_TOL};

pub(crate) use matrix::dot;
