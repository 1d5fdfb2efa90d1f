//! Dense linear algebra and root-finding kernels sized for problems of
//! dimension up to about ten.

mod eig;
mod fd;
mod linalg;
mod minimize;
mod newton;
pub mod vector;

pub use eig::{projection_from_eigvecs, rank_with_tol, sym_eig, EigDecomposition};
pub use fd::{fd_jacobian, finite_diff_grad, finite_diff_hess, FdGradient, FdHessian};
pub use linalg::{solve_linear, Matrix, SymMatrix};
pub use minimize::{minimize_box, FnObjective, MinimizeOptions, Minimum, Objective};
pub use newton::{newton_solve, NewtonOptions, NewtonReport};
