//! Dense kernels, a reverse-mode tape and a finite-difference verifier.

mod gradcheck;
mod matrix;
mod tape;

pub use gradcheck::{grad_check, relative_error, GradCheckConfig, GradCheckReport, Probe};
pub use matrix::{cosine, cosine_backward, dot, norm, sigmoid, sq_dist, Matrix};
pub use tape::{Tape, Var};
