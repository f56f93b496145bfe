//! Laplace approximations of `∫_Ω g(x) e^{N f(x,N)} dx` over boxes with
//! explicit, numerically certified remainder bounds, and checks of the
//! law of large numbers and fluctuation limits of the associated Gibbs
//! measures.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constants;
pub mod derivatives;
pub mod error;
pub mod gibbs;
pub mod laplace;
pub mod linalg;
pub mod problem;
pub mod quadrature;
pub mod report;
pub mod special;

pub use error::{Error, Result};
