//! Biconservative surfaces with parallel normalized mean curvature vector in E⁴.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod jet;
pub mod jetvec;
pub mod linalg4;
pub mod meancurv;
pub mod profile;
pub mod quadrature;
pub mod surface;
pub mod verify;

pub use error::Error;
