//! Numerical building blocks: adaptive quadrature, bracketed root finding,
//! Gauss–Legendre nodes and log-space arithmetic.

pub mod gauss;
pub mod logspace;
pub mod quadrature;
pub mod roots;

pub use logspace::{log_add_exp, log_sum_exp};
pub use quadrature::{Integral, QuadSettings};
pub use roots::{find_root, Root, RootSettings};
