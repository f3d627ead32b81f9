//! Finite-dimensional models for hermitian operator-valued kernels in
//! indefinite metric.
//!
//! The library builds Kolmogorov decompositions `K(x,y) = V(x)* J V(y)`
//! of hermitian kernels on finite label sets, certifies the Schwartz
//! boundedness condition `-L <= K <= L`, solves truncated Hamburger
//! moment problems over the free semigroup, constructs Stinespring-type
//! dilations of hermitian linear maps on matrix algebras, contraction
//! dilations of decomposable kernels, and holomorphic linearizations of
//! polynomial hermitian kernels through a truncated symmetric Fock model.
//!
//! Inner products are linear in the first argument and conjugate-linear
//! in the second throughout.

pub mod dilation;
mod error;
pub mod fock;
pub mod hankel;
pub mod json;
pub mod kernel;
pub mod kolmogorov;
pub mod specalg;

pub use error::{Error, Result};

/// Complex scalar used everywhere.
pub type C64 = num_complex::Complex64;
/// Dynamically sized complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dynamically sized complex vector.
pub type CVec = nalgebra::DVector<C64>;
