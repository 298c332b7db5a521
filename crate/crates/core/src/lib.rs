//! Matrix-free stochastic trace estimation.
//!
//! The crate estimates `tr(B)` for a symmetric `B` that is only available
//! through matrix-vector products, and `log det(A) = tr(log A)` for SPD `A`
//! by pairing random probing with Lanczos (Gauss) quadrature. Every estimate
//! can be paired with an a-priori `(epsilon, delta)` statement: the
//! [`bounds`] module turns norm information into failure probabilities,
//! error envelopes, sample counts and Lanczos iteration counts.
//!
//! Layout:
//!
//! * [`probe`]: reproducible Gaussian / Rademacher / unit-basis probe streams.
//! * [`operator`]: the [`SymmetricOperator`] trait, sparse storage, Matrix
//!   Market input, synthetic generators and norm computation.
//! * [`estimator`]: the Hutchinson estimator over exact or Lanczos quadratic forms.
//! * [`lanczos`]: tridiagonalization, Gauss and Gauss-Lobatto quadrature,
//!   Bernstein-ellipse error bounds.
//! * [`bounds`]: tail bounds and sample-size / iteration planners.
//! * [`logdet`]: planned and adaptive log-determinant estimation.
//! * [`oracle`]: dense brute-force references used for validation.
//! * [`experiment`]: data generators for failure-probability and envelope sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod func;
pub mod lanczos;
pub mod logdet;
pub mod operator;
pub mod oracle;
mod parallel;
pub mod probe;
mod summation;

pub use error::{Error, Result};
pub use func::MatrixFunction;
pub use operator::SymmetricOperator;
pub use probe::{ProbeKind, ProbeStream};
