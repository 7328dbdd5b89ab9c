//! Subspace projected approximate matrix (SPAM) eigensolvers.
//!
//! The crate computes extreme eigenpairs of real symmetric matrices with a
//! Rayleigh-Ritz outer iteration whose expansion vector comes from one of
//! several strategies:
//!
//! * Lanczos: expand with the current residual.
//! * Full SPAM: expand with an eigenvector of the projected approximate matrix
//!   `A_k`, which agrees with `A` on the search space and with a cheap
//!   approximation `A0` on its complement.
//! * SPAM(1) and SPAM(1, l): one Jacobi-Davidson correction step for `A_k`,
//!   solved exactly or with `l` MinRES steps.
//! * JD(l) and JD(1, l): Jacobi-Davidson with the correction equation for `A`
//!   or for `A0`, solved with `l` MinRES steps.
//!
//! Module map: [`linop`] (operators and dense kernels), [`minres`],
//! [`problems`] (test matrices and Matrix Market I/O), [`approx`] (choices of
//! `A0`), [`spamop`] (the implicit `A_k`), [`solvers`] (the outer iteration).

pub mod approx;
pub mod error;
pub mod linop;
pub mod minres;
pub mod problems;
pub mod random;
pub mod solvers;
pub mod spamop;

pub use error::{Error, Result};
pub use linop::{LinearMap, SymmetricOperator, Tally};
