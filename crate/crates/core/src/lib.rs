//! Change-of-variables preconditioning for multiple-network poroelasticity.
//!
//! The pressure unknowns of the MPET (and rigid-matrix MPT) equations are
//! transformed by a matrix `P` that diagonalizes the conductivity matrix and
//! the exchange/coupling matrix by congruence. After the transformation the
//! pressure blocks decouple and a block-diagonal preconditioner with one
//! exactly factorized block per field is robust in the material parameters.
//!
//! Layout:
//!
//! * [`congruence`] dense `J x J` algebra: Jacobi eigensolver, exchange and
//!   coupling matrices, simultaneous diagonalization.
//! * [`meshfem`] structured unit-square meshes and P1/P2 assembly.
//! * [`systems`] MPT/MPET block systems, original and transformed.
//! * [`solvers`] sparse Cholesky, block-diagonal preconditioners, MinRes.
//! * [`analysis`] condition numbers of preconditioned operators.
//! * [`cli`] configuration, sweeps and CSV output for the `mpet` binary.

pub mod analysis;
pub mod cli;
pub mod congruence;
mod error;
pub mod meshfem;
pub mod solvers;
pub mod systems;

pub use error::{Error, Result};
