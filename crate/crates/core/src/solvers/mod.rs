//! Sparse Cholesky, block-diagonal preconditioners and preconditioned
//! MINRES.

mod cholesky;
mod minres;
mod precond;

pub use cholesky::{factorize_spd, reverse_cuthill_mckee, SpdFactor};
pub use minres::{initial_guess, minres, minres_from, InitialGuess, MinresOptions, SolveReport};
pub use precond::{
    build_precond_mpet_naive, build_precond_mpet_transformed, build_precond_mpt_naive,
    build_precond_mpt_transformed, BlockDiagPreconditioner, IdentityPreconditioner,
    LinearOperator, Preconditioner,
};
