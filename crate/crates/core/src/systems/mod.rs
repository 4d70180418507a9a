//! Block linear systems for the multiple-network poroelastic (MPET) and
//! multiple-network pressure (MPT) problems, before and after the change of
//! pressure variables.

mod assemble;
mod block;
mod transform;

pub use assemble::{
    assemble_mpet, assemble_mpet_transformed, assemble_mpt, assemble_mpt_transformed,
    experiment_source, rhs_mpet, rhs_mpt, Discretization,
};
pub use block::{BlockSystem, BlockVector};
pub use transform::{recover_pressures, total_pressure_postprocess, transform_rhs};
