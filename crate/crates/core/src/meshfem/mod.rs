//! Structured meshes of the unit square and P1/P2 Lagrange assembly.

mod assembly;
mod csr;
mod dirichlet;
mod dofmap;
mod mesh;
pub mod quadrature;

pub use assembly::{
    assemble_divergence_p2_p1, assemble_elasticity_p2, assemble_load_p1,
    assemble_load_p2_vector, assemble_mass_p1, assemble_stiffness_p1, l2_error_p1,
    l2_error_p2_vector,
};
pub use csr::CsrMatrix;
pub use dirichlet::apply_dirichlet;
pub use dofmap::{DisplacementBc, DofMap, Space};
pub use mesh::{build_unit_square_mesh, StructuredMesh};
