//! Experiment driver and spectral checks of the preconditioned operators.

mod experiment;
mod spectrum;

pub use experiment::{
    robustness_table, Admissibility, Experiment, PrecondKind, Prepared, ProblemKind,
    SolveOutcome, SpectrumMethod, SpectrumReport, TableRow, STORAGE_RATIO_BOUND,
};
pub use spectrum::{
    preconditioned_eigenvalues_dense, preconditioned_spectrum_dense,
    preconditioned_spectrum_lanczos, Spectrum, DENSE_CAP,
};
