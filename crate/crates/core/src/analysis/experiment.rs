use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::spectrum::{preconditioned_spectrum_dense, preconditioned_spectrum_lanczos, Spectrum, DENSE_CAP};
use crate::congruence::{
    diagonalize_by_congruence, transform_parameters, CongruenceOptions, CongruenceResult,
    MpetParameters,
};
use crate::meshfem::DisplacementBc;
use crate::solvers::{
    build_precond_mpet_naive, build_precond_mpet_transformed, build_precond_mpt_naive,
    build_precond_mpt_transformed, minres, BlockDiagPreconditioner, MinresOptions, SolveReport,
};
use crate::systems::{
    assemble_mpet, assemble_mpet_transformed, assemble_mpt, assemble_mpt_transformed,
    experiment_source, recover_pressures, rhs_mpet, rhs_mpt, transform_rhs, BlockSystem,
    BlockVector, Discretization,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProblemKind {
    Mpt,
    #[default]
    Mpet,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PrecondKind {
    Naive,
    #[default]
    Transformed,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Mpt => "mpt",
            ProblemKind::Mpet => "mpet",
        })
    }
}

impl fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecondKind::Naive => "naive",
            PrecondKind::Transformed => "transformed",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mpt" => Ok(ProblemKind::Mpt),
            "mpet" => Ok(ProblemKind::Mpet),
            other => Err(Error::Parse(format!("unknown problem '{other}' (expected mpt or mpet)"))),
        }
    }
}

impl FromStr for PrecondKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(PrecondKind::Naive),
            "transformed" => Ok(PrecondKind::Transformed),
            other => Err(Error::Parse(format!(
                "unknown preconditioner '{other}' (expected naive or transformed)"
            ))),
        }
    }
}

/// How to obtain the preconditioned spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectrumMethod {
    Dense { cap: usize },
    Lanczos { krylov_dim: usize },
    /// Dense up to `cap` free unknowns, Lanczos beyond.
    Auto { cap: usize, krylov_dim: usize },
}

impl Default for SpectrumMethod {
    fn default() -> Self {
        SpectrumMethod::Auto {
            cap: DENSE_CAP,
            krylov_dim: 200,
        }
    }
}

/// Hypotheses of the parameter-robust bounds: `λ ≥ 2μ` and
/// `s_j ≤ 10 γ̃_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Admissibility {
    pub lambda_ok: bool,
    /// `max_j s_j / γ̃_j` (zero when `s = 0`).
    pub storage_ratio: f64,
    pub admissible: bool,
}

pub const STORAGE_RATIO_BOUND: f64 = 10.0;

/// One problem instance: mesh size, parameters and preconditioner choice.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub problem: ProblemKind,
    pub n: usize,
    pub params: MpetParameters,
    pub precond: PrecondKind,
    pub include_storage: bool,
    pub bc: DisplacementBc,
    pub congruence: CongruenceOptions,
}

/// Assembled system, preconditioner and right-hand side. For the
/// transformed preconditioner the system and right-hand side are in the
/// transformed pressure variables.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub disc: Discretization,
    pub system: BlockSystem,
    pub preconditioner: BlockDiagPreconditioner,
    pub rhs: BlockVector,
    pub transform: Option<CongruenceResult>,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    /// Solution in the original variables.
    pub solution: BlockVector,
    pub report: SolveReport,
}

impl Experiment {
    pub fn new(problem: ProblemKind, n: usize, params: MpetParameters, precond: PrecondKind) -> Self {
        Experiment {
            problem,
            n,
            params,
            precond,
            include_storage: false,
            bc: DisplacementBc::default(),
            congruence: CongruenceOptions::default(),
        }
    }

    fn transform(&self) -> Result<CongruenceResult> {
        match self.problem {
            ProblemKind::Mpet => transform_parameters(&self.params, self.include_storage, &self.congruence),
            ProblemKind::Mpt => {
                diagonalize_by_congruence(&self.params.k_matrix(), &self.params.exchange_matrix()?, &self.congruence)
            }
        }
    }

    pub fn prepare(&self) -> Result<Prepared> {
        self.params.validate()?;
        let disc = Discretization::new(self.n, self.bc)?;
        let j = self.params.j();
        let (system, preconditioner, rhs, transform) = match (self.problem, self.precond) {
            (ProblemKind::Mpet, PrecondKind::Naive) => {
                let sys = assemble_mpet(&disc, &self.params)?;
                let b = build_precond_mpet_naive(&disc, &self.params)?;
                (sys, b, rhs_mpet(&disc, j, |_, _| [0.0, 0.0], experiment_source), None)
            }
            (ProblemKind::Mpet, PrecondKind::Transformed) => {
                let r = self.transform()?;
                let sys = assemble_mpet_transformed(&disc, &self.params, &r)?;
                let b = build_precond_mpet_transformed(&disc, &self.params, &r)?;
                let rhs = transform_rhs(&rhs_mpet(&disc, j, |_, _| [0.0, 0.0], experiment_source), &r.p)?;
                (sys, b, rhs, Some(r))
            }
            (ProblemKind::Mpt, PrecondKind::Naive) => {
                let sys = assemble_mpt(&disc, &self.params.k, &self.params.exchange_matrix()?)?;
                let b = build_precond_mpt_naive(&sys)?;
                (sys, b, rhs_mpt(&disc, j, experiment_source), None)
            }
            (ProblemKind::Mpt, PrecondKind::Transformed) => {
                let r = self.transform()?;
                let sys = assemble_mpt_transformed(&disc, &r)?;
                let b = build_precond_mpt_transformed(&disc, &r)?;
                let rhs = transform_rhs(&rhs_mpt(&disc, j, experiment_source), &r.p)?;
                (sys, b, rhs, Some(r))
            }
        };
        preconditioner.check_layout(&system)?;
        Ok(Prepared {
            disc,
            system,
            preconditioner,
            rhs,
            transform,
        })
    }

    pub fn solve(&self, opts: &MinresOptions) -> Result<SolveOutcome> {
        let prep = self.prepare()?;
        prep.solve(opts)
    }

    pub fn spectrum(&self, method: SpectrumMethod, seed: u64) -> Result<Spectrum> {
        self.prepare()?.spectrum(method, seed)
    }

    pub fn admissibility(&self) -> Result<Admissibility> {
        let lambda_ok = self.problem == ProblemKind::Mpt || self.params.lambda >= 2.0 * self.params.mu;
        let storage_ratio = if self.params.s.iter().all(|&s| s == 0.0) {
            0.0
        } else {
            let r = transform_parameters(&self.params, false, &self.congruence)?;
            // γ̃ pairs with the transformed storage diagonal (PᵀSP)_jj.
            let st = r.transform(&self.params.storage_matrix());
            (0..self.params.j())
                .map(|j| {
                    let (s, g) = (st.get(j, j), r.gamma_tilde[j]);
                    if s <= 0.0 {
                        0.0
                    } else if g <= 0.0 {
                        f64::INFINITY
                    } else {
                        s / g
                    }
                })
                .fold(0.0, f64::max)
        };
        Ok(Admissibility {
            lambda_ok,
            storage_ratio,
            admissible: lambda_ok && storage_ratio <= STORAGE_RATIO_BOUND,
        })
    }
}

impl Prepared {
    pub fn solve(&self, opts: &MinresOptions) -> Result<SolveOutcome> {
        let (x, report) = minres(&self.system, &self.preconditioner, &self.rhs.to_flat(), opts)?;
        let x = BlockVector::from_flat(&self.system.layout, &x)?;
        let solution = match &self.transform {
            Some(r) => recover_pressures(&x, &r.p)?,
            None => x,
        };
        Ok(SolveOutcome { solution, report })
    }

    pub fn spectrum(&self, method: SpectrumMethod, seed: u64) -> Result<Spectrum> {
        let free = self.system.free_global().len();
        match method {
            SpectrumMethod::Dense { cap } => preconditioned_spectrum_dense(&self.system, &self.preconditioner, cap),
            SpectrumMethod::Lanczos { krylov_dim } => {
                preconditioned_spectrum_lanczos(&self.system, &self.preconditioner, krylov_dim, seed)
            }
            SpectrumMethod::Auto { cap, krylov_dim } => {
                if free <= cap {
                    preconditioned_spectrum_dense(&self.system, &self.preconditioner, cap)
                } else {
                    preconditioned_spectrum_lanczos(&self.system, &self.preconditioner, krylov_dim, seed)
                }
            }
        }
    }
}

/// Parameters, mesh size and results of one grid point.
#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub parameters: MpetParameters,
    pub n: usize,
    pub spectrum: Spectrum,
}

#[derive(Clone, Debug)]
pub struct TableRow {
    pub experiment: Experiment,
    pub admissibility: Admissibility,
    pub solve: Option<SolveReport>,
    pub spectrum: Option<SpectrumReport>,
}

/// Runs every `(N, parameters)` combination, mesh sizes outermost, in
/// parallel on the current rayon pool. Rows come back in grid order.
pub fn robustness_table(
    template: &Experiment,
    mesh_sizes: &[usize],
    grid: &[MpetParameters],
    solver: Option<&MinresOptions>,
    spectrum: Option<SpectrumMethod>,
) -> Result<Vec<TableRow>> {
    if mesh_sizes.is_empty() || grid.is_empty() {
        return Err(Error::validation("robustness table needs at least one mesh size and one parameter point"));
    }
    let points: Vec<Experiment> = mesh_sizes
        .iter()
        .flat_map(|&n| {
            grid.iter().map(move |p| Experiment {
                n,
                params: p.clone(),
                ..template.clone()
            })
        })
        .collect();
    points
        .into_par_iter()
        .map(|exp| {
            let admissibility = exp.admissibility()?;
            let prep = exp.prepare()?;
            let solve = solver.map(|o| prep.solve(o).map(|s| s.report)).transpose()?;
            let seed = solver.map_or(0, |o| o.seed);
            let spectrum = spectrum
                .map(|m| prep.spectrum(m, seed))
                .transpose()?
                .map(|spectrum| SpectrumReport {
                    parameters: exp.params.clone(),
                    n: exp.n,
                    spectrum,
                });
            Ok(TableRow {
                experiment: exp,
                admissibility,
                solve,
                spectrum,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn dense_reference(exp: &Experiment) -> BlockVector {
        let naive = Experiment {
            precond: PrecondKind::Naive,
            ..exp.clone()
        };
        let prep = naive.prepare().unwrap();
        let x = prep
            .system
            .to_dense()
            .lu()
            .solve(&DVector::from_vec(prep.rhs.to_flat()))
            .unwrap();
        BlockVector::from_flat(&prep.system.layout, x.as_slice()).unwrap()
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let n: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        n / b.iter().map(|y| y * y).sum::<f64>().sqrt()
    }

    #[test]
    fn kinds_parse_and_print() {
        for k in [ProblemKind::Mpt, ProblemKind::Mpet] {
            assert_eq!(k.to_string().parse::<ProblemKind>().unwrap(), k);
        }
        for k in [PrecondKind::Naive, PrecondKind::Transformed] {
            assert_eq!(k.to_string().parse::<PrecondKind>().unwrap(), k);
        }
        assert!("amg".parse::<PrecondKind>().is_err());
    }

    #[test]
    fn trivial_mpt_solve_converges() {
        let mut params = MpetParameters::two_network(1.0, 0.0, 1.0, 0.0);
        params.k = vec![1.0];
        params.alpha = vec![0.5];
        params.s = vec![0.0];
        params.xi = nalgebra::DMatrix::zeros(1, 1);
        let exp = Experiment::new(ProblemKind::Mpt, 1, params, PrecondKind::Naive);
        let out = exp.solve(&MinresOptions::default()).unwrap();
        assert!(out.report.converged);
    }

    #[test]
    fn both_preconditioners_solve_the_same_problem() {
        let params = MpetParameters::two_network(1e-2, 10.0, 100.0, 1.0);
        let tight = MinresOptions {
            tol: 1e-26,
            ..Default::default()
        };
        for problem in [ProblemKind::Mpt, ProblemKind::Mpet] {
            let exp = Experiment::new(problem, 4, params.clone(), PrecondKind::Transformed);
            let reference = dense_reference(&exp);
            for precond in [PrecondKind::Naive, PrecondKind::Transformed] {
                let out = Experiment { precond, ..exp.clone() }.solve(&tight).unwrap();
                let e = rel(&out.solution.to_flat(), &reference.to_flat());
                assert!(out.report.converged && e < 1e-8, "{problem} {precond}: {e:e} {:?}", out.report.iterations);
            }
        }
    }

    #[test]
    fn admissibility_flags() {
        let mut exp = Experiment::new(ProblemKind::Mpet, 2, MpetParameters::two_network(1.0, 1.0, 1.0, 0.0), PrecondKind::Transformed);
        let a = exp.admissibility().unwrap();
        assert!(!a.lambda_ok && !a.admissible && a.storage_ratio == 0.0);
        exp.params = MpetParameters::two_network(1.0, 1e-6, 1e6, 1.0);
        let a = exp.admissibility().unwrap();
        assert!(a.lambda_ok && a.storage_ratio > STORAGE_RATIO_BOUND && !a.admissible);
        exp.params = MpetParameters::two_network(1.0, 1.0, 2.0, 1.0);
        assert!(exp.admissibility().unwrap().admissible);
    }

    #[test]
    fn single_point_table_has_one_row() {
        let exp = Experiment::new(ProblemKind::Mpet, 2, MpetParameters::two_network(1.0, 1.0, 1e2, 0.0), PrecondKind::Transformed);
        let rows = robustness_table(
            &exp,
            &[2],
            std::slice::from_ref(&exp.params),
            Some(&MinresOptions::default()),
            Some(SpectrumMethod::default()),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].solve.as_ref().unwrap().converged);
        assert!(!rows[0].spectrum.as_ref().unwrap().spectrum.estimate);
        assert!(robustness_table(&exp, &[], &[exp.params.clone()], None, None).is_err());
    }

    #[test]
    fn table_rows_follow_grid_order() {
        let exp = Experiment::new(ProblemKind::Mpt, 2, MpetParameters::two_network(1.0, 1.0, 1.0, 0.0), PrecondKind::Naive);
        let grid: Vec<_> = [1.0, 1e-2, 1e-4].iter().map(|&k| MpetParameters::two_network(k, 1.0, 1.0, 0.0)).collect();
        let rows = robustness_table(&exp, &[2, 3], &grid, Some(&MinresOptions::default()), None).unwrap();
        let order: Vec<(usize, f64)> = rows.iter().map(|r| (r.experiment.n, r.experiment.params.k[1])).collect();
        assert_eq!(order, vec![(2, 1.0), (2, 1e-2), (2, 1e-4), (3, 1.0), (3, 1e-2), (3, 1e-4)]);
    }
}
