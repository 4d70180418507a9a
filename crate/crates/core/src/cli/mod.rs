//! The `mpet` command line: TOML configuration, parameter sweeps, CSV output.
//!
//! Exit codes: 0 on success (non-converged rows included), 2 for
//! configuration, parse and I/O errors, 3 for numerical failures.

mod config;
mod output;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{Experiment, ProblemKind, Spectrum};
use crate::congruence::{
    diagonalize_by_congruence, diagonalize_with_basis, transform_parameters, write_matrix_file,
    CongruenceResult, SymMatrix,
};
use crate::solvers::SolveReport;
use crate::systems::BlockVector;
use crate::Error;

pub use config::{DiagonalizeConfig, ExperimentConfig, SweepAxis, SweepTarget};
pub use output::{csv_row, format_matrix, format_vector, header, sig5, RowOutcome, CSV_HEADER, SPECTRUM_COLUMNS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mpet", version, about = "Congruence-transformed MPET/MPT solves, sweeps and spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Diagonalize K and the coupling matrix by congruence and print P, K~, Gamma~.
    Diagonalize(CommonArgs),
    /// Solve a single parameter point and print one CSV row.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Write the solution vector (original variables) to this file.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Solve every point of the sweep grid.
    Sweep(CommonArgs),
    /// Solve and estimate the preconditioned spectrum at every grid point.
    Spectrum(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; CSV for solve/sweep/spectrum, P at full precision for diagonalize.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `[solver] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write 0 in the walltime column so that reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(_) | Error::Dimension { .. } | Error::Parse(_) | Error::Io(_) => {
                Failure::Config(e.to_string())
            }
            Error::EigenNoConvergence { .. }
            | Error::Congruence { .. }
            | Error::NotSpd { .. }
            | Error::TooLarge { .. } => Failure::Numerical(e.to_string()),
        }
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            EXIT_NUMERICAL
        }
    }
}

fn execute(cli: Cli) -> Result<i32, Failure> {
    let (common, solution) = match &cli.command {
        Command::Diagonalize(c) | Command::Sweep(c) | Command::Spectrum(c) => (c, None),
        Command::Solve { common, solution } => (common, solution.as_deref()),
    };
    let mut cfg = ExperimentConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.solver.seed = seed;
    }
    let out = common.out.clone().or_else(|| cfg.output.clone());
    let work = || match &cli.command {
        Command::Diagonalize(_) => cmd_diagonalize(&cfg, out.as_deref()),
        Command::Solve { .. } => cmd_solve(&cfg, out.as_deref(), solution, !common.no_timing),
        Command::Sweep(_) => cmd_table(&cfg, out.as_deref(), false, !common.no_timing),
        Command::Spectrum(_) => cmd_table(&cfg, out.as_deref(), true, !common.no_timing),
    };
    match common.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(work),
        None => work(),
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Config(format!("cannot write '{}': {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn square_sym(m: &nalgebra::DMatrix<f64>, what: &str) -> Result<SymMatrix, Failure> {
    if !m.is_square() {
        return Err(Failure::Config(format!("{what} must be square, got {} x {}", m.nrows(), m.ncols())));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Failure::Config(format!("{what} must be symmetric")));
    }
    Ok(SymMatrix::new(m.clone()))
}

fn diagonalization(cfg: &ExperimentConfig) -> Result<CongruenceResult, Failure> {
    if let Some(d) = &cfg.diagonalize {
        let k = square_sym(&d.k, "K")?;
        let e = square_sym(&d.e, "E")?;
        if k.dim() != e.dim() {
            return Err(Failure::Config(format!("K is {0} x {0} but E is {1} x {1}", k.dim(), e.dim())));
        }
        return Ok(match &d.basis {
            Some(b) => diagonalize_with_basis(&k, &e, b, &cfg.congruence)?,
            None => diagonalize_by_congruence(&k, &e, &cfg.congruence)?,
        });
    }
    let p = &cfg.base;
    Ok(match cfg.problem {
        ProblemKind::Mpt => diagonalize_by_congruence(&p.k_matrix(), &p.exchange_matrix()?, &cfg.congruence)?,
        ProblemKind::Mpet => transform_parameters(p, cfg.include_storage, &cfg.congruence)?,
    })
}

fn cmd_diagonalize(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<i32, Failure> {
    let r = diagonalization(cfg)?;
    let mut text = String::new();
    let _ = writeln!(text, "eigenvalues = {}", format_vector(&r.eigenvalues));
    let _ = writeln!(text, "P =\n{}", format_matrix(&r.p));
    let _ = writeln!(text, "K~ = diag {}", format_vector(&r.k_tilde));
    let _ = writeln!(text, "Gamma~ = diag {}", format_vector(&r.gamma_tilde));
    if let Some(a) = &r.alpha_tilde {
        let _ = writeln!(text, "alpha~ = {}", format_vector(a));
    }
    print!("{text}");
    if let Some(path) = out {
        write_matrix_file(path, &r.p)?;
    }
    Ok(EXIT_OK)
}

fn experiment(cfg: &ExperimentConfig, n: usize, params: crate::congruence::MpetParameters) -> Experiment {
    Experiment {
        problem: cfg.problem,
        n,
        params,
        precond: cfg.precond,
        include_storage: cfg.include_storage,
        bc: cfg.bc,
        congruence: cfg.congruence,
    }
}

fn block_labels(problem: ProblemKind, j: usize) -> Vec<String> {
    let pressures = (1..=j).map(|i| format!("pressure {i}"));
    match problem {
        ProblemKind::Mpt => pressures.collect(),
        ProblemKind::Mpet => ["displacement".to_string(), "total pressure".to_string()]
            .into_iter()
            .chain(pressures)
            .collect(),
    }
}

fn solution_text(labels: &[String], x: &BlockVector) -> String {
    let mut text = String::new();
    for (label, seg) in labels.iter().zip(&x.segments) {
        let _ = writeln!(text, "# {label} {}", seg.len());
        for v in seg {
            let _ = writeln!(text, "{v:.17e}");
        }
    }
    text
}

fn summary(report: &SolveReport) -> String {
    format!(
        "{} after {} iterations (ratio {})",
        if report.converged { "converged" } else { "not converged" },
        report.iterations,
        sig5(report.final_ratio)
    )
}

fn cmd_solve(cfg: &ExperimentConfig, out: Option<&Path>, solution: Option<&Path>, timing: bool) -> Result<i32, Failure> {
    let mut points = cfg.points()?;
    if points.len() != 1 || cfg.mesh_sizes.len() != 1 {
        return Err(Failure::Config(format!(
            "solve needs a single parameter point and mesh size, config has {} rows; use sweep",
            cfg.num_rows()
        )));
    }
    let exp = experiment(cfg, cfg.mesh_sizes[0], points.remove(0));
    let outcome = exp.solve(&cfg.solver)?;
    let row = csv_row(
        &exp,
        cfg.solver.seed,
        &RowOutcome {
            solve: Ok(&outcome.report),
            spectrum: None,
        },
        timing,
    );
    write_text(out, &format!("{}\n{row}\n", header(false)))?;
    if let Some(path) = solution {
        let labels = block_labels(exp.problem, exp.params.j());
        std::fs::write(path, solution_text(&labels, &outcome.solution))
            .map_err(|e| Failure::Config(format!("cannot write '{}': {e}", path.display())))?;
    }
    eprintln!("{} N={}: {}", exp.problem, exp.n, summary(&outcome.report));
    Ok(EXIT_OK)
}

type RowResult = (Experiment, crate::Result<SolveReport>, Option<crate::Result<Spectrum>>);

fn run_row(cfg: &ExperimentConfig, exp: Experiment, with_spectrum: bool) -> RowResult {
    let prepared = match exp.prepare() {
        Ok(p) => p,
        Err(e) => {
            let msg = e.to_string();
            let spec = with_spectrum.then(|| Err(Error::Validation(msg)));
            return (exp, Err(e), spec);
        }
    };
    let solve = prepared.solve(&cfg.solver).map(|o| o.report);
    let spectrum = with_spectrum.then(|| prepared.spectrum(cfg.spectrum, cfg.solver.seed));
    (exp, solve, spectrum)
}

fn cmd_table(cfg: &ExperimentConfig, out: Option<&Path>, with_spectrum: bool, timing: bool) -> Result<i32, Failure> {
    let points = cfg.points()?;
    let grid: Vec<Experiment> = cfg
        .mesh_sizes
        .iter()
        .flat_map(|&n| points.iter().map(move |p| experiment(cfg, n, p.clone())))
        .collect();
    let rows: Vec<RowResult> = grid
        .into_par_iter()
        .map(|exp| run_row(cfg, exp, with_spectrum))
        .collect();

    let mut text = header(with_spectrum);
    text.push('\n');
    let (mut converged, mut failed) = (0, 0);
    for (i, (exp, solve, spectrum)) in rows.iter().enumerate() {
        match solve {
            Ok(r) if r.converged => converged += 1,
            Ok(_) => {}
            Err(e) => eprintln!("row {i} (N={}): {e}", exp.n),
        }
        if let Some(Err(e)) = spectrum {
            if solve.is_ok() {
                eprintln!("row {i} (N={}): spectrum: {e}", exp.n);
            }
        }
        let row_failed = solve.is_err() || matches!(spectrum, Some(Err(_)));
        failed += usize::from(row_failed);
        let outcome = RowOutcome {
            solve: solve.as_ref().map_err(|_| ()),
            spectrum: spectrum.as_ref().map(|s| s.as_ref().map_err(|_| ())),
        };
        text.push_str(&csv_row(exp, cfg.solver.seed, &outcome, timing));
        text.push('\n');
    }
    write_text(out, &text)?;
    eprintln!("{} rows: {converged} converged, {failed} failed", rows.len());
    Ok(if failed > 0 { EXIT_NUMERICAL } else { EXIT_OK })
}
