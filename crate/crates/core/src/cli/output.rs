use nalgebra::DMatrix;

use crate::analysis::{Experiment, Spectrum};
use crate::solvers::SolveReport;

pub const CSV_HEADER: &str = "problem,N,J,mu,lambda,tau,s,K_list,xi_list,precond,include_storage,iterations,converged,final_ratio,seed,walltime_s";
pub const SPECTRUM_COLUMNS: &str = "eig_min,eig_max,kappa,estimate";

pub fn header(with_spectrum: bool) -> String {
    if with_spectrum {
        format!("{CSV_HEADER},{SPECTRUM_COLUMNS}")
    } else {
        CSV_HEADER.to_string()
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn list(v: &[f64]) -> String {
    v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(";")
}

/// Result columns of one row. `Err` rows keep the parameter columns and
/// mark `converged` as `error`.
pub struct RowOutcome<'a> {
    pub solve: Result<&'a SolveReport, ()>,
    pub spectrum: Option<Result<&'a Spectrum, ()>>,
}

pub fn csv_row(exp: &Experiment, seed: u64, outcome: &RowOutcome, timing: bool) -> String {
    let p = &exp.params;
    let j = p.j();
    let upper: Vec<f64> = (0..j)
        .flat_map(|a| (a + 1..j).map(move |b| (a, b)))
        .map(|(a, b)| p.xi[(a, b)])
        .collect();
    let mut cols = vec![
        exp.problem.to_string(),
        exp.n.to_string(),
        j.to_string(),
        num(p.mu),
        num(p.lambda),
        num(p.tau),
        list(&p.s),
        list(&p.k),
        list(&upper),
        exp.precond.to_string(),
        exp.include_storage.to_string(),
    ];
    match outcome.solve {
        Ok(r) => cols.extend([
            r.iterations.to_string(),
            r.converged.to_string(),
            num(r.final_ratio),
            seed.to_string(),
            if timing {
                format!("{:.6}", r.wall_time)
            } else {
                "0".to_string()
            },
        ]),
        Err(()) => cols.extend([
            String::new(),
            "error".to_string(),
            String::new(),
            seed.to_string(),
            String::new(),
        ]),
    }
    match outcome.spectrum {
        Some(Ok(s)) => cols.extend([num(s.eig_min), num(s.eig_max), num(s.kappa), s.estimate.to_string()]),
        Some(Err(())) => cols.extend([String::new(), String::new(), String::new(), "error".to_string()]),
        None => {}
    }
    cols.join(",")
}

/// Five significant digits, `-0` printed as `0`.
pub fn sig5(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.4e}")
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let cells: Vec<Vec<String>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| sig5(m[(i, j)])).collect())
        .collect();
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(0);
    cells
        .iter()
        .map(|row| {
            let padded: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
            format!("  {}", padded.join("  "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn format_vector(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|&x| sig5(x)).collect::<Vec<_>>().join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{PrecondKind, ProblemKind};
    use crate::congruence::MpetParameters;

    #[test]
    fn five_significant_digits() {
        assert_eq!(sig5(0.33670), "3.3670e-1");
        assert_eq!(sig5(1.0001e-4), "1.0001e-4");
        assert_eq!(sig5(-0.0), "0.0000e0");
        assert_eq!(sig5(-2.5), "-2.5000e0");
    }

    #[test]
    fn row_matches_header_width() {
        let exp = Experiment::new(
            ProblemKind::Mpet,
            16,
            MpetParameters::two_network(1e6, 1e6, 1.0, 0.0),
            PrecondKind::Naive,
        );
        let report = SolveReport {
            iterations: 30,
            residual_history: vec![1.0],
            converged: true,
            final_ratio: 5e-7,
            seed: 3,
            wall_time: 1.5,
        };
        let row = csv_row(&exp, 3, &RowOutcome { solve: Ok(&report), spectrum: None }, true);
        assert_eq!(row, "mpet,16,2,1e0,1e0,1e0,0e0;0e0,1e0;1e6,1e6,naive,false,30,true,5e-7,3,1.500000");
        assert_eq!(row.split(',').count(), header(false).split(',').count());
        let failed = csv_row(&exp, 3, &RowOutcome { solve: Err(()), spectrum: Some(Err(())) }, false);
        assert_eq!(failed.split(',').count(), header(true).split(',').count());
        assert!(failed.contains(",error,"));
    }
}
