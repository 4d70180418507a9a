use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use toml::{Table, Value};

use crate::analysis::{PrecondKind, ProblemKind, SpectrumMethod, DENSE_CAP};
use crate::congruence::{read_matrix_file, CongruenceMode, CongruenceOptions, MpetParameters};
use crate::meshfem::DisplacementBc;
use crate::solvers::MinresOptions;
use crate::{Error, Result};

/// A parameter that a `[sweep]` list can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepTarget {
    Mu,
    Lambda,
    Tau,
    /// Whole vector (`None`) or one 0-based component.
    Alpha(Option<usize>),
    S(Option<usize>),
    K(Option<usize>),
    /// Whole upper triangle (`None`) or one 0-based pair `i < j`.
    Xi(Option<(usize, usize)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub target: SweepTarget,
    /// One entry per sweep value. Scalar targets hold single numbers; vector
    /// targets hold either one number (broadcast) or a full vector.
    pub values: Vec<Vec<f64>>,
}

/// Matrices for the `diagonalize` command.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalizeConfig {
    pub k: DMatrix<f64>,
    pub e: DMatrix<f64>,
    /// Eigenvector basis seeding `eigenvector` mode.
    pub basis: Option<DMatrix<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub base: MpetParameters,
    pub mesh_sizes: Vec<usize>,
    pub bc: DisplacementBc,
    pub sweep: Vec<SweepAxis>,
    pub precond: PrecondKind,
    pub include_storage: bool,
    pub solver: MinresOptions,
    pub spectrum: SpectrumMethod,
    pub congruence: CongruenceOptions,
    pub output: Option<PathBuf>,
    pub diagonalize: Option<DiagonalizeConfig>,
}

fn perr(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(perr(format!("'{key}' must be a number, got {}", v.type_str()))),
    }
}

fn as_usize(v: &Value, key: &str) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(perr(format!("'{key}' must be a nonnegative integer"))),
    }
}

fn as_str<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| perr(format!("'{key}' must be a string")))
}

fn as_bool(v: &Value, key: &str) -> Result<bool> {
    v.as_bool().ok_or_else(|| perr(format!("'{key}' must be true or false")))
}

/// A number or a flat list of numbers.
fn as_vec(v: &Value, key: &str) -> Result<Vec<f64>> {
    match v {
        Value::Array(a) => a.iter().map(|x| as_f64(x, key)).collect(),
        other => Ok(vec![as_f64(other, key)?]),
    }
}

fn as_matrix(v: &Value, key: &str, base_dir: &Path) -> Result<DMatrix<f64>> {
    match v {
        Value::String(path) => {
            let p = base_dir.join(path);
            read_matrix_file(&p).map_err(|e| match e {
                Error::Io(io) => perr(format!("cannot read matrix '{}': {io}", p.display())),
                other => other,
            })
        }
        Value::Array(rows) => {
            let rows = rows.iter().map(|r| as_vec(r, key)).collect::<Result<Vec<_>>>()?;
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.is_empty() || rows.iter().any(|r| r.len() != ncols) {
                return Err(perr(format!("'{key}' rows must be nonempty and of equal length")));
            }
            Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
        }
        _ => Err(perr(format!("'{key}' must be a matrix file path or an array of rows"))),
    }
}

fn check_keys(table: &Table, section: &str, allowed: &[&str]) -> Result<()> {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(perr(format!("unknown key '{key}' in [{section}]")));
        }
    }
    Ok(())
}

fn section<'a>(root: &'a Table, name: &str) -> Result<Option<&'a Table>> {
    match root.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(perr(format!("'{name}' must be a [{name}] section"))),
    }
}

fn broadcast(v: Vec<f64>, len: usize, key: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; len]),
        n if n == len => Ok(v),
        n => Err(perr(format!("'{key}' has {n} entries, expected 1 or {len}"))),
    }
}

fn xi_from_upper(upper: &[f64], j: usize, key: &str) -> Result<DMatrix<f64>> {
    let pairs = j * (j - 1) / 2;
    let upper = broadcast(upper.to_vec(), pairs.max(1), key)?;
    let mut xi = DMatrix::zeros(j, j);
    let mut it = upper.iter();
    for a in 0..j {
        for b in a + 1..j {
            let v = *it.next().expect("length checked");
            xi[(a, b)] = v;
            xi[(b, a)] = v;
        }
    }
    Ok(xi)
}

fn parse_xi(v: &Value, j: usize) -> Result<DMatrix<f64>> {
    if let Value::Array(rows) = v {
        if rows.iter().any(|r| r.is_array()) {
            let m = rows
                .iter()
                .map(|r| as_vec(r, "xi"))
                .collect::<Result<Vec<_>>>()?;
            if m.len() != j || m.iter().any(|r| r.len() != j) {
                return Err(perr(format!("'xi' matrix must be {j} x {j}")));
            }
            return Ok(DMatrix::from_fn(j, j, |a, b| m[a][b]));
        }
    }
    xi_from_upper(&as_vec(v, "xi")?, j, "xi")
}

fn component(rest: &str) -> Option<usize> {
    rest.parse::<usize>().ok().filter(|&i| i >= 1).map(|i| i - 1)
}

fn parse_target(key: &str) -> Result<SweepTarget> {
    let t = match key {
        "mu" => SweepTarget::Mu,
        "lambda" => SweepTarget::Lambda,
        "tau" => SweepTarget::Tau,
        "alpha" => SweepTarget::Alpha(None),
        "s" => SweepTarget::S(None),
        "K" => SweepTarget::K(None),
        "xi" => SweepTarget::Xi(None),
        _ => {
            let indexed = if let Some(rest) = key.strip_prefix("alpha") {
                component(rest).map(|i| SweepTarget::Alpha(Some(i)))
            } else if let Some(rest) = key.strip_prefix("xi") {
                let rest = rest.strip_prefix('_').unwrap_or(rest);
                let (a, b) = match rest.split_once('_') {
                    Some((a, b)) => (a, b),
                    None if rest.len() == 2 => rest.split_at(1),
                    None => ("", ""),
                };
                match (component(a), component(b)) {
                    (Some(a), Some(b)) if a < b => Some(SweepTarget::Xi(Some((a, b)))),
                    (Some(a), Some(b)) if b < a => Some(SweepTarget::Xi(Some((b, a)))),
                    _ => None,
                }
            } else if let Some(rest) = key.strip_prefix('K') {
                component(rest).map(|i| SweepTarget::K(Some(i)))
            } else if let Some(rest) = key.strip_prefix('s') {
                component(rest).map(|i| SweepTarget::S(Some(i)))
            } else {
                None
            };
            indexed.ok_or_else(|| perr(format!("unknown sweep key '{key}'")))?
        }
    };
    Ok(t)
}

impl SweepTarget {
    fn check(&self, j: usize, key: &str) -> Result<()> {
        let bad = match *self {
            SweepTarget::Alpha(Some(i)) | SweepTarget::S(Some(i)) | SweepTarget::K(Some(i)) => i >= j,
            SweepTarget::Xi(Some((_, b))) => b >= j,
            _ => false,
        };
        if bad {
            return Err(perr(format!("sweep key '{key}' refers to a network beyond J = {j}")));
        }
        Ok(())
    }

    fn is_scalar(&self) -> bool {
        matches!(
            self,
            SweepTarget::Mu
                | SweepTarget::Lambda
                | SweepTarget::Tau
                | SweepTarget::Alpha(Some(_))
                | SweepTarget::S(Some(_))
                | SweepTarget::K(Some(_))
                | SweepTarget::Xi(Some(_))
        )
    }
}

impl SweepAxis {
    fn apply(&self, p: &mut MpetParameters, value: &[f64]) -> Result<()> {
        let j = p.j();
        match self.target {
            SweepTarget::Mu => p.mu = value[0],
            SweepTarget::Lambda => p.lambda = value[0],
            SweepTarget::Tau => p.tau = value[0],
            SweepTarget::Alpha(Some(i)) => p.alpha[i] = value[0],
            SweepTarget::S(Some(i)) => p.s[i] = value[0],
            SweepTarget::K(Some(i)) => p.k[i] = value[0],
            SweepTarget::Xi(Some((a, b))) => {
                p.xi[(a, b)] = value[0];
                p.xi[(b, a)] = value[0];
            }
            SweepTarget::Alpha(None) => p.alpha = broadcast(value.to_vec(), j, &self.key)?,
            SweepTarget::S(None) => p.s = broadcast(value.to_vec(), j, &self.key)?,
            SweepTarget::K(None) => p.k = broadcast(value.to_vec(), j, &self.key)?,
            SweepTarget::Xi(None) => p.xi = xi_from_upper(value, j, &self.key)?,
        }
        Ok(())
    }
}

fn parse_problem(sec: Option<&Table>) -> Result<(ProblemKind, MpetParameters, Vec<usize>, DisplacementBc)> {
    let empty = Table::new();
    let sec = sec.unwrap_or(&empty);
    check_keys(
        sec,
        "problem",
        &["problem", "J", "N", "bc", "mu", "lambda", "tau", "alpha", "s", "K", "xi"],
    )?;
    let problem = match sec.get("problem") {
        Some(v) => as_str(v, "problem")?.parse()?,
        None => ProblemKind::default(),
    };
    let k = sec
        .get("K")
        .map(|v| as_vec(v, "K"))
        .transpose()?
        .ok_or_else(|| perr("[problem] needs 'K'"))?;
    let j = match sec.get("J") {
        Some(v) => as_usize(v, "J")?,
        None => k.len(),
    };
    if j == 0 {
        return Err(perr("J must be at least 1"));
    }
    let k = broadcast(k, j, "K")?;
    let scalar = |key: &str, default: f64| -> Result<f64> {
        sec.get(key).map_or(Ok(default), |v| as_f64(v, key))
    };
    let vector = |key: &str, default: f64| -> Result<Vec<f64>> {
        match sec.get(key) {
            Some(v) => broadcast(as_vec(v, key)?, j, key),
            None => Ok(vec![default; j]),
        }
    };
    let xi = match sec.get("xi") {
        Some(v) => parse_xi(v, j)?,
        None => DMatrix::zeros(j, j),
    };
    let params = MpetParameters {
        mu: scalar("mu", 1.0)?,
        lambda: scalar("lambda", 1.0)?,
        tau: scalar("tau", 1.0)?,
        alpha: vector("alpha", 1.0 / j as f64)?,
        s: vector("s", 0.0)?,
        k,
        xi,
    };
    let mesh_sizes = match sec.get("N") {
        Some(Value::Array(a)) => a.iter().map(|v| as_usize(v, "N")).collect::<Result<Vec<_>>>()?,
        Some(v) => vec![as_usize(v, "N")?],
        None => return Err(perr("[problem] needs 'N' (mesh size or list of mesh sizes)")),
    };
    if mesh_sizes.is_empty() || mesh_sizes.contains(&0) {
        return Err(perr("'N' must be a nonempty list of positive mesh sizes"));
    }
    let bc = match sec.get("bc") {
        Some(v) => as_str(v, "bc")?.parse().map_err(perr)?,
        None => DisplacementBc::default(),
    };
    Ok((problem, params, mesh_sizes, bc))
}

fn parse_sweep(sec: Option<&Table>, j: usize) -> Result<Vec<SweepAxis>> {
    let Some(sec) = sec else { return Ok(Vec::new()) };
    let mut axes = Vec::new();
    for (key, v) in sec {
        let target = parse_target(key)?;
        target.check(j, key)?;
        let Value::Array(items) = v else {
            return Err(perr(format!("sweep '{key}' must be a list")));
        };
        if items.is_empty() {
            return Err(perr(format!("sweep '{key}' is empty")));
        }
        let values = items
            .iter()
            .map(|item| {
                if target.is_scalar() && item.is_array() {
                    Err(perr(format!("sweep '{key}' takes numbers, not lists")))
                } else {
                    as_vec(item, key)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        axes.push(SweepAxis {
            key: key.clone(),
            target,
            values,
        });
    }
    Ok(axes)
}

fn parse_solver(sec: Option<&Table>) -> Result<(PrecondKind, bool, MinresOptions)> {
    let empty = Table::new();
    let sec = sec.unwrap_or(&empty);
    check_keys(
        sec,
        "solver",
        &["precond", "include_storage", "tol", "maxit", "seed", "guess"],
    )?;
    let precond = match sec.get("precond") {
        Some(v) => as_str(v, "precond")?.parse()?,
        None => PrecondKind::default(),
    };
    let include_storage = sec
        .get("include_storage")
        .map_or(Ok(false), |v| as_bool(v, "include_storage"))?;
    let mut opts = MinresOptions::default();
    if let Some(v) = sec.get("tol") {
        opts.tol = as_f64(v, "tol")?;
        if !(opts.tol > 0.0 && opts.tol < 1.0) {
            return Err(perr("'tol' must lie in (0, 1)"));
        }
    }
    if let Some(v) = sec.get("maxit") {
        opts.maxit = as_usize(v, "maxit")?;
    }
    if let Some(v) = sec.get("seed") {
        opts.seed = as_usize(v, "seed")? as u64;
    }
    if let Some(v) = sec.get("guess") {
        opts.guess = as_str(v, "guess")?.parse()?;
    }
    Ok((precond, include_storage, opts))
}

fn parse_spectrum(sec: Option<&Table>) -> Result<SpectrumMethod> {
    let empty = Table::new();
    let sec = sec.unwrap_or(&empty);
    check_keys(sec, "spectrum", &["method", "cap", "krylov_dim"])?;
    let cap = sec.get("cap").map_or(Ok(DENSE_CAP), |v| as_usize(v, "cap"))?;
    let krylov_dim = sec.get("krylov_dim").map_or(Ok(200), |v| as_usize(v, "krylov_dim"))?;
    if krylov_dim == 0 {
        return Err(perr("'krylov_dim' must be positive"));
    }
    let method = sec.get("method").map_or(Ok("auto"), |v| as_str(v, "method"))?;
    match method {
        "auto" => Ok(SpectrumMethod::Auto { cap, krylov_dim }),
        "dense" => Ok(SpectrumMethod::Dense { cap }),
        "lanczos" => Ok(SpectrumMethod::Lanczos { krylov_dim }),
        other => Err(perr(format!(
            "unknown spectrum method '{other}' (expected auto, dense or lanczos)"
        ))),
    }
}

fn parse_diagonalize(sec: Option<&Table>, base_dir: &Path) -> Result<(CongruenceOptions, Option<DiagonalizeConfig>)> {
    let empty = Table::new();
    let sec = sec.unwrap_or(&empty);
    check_keys(sec, "diagonalize", &["K", "E", "basis", "mode", "normalize", "rel_tol"])?;
    let mut opts = CongruenceOptions::default();
    if let Some(v) = sec.get("mode") {
        opts.mode = match as_str(v, "mode")? {
            "eigenvector" => CongruenceMode::Eigenvector,
            "spectral" => CongruenceMode::Spectral,
            other => {
                return Err(perr(format!(
                    "unknown congruence mode '{other}' (expected eigenvector or spectral)"
                )))
            }
        };
    }
    if let Some(v) = sec.get("normalize") {
        opts.normalize = as_bool(v, "normalize")?;
    }
    if let Some(v) = sec.get("rel_tol") {
        opts.rel_tol = as_f64(v, "rel_tol")?;
    }
    let matrices = match (sec.get("K"), sec.get("E")) {
        (None, None) => None,
        (Some(k), Some(e)) => Some(DiagonalizeConfig {
            k: as_matrix(k, "K", base_dir)?,
            e: as_matrix(e, "E", base_dir)?,
            basis: sec.get("basis").map(|b| as_matrix(b, "basis", base_dir)).transpose()?,
        }),
        _ => return Err(perr("[diagonalize] needs both 'K' and 'E'")),
    };
    Ok((opts, matrices))
}

impl ExperimentConfig {
    /// Parses a config. Relative matrix paths are resolved against
    /// `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| perr(e.to_string()))?;
        for (key, v) in &root {
            match key.as_str() {
                "problem" | "sweep" | "solver" | "spectrum" | "diagonalize" => {}
                "output" if v.is_str() => {}
                _ => return Err(perr(format!("unknown top-level key or section '{key}'"))),
            }
        }
        let (diag_opts, diagonalize) = parse_diagonalize(section(&root, "diagonalize")?, base_dir)?;
        let problem_sec = section(&root, "problem")?;
        if problem_sec.is_none() {
            if diagonalize.is_none() {
                return Err(perr("config needs a [problem] section or [diagonalize] matrices"));
            }
            return Ok(ExperimentConfig {
                problem: ProblemKind::default(),
                base: MpetParameters::two_network(1.0, 0.0, 1.0, 0.0),
                mesh_sizes: vec![1],
                bc: DisplacementBc::default(),
                sweep: Vec::new(),
                precond: PrecondKind::default(),
                include_storage: false,
                solver: MinresOptions::default(),
                spectrum: SpectrumMethod::default(),
                congruence: diag_opts,
                output: root.get("output").and_then(Value::as_str).map(PathBuf::from),
                diagonalize,
            });
        }
        let (problem, base, mesh_sizes, bc) = parse_problem(problem_sec)?;
        let sweep = parse_sweep(section(&root, "sweep")?, base.j())?;
        let (precond, include_storage, solver) = parse_solver(section(&root, "solver")?)?;
        let spectrum = parse_spectrum(section(&root, "spectrum")?)?;
        let config = ExperimentConfig {
            problem,
            base,
            mesh_sizes,
            bc,
            sweep,
            precond,
            include_storage,
            solver,
            spectrum,
            congruence: diag_opts,
            output: root.get("output").and_then(Value::as_str).map(PathBuf::from),
            diagonalize,
        };
        config.points()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| perr(format!("cannot read config '{}': {e}", path.display())))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, dir)
    }

    /// Cartesian product of the sweep lists, first axis outermost. Every
    /// point is validated.
    pub fn points(&self) -> Result<Vec<MpetParameters>> {
        let mut points = vec![self.base.clone()];
        for axis in &self.sweep {
            let mut next = Vec::with_capacity(points.len() * axis.values.len());
            for p in &points {
                for v in &axis.values {
                    let mut q = p.clone();
                    axis.apply(&mut q, v)?;
                    next.push(q);
                }
            }
            points = next;
        }
        for p in &points {
            p.validate()?;
        }
        Ok(points)
    }

    pub fn num_rows(&self) -> usize {
        self.mesh_sizes.len() * self.sweep.iter().map(|a| a.values.len()).product::<usize>()
    }
}
