use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LinearOperator, Preconditioner};
use crate::{Error, Result};

/// Distribution of the initial iterate. Random entries come from a seeded
/// ChaCha8 stream and are zero on constrained dofs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitialGuess {
    Zero,
    /// Uniform on `[0, 1)`.
    #[default]
    Uniform,
    /// Uniform on `[-1, 1]`.
    Symmetric,
}

impl InitialGuess {
    pub fn name(&self) -> &'static str {
        match self {
            InitialGuess::Zero => "zero",
            InitialGuess::Uniform => "uniform",
            InitialGuess::Symmetric => "symmetric",
        }
    }
}

impl std::str::FromStr for InitialGuess {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero" => Ok(InitialGuess::Zero),
            "uniform" => Ok(InitialGuess::Uniform),
            "symmetric" => Ok(InitialGuess::Symmetric),
            other => Err(Error::Parse(format!(
                "unknown initial guess '{other}' (expected zero, uniform or symmetric)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinresOptions {
    /// Threshold on `(B r_k, r_k) / (B r_0, r_0)`.
    pub tol: f64,
    pub maxit: usize,
    pub seed: u64,
    pub guess: InitialGuess,
}

impl Default for MinresOptions {
    fn default() -> Self {
        MinresOptions {
            tol: 1e-6,
            maxit: 5000,
            seed: 0,
            guess: InitialGuess::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `(B r_k, r_k)^{1/2}` for `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// `(B r_k, r_k) / (B r_0, r_0)` at the returned iterate.
    pub final_ratio: f64,
    pub seed: u64,
    pub wall_time: f64,
}

pub fn initial_guess(kind: InitialGuess, n: usize, constrained: &[usize], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = match kind {
        InitialGuess::Zero => return vec![0.0; n],
        InitialGuess::Uniform => (0..n).map(|_| rng.random::<f64>()).collect(),
        InitialGuess::Symmetric => (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
    };
    for &d in constrained {
        x[d] = 0.0;
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned MINRES for symmetric `A` and SPD `B`.
///
/// Starts from `opts.guess` and stops at the first
/// iterate whose preconditioned residual ratio is at most `opts.tol`.
/// Running out of iterations is reported through `converged = false`.
pub fn minres<A, B>(a: &A, b: &B, rhs: &[f64], opts: &MinresOptions) -> Result<(Vec<f64>, SolveReport)>
where
    A: LinearOperator + ?Sized,
    B: Preconditioner + ?Sized,
{
    let n = a.dim();
    let x0 = initial_guess(opts.guess, n, &a.constrained_dofs(), opts.seed);
    let (x, mut report) = minres_from(a, b, rhs, x0, opts.tol, opts.maxit)?;
    report.seed = opts.seed;
    Ok((x, report))
}

/// MINRES from an explicit initial guess.
pub fn minres_from<A, B>(
    a: &A,
    b: &B,
    rhs: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)>
where
    A: LinearOperator + ?Sized,
    B: Preconditioner + ?Sized,
{
    let n = a.dim();
    for (what, got) in [("preconditioner", b.dim()), ("right-hand side", rhs.len()), ("initial guess", x.len())] {
        if got != n {
            return Err(Error::Dimension {
                what,
                expected: n,
                got,
            });
        }
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::validation(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let start = Instant::now();

    let mut v = vec![0.0; n];
    a.apply(&x, &mut v);
    v.iter_mut().zip(rhs).for_each(|(vi, bi)| *vi = bi - *vi);
    let mut z = vec![0.0; n];
    b.apply(&v, &mut z);
    let g2 = dot(&z, &v);
    if g2 < 0.0 || !g2.is_finite() {
        return Err(Error::validation(format!("preconditioner is not positive: (Br, r) = {g2}")));
    }
    let gamma1 = g2.sqrt();
    let mut history = vec![gamma1];
    let done = |history: Vec<f64>, iterations: usize, converged: bool, ratio: f64| SolveReport {
        iterations,
        residual_history: history,
        converged,
        final_ratio: ratio,
        seed: 0,
        wall_time: start.elapsed().as_secs_f64(),
    };
    if gamma1 == 0.0 {
        return Ok((x, done(history, 0, true, 0.0)));
    }

    let mut v_old = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w_old = vec![0.0; n];
    let mut q = vec![0.0; n];
    let (mut gamma, mut gamma_old) = (gamma1, 1.0);
    let (mut c, mut c_old, mut s, mut s_old) = (1.0, 1.0, 0.0, 0.0);
    let mut eta = gamma1;

    for it in 1..=maxit {
        z.iter_mut().for_each(|zi| *zi /= gamma);
        a.apply(&z, &mut q);
        let delta = dot(&q, &z);
        // v_new = A z - (δ/γ) v - (γ/γ_old) v_old, stored in v_old.
        for k in 0..n {
            v_old[k] = q[k] - (delta / gamma) * v[k] - (gamma / gamma_old) * v_old[k];
        }
        std::mem::swap(&mut v, &mut v_old);
        let mut z_new = vec![0.0; n];
        b.apply(&v, &mut z_new);
        let g2 = dot(&z_new, &v);
        if g2 < 0.0 && g2.abs() > 1e-14 * gamma * gamma {
            return Err(Error::validation(format!("preconditioner is not positive: (Bv, v) = {g2}")));
        }
        let gamma_new = g2.max(0.0).sqrt();

        let a0 = c * delta - c_old * s * gamma;
        let a1 = a0.hypot(gamma_new);
        let a2 = s * delta + c_old * c * gamma;
        let a3 = s_old * gamma;
        if a1 == 0.0 {
            let ratio = (eta / gamma1).powi(2);
            return Ok((x, done(history, it - 1, ratio <= tol, ratio)));
        }
        let (c_new, s_new) = (a0 / a1, gamma_new / a1);
        for k in 0..n {
            let wn = (z[k] - a3 * w_old[k] - a2 * w[k]) / a1;
            w_old[k] = w[k];
            w[k] = wn;
            x[k] += c_new * eta * wn;
        }
        eta = -s_new * eta;
        c_old = c;
        c = c_new;
        s_old = s;
        s = s_new;
        gamma_old = gamma;
        gamma = gamma_new;
        z = z_new;

        history.push(eta.abs());
        let ratio = (eta / gamma1).powi(2);
        if ratio <= tol || gamma_new == 0.0 {
            return Ok((x, done(history, it, true, ratio)));
        }
    }
    let ratio = (eta / gamma1).powi(2);
    Ok((x, done(history, maxit, false, ratio)))
}
