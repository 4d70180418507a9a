//! C ABI for `mpet-core`: parameter handles, diagonalization by congruence
//! and single MPET/MPT solves.
//!
//! Every fallible function returns an [`MpetStatus`]; on failure the message
//! is available from [`mpet_last_error`] on the same thread. Matrices cross
//! the boundary as row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mpet_core::analysis::{Experiment, PrecondKind, ProblemKind};
use mpet_core::congruence::{
    diagonalize_by_congruence, transform_parameters, CongruenceOptions, CongruenceResult, MpetParameters,
    SymMatrix,
};
use mpet_core::solvers::{InitialGuess, MinresOptions};
use mpet_core::Error;
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NumericalFailure = 4,
    ParseError = 5,
    IoError = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpetProblem {
    Mpt = 0,
    Mpet = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpetPreconditioner {
    Naive = 0,
    Transformed = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpetGuess {
    Zero = 0,
    Uniform = 1,
    Symmetric = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpetSolveOptions {
    pub problem: MpetProblem,
    pub preconditioner: MpetPreconditioner,
    pub include_storage: bool,
    /// Threshold on `(B r_k, r_k) / (B r_0, r_0)`.
    pub tol: f64,
    pub maxit: usize,
    pub seed: u64,
    pub guess: MpetGuess,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MpetSolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_ratio: f64,
    pub wall_time: f64,
    pub seed: u64,
}

/// Opaque material parameter set.
pub struct MpetParams(MpetParameters);

/// Opaque result of a diagonalization by congruence.
pub struct MpetTransform(CongruenceResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> MpetStatus {
    match e {
        Error::Validation(_) => MpetStatus::InvalidArgument,
        Error::Dimension { .. } => MpetStatus::DimensionMismatch,
        Error::Parse(_) => MpetStatus::ParseError,
        Error::Io(_) => MpetStatus::IoError,
        _ => MpetStatus::NumericalFailure,
    }
}

struct Fail(MpetStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guarded(f: impl FnOnce() -> Result<(), Fail>) -> MpetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MpetStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MpetStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(MpetStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write_out(out: *mut f64, data: &[f64], what: &str) -> Result<(), Fail> {
    if data.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null(what));
    }
    slice::from_raw_parts_mut(out, data.len()).copy_from_slice(data);
    Ok(())
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        v.extend(m.row(i).iter());
    }
    v
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mpet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call into the library on this
/// thread.
#[no_mangle]
pub extern "C" fn mpet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a parameter set for `j` networks. `alpha`, `s` and `k` hold `j`
/// entries; `xi` is the `j x j` exchange-rate matrix (row-major, symmetric,
/// zero diagonal) and may be null for no exchange.
///
/// # Safety
/// Array arguments must point to at least the stated number of readable
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpet_params_new(
    j: usize,
    mu: f64,
    lambda: f64,
    tau: f64,
    alpha: *const f64,
    s: *const f64,
    k: *const f64,
    xi: *const f64,
    out: *mut *mut MpetParams,
) -> MpetStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if j == 0 {
            return Err(Fail(MpetStatus::InvalidArgument, "j must be at least 1".into()));
        }
        let xi = if xi.is_null() {
            DMatrix::zeros(j, j)
        } else {
            DMatrix::from_row_slice(j, j, read(xi, j * j, "xi")?)
        };
        let params = MpetParameters {
            mu,
            lambda,
            tau,
            alpha: read(alpha, j, "alpha")?.to_vec(),
            s: read(s, j, "s")?.to_vec(),
            k: read(k, j, "k")?.to_vec(),
            xi,
        };
        params.validate()?;
        *out = Box::into_raw(Box::new(MpetParams(params)));
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle from [`mpet_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpet_params_free(params: *mut MpetParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Number of networks, 0 for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpet_params_networks(params: *const MpetParams) -> usize {
    params.as_ref().map_or(0, |p| p.0.j())
}

/// Diagonalizes the `n x n` pair `(k, m)` by congruence; `k` must be
/// diagonal and positive, `m` symmetric.
///
/// # Safety
/// `k` and `m` must hold `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpet_diagonalize(
    n: usize,
    k: *const f64,
    m: *const f64,
    normalize: bool,
    out: *mut *mut MpetTransform,
) -> MpetStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if n == 0 {
            return Err(Fail(MpetStatus::InvalidArgument, "n must be at least 1".into()));
        }
        let k = SymMatrix::new(DMatrix::from_row_slice(n, n, read(k, n * n, "k")?));
        let m = SymMatrix::new(DMatrix::from_row_slice(n, n, read(m, n * n, "m")?));
        let opts = CongruenceOptions {
            normalize,
            ..Default::default()
        };
        let r = diagonalize_by_congruence(&k, &m, &opts)?;
        *out = Box::into_raw(Box::new(MpetTransform(r)));
        Ok(())
    })
}

/// Transformation of a full parameter set; `include_storage` selects
/// whether the storage coefficients enter the diagonalized matrix.
///
/// # Safety
/// `params` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpet_transform_parameters(
    params: *const MpetParams,
    include_storage: bool,
    out: *mut *mut MpetTransform,
) -> MpetStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        let r = transform_parameters(&params.0, include_storage, &CongruenceOptions::default())?;
        *out = Box::into_raw(Box::new(MpetTransform(r)));
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a live transform handle.
#[no_mangle]
pub unsafe extern "C" fn mpet_transform_free(t: *mut MpetTransform) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Dimension `n` of the transform, 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpet_transform_dim(t: *const MpetTransform) -> usize {
    t.as_ref().map_or(0, |t| t.0.dim())
}

/// Copies `P` (`n * n`, row-major) into `out`.
///
/// # Safety
/// `t` must be a live handle; `out` must have room for `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn mpet_transform_p(t: *const MpetTransform, out: *mut f64) -> MpetStatus {
    guarded(|| {
        let t = t.as_ref().ok_or_else(|| null("transform"))?;
        write_out(out, &row_major(&t.0.p), "out")
    })
}

/// Copies the diagonal of `PᵀKP` (`n` entries) into `out`.
///
/// # Safety
/// `t` must be a live handle; `out` must have room for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn mpet_transform_k_tilde(t: *const MpetTransform, out: *mut f64) -> MpetStatus {
    guarded(|| {
        let t = t.as_ref().ok_or_else(|| null("transform"))?;
        write_out(out, &t.0.k_tilde, "out")
    })
}

/// Copies the diagonal of `PᵀMP` (`n` entries) into `out`.
///
/// # Safety
/// `t` must be a live handle; `out` must have room for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn mpet_transform_gamma_tilde(t: *const MpetTransform, out: *mut f64) -> MpetStatus {
    guarded(|| {
        let t = t.as_ref().ok_or_else(|| null("transform"))?;
        write_out(out, &t.0.gamma_tilde, "out")
    })
}

/// Copies `Pᵀα` (`n` entries) into `out`. Only transforms built from a
/// parameter set carry it.
///
/// # Safety
/// `t` must be a live handle; `out` must have room for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn mpet_transform_alpha_tilde(t: *const MpetTransform, out: *mut f64) -> MpetStatus {
    guarded(|| {
        let t = t.as_ref().ok_or_else(|| null("transform"))?;
        let a = t.0.alpha_tilde.as_ref().ok_or_else(|| {
            Fail(
                MpetStatus::InvalidArgument,
                "transform was not built from a parameter set".into(),
            )
        })?;
        write_out(out, a, "out")
    })
}

/// Defaults: MPET, transformed preconditioner, storage excluded,
/// `tol = 1e-6`, `maxit = 5000`, seed 0, uniform random start.
#[no_mangle]
pub extern "C" fn mpet_solve_options_default() -> MpetSolveOptions {
    let d = MinresOptions::default();
    MpetSolveOptions {
        problem: MpetProblem::Mpet,
        preconditioner: MpetPreconditioner::Transformed,
        include_storage: false,
        tol: d.tol,
        maxit: d.maxit,
        seed: d.seed,
        guess: MpetGuess::Uniform,
    }
}

/// Assembles the unit-square problem on an `n x n` mesh, solves it with
/// preconditioned MinRes and fills `report`. Non-convergence is reported
/// through `report.converged`, not the status.
///
/// # Safety
/// `params` must be a live handle; `opts` readable; `report` writable.
#[no_mangle]
pub unsafe extern "C" fn mpet_solve(
    params: *const MpetParams,
    n: usize,
    opts: *const MpetSolveOptions,
    report: *mut MpetSolveReport,
) -> MpetStatus {
    guarded(|| {
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        let opts = opts.as_ref().ok_or_else(|| null("opts"))?;
        if report.is_null() {
            return Err(null("report"));
        }
        let problem = match opts.problem {
            MpetProblem::Mpt => ProblemKind::Mpt,
            MpetProblem::Mpet => ProblemKind::Mpet,
        };
        let precond = match opts.preconditioner {
            MpetPreconditioner::Naive => PrecondKind::Naive,
            MpetPreconditioner::Transformed => PrecondKind::Transformed,
        };
        let mut exp = Experiment::new(problem, n, params.0.clone(), precond);
        exp.include_storage = opts.include_storage;
        let minres = MinresOptions {
            tol: opts.tol,
            maxit: opts.maxit,
            seed: opts.seed,
            guess: match opts.guess {
                MpetGuess::Zero => InitialGuess::Zero,
                MpetGuess::Uniform => InitialGuess::Uniform,
                MpetGuess::Symmetric => InitialGuess::Symmetric,
            },
        };
        let r = exp.solve(&minres)?.report;
        *report = MpetSolveReport {
            iterations: r.iterations,
            converged: r.converged,
            final_ratio: r.final_ratio,
            wall_time: r.wall_time,
            seed: r.seed,
        };
        Ok(())
    })
}

/// Copies the last error message into a Rust string; used by tests.
pub fn last_error_string() -> String {
    unsafe { CStr::from_ptr(mpet_last_error()) }.to_string_lossy().into_owned()
}
