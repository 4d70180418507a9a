use nalgebra::{DMatrix, DVector};

use super::{eigenvalue_cluster, symmetric_eig, MpetParameters, SymMatrix};
use crate::{Error, Result};

/// Off-diagonal mass allowed in `PᵀKP` and `PᵀMP`, relative to the largest
/// diagonal entry.
pub const DIAGONAL_TOL: f64 = 1e-10;

/// Ties in the column placement are decided within this relative margin.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CongruenceMode {
    /// Eigenvectors of `C = K⁻¹M`, with each repeated-eigenvalue block
    /// re-diagonalized against `K`.
    #[default]
    Eigenvector,
    /// `P = K^{-1/2} V` where `V` diagonalizes `K^{-1/2} M K^{-1/2}`.
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CongruenceOptions {
    pub mode: CongruenceMode,
    /// Relative tolerance for treating eigenvalues of `C` as repeated.
    pub rel_tol: f64,
    /// Scale columns of `P` to unit Euclidean norm.
    pub normalize: bool,
}

impl Default for CongruenceOptions {
    fn default() -> Self {
        CongruenceOptions {
            mode: CongruenceMode::Eigenvector,
            rel_tol: 1e-8,
            normalize: true,
        }
    }
}

/// A transformation `P` with `PᵀKP = diag(k_tilde)` and
/// `PᵀMP = diag(gamma_tilde)`.
///
/// `eigenvalues[j]` is the eigenvalue of `K⁻¹M` carried by column `j`, and
/// `clusters` groups the columns whose eigenvalues coincide.
#[derive(Clone, Debug)]
pub struct CongruenceResult {
    pub p: DMatrix<f64>,
    pub k_tilde: Vec<f64>,
    pub gamma_tilde: Vec<f64>,
    pub alpha_tilde: Option<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub clusters: Vec<Vec<usize>>,
    pub column_normalized: bool,
    pub include_storage: bool,
}

impl CongruenceResult {
    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// `PᵀXP` for any symmetric `X` of matching size.
    pub fn transform(&self, x: &SymMatrix) -> SymMatrix {
        x.congruence(&self.p)
    }
}

/// Simultaneously diagonalizes a positive diagonal `K` and a symmetric
/// positive semi-definite `M` by congruence.
pub fn diagonalize_by_congruence(
    k: &SymMatrix,
    m: &SymMatrix,
    opts: &CongruenceOptions,
) -> Result<CongruenceResult> {
    let pencil = Pencil::new(k, m, opts.rel_tol)?;
    let p = match opts.mode {
        CongruenceMode::Spectral => pencil.v.clone(),
        CongruenceMode::Eigenvector => {
            let mut p1 = pencil.v.clone();
            normalize_columns(&mut p1);
            let mut p = p1.clone();
            for cluster in &pencil.clusters {
                let u = DMatrix::from_fn(p1.nrows(), cluster.len(), |r, c| p1[(r, cluster[c])]);
                let refined = refine_block(k, m, &u)?;
                for (c, &col) in cluster.iter().enumerate() {
                    p.set_column(col, &refined.column(c));
                }
            }
            p
        }
    };
    finish(k, m, p, opts)
}

/// Like [`diagonalize_by_congruence`] in eigenvector mode, but the eigenvector
/// basis of `K⁻¹M` is seeded from the columns of `basis` instead of being
/// chosen by the eigensolver.
///
/// Each seed column is assigned to the eigenspace that captures the largest
/// share of it and projected onto that eigenspace; every eigenspace must
/// receive exactly as many seeds as its dimension. Useful when a repeated
/// eigenvalue leaves the basis undetermined and a particular one is wanted.
pub fn diagonalize_with_basis(
    k: &SymMatrix,
    m: &SymMatrix,
    basis: &DMatrix<f64>,
    opts: &CongruenceOptions,
) -> Result<CongruenceResult> {
    let pencil = Pencil::new(k, m, opts.rel_tol)?;
    let n = k.dim();
    if basis.nrows() != n || basis.ncols() != n {
        return Err(Error::Dimension {
            what: "seed basis",
            expected: n,
            got: if basis.nrows() != n {
                basis.nrows()
            } else {
                basis.ncols()
            },
        });
    }

    let projectors: Vec<DMatrix<f64>> = pencil
        .clusters
        .iter()
        .map(|cluster| {
            let vc = DMatrix::from_fn(n, cluster.len(), |r, c| pencil.v[(r, cluster[c])]);
            let gram = vc.transpose() * &vc;
            let inv = gram
                .try_inverse()
                .ok_or_else(|| Error::validation("degenerate eigenvector block"))?;
            Ok(&vc * inv * vc.transpose())
        })
        .collect::<Result<_>>()?;

    let mut owner = vec![0usize; n];
    let mut projected = DMatrix::zeros(n, n);
    for col in 0..n {
        let x = basis.column(col).into_owned();
        let norm = x.norm();
        if norm == 0.0 {
            return Err(Error::validation(format!("seed column {col} is zero")));
        }
        let (best, proj) = projectors
            .iter()
            .map(|pr| pr * &x)
            .enumerate()
            .max_by(|(_, a), (_, b)| a.norm().total_cmp(&b.norm()))
            .expect("at least one cluster");
        owner[col] = best;
        projected.set_column(col, &(&proj / proj.norm()));
    }

    let mut p = projected.clone();
    for (ci, cluster) in pencil.clusters.iter().enumerate() {
        let cols: Vec<usize> = (0..n).filter(|&c| owner[c] == ci).collect();
        if cols.len() != cluster.len() {
            return Err(Error::validation(format!(
                "eigenvalue {:.6e} has multiplicity {} but {} seed columns fall in its eigenspace",
                pencil.theta[cluster[0]],
                cluster.len(),
                cols.len()
            )));
        }
        let u = DMatrix::from_fn(n, cols.len(), |r, c| projected[(r, cols[c])]);
        let refined = refine_block(k, m, &u)?;
        for (c, &col) in cols.iter().enumerate() {
            p.set_column(col, &refined.column(c));
        }
    }
    let opts = CongruenceOptions {
        mode: CongruenceMode::Eigenvector,
        ..*opts
    };
    finish(k, m, p, &opts)
}

/// Transforms a parameter set: diagonalizes `K` against `τE + L`, or against
/// `S + τE + L` when `include_storage` is set, and records `α̃ = Pᵀα`.
pub fn transform_parameters(
    params: &MpetParameters,
    include_storage: bool,
    opts: &CongruenceOptions,
) -> Result<CongruenceResult> {
    params.validate()?;
    let k = params.k_matrix();
    let m = params.gamma_matrix(include_storage)?;
    let mut result = diagonalize_by_congruence(&k, &m, opts)?;
    let alpha = DVector::from_column_slice(&params.alpha);
    result.alpha_tilde = Some((result.p.transpose() * alpha).iter().copied().collect());
    result.include_storage = include_storage;
    Ok(result)
}

/// Eigen-structure of `K⁻¹M` obtained from the symmetric form
/// `K^{-1/2} M K^{-1/2}`.
struct Pencil {
    /// Ascending eigenvalues.
    theta: Vec<f64>,
    /// `K^{-1/2} W`: eigenvectors of `K⁻¹M` with `VᵀKV = I`.
    v: DMatrix<f64>,
    clusters: Vec<Vec<usize>>,
}

impl Pencil {
    fn new(k: &SymMatrix, m: &SymMatrix, rel_tol: f64) -> Result<Self> {
        let n = k.dim();
        if m.dim() != n {
            return Err(Error::Dimension {
                what: "M",
                expected: n,
                got: m.dim(),
            });
        }
        if n == 0 {
            return Err(Error::validation("empty matrices"));
        }
        if !k.is_diagonal() {
            return Err(Error::validation("K must be diagonal"));
        }
        let kd = k.diagonal();
        if let Some((i, &bad)) = kd
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > 0.0) || !v.is_finite())
        {
            return Err(Error::validation(format!(
                "K[{i}][{i}] must be positive, got {bad}"
            )));
        }
        if m.as_matrix().iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("M has non-finite entries"));
        }

        let isq: Vec<f64> = kd.iter().map(|v| 1.0 / v.sqrt()).collect();
        let s = SymMatrix::new(DMatrix::from_fn(n, n, |i, j| {
            isq[i] * m.get(i, j) * isq[j]
        }));
        let eig = symmetric_eig(&s)?;
        let theta = eig.eigenvalues;
        let scale = theta.iter().fold(0.0_f64, |a, t| a.max(t.abs()));
        if theta[0] < -1e-10 * scale {
            return Err(Error::validation(format!(
                "M must be positive semi-definite, smallest eigenvalue of K^-1 M is {:.6e}",
                theta[0]
            )));
        }
        let v = DMatrix::from_fn(n, n, |r, c| isq[r] * eig.eigenvectors[(r, c)]);
        let scaled: Vec<f64> = if scale > 0.0 {
            theta.iter().map(|t| t / scale).collect()
        } else {
            theta.clone()
        };
        let clusters = eigenvalue_cluster(&scaled, rel_tol);
        Ok(Pencil { theta, v, clusters })
    }
}

/// Diagonalizes `K` restricted to the span of `u` (columns lying in one
/// eigenspace of `K⁻¹M`) by the eigenvectors of `UᵀKU`. If the eigenvalues
/// in the block only coincide to within the clustering tolerance, a second
/// pass diagonalizes the remaining `M` coupling.
fn refine_block(k: &SymMatrix, m: &SymMatrix, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if u.ncols() == 1 {
        return Ok(u.clone());
    }
    let g = k.congruence(u);
    let q = symmetric_eig(&g)?.eigenvectors;
    let u = u * q;

    let h = m.congruence(&u);
    let hd = h.diagonal();
    let scale = hd.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if max_off_diagonal(&h) <= 1e-13 * scale {
        return Ok(u);
    }
    let gd = k.congruence(&u).diagonal();
    let w: Vec<f64> = gd.iter().map(|v| 1.0 / v.sqrt()).collect();
    let hs = SymMatrix::new(DMatrix::from_fn(h.dim(), h.dim(), |i, j| {
        w[i] * h.get(i, j) * w[j]
    }));
    let z = symmetric_eig(&hs)?.eigenvectors;
    let d = DMatrix::from_fn(w.len(), w.len(), |i, j| if i == j { w[i] } else { 0.0 });
    Ok(u * d * z)
}

fn finish(
    k: &SymMatrix,
    m: &SymMatrix,
    mut p: DMatrix<f64>,
    opts: &CongruenceOptions,
) -> Result<CongruenceResult> {
    let n = p.nrows();
    if opts.normalize {
        normalize_columns(&mut p);
    }

    // Eigenvalue carried by each column before reordering.
    let kt = k.congruence(&p);
    let mt = m.congruence(&p);
    let col_theta: Vec<f64> = (0..n).map(|j| mt.get(j, j) / kt.get(j, j)).collect();

    let perm = column_placement(&p, &col_theta);
    let mut placed = DMatrix::zeros(n, n);
    for (dest, &src) in perm.iter().enumerate() {
        placed.set_column(dest, &p.column(src));
    }
    let mut p = placed;
    apply_sign_convention(&mut p);

    let kt = k.congruence(&p);
    let mt = m.congruence(&p);
    for t in [&kt, &mt] {
        let scale = t.diagonal().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let off = max_off_diagonal(t);
        if off > DIAGONAL_TOL * scale {
            return Err(Error::Congruence {
                residual: if scale > 0.0 { off / scale } else { off },
                tolerance: DIAGONAL_TOL,
            });
        }
    }
    let sv = p.clone().singular_values();
    let (smin, smax) = sv
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if !(smin > 1e-12 * smax) {
        return Err(Error::Congruence {
            residual: smin / smax,
            tolerance: 1e-12,
        });
    }

    let eigenvalues: Vec<f64> = perm.iter().map(|&src| col_theta[src]).collect();
    let k_tilde = kt.diagonal();
    let gamma_tilde = mt.diagonal();

    let scale = eigenvalues.iter().fold(0.0_f64, |a, t| a.max(t.abs()));
    let scaled: Vec<f64> = if scale > 0.0 {
        eigenvalues.iter().map(|t| t / scale).collect()
    } else {
        eigenvalues.clone()
    };
    let clusters = eigenvalue_cluster(&scaled, opts.rel_tol);

    Ok(CongruenceResult {
        p,
        k_tilde,
        gamma_tilde,
        alpha_tilde: None,
        eigenvalues,
        clusters,
        column_normalized: opts.normalize,
        include_storage: false,
    })
}

fn normalize_columns(p: &mut DMatrix<f64>) {
    for mut col in p.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
}

fn max_off_diagonal(a: &SymMatrix) -> f64 {
    let n = a.dim();
    let mut off = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(a.get(i, j).abs());
            }
        }
    }
    off
}

/// Chooses the output position of each column of `p`: repeatedly take the
/// unplaced column and free row with the largest normalized `|p_ij|` and
/// place that column at that row's index. Near ties go to the larger
/// eigenvalue, then the lower column, then the lower row.
///
/// Returns `perm` with `perm[dest] = src`.
fn column_placement(p: &DMatrix<f64>, theta: &[f64]) -> Vec<usize> {
    let n = p.nrows();
    let norms: Vec<f64> = p.column_iter().map(|c| c.norm()).collect();
    let mut perm = vec![usize::MAX; n];
    let mut col_used = vec![false; n];
    let mut row_used = vec![false; n];
    for _ in 0..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for c in (0..n).filter(|&c| !col_used[c]) {
            for r in (0..n).filter(|&r| !row_used[r]) {
                let v = p[(r, c)].abs() / norms[c];
                best = match best {
                    None => Some((r, c, v)),
                    Some((br, bc, bv)) => {
                        let tie = (v - bv).abs() <= TIE_TOL * v.max(bv);
                        let better = if tie {
                            theta[c] > theta[bc]
                                && (theta[c] - theta[bc]).abs()
                                    > TIE_TOL * theta[c].abs().max(theta[bc].abs())
                        } else {
                            v > bv
                        };
                        if better {
                            Some((r, c, v))
                        } else {
                            Some((br, bc, bv))
                        }
                    }
                };
            }
        }
        let (r, c, _) = best.expect("unplaced column remains");
        perm[r] = c;
        col_used[c] = true;
        row_used[r] = true;
    }
    perm
}

/// Flips each column so that its largest-magnitude entry is nonnegative; the
/// first index wins near ties.
fn apply_sign_convention(p: &mut DMatrix<f64>) {
    for mut col in p.column_iter_mut() {
        let amax = col.amax();
        let lead = col
            .iter()
            .copied()
            .find(|v| v.abs() >= amax * (1.0 - TIE_TOL))
            .unwrap_or(0.0);
        if lead < 0.0 {
            col.neg_mut();
        }
    }
}
