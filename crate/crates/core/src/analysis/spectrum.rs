use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::solvers::{LinearOperator, Preconditioner};
use crate::{Error, Result};

/// Default cap on the number of free unknowns for dense spectra.
pub const DENSE_CAP: usize = 3000;

/// Extreme absolute eigenvalues of a preconditioned operator `BA`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eig_min: f64,
    pub eig_max: f64,
    pub kappa: f64,
    /// Lanczos estimate rather than a full eigensolve.
    pub estimate: bool,
    /// The Krylov space became invariant before the requested dimension.
    pub breakdown: bool,
    /// Smallest and largest signed eigenvalue (or Ritz value).
    pub signed_range: (f64, f64),
}

impl Spectrum {
    fn from_abs(eig_min: f64, eig_max: f64, signed_range: (f64, f64), estimate: bool, breakdown: bool) -> Self {
        Spectrum {
            eig_min,
            eig_max,
            kappa: eig_max / eig_min,
            estimate,
            breakdown,
            signed_range,
        }
    }

    pub fn is_indefinite(&self) -> bool {
        self.signed_range.0 < 0.0 && self.signed_range.1 > 0.0
    }
}

fn free_dofs(a: &(impl LinearOperator + ?Sized)) -> Vec<usize> {
    let mut mask = vec![false; a.dim()];
    for d in a.constrained_dofs() {
        mask[d] = true;
    }
    (0..a.dim()).filter(|&k| !mask[k]).collect()
}

/// All eigenvalues of `A x = θ B⁻¹ x` on the unconstrained dofs.
///
/// With `B = LLᵀ` on the free dofs, `θ` are the eigenvalues of the
/// symmetric matrix `LᵀAL`, which is similar to `BA`.
pub fn preconditioned_eigenvalues_dense<A, B>(a: &A, b: &B, cap: usize) -> Result<Vec<f64>>
where
    A: LinearOperator + ?Sized,
    B: Preconditioner + ?Sized,
{
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::Dimension {
            what: "preconditioner",
            expected: n,
            got: b.dim(),
        });
    }
    let free = free_dofs(a);
    let m = free.len();
    if m > cap {
        return Err(Error::TooLarge { size: m, cap });
    }
    let mut bd = DMatrix::zeros(m, m);
    let mut ad = DMatrix::zeros(m, m);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for (k, &g) in free.iter().enumerate() {
        e[g] = 1.0;
        b.apply(&e, &mut col);
        for (i, &r) in free.iter().enumerate() {
            bd[(i, k)] = col[r];
        }
        a.apply(&e, &mut col);
        for (i, &r) in free.iter().enumerate() {
            ad[(i, k)] = col[r];
        }
        e[g] = 0.0;
    }
    let bd = (&bd + bd.transpose()) * 0.5;
    let ad = (&ad + ad.transpose()) * 0.5;
    let l = bd
        .cholesky()
        .ok_or_else(|| Error::validation("preconditioner is not positive definite"))?
        .unpack();
    let s = l.transpose() * ad * &l;
    let mut theta: Vec<f64> = SymmetricEigen::new((&s + s.transpose()) * 0.5).eigenvalues.iter().copied().collect();
    theta.sort_by(f64::total_cmp);
    Ok(theta)
}

/// Extreme absolute eigenvalues of `BA` from a dense eigensolve.
pub fn preconditioned_spectrum_dense<A, B>(a: &A, b: &B, cap: usize) -> Result<Spectrum>
where
    A: LinearOperator + ?Sized,
    B: Preconditioner + ?Sized,
{
    let theta = preconditioned_eigenvalues_dense(a, b, cap)?;
    if theta.is_empty() {
        return Err(Error::validation("operator has no free dofs"));
    }
    let abs_min = theta.iter().map(|t| t.abs()).fold(f64::INFINITY, f64::min);
    let abs_max = theta.iter().map(|t| t.abs()).fold(0.0, f64::max);
    if abs_min == 0.0 {
        return Err(Error::validation("preconditioned operator is singular"));
    }
    Ok(Spectrum::from_abs(
        abs_min,
        abs_max,
        (theta[0], *theta.last().unwrap()),
        false,
        false,
    ))
}

/// Ritz values of a B-symmetric operator `B S` after `k` steps of Lanczos
/// in the `B` inner product with full reorthogonalization. `apply_s` must be
/// symmetric. Returns the sorted Ritz values and whether the recurrence
/// broke down early.
fn lanczos_ritz<B>(
    b: &B,
    start: Vec<f64>,
    k: usize,
    apply_s: &mut dyn FnMut(&[f64], &mut [f64]),
) -> Result<(Vec<f64>, bool)>
where
    B: Preconditioner + ?Sized,
{
    let n = start.len();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let mut v = start;
    let mut z = vec![0.0; n];
    b.apply(&v, &mut z);
    let g = dot(&z, &v);
    if !(g > 0.0) {
        return Err(Error::validation("Lanczos start vector has zero preconditioned norm"));
    }
    let g = g.sqrt();
    v.iter_mut().for_each(|x| *x /= g);
    z.iter_mut().for_each(|x| *x /= g);

    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut zs: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut alpha = Vec::with_capacity(k);
    let mut beta: Vec<f64> = Vec::with_capacity(k);
    let mut q = vec![0.0; n];
    let mut breakdown = false;
    let mut scale = 0.0f64;
    for step in 0..k {
        apply_s(&z, &mut q);
        let a = dot(&q, &z);
        alpha.push(a);
        scale = scale.max(a.abs());
        vs.push(v);
        zs.push(z);
        // Full reorthogonalization, applied twice.
        for _ in 0..2 {
            for (vi, zi) in vs.iter().zip(&zs) {
                let c = dot(zi, &q);
                q.iter_mut().zip(vi).for_each(|(x, y)| *x -= c * y);
            }
        }
        if step + 1 == k {
            break;
        }
        let mut zn = vec![0.0; n];
        b.apply(&q, &mut zn);
        let g2 = dot(&zn, &q);
        let gn = g2.max(0.0).sqrt();
        scale = scale.max(gn);
        if gn <= 1e-12 * scale {
            breakdown = true;
            break;
        }
        beta.push(gn);
        v = q.iter().map(|x| x / gn).collect();
        z = zn.into_iter().map(|x| x / gn).collect();
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let mut ritz: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
    ritz.sort_by(f64::total_cmp);
    Ok((ritz, breakdown))
}

/// Lanczos estimate of the extreme absolute eigenvalues of `BA` using a
/// `krylov_dim`-dimensional Krylov space.
///
/// For an indefinite spectrum the smallest `|θ|` is interior, so it is
/// taken from a second run on `B(AB A)`, whose eigenvalues are `θ²`.
pub fn preconditioned_spectrum_lanczos<A, B>(a: &A, b: &B, krylov_dim: usize, seed: u64) -> Result<Spectrum>
where
    A: LinearOperator + ?Sized,
    B: Preconditioner + ?Sized,
{
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::Dimension {
            what: "preconditioner",
            expected: n,
            got: b.dim(),
        });
    }
    if krylov_dim == 0 {
        return Err(Error::validation("Krylov dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    for d in a.constrained_dofs() {
        start[d] = 0.0;
    }
    let k = krylov_dim.min(free_dofs(a).len()).max(1);
    let mut apply_a = |x: &[f64], y: &mut [f64]| a.apply(x, y);
    let (ritz, mut breakdown) = lanczos_ritz(b, start.clone(), k, &mut apply_a)?;
    let (lo, hi) = (ritz[0], *ritz.last().unwrap());
    let eig_max = lo.abs().max(hi.abs());
    let eig_min = if lo < 0.0 && hi > 0.0 {
        let mut t1 = vec![0.0; n];
        let mut t2 = vec![0.0; n];
        let mut apply_sq = |x: &[f64], y: &mut [f64]| {
            a.apply(x, &mut t1);
            b.apply(&t1, &mut t2);
            a.apply(&t2, y);
        };
        let (sq, bd) = lanczos_ritz(b, start, k, &mut apply_sq)?;
        breakdown |= bd;
        sq[0].max(0.0).sqrt()
    } else {
        lo.abs().min(hi.abs())
    };
    if !(eig_min > 0.0) {
        return Err(Error::validation("Lanczos estimate of the smallest |eigenvalue| is zero"));
    }
    Ok(Spectrum::from_abs(eig_min, eig_max, (lo, hi), true, breakdown))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshfem::{CsrMatrix, DisplacementBc};
    use crate::congruence::{transform_parameters, MpetParameters};
    use crate::solvers::{build_precond_mpet_transformed, factorize_spd, IdentityPreconditioner, SpdFactor};
    use crate::systems::{assemble_mpet_transformed, Discretization};

    struct Exact(SpdFactor);

    impl Preconditioner for Exact {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn apply(&self, r: &[f64], z: &mut [f64]) {
            self.0.solve_into(r, z);
        }
    }

    #[test]
    fn exact_preconditioner_has_unit_spectrum() {
        let a = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]));
        let b = Exact(factorize_spd(&a, "a").unwrap());
        let s = preconditioned_spectrum_dense(&a, &b, DENSE_CAP).unwrap();
        assert!((s.eig_min - 1.0).abs() < 1e-12 && (s.kappa - 1.0).abs() < 1e-12);
        let l = preconditioned_spectrum_lanczos(&a, &b, 20, 0).unwrap();
        assert!((l.kappa - 1.0).abs() < 1e-10 && l.breakdown && l.estimate);
    }

    #[test]
    fn diagonal_kappa() {
        let a = CsrMatrix::from_diagonal(&[1.0, 4.0]);
        let s = preconditioned_spectrum_dense(&a, &IdentityPreconditioner(2), DENSE_CAP).unwrap();
        assert_eq!((s.eig_min, s.eig_max), (1.0, 4.0));
        assert!((s.kappa - 4.0).abs() < 1e-14);
    }

    #[test]
    fn cap_is_enforced() {
        let a = CsrMatrix::identity(10);
        let err = preconditioned_spectrum_dense(&a, &IdentityPreconditioner(10), 5);
        assert!(matches!(err, Err(Error::TooLarge { size: 10, cap: 5 })));
    }

    #[test]
    fn lanczos_on_known_spectrum() {
        let d: Vec<f64> = (1..=100).map(f64::from).collect();
        let a = CsrMatrix::from_diagonal(&d);
        let s = preconditioned_spectrum_lanczos(&a, &IdentityPreconditioner(100), 30, 7).unwrap();
        assert!((s.eig_max - 100.0).abs() <= 1.0);
        assert!((s.eig_min - 1.0).abs() <= 0.01);
    }

    #[test]
    fn lanczos_on_indefinite_spectrum() {
        let d: Vec<f64> = (1..=60).map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 / 2.0 }).collect();
        let a = CsrMatrix::from_diagonal(&d);
        let s = preconditioned_spectrum_lanczos(&a, &IdentityPreconditioner(60), 60, 1).unwrap();
        assert!(s.is_indefinite());
        assert!((s.eig_min - 0.5).abs() < 1e-6 && (s.eig_max - 60.0).abs() < 1e-6);
    }

    fn mpet_case(n: usize) -> (Discretization, MpetParameters, crate::congruence::CongruenceResult) {
        let disc = Discretization::new(n, DisplacementBc::ClampedExceptTop).unwrap();
        let params = MpetParameters::two_network(1e-2, 1e2, 1e2, 0.0);
        let r = transform_parameters(&params, false, &Default::default()).unwrap();
        (disc, params, r)
    }

    fn mpet_system(n: usize) -> (crate::systems::BlockSystem, crate::solvers::BlockDiagPreconditioner) {
        let (disc, params, r) = mpet_case(n);
        (
            assemble_mpet_transformed(&disc, &params, &r).unwrap(),
            build_precond_mpet_transformed(&disc, &params, &r).unwrap(),
        )
    }

    #[test]
    fn dense_spectrum_matches_independent_oracle() {
        let (disc, params, r) = mpet_case(4);
        let (sys, b) = mpet_system(4);
        let s = preconditioned_spectrum_dense(&sys, &b, DENSE_CAP).unwrap();

        // Oracle: the generalized problem A x = θ P x with P assembled
        // directly from the unit matrices (no factorizations), reduced to
        // free dofs and solved through P = CCᵀ, θ = eig(C⁻¹ A C⁻ᵀ).
        let free = sys.free_global();
        let (nu, np) = (disc.num_displacement(), disc.num_pressure());
        let mut p = DMatrix::zeros(sys.dim(), sys.dim());
        p.view_mut((0, 0), (nu, nu)).copy_from(&(disc.elasticity.to_dense() * params.mu));
        p.view_mut((nu, nu), (np, np)).copy_from(&(disc.mass.to_dense() / (2.0 * params.mu)));
        for j in 0..2 {
            let off = nu + np * (j + 1);
            let blk = disc.stiffness.to_dense() * (params.tau * r.k_tilde[j]) + disc.mass.to_dense() * r.gamma_tilde[j];
            p.view_mut((off, off), (np, np)).copy_from(&blk);
        }
        let ad = sys.to_dense();
        let pf = DMatrix::from_fn(free.len(), free.len(), |i, j| p[(free[i], free[j])]);
        let af = DMatrix::from_fn(free.len(), free.len(), |i, j| ad[(free[i], free[j])]);
        let c = pf.cholesky().unwrap().unpack();
        let ci = c.try_inverse().unwrap();
        let m = &ci * af * ci.transpose();
        let ev = SymmetricEigen::new((&m + m.transpose()) * 0.5).eigenvalues;
        let lo = ev.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        let hi = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(((hi / lo) - s.kappa).abs() <= 1e-8 * s.kappa, "{} vs {}", hi / lo, s.kappa);
    }

    #[test]
    fn lanczos_agrees_with_dense_at_small_size() {
        let (sys, b) = mpet_system(4);
        let d = preconditioned_spectrum_dense(&sys, &b, DENSE_CAP).unwrap();
        let l = preconditioned_spectrum_lanczos(&sys, &b, 400, 3).unwrap();
        assert!((l.eig_max - d.eig_max).abs() <= 0.02 * d.eig_max);
        assert!((l.eig_min - d.eig_min).abs() <= 0.02 * d.eig_min);
        assert!((l.kappa - d.kappa).abs() <= 0.02 * d.kappa);
    }
}
