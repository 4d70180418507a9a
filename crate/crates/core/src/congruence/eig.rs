//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use nalgebra::DMatrix;

use super::SymMatrix;
use crate::{Error, Result};

/// Relative off-diagonal Frobenius mass at which the sweeps stop.
const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

/// Eigendecomposition `A = V diag(w) Vᵀ` by cyclic Jacobi rotations.
///
/// Each sweep visits every off-diagonal pair once. The iteration stops when
/// the off-diagonal Frobenius norm drops below `1e-14 ‖A‖_F`.
pub fn symmetric_eig(a: &SymMatrix) -> Result<SymmetricEigen> {
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let norm = m.norm();

    let mut off = off_diagonal_norm(&m);
    let mut sweeps = 0;
    while off > JACOBI_TOL * norm {
        if sweeps == MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&m);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += m[(i, j)] * m[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// `M <- Jᵀ M J`, `V <- V J` for the plane rotation acting on columns p, q.
fn rotate(m: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let n = m.nrows();
    for k in 0..n {
        let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Groups eigenvalues that coincide up to `rel_tol`.
///
/// Indices `i` and `j` are linked when
/// `|w_i - w_j| <= rel_tol * max(1, |w_i|, |w_j|)`; clusters are the
/// connected components of that relation. Each cluster lists its indices in
/// ascending order and clusters are ordered by their smallest index.
pub fn eigenvalue_cluster(eigenvalues: &[f64], rel_tol: f64) -> Vec<Vec<usize>> {
    let n = eigenvalues.len();
    let mut parent: Vec<usize> = (0..n).collect();

    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (eigenvalues[i], eigenvalues[j]);
            let scale = 1.0_f64.max(a.abs()).max(b.abs());
            if (a - b).abs() <= rel_tol * scale {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[root]].push(i);
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_eigenpairs(a: &SymMatrix, eig: &SymmetricEigen) {
        let n = a.dim();
        let norm = a.as_matrix().norm().max(1.0);
        for k in 0..n {
            let v = eig.eigenvectors.column(k);
            let r = a.as_matrix() * v - v * eig.eigenvalues[k];
            assert!(r.norm() <= 1e-12 * norm, "column {k}: residual {}", r.norm());
        }
        let gram = eig.eigenvectors.transpose() * &eig.eigenvectors;
        assert!((gram - DMatrix::identity(n, n)).amax() <= 1e-12);
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let a = SymMatrix::identity(3);
        let eig = symmetric_eig(&a).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
        check_eigenpairs(&a, &eig);
    }

    #[test]
    fn diagonal_input_is_left_alone() {
        let a = SymMatrix::from_diagonal(&[5.0, 2.0]);
        let eig = symmetric_eig(&a).unwrap();
        assert_eq!(eig.eigenvalues, vec![2.0, 5.0]);
        assert_eq!(eig.eigenvectors[(1, 0)].abs(), 1.0);
        assert_eq!(eig.eigenvectors[(0, 1)].abs(), 1.0);
    }

    #[test]
    fn random_symmetric_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
            let a = SymMatrix::new(&m + m.transpose());
            let eig = symmetric_eig(&a).unwrap();
            check_eigenpairs(&a, &eig);
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.eigenvalues.clone()));
            let rec = &eig.eigenvectors * d * eig.eigenvectors.transpose();
            assert!((rec - a.as_matrix()).amax() <= 1e-10);
        }
    }

    #[test]
    fn zero_matrix_converges_immediately() {
        let eig = symmetric_eig(&SymMatrix::zeros(4)).unwrap();
        assert_eq!(eig.eigenvalues, vec![0.0; 4]);
        assert_eq!(eig.eigenvectors, DMatrix::identity(4, 4));
    }

    #[test]
    fn clusters_example_eigenvalues() {
        let c = eigenvalue_cluster(&[0.0, 101.01, 101.01], 1e-8);
        assert_eq!(c, vec![vec![0], vec![1, 2]]);
    }

    #[test]
    fn clusters_distinct_and_near_equal() {
        assert_eq!(
            eigenvalue_cluster(&[1.0, 2.0, 3.0], 1e-8),
            vec![vec![0], vec![1], vec![2]]
        );
        assert_eq!(
            eigenvalue_cluster(&[1.0, 1.0 + 1e-12, 5.0], 1e-8),
            vec![vec![0, 1], vec![2]]
        );
    }

    #[test]
    fn clusters_are_transitive() {
        // 0 ~ 0.6e-8 ~ 1.2e-8 although |0 - 1.2e-8| > 1e-8.
        let c = eigenvalue_cluster(&[1.2e-8, 0.0, 0.6e-8], 1e-8);
        assert_eq!(c, vec![vec![0, 1, 2]]);
    }
}
