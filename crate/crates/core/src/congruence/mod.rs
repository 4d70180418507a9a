//! Dense `J x J` algebra for the network coefficient matrices.
//!
//! The conductivity matrix `K` is diagonal and positive, the exchange matrix
//! `E` and the Biot coupling matrix `L` are symmetric positive semi-definite.
//! [`diagonalize_by_congruence`] finds an invertible `P` with `PᵀKP` and
//! `PᵀMP` both diagonal; [`transform_parameters`] applies it to a full MPET
//! parameter set.

mod diag;
mod eig;
mod io;
mod params;

pub use diag::{
    diagonalize_by_congruence, diagonalize_with_basis, transform_parameters, CongruenceMode,
    CongruenceOptions, CongruenceResult,
};
pub use eig::{eigenvalue_cluster, symmetric_eig, SymmetricEigen};
pub use io::{read_matrix, read_matrix_file, write_matrix, write_matrix_file};
pub use params::MpetParameters;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Dense symmetric matrix. Stored in full; the constructor symmetrizes its
/// input so `m[(i, j)] == m[(j, i)]` holds bitwise.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrizes `m` as `(m + mᵀ) / 2`.
    ///
    /// Panics if `m` is not square.
    pub fn new(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "SymMatrix requires a square matrix");
        let n = m.nrows();
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        });
        SymMatrix { m }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                what: "matrix row length",
                expected: n,
                got: bad.len(),
            });
        }
        Ok(Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        SymMatrix {
            m: DMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 }),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)]).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.m[(i, j)] == 0.0))
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            m: &self.m + &other.m * c,
        }
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix { m: &self.m * c }
    }

    /// Quadratic form `wᵀ A w`.
    pub fn quadratic_form(&self, w: &[f64]) -> f64 {
        let n = self.dim();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                sum += w[i] * self.m[(i, j)] * w[j];
            }
        }
        sum
    }

    /// Congruence product `Pᵀ A P`.
    pub fn congruence(&self, p: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::new(p.transpose() * &self.m * p)
    }
}

/// Exchange matrix with `E[j][j] = Σ_i ξ_{j←i}` and `E[i][j] = -ξ_{i←j}`.
///
/// `xi` must be square, symmetric, nonnegative, with a zero diagonal.
pub fn build_exchange_matrix(xi: &DMatrix<f64>) -> Result<SymMatrix> {
    if !xi.is_square() {
        return Err(Error::validation(format!(
            "exchange coefficients must be square, got {}x{}",
            xi.nrows(),
            xi.ncols()
        )));
    }
    let n = xi.nrows();
    for i in 0..n {
        if xi[(i, i)] != 0.0 {
            return Err(Error::validation(format!(
                "exchange coefficient xi[{i}][{i}] must be zero, got {}",
                xi[(i, i)]
            )));
        }
        for j in 0..n {
            let v = xi[(i, j)];
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(format!(
                    "exchange coefficient xi[{i}][{j}] must be finite and nonnegative, got {v}"
                )));
            }
            if v != xi[(j, i)] {
                return Err(Error::validation(format!(
                    "exchange coefficients must be symmetric: xi[{i}][{j}] = {v}, xi[{j}][{i}] = {}",
                    xi[(j, i)]
                )));
            }
        }
    }
    let e = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            xi.row(i).sum()
        } else {
            -xi[(i, j)]
        }
    });
    Ok(SymMatrix::new(e))
}

/// Rank-one Biot coupling matrix `L = α αᵀ / λ`.
pub fn build_coupling_matrix(alpha: &[f64], lambda: f64) -> Result<SymMatrix> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::validation(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    let n = alpha.len();
    Ok(SymMatrix::new(DMatrix::from_fn(n, n, |i, j| {
        alpha[i] * alpha[j] / lambda
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constructor_symmetrizes() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        let s = SymMatrix::new(m);
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 3.0);
    }

    #[test]
    fn no_exchange_gives_zero_matrix() {
        let e = build_exchange_matrix(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(e, SymMatrix::zeros(2));
    }

    #[test]
    fn three_network_exchange_matrix() {
        let xi = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 0.01, 1.0, 0.01, 0.0, 0.0001, 1.0, 0.0001, 0.0],
        );
        let e = build_exchange_matrix(&xi).unwrap();
        let expected = [
            [1.01, -0.01, -1.0],
            [-0.01, 0.0101, -0.0001],
            [-1.0, -0.0001, 1.0001],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((e.get(i, j) - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exchange_rejects_bad_input() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(build_exchange_matrix(&asym), Err(Error::Validation(_))));
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(matches!(build_exchange_matrix(&neg), Err(Error::Validation(_))));
        let diag = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(build_exchange_matrix(&diag), Err(Error::Validation(_))));
    }

    #[test]
    fn coupling_matrix_values() {
        let l = build_coupling_matrix(&[0.5, 0.5], 1.0).unwrap();
        assert_eq!(l, SymMatrix::new(DMatrix::from_element(2, 2, 0.25)));
        let z = build_coupling_matrix(&[0.0, 0.0, 0.0], 3.0).unwrap();
        assert_eq!(z, SymMatrix::zeros(3));
        assert!(build_coupling_matrix(&[1.0], 0.0).is_err());
        assert!(build_coupling_matrix(&[1.0], -2.0).is_err());
    }

    fn pairwise_sum(xi: &DMatrix<f64>, w: &[f64]) -> f64 {
        let n = w.len();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += xi[(i, j)] * (w[i] - w[j]).powi(2);
            }
        }
        s
    }

    fn symmetric_xi(n: usize, vals: &[f64]) -> DMatrix<f64> {
        let mut xi = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                xi[(i, j)] = vals[k];
                xi[(j, i)] = vals[k];
                k += 1;
            }
        }
        xi
    }

    proptest! {
        #[test]
        fn exchange_quadratic_form_is_pairwise_sum(
            n in 1usize..7,
            vals in prop::collection::vec(0.0f64..10.0, 21),
            w in prop::collection::vec(-5.0f64..5.0, 7),
        ) {
            let xi = symmetric_xi(n, &vals);
            let e = build_exchange_matrix(&xi).unwrap();
            let w = &w[..n];
            let lhs = e.quadratic_form(w);
            // Each unordered pair appears twice in the ordered double sum, and
            // the identity counts it with weight one: Σ_{i<j} ξ_ij (w_i - w_j)².
            let rhs = 0.5 * pairwise_sum(&xi, w);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300) + 1e-13);
        }

        #[test]
        fn coupling_is_rank_one(
            alpha in prop::collection::vec(0.0f64..1.0, 1..7),
            lambda in 1e-3f64..1e3,
        ) {
            let l = build_coupling_matrix(&alpha, lambda).unwrap();
            let a = nalgebra::DVector::from_vec(alpha.clone());
            let la = l.as_matrix() * &a;
            let expected = &a * (a.norm_squared() / lambda);
            prop_assert!((la - &expected).amax() <= 1e-12 * expected.amax().max(1e-300));
        }
    }
}
