use nalgebra::DMatrix;

use super::{build_coupling_matrix, build_exchange_matrix, SymMatrix};
use crate::{Error, Result};

/// Material and discretization scalars for a single implicit Euler step.
///
/// `xi[(i, j)]` is the exchange rate between networks `i` and `j`; the
/// diagonal is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MpetParameters {
    pub mu: f64,
    pub lambda: f64,
    pub tau: f64,
    pub alpha: Vec<f64>,
    pub s: Vec<f64>,
    pub k: Vec<f64>,
    pub xi: DMatrix<f64>,
}

impl MpetParameters {
    /// Two networks with `τ = μ = 1`, `α = (0.5, 0.5)`, `K₁ = 1` and
    /// `s₁ = s₂ = s`: the setting of the two-network robustness experiments.
    pub fn two_network(k2: f64, xi12: f64, lambda: f64, s: f64) -> Self {
        MpetParameters {
            mu: 1.0,
            lambda,
            tau: 1.0,
            alpha: vec![0.5, 0.5],
            s: vec![s, s],
            k: vec![1.0, k2],
            xi: DMatrix::from_row_slice(2, 2, &[0.0, xi12, xi12, 0.0]),
        }
    }

    /// Number of fluid networks.
    pub fn j(&self) -> usize {
        self.k.len()
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.j();
        if j == 0 {
            return Err(Error::validation("at least one network is required"));
        }
        for (what, len) in [("alpha", self.alpha.len()), ("s", self.s.len())] {
            if len != j {
                return Err(Error::validation(format!(
                    "{what} has {len} entries but K has {j}"
                )));
            }
        }
        if self.xi.nrows() != j || self.xi.ncols() != j {
            return Err(Error::validation(format!(
                "xi is {}x{} but K has {j} entries",
                self.xi.nrows(),
                self.xi.ncols()
            )));
        }
        positive("mu", self.mu)?;
        positive("lambda", self.lambda)?;
        positive("tau", self.tau)?;
        for (i, &k) in self.k.iter().enumerate() {
            positive(&format!("K{}", i + 1), k)?;
        }
        for (i, &a) in self.alpha.iter().enumerate() {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::validation(format!(
                    "alpha{} must lie in (0, 1], got {a}",
                    i + 1
                )));
            }
        }
        let sum: f64 = self.alpha.iter().sum();
        if sum > 1.0 + 1e-12 {
            return Err(Error::validation(format!(
                "sum of alpha must not exceed 1, got {sum}"
            )));
        }
        for (i, &s) in self.s.iter().enumerate() {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::validation(format!(
                    "s{} must be finite and nonnegative, got {s}",
                    i + 1
                )));
            }
        }
        build_exchange_matrix(&self.xi)?;
        Ok(())
    }

    pub fn k_matrix(&self) -> SymMatrix {
        SymMatrix::from_diagonal(&self.k)
    }

    pub fn exchange_matrix(&self) -> Result<SymMatrix> {
        build_exchange_matrix(&self.xi)
    }

    pub fn coupling_matrix(&self) -> Result<SymMatrix> {
        build_coupling_matrix(&self.alpha, self.lambda)
    }

    pub fn storage_matrix(&self) -> SymMatrix {
        SymMatrix::from_diagonal(&self.s)
    }

    /// `τE + L`, optionally plus `S`.
    pub fn gamma_matrix(&self, include_storage: bool) -> Result<SymMatrix> {
        let m = self
            .coupling_matrix()?
            .add_scaled(self.tau, &self.exchange_matrix()?);
        Ok(if include_storage {
            m.add_scaled(1.0, &self.storage_matrix())
        } else {
            m
        })
    }

    /// Diagonal exchange sums `ξ_j = Σ_i ξ_{j←i}`.
    pub fn xi_sums(&self) -> Vec<f64> {
        (0..self.j()).map(|i| self.xi.row(i).sum()).collect()
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "{what} must be positive and finite, got {v}"
        )))
    }
}
