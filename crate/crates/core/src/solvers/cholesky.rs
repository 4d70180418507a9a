//! Envelope (skyline) Cholesky factorization after reverse Cuthill-McKee
//! reordering. Adequate for the banded matrices produced by structured
//! meshes; fill stays inside the envelope of the reordered matrix.

use std::collections::VecDeque;

use crate::meshfem::CsrMatrix;
use crate::{Error, Result};

/// `PAPᵀ = LLᵀ` with `L` stored row by row from its first nonzero column.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    first: Vec<usize>,
    /// Row `i` of `L` occupies `vals[start[i]..start[i + 1]]`, columns
    /// `first[i]..=i`.
    start: Vec<usize>,
    vals: Vec<f64>,
}

/// Reverse Cuthill-McKee ordering of the symmetric sparsity graph of `a`.
/// Each connected component starts from a minimum-degree vertex.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows;
    let degree: Vec<usize> = (0..n)
        .map(|i| a.row(i).0.iter().filter(|&&j| j != i).count())
        .collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    let mut queue = VecDeque::new();
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a
                .row(v)
                .0
                .iter()
                .copied()
                .filter(|&j| !visited[j])
                .collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Factorizes a symmetric positive definite matrix. Only the lower triangle
/// of `a` is read. `name` identifies the block in the error raised when a
/// pivot is not positive.
pub fn factorize_spd(a: &CsrMatrix, name: &str) -> Result<SpdFactor> {
    if a.nrows != a.ncols {
        return Err(Error::validation(format!(
            "block '{name}' is {}x{}, not square",
            a.nrows, a.ncols
        )));
    }
    let n = a.nrows;
    let perm = reverse_cuthill_mckee(a);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }

    let mut first: Vec<usize> = (0..n).collect();
    for (old_i, &new_i) in inv.iter().enumerate() {
        for &old_j in a.row(old_i).0 {
            let new_j = inv[old_j];
            let (r, c) = if new_i >= new_j { (new_i, new_j) } else { (new_j, new_i) };
            first[r] = first[r].min(c);
        }
    }
    let mut start = vec![0usize; n + 1];
    for i in 0..n {
        start[i + 1] = start[i] + (i - first[i] + 1);
    }
    let mut vals = vec![0.0; start[n]];
    for (old_i, &new_i) in inv.iter().enumerate() {
        let (cols, vs) = a.row(old_i);
        for (&old_j, &v) in cols.iter().zip(vs) {
            let new_j = inv[old_j];
            if new_j <= new_i {
                vals[start[new_i] + new_j - first[new_i]] = v;
            }
        }
    }

    for i in 0..n {
        let fi = first[i];
        let ri = start[i];
        for j in fi..i {
            let fj = first[j];
            let rj = start[j];
            let k0 = fi.max(fj);
            let mut s = vals[ri + j - fi];
            let li = &vals[ri + k0 - fi..ri + j - fi];
            let lj = &vals[rj + k0 - fj..rj + j - fj];
            s -= li.iter().zip(lj).map(|(x, y)| x * y).sum::<f64>();
            vals[ri + j - fi] = s / vals[rj + j - fj];
        }
        let row = &vals[ri..ri + i - fi];
        let d = vals[ri + i - fi] - row.iter().map(|x| x * x).sum::<f64>();
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotSpd {
                block: name.to_string(),
                row: perm[i],
                pivot: d,
            });
        }
        vals[ri + i - fi] = d.sqrt();
    }

    Ok(SpdFactor {
        n,
        perm,
        first,
        start,
        vals,
    })
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }

    /// Writes `A⁻¹ b` into `x`.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        assert_eq!(x.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let (fi, ri) = (self.first[i], self.start[i]);
            let row = &self.vals[ri..ri + i - fi];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / self.vals[ri + i - fi];
        }
        for i in (0..self.n).rev() {
            let (fi, ri) = (self.first[i], self.start[i]);
            y[i] /= self.vals[ri + i - fi];
            let yi = y[i];
            for (k, l) in self.vals[ri..ri + i - fi].iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshfem::{
        assemble_mass_p1, assemble_stiffness_p1, build_unit_square_mesh, apply_dirichlet, DofMap,
        Space,
    };
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn rel_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mul_vec(x);
        let num: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
        let den: f64 = b.iter().map(|v| v * v).sum();
        (num / den).sqrt()
    }

    #[test]
    fn identity_is_trivial() {
        let f = factorize_spd(&CsrMatrix::identity(5), "I").unwrap();
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(f.solve(&b), b.to_vec());
    }

    #[test]
    fn laplacian_matches_dense() {
        let mesh = build_unit_square_mesh(8).unwrap();
        let dofs = DofMap::new(&mesh, Space::P1).with_full_dirichlet();
        let a = assemble_stiffness_p1(&mesh, 1.0);
        let (a, _) = apply_dirichlet(&a, &vec![0.0; dofs.ndof], &dofs.dirichlet, None).unwrap();
        let f = factorize_spd(&a, "laplacian").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let b = random_vec(&mut rng, a.nrows);
            let x = f.solve(&b);
            assert!(rel_residual(&a, &x, &b) <= 1e-12);
            let xd = a.to_dense().cholesky().unwrap().solve(&DVector::from_vec(b.clone()));
            for (p, q) in x.iter().zip(xd.iter()) {
                assert!((p - q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mass_reproduces_constructed_solution() {
        let mesh = build_unit_square_mesh(6).unwrap();
        let m = assemble_mass_p1(&mesh, 1.0);
        let f = factorize_spd(&m, "mass").unwrap();
        let b = m.mul_vec(&vec![1.0; m.nrows]);
        assert!(f.solve(&b).iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn indefinite_block_is_named() {
        let a = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        match factorize_spd(&a, "pressure 2") {
            Err(Error::NotSpd { block, pivot, .. }) => {
                assert_eq!(block, "pressure 2");
                assert!(pivot <= 0.0);
            }
            other => panic!("expected NotSpd, got {other:?}"),
        }
    }

    #[test]
    fn rcm_is_a_permutation_and_shrinks_envelope() {
        let mesh = build_unit_square_mesh(12).unwrap();
        let a = assemble_stiffness_p1(&mesh, 1.0);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..a.nrows).collect::<Vec<_>>());

        // Scramble the numbering; RCM should recover a narrow envelope.
        let n = a.nrows;
        let scramble: Vec<usize> = (0..n).map(|i| (i * 37) % n).collect();
        let trips = a
            .triplets()
            .map(|(i, j, v)| (scramble[i], scramble[j], v + if i == j { 1.0 } else { 0.0 }))
            .collect();
        let b = CsrMatrix::from_triplets(n, n, trips);
        let f = factorize_spd(&b, "scrambled").unwrap();
        assert!(f.envelope_size() < n * 40);
    }
}
