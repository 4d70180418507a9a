use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::meshfem::CsrMatrix;
use crate::{Error, Result};

/// Square block matrix. Block `(i, j)` maps segment `j` to segment `i`;
/// absent blocks are zero.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub layout: Vec<usize>,
    pub names: Vec<String>,
    pub blocks: Vec<Vec<Option<CsrMatrix>>>,
    /// Constrained dofs of each segment (local indices, sorted).
    pub dirichlet: Vec<Vec<usize>>,
    /// Set when rows 2.. were negated so that the system is symmetric
    /// indefinite rather than positive definite.
    pub symmetric_indefinite: bool,
}

impl BlockSystem {
    pub fn new(layout: Vec<usize>, names: Vec<String>) -> Self {
        let nb = layout.len();
        assert_eq!(names.len(), nb);
        BlockSystem {
            blocks: vec![vec![None; nb]; nb],
            dirichlet: vec![Vec::new(); nb],
            layout,
            names,
            symmetric_indefinite: false,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.layout.len()
    }

    pub fn dim(&self) -> usize {
        self.layout.iter().sum()
    }

    /// Start of each segment in the flat vector, plus the total length.
    pub fn offsets(&self) -> Vec<usize> {
        offsets(&self.layout)
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&CsrMatrix> {
        self.blocks[i][j].as_ref()
    }

    pub fn set_block(&mut self, i: usize, j: usize, m: CsrMatrix) {
        assert_eq!(m.nrows, self.layout[i], "block ({i}, {j}) row count");
        assert_eq!(m.ncols, self.layout[j], "block ({i}, {j}) column count");
        self.blocks[i][j] = Some(m);
    }

    /// `y = A x` on flat vectors.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let off = self.offsets();
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.num_blocks() {
            let yi = &mut y[off[i]..off[i + 1]];
            for j in 0..self.num_blocks() {
                if let Some(b) = &self.blocks[i][j] {
                    b.mul_vec_add(1.0, &x[off[j]..off[j + 1]], yi);
                }
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let off = self.offsets();
        let mut trips = Vec::new();
        for i in 0..self.num_blocks() {
            for j in 0..self.num_blocks() {
                if let Some(b) = &self.blocks[i][j] {
                    trips.extend(b.triplets().map(|(r, c, v)| (off[i] + r, off[j] + c, v)));
                }
            }
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), trips)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.to_csr().to_dense()
    }

    /// `max |A - Aᵀ|` over the assembled matrix, also checking that each
    /// present block has a present transpose partner.
    pub fn asymmetry(&self) -> f64 {
        for i in 0..self.num_blocks() {
            for j in 0..self.num_blocks() {
                if self.blocks[i][j].is_some() != self.blocks[j][i].is_some() {
                    return f64::INFINITY;
                }
            }
        }
        self.to_csr().asymmetry()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .flatten()
            .map(CsrMatrix::max_abs)
            .fold(0.0, f64::max)
    }

    /// Global indices of constrained dofs.
    pub fn dirichlet_global(&self) -> Vec<usize> {
        let off = self.offsets();
        self.dirichlet
            .iter()
            .enumerate()
            .flat_map(|(b, d)| {
                let o = off[b];
                d.iter().map(move |&k| o + k)
            })
            .collect()
    }

    /// Global indices of unconstrained dofs.
    pub fn free_global(&self) -> Vec<usize> {
        let mut mask = vec![false; self.dim()];
        for d in self.dirichlet_global() {
            mask[d] = true;
        }
        (0..self.dim()).filter(|&k| !mask[k]).collect()
    }

    /// Coordinate triplets of the assembled matrix preceded by a
    /// `# blocks n_0 n_1 ...` layout line.
    pub fn to_triplet_text(&self) -> String {
        let mut out = String::from("# blocks");
        for n in &self.layout {
            let _ = write!(out, " {n}");
        }
        out.push('\n');
        out.push_str(&self.to_csr().to_triplet_text());
        out
    }
}

pub(crate) fn offsets(layout: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(layout.len() + 1);
    off.push(0);
    for n in layout {
        off.push(off.last().unwrap() + n);
    }
    off
}

/// A vector split into the segments of a block layout.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    pub segments: Vec<Vec<f64>>,
}

impl BlockVector {
    pub fn zeros(layout: &[usize]) -> Self {
        BlockVector {
            segments: layout.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn from_flat(layout: &[usize], flat: &[f64]) -> Result<Self> {
        let total: usize = layout.iter().sum();
        if flat.len() != total {
            return Err(Error::Dimension {
                what: "flat vector",
                expected: total,
                got: flat.len(),
            });
        }
        let off = offsets(layout);
        Ok(BlockVector {
            segments: (0..layout.len())
                .map(|b| flat[off[b]..off[b + 1]].to_vec())
                .collect(),
        })
    }

    pub fn layout(&self) -> Vec<usize> {
        self.segments.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.segments.concat()
    }
}
