use super::CsrMatrix;
use crate::{Error, Result};

/// Symmetric elimination of Dirichlet dofs.
///
/// Constrained rows and columns are zeroed and their diagonal set to one.
/// The right-hand side is lifted by the known values (`values[k]` for
/// `dofs[k]`, zero when `values` is `None`) and the constrained entries are
/// set to those values, so the solution reproduces them exactly.
pub fn apply_dirichlet(
    a: &CsrMatrix,
    rhs: &[f64],
    dofs: &[usize],
    values: Option<&[f64]>,
) -> Result<(CsrMatrix, Vec<f64>)> {
    if a.nrows != a.ncols {
        return Err(Error::validation("Dirichlet elimination needs a square matrix"));
    }
    if rhs.len() != a.nrows {
        return Err(Error::Dimension {
            what: "right-hand side",
            expected: a.nrows,
            got: rhs.len(),
        });
    }
    if let Some(v) = values {
        if v.len() != dofs.len() {
            return Err(Error::Dimension {
                what: "Dirichlet values",
                expected: dofs.len(),
                got: v.len(),
            });
        }
    }
    let mut mask = vec![false; a.nrows];
    let mut g = vec![0.0; a.nrows];
    for (k, &d) in dofs.iter().enumerate() {
        if d >= a.nrows {
            return Err(Error::validation(format!(
                "Dirichlet dof {d} out of range for {} unknowns",
                a.nrows
            )));
        }
        mask[d] = true;
        g[d] = values.map_or(0.0, |v| v[k]);
    }

    let mut b = rhs.to_vec();
    if g.iter().any(|&v| v != 0.0) {
        a.mul_vec_add(-1.0, &g, &mut b);
    }
    for d in 0..a.nrows {
        if mask[d] {
            b[d] = g[d];
        }
    }
    Ok((a.eliminate(&mask, &mask, true), b))
}
