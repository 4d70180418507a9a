use nalgebra::DMatrix;

use super::{BlockVector, Discretization};
use crate::congruence::MpetParameters;
use crate::solvers::factorize_spd;
use crate::{Error, Result};

/// Mixes the last `J = P.ncols()` segments: `out_j = Σ_i m(i, j) v_i`
/// when `transpose` is set, `Σ_i m(j, i) v_i` otherwise. Leading segments
/// are copied.
fn mix_pressures(v: &BlockVector, m: &DMatrix<f64>, transpose: bool) -> Result<BlockVector> {
    let j = m.ncols();
    if m.nrows() != j {
        return Err(Error::validation(format!(
            "transformation must be square, got {}x{}",
            m.nrows(),
            j
        )));
    }
    let nseg = v.segments.len();
    if nseg < j {
        return Err(Error::Dimension {
            what: "pressure segments",
            expected: j,
            got: nseg,
        });
    }
    let lead = nseg - j;
    let n = v.segments[lead].len();
    if v.segments[lead..].iter().any(|s| s.len() != n) {
        return Err(Error::validation("pressure segments differ in length"));
    }
    let mut out = v.clone();
    for a in 0..j {
        let seg = &mut out.segments[lead + a];
        seg.iter_mut().for_each(|x| *x = 0.0);
        for b in 0..j {
            let c = if transpose { m[(b, a)] } else { m[(a, b)] };
            if c == 0.0 {
                continue;
            }
            for (o, x) in seg.iter_mut().zip(&v.segments[lead + b]) {
                *o += c * x;
            }
        }
    }
    Ok(out)
}

/// `g̃ = (Pᵀ ⊗ I) g` on the pressure segments of a right-hand side.
pub fn transform_rhs(b: &BlockVector, p: &DMatrix<f64>) -> Result<BlockVector> {
    mix_pressures(b, p, true)
}

/// `p = (P ⊗ I) p̃` on the pressure segments of a transformed solution.
pub fn recover_pressures(x: &BlockVector, p: &DMatrix<f64>) -> Result<BlockVector> {
    mix_pressures(x, p, false)
}

/// Total pressure `p₀ = λ M⁻¹ B u − Σ_j α_j p_j` from the displacement and
/// the network pressures.
pub fn total_pressure_postprocess(
    disc: &Discretization,
    params: &MpetParameters,
    u: &[f64],
    pressures: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if u.len() != disc.num_displacement() {
        return Err(Error::Dimension {
            what: "displacement",
            expected: disc.num_displacement(),
            got: u.len(),
        });
    }
    if pressures.len() != params.j() {
        return Err(Error::Dimension {
            what: "network pressures",
            expected: params.j(),
            got: pressures.len(),
        });
    }
    let mass = factorize_spd(&disc.mass, "mass")?;
    let mut p0 = mass.solve(&disc.divergence.mul_vec(u));
    p0.iter_mut().for_each(|v| *v *= params.lambda);
    for (a, p) in params.alpha.iter().zip(pressures) {
        for (o, x) in p0.iter_mut().zip(p) {
            *o -= a * x;
        }
    }
    Ok(p0)
}
