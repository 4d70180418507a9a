use super::{factorize_spd, SpdFactor};
use crate::congruence::{CongruenceResult, MpetParameters};
use crate::meshfem::CsrMatrix;
use crate::systems::{BlockSystem, Discretization};
use crate::{Error, Result};

/// `y = A x` for a square operator.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Dofs carrying homogeneous Dirichlet data.
    fn constrained_dofs(&self) -> Vec<usize> {
        Vec::new()
    }
}

/// SPD preconditioner `z = B r`.
pub trait Preconditioner {
    fn dim(&self) -> usize;
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

impl LinearOperator for BlockSystem {
    fn dim(&self) -> usize {
        BlockSystem::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        BlockSystem::apply(self, x, y)
    }

    fn constrained_dofs(&self) -> Vec<usize> {
        self.dirichlet_global()
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        self.mul_vec_add(1.0, x, y);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// `B = diag(A₀⁻¹, A₁⁻¹, ...)` with each `A_i` factorized once.
#[derive(Clone, Debug)]
pub struct BlockDiagPreconditioner {
    factors: Vec<SpdFactor>,
    offsets: Vec<usize>,
    pub names: Vec<String>,
    pub description: String,
}

impl BlockDiagPreconditioner {
    /// Eliminates `dirichlet[i]` from block `i` (unit diagonal) and
    /// factorizes it.
    pub fn from_blocks(
        description: impl Into<String>,
        blocks: Vec<(String, CsrMatrix)>,
        dirichlet: &[Vec<usize>],
    ) -> Result<Self> {
        if dirichlet.len() != blocks.len() {
            return Err(Error::Dimension {
                what: "Dirichlet sets",
                expected: blocks.len(),
                got: dirichlet.len(),
            });
        }
        let mut factors = Vec::with_capacity(blocks.len());
        let mut names = Vec::with_capacity(blocks.len());
        let mut offsets = vec![0];
        for ((name, a), d) in blocks.into_iter().zip(dirichlet) {
            let a = if d.is_empty() {
                a
            } else {
                let mut mask = vec![false; a.nrows];
                for &k in d {
                    mask[k] = true;
                }
                a.eliminate(&mask, &mask, true)
            };
            factors.push(factorize_spd(&a, &name)?);
            offsets.push(offsets.last().unwrap() + a.nrows);
            names.push(name);
        }
        Ok(BlockDiagPreconditioner {
            factors,
            offsets,
            names,
            description: description.into(),
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.factors.len()
    }

    pub fn layout(&self) -> Vec<usize> {
        self.factors.iter().map(SpdFactor::dim).collect()
    }

    /// Checks that the layout matches a system.
    pub fn check_layout(&self, sys: &BlockSystem) -> Result<()> {
        if self.layout() != sys.layout {
            return Err(Error::validation(format!(
                "preconditioner layout {:?} does not match system layout {:?}",
                self.layout(),
                sys.layout
            )));
        }
        Ok(())
    }
}

impl Preconditioner for BlockDiagPreconditioner {
    fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for (i, f) in self.factors.iter().enumerate() {
            let (a, b) = (self.offsets[i], self.offsets[i + 1]);
            f.solve_into(&r[a..b], &mut z[a..b]);
        }
    }
}

/// Inverse of the diagonal blocks of an (untransformed) MPT system.
pub fn build_precond_mpt_naive(sys: &BlockSystem) -> Result<BlockDiagPreconditioner> {
    let mut blocks = Vec::with_capacity(sys.num_blocks());
    for i in 0..sys.num_blocks() {
        let b = sys
            .block(i, i)
            .ok_or_else(|| Error::validation(format!("diagonal block {i} is missing")))?;
        blocks.push((sys.names[i].clone(), b.clone()));
    }
    BlockDiagPreconditioner::from_blocks("MPT naive: diagonal blocks", blocks, &sys.dirichlet)
}

/// Blocks `(K̃_j stiffness + ξ̃_j mass)⁻¹`.
pub fn build_precond_mpt_transformed(
    disc: &Discretization,
    result: &CongruenceResult,
) -> Result<BlockDiagPreconditioner> {
    let blocks = result
        .k_tilde
        .iter()
        .zip(&result.gamma_tilde)
        .enumerate()
        .map(|(j, (&k, &g))| (format!("pressure~{}", j + 1), disc.stiffness_plus_mass(k, g)))
        .collect();
    let d = vec![disc.pressure_dofs.dirichlet.clone(); result.dim()];
    BlockDiagPreconditioner::from_blocks("MPT transformed: K~ stiffness + xi~ mass", blocks, &d)
}

fn mpet_leading_blocks(disc: &Discretization, mu: f64) -> Vec<(String, CsrMatrix)> {
    vec![
        ("displacement".to_string(), disc.elasticity.scaled(mu)),
        ("total pressure".to_string(), disc.mass.scaled(1.0 / (2.0 * mu))),
    ]
}

fn mpet_dirichlet(disc: &Discretization, j: usize) -> Vec<Vec<usize>> {
    let mut d = vec![disc.displacement_dofs.dirichlet.clone(), Vec::new()];
    d.extend(std::iter::repeat_n(disc.pressure_dofs.dirichlet.clone(), j));
    d
}

/// Elasticity, `(2μ)⁻¹` mass, then per network
/// `τK_j stiffness + (s_j + τξ_j + α_j²/λ) mass`.
pub fn build_precond_mpet_naive(
    disc: &Discretization,
    params: &MpetParameters,
) -> Result<BlockDiagPreconditioner> {
    params.validate()?;
    let xi = params.xi_sums();
    let mut blocks = mpet_leading_blocks(disc, params.mu);
    for j in 0..params.j() {
        let c = params.s[j] + params.tau * xi[j] + params.alpha[j].powi(2) / params.lambda;
        blocks.push((
            format!("pressure {}", j + 1),
            disc.stiffness_plus_mass(params.tau * params.k[j], c),
        ));
    }
    BlockDiagPreconditioner::from_blocks(
        "MPET naive: elasticity, (2mu)^-1 mass, diagonal pressure blocks",
        blocks,
        &mpet_dirichlet(disc, params.j()),
    )
}

/// Elasticity, `(2μ)⁻¹` mass, then per network `τK̃_j stiffness + γ̃_j mass`.
pub fn build_precond_mpet_transformed(
    disc: &Discretization,
    params: &MpetParameters,
    result: &CongruenceResult,
) -> Result<BlockDiagPreconditioner> {
    params.validate()?;
    if result.dim() != params.j() {
        return Err(Error::Dimension {
            what: "transformation size",
            expected: params.j(),
            got: result.dim(),
        });
    }
    let mut blocks = mpet_leading_blocks(disc, params.mu);
    for (j, (&k, &g)) in result.k_tilde.iter().zip(&result.gamma_tilde).enumerate() {
        if g < -1e-12 {
            return Err(Error::validation(format!("gamma~_{} = {g} is negative", j + 1)));
        }
        blocks.push((
            format!("pressure~{}", j + 1),
            disc.stiffness_plus_mass(params.tau * k, g.max(0.0)),
        ));
    }
    BlockDiagPreconditioner::from_blocks(
        "MPET transformed: elasticity, (2mu)^-1 mass, tau K~ stiffness + gamma~ mass",
        blocks,
        &mpet_dirichlet(disc, params.j()),
    )
}
