use nalgebra::DMatrix;

use super::{BlockSystem, BlockVector};
use crate::congruence::{CongruenceResult, MpetParameters, SymMatrix};
use crate::meshfem::{
    assemble_divergence_p2_p1, assemble_elasticity_p2, assemble_load_p1, assemble_load_p2_vector,
    assemble_mass_p1, assemble_stiffness_p1, build_unit_square_mesh, CsrMatrix, DisplacementBc,
    DofMap, Space, StructuredMesh,
};
use crate::{Error, Result};

/// Mesh, dof maps and the unit-coefficient matrices every block is scaled
/// from. Pressures carry zero Dirichlet data on the whole boundary; the
/// displacement on the part selected by `bc`.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: StructuredMesh,
    pub bc: DisplacementBc,
    pub pressure_dofs: DofMap,
    pub displacement_dofs: DofMap,
    /// P1 `∫ ∇φ_i·∇φ_j`.
    pub stiffness: CsrMatrix,
    /// P1 `∫ φ_i φ_j`.
    pub mass: CsrMatrix,
    /// P2 vector `(2 ε(u), ε(v))`, i.e. the elasticity form with `μ = 1`.
    pub elasticity: CsrMatrix,
    /// `(div v, q)`.
    pub divergence: CsrMatrix,
}

impl Discretization {
    pub fn new(n: usize, bc: DisplacementBc) -> Result<Self> {
        let mesh = build_unit_square_mesh(n)?;
        let pressure_dofs = DofMap::new(&mesh, Space::P1).with_full_dirichlet();
        let displacement_dofs = DofMap::new(&mesh, Space::P2Vector).with_dirichlet(|p| bc.contains(p));
        Ok(Discretization {
            stiffness: assemble_stiffness_p1(&mesh, 1.0),
            mass: assemble_mass_p1(&mesh, 1.0),
            elasticity: assemble_elasticity_p2(&mesh, 1.0),
            divergence: assemble_divergence_p2_p1(&mesh),
            mesh,
            bc,
            pressure_dofs,
            displacement_dofs,
        })
    }

    pub fn n(&self) -> usize {
        self.mesh.n
    }

    pub fn num_pressure(&self) -> usize {
        self.pressure_dofs.ndof
    }

    pub fn num_displacement(&self) -> usize {
        self.displacement_dofs.ndof
    }

    /// `a · stiffness + b · mass`.
    pub fn stiffness_plus_mass(&self, a: f64, b: f64) -> CsrMatrix {
        match (a == 0.0, b == 0.0) {
            (true, _) => self.mass.scaled(b),
            (false, true) => self.stiffness.scaled(a),
            _ => CsrMatrix::linear_combination(&[(a, &self.stiffness), (b, &self.mass)])
                .expect("P1 blocks share a shape"),
        }
    }

    /// Layout of an MPET system with `j` networks.
    pub fn mpet_layout(&self, j: usize) -> Vec<usize> {
        let mut l = vec![self.num_displacement(), self.num_pressure()];
        l.extend(std::iter::repeat_n(self.num_pressure(), j));
        l
    }

    pub fn mpt_layout(&self, j: usize) -> Vec<usize> {
        vec![self.num_pressure(); j]
    }
}

fn mpt_names(j: usize, transformed: bool) -> Vec<String> {
    let p = if transformed { "pressure~" } else { "pressure " };
    (1..=j).map(|k| format!("{p}{k}")).collect()
}

fn mpet_names(j: usize, transformed: bool) -> Vec<String> {
    let mut names = vec!["displacement".to_string(), "total pressure".to_string()];
    names.extend(mpt_names(j, transformed));
    names
}

/// Zeroes constrained rows/columns in every block, with a unit diagonal in
/// the diagonal blocks.
fn impose_dirichlet(sys: &mut BlockSystem) {
    let masks: Vec<Vec<bool>> = sys
        .layout
        .iter()
        .zip(&sys.dirichlet)
        .map(|(&n, d)| {
            let mut m = vec![false; n];
            for &k in d {
                m[k] = true;
            }
            m
        })
        .collect();
    for i in 0..sys.num_blocks() {
        for j in 0..sys.num_blocks() {
            if let Some(b) = &sys.blocks[i][j] {
                if sys.dirichlet[i].is_empty() && sys.dirichlet[j].is_empty() {
                    continue;
                }
                sys.blocks[i][j] = Some(b.eliminate(&masks[i], &masks[j], i == j));
            }
        }
    }
}

/// `K ⊗ stiffness + G ⊗ mass` on `j` pressure blocks starting at `first`,
/// multiplied by `sign`. Off-diagonal blocks with a zero coefficient are
/// left out.
fn pressure_blocks(
    sys: &mut BlockSystem,
    disc: &Discretization,
    first: usize,
    k: &[f64],
    g: &DMatrix<f64>,
    sign: f64,
) {
    let j = k.len();
    for a in 0..j {
        for b in 0..j {
            let block = if a == b {
                disc.stiffness_plus_mass(sign * k[a], sign * g[(a, a)])
            } else if g[(a, b)] != 0.0 {
                disc.mass.scaled(sign * g[(a, b)])
            } else {
                continue;
            };
            sys.set_block(first + a, first + b, block);
        }
    }
}

/// `K ⊗ stiffness + E ⊗ mass` with zero Dirichlet data on every pressure.
pub fn assemble_mpt(disc: &Discretization, k: &[f64], e: &SymMatrix) -> Result<BlockSystem> {
    let j = k.len();
    if e.dim() != j {
        return Err(Error::validation(format!(
            "exchange matrix is {0}x{0} but {j} conductivities were given",
            e.dim()
        )));
    }
    if let Some(bad) = k.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::validation(format!("conductivity must be positive, got {bad}")));
    }
    let mut sys = BlockSystem::new(disc.mpt_layout(j), mpt_names(j, false));
    pressure_blocks(&mut sys, disc, 0, k, e.as_matrix(), 1.0);
    sys.dirichlet = vec![disc.pressure_dofs.dirichlet.clone(); j];
    impose_dirichlet(&mut sys);
    Ok(sys)
}

/// `K̃ ⊗ stiffness + Ẽ ⊗ mass`: `J` decoupled blocks.
pub fn assemble_mpt_transformed(
    disc: &Discretization,
    result: &CongruenceResult,
) -> Result<BlockSystem> {
    let j = result.dim();
    let g = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&result.gamma_tilde));
    let mut sys = BlockSystem::new(disc.mpt_layout(j), mpt_names(j, true));
    pressure_blocks(&mut sys, disc, 0, &result.k_tilde, &g, 1.0);
    sys.dirichlet = vec![disc.pressure_dofs.dirichlet.clone(); j];
    impose_dirichlet(&mut sys);
    Ok(sys)
}

fn mpet_skeleton(
    disc: &Discretization,
    params: &MpetParameters,
    alpha: &[f64],
    transformed: bool,
) -> BlockSystem {
    let j = params.j();
    let mut sys = BlockSystem::new(disc.mpet_layout(j), mpet_names(j, transformed));
    sys.symmetric_indefinite = true;
    sys.set_block(0, 0, disc.elasticity.scaled(params.mu));
    sys.set_block(1, 0, disc.divergence.clone());
    sys.set_block(0, 1, disc.divergence.transpose());
    sys.set_block(1, 1, disc.mass.scaled(-1.0 / params.lambda));
    for (k, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            let c = disc.mass.scaled(-a / params.lambda);
            sys.set_block(1, 2 + k, c.clone());
            sys.set_block(2 + k, 1, c);
        }
    }
    sys.dirichlet[0] = disc.displacement_dofs.dirichlet.clone();
    for k in 0..j {
        sys.dirichlet[2 + k] = disc.pressure_dofs.dirichlet.clone();
    }
    sys
}

/// Single implicit Euler step of the total-pressure MPET equations in the
/// symmetric indefinite form
///
/// ```text
/// [ A   Bᵀ   0  ]
/// [ B  -C₁  -C₂ᵀ]
/// [ 0  -C₂  -C₃ ]
/// ```
///
/// with `C₃ = τK ⊗ stiffness + (S + τE + L) ⊗ mass`.
pub fn assemble_mpet(disc: &Discretization, params: &MpetParameters) -> Result<BlockSystem> {
    params.validate()?;
    let g = params.gamma_matrix(true)?;
    let tk: Vec<f64> = params.k.iter().map(|k| params.tau * k).collect();
    let mut sys = mpet_skeleton(disc, params, &params.alpha, false);
    pressure_blocks(&mut sys, disc, 2, &tk, g.as_matrix(), -1.0);
    impose_dirichlet(&mut sys);
    Ok(sys)
}

/// The MPET system after the change of variables `p = (P ⊗ I) p̃`:
/// `C̃₂` uses `α̃ = Pᵀα` and `C̃₃ = τK̃ ⊗ stiffness + (PᵀSP + Γ̃) ⊗ mass`.
/// When `result` already includes storage, `Γ̃` covers `PᵀSP` and `C̃₃` is
/// block diagonal.
pub fn assemble_mpet_transformed(
    disc: &Discretization,
    params: &MpetParameters,
    result: &CongruenceResult,
) -> Result<BlockSystem> {
    params.validate()?;
    let j = params.j();
    if result.dim() != j {
        return Err(Error::Dimension {
            what: "transformation size",
            expected: j,
            got: result.dim(),
        });
    }
    let alpha_tilde = result
        .alpha_tilde
        .clone()
        .unwrap_or_else(|| (result.p.transpose() * nalgebra::DVector::from_column_slice(&params.alpha)).iter().copied().collect());
    let mut g = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&result.gamma_tilde));
    if !result.include_storage && params.s.iter().any(|&s| s != 0.0) {
        g += result.transform(&params.storage_matrix()).as_matrix();
    }
    let tk: Vec<f64> = result.k_tilde.iter().map(|k| params.tau * k).collect();
    let mut sys = mpet_skeleton(disc, params, &alpha_tilde, true);
    pressure_blocks(&mut sys, disc, 2, &tk, &g, -1.0);
    impose_dirichlet(&mut sys);
    Ok(sys)
}

/// Right-hand side `(f, g)` for an MPT system; constrained entries are zero.
pub fn rhs_mpt(
    disc: &Discretization,
    j: usize,
    g: impl Fn(usize, f64, f64) -> f64,
) -> BlockVector {
    let mut segments = Vec::with_capacity(j);
    for k in 0..j {
        let mut seg = assemble_load_p1(&disc.mesh, |x, y| g(k, x, y));
        for &d in &disc.pressure_dofs.dirichlet {
            seg[d] = 0.0;
        }
        segments.push(seg);
    }
    BlockVector { segments }
}

/// Right-hand side `(f, 0, g)` for an MPET system; constrained entries are
/// zero.
pub fn rhs_mpet(
    disc: &Discretization,
    j: usize,
    f: impl Fn(f64, f64) -> [f64; 2],
    g: impl Fn(usize, f64, f64) -> f64,
) -> BlockVector {
    let mut fu = assemble_load_p2_vector(&disc.mesh, f);
    for &d in &disc.displacement_dofs.dirichlet {
        fu[d] = 0.0;
    }
    let mut segments = vec![fu, vec![0.0; disc.num_pressure()]];
    segments.extend(rhs_mpt(disc, j, g).segments);
    BlockVector { segments }
}

/// Unit source in network 1 only, no body force.
pub fn experiment_source(network: usize, _x: f64, _y: f64) -> f64 {
    if network == 0 {
        1.0
    } else {
        0.0
    }
}
