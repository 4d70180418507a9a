use super::StructuredMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    P1,
    P2,
    /// Two-component P2 with dofs interleaved per node: `2 node + component`.
    P2Vector,
}

/// Which part of the boundary carries a zero displacement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DisplacementBc {
    /// Zero displacement on the whole boundary.
    Clamped,
    /// Zero displacement on `x = 0`, `x = 1` and `y = 0`; the top edge is
    /// traction free.
    #[default]
    ClampedExceptTop,
}

impl DisplacementBc {
    pub fn contains(&self, [x, y]: [f64; 2]) -> bool {
        match self {
            DisplacementBc::Clamped => x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0,
            DisplacementBc::ClampedExceptTop => x == 0.0 || x == 1.0 || y == 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DisplacementBc::Clamped => "clamped",
            DisplacementBc::ClampedExceptTop => "clamped_except_top",
        }
    }
}

impl std::str::FromStr for DisplacementBc {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clamped" => Ok(DisplacementBc::Clamped),
            "clamped_except_top" => Ok(DisplacementBc::ClampedExceptTop),
            other => Err(format!(
                "unknown displacement boundary condition {other:?} (expected clamped or clamped_except_top)"
            )),
        }
    }
}

/// Global numbering of a Lagrange space on a [`StructuredMesh`].
///
/// Scalar nodes are the vertices followed, for P2, by the edge midpoints in
/// edge order.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub space: Space,
    pub ndof: usize,
    /// Coordinates of each scalar node.
    pub nodes: Vec<[f64; 2]>,
    /// Scalar node indices per triangle: 3 vertices, then for P2 the edges
    /// `(0,1)`, `(1,2)`, `(2,0)`.
    pub cell_nodes: Vec<Vec<usize>>,
    /// Sorted constrained dofs.
    pub dirichlet: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &StructuredMesh, space: Space) -> Self {
        let nv = mesh.num_vertices();
        let mut nodes = mesh.vertices.clone();
        let cell_nodes: Vec<Vec<usize>> = match space {
            Space::P1 => mesh.triangles.iter().map(|t| t.to_vec()).collect(),
            Space::P2 | Space::P2Vector => {
                nodes.extend((0..mesh.num_edges()).map(|e| mesh.edge_midpoint(e)));
                mesh.triangles
                    .iter()
                    .zip(&mesh.triangle_edges)
                    .map(|(t, te)| {
                        vec![t[0], t[1], t[2], nv + te[0], nv + te[1], nv + te[2]]
                    })
                    .collect()
            }
        };
        let ndof = match space {
            Space::P2Vector => 2 * nodes.len(),
            _ => nodes.len(),
        };
        DofMap {
            space,
            ndof,
            nodes,
            cell_nodes,
            dirichlet: Vec::new(),
        }
    }

    /// Constrains every dof whose node satisfies `on_boundary`.
    pub fn with_dirichlet(mut self, on_boundary: impl Fn([f64; 2]) -> bool) -> Self {
        let mut dofs = Vec::new();
        for (k, &p) in self.nodes.iter().enumerate() {
            if on_boundary(p) {
                match self.space {
                    Space::P2Vector => dofs.extend([2 * k, 2 * k + 1]),
                    _ => dofs.push(k),
                }
            }
        }
        dofs.sort_unstable();
        self.dirichlet = dofs;
        self
    }

    /// Constrains the whole boundary of the unit square.
    pub fn with_full_dirichlet(self) -> Self {
        self.with_dirichlet(|p| DisplacementBc::Clamped.contains(p))
    }

    pub fn dirichlet_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.ndof];
        for &d in &self.dirichlet {
            mask[d] = true;
        }
        mask
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        let mask = self.dirichlet_mask();
        (0..self.ndof).filter(|&d| !mask[d]).collect()
    }

    pub fn interpolate_scalar(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        assert_ne!(self.space, Space::P2Vector);
        self.nodes.iter().map(|&[x, y]| f(x, y)).collect()
    }

    pub fn interpolate_vector(&self, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
        assert_eq!(self.space, Space::P2Vector);
        self.nodes.iter().flat_map(|&[x, y]| f(x, y)).collect()
    }
}
