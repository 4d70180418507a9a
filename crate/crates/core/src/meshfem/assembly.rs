//! Element loops for the P1 pressure and P2 displacement blocks. Every
//! routine visits triangles in mesh order and accumulates into triplets, so
//! the CSR structure and values are reproducible bit for bit.

use super::quadrature::{physical_point, TriangleRule};
use super::{CsrMatrix, DofMap, Space, StructuredMesh};

/// Area and barycentric gradients of triangle `t`.
fn geometry(mesh: &StructuredMesh, t: usize) -> (f64, [[f64; 2]; 3]) {
    let [a, b, c] = mesh.triangle_coords(t);
    let area = mesh.signed_area(t);
    let inv = 1.0 / (2.0 * area);
    let grads = [
        [(b[1] - c[1]) * inv, (c[0] - b[0]) * inv],
        [(c[1] - a[1]) * inv, (a[0] - c[0]) * inv],
        [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv],
    ];
    (area, grads)
}

fn p2_values(l: &[f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

fn p2_gradients(l: &[f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    for i in 0..3 {
        let s = 4.0 * l[i] - 1.0;
        out[i] = [s * g[i][0], s * g[i][1]];
    }
    for (k, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
        out[3 + k] = [
            4.0 * (l[a] * g[b][0] + l[b] * g[a][0]),
            4.0 * (l[a] * g[b][1] + l[b] * g[a][1]),
        ];
    }
    out
}

/// `coeff ∫ ∇φ_i·∇φ_j` for P1.
pub fn assemble_stiffness_p1(mesh: &StructuredMesh, coeff: f64) -> CsrMatrix {
    let rule = TriangleRule::degree2();
    let n = mesh.num_vertices();
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (area, g) = geometry(mesh, t);
        let w: f64 = rule.weights.iter().sum::<f64>() * area;
        for i in 0..3 {
            for j in 0..3 {
                let v = coeff * w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                trips.push((tri[i], tri[j], v));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, trips)
}

/// `coeff ∫ φ_i φ_j` for P1.
pub fn assemble_mass_p1(mesh: &StructuredMesh, coeff: f64) -> CsrMatrix {
    let rule = TriangleRule::degree2();
    let n = mesh.num_vertices();
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.signed_area(t);
        let mut local = [[0.0; 3]; 3];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += w * area * l[i] * l[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                trips.push((tri[i], tri[j], coeff * local[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, trips)
}

/// `∫ f φ_i` for P1, integrated with the degree-4 rule.
pub fn assemble_load_p1(mesh: &StructuredMesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let rule = TriangleRule::degree4();
    let mut b = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let coords = mesh.triangle_coords(t);
        let area = mesh.signed_area(t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let [x, y] = physical_point(&coords, l);
            let fx = f(x, y) * w * area;
            for i in 0..3 {
                b[tri[i]] += fx * l[i];
            }
        }
    }
    b
}

/// Vector P2 block of `a(u, v) = (2μ ε(u), ε(v))`.
pub fn assemble_elasticity_p2(mesh: &StructuredMesh, mu: f64) -> CsrMatrix {
    let dofs = DofMap::new(mesh, Space::P2Vector);
    let rule = TriangleRule::degree4();
    let mut trips = Vec::with_capacity(144 * mesh.num_triangles());
    for (t, nodes) in dofs.cell_nodes.iter().enumerate() {
        let (area, g) = geometry(mesh, t);
        let mut local = [[0.0; 12]; 12];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let dphi = p2_gradients(l, &g);
            let wq = w * area * mu;
            for a in 0..6 {
                for b in 0..6 {
                    let dot = dphi[a][0] * dphi[b][0] + dphi[a][1] * dphi[b][1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let delta = if c == d { dot } else { 0.0 };
                            local[2 * a + c][2 * b + d] += wq * (delta + dphi[a][d] * dphi[b][c]);
                        }
                    }
                }
            }
        }
        for r in 0..12 {
            for s in 0..12 {
                let (gr, gs) = (2 * nodes[r / 2] + r % 2, 2 * nodes[s / 2] + s % 2);
                trips.push((gr, gs, local[r][s]));
            }
        }
    }
    CsrMatrix::from_triplets(dofs.ndof, dofs.ndof, trips)
}

/// `b(v, q) = (div v, q)` with P1 rows and vector P2 columns.
pub fn assemble_divergence_p2_p1(mesh: &StructuredMesh) -> CsrMatrix {
    let dofs = DofMap::new(mesh, Space::P2Vector);
    let rule = TriangleRule::degree4();
    let mut trips = Vec::with_capacity(36 * mesh.num_triangles());
    for (t, nodes) in dofs.cell_nodes.iter().enumerate() {
        let (area, g) = geometry(mesh, t);
        let tri = mesh.triangles[t];
        let mut local = [[0.0; 12]; 3];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let dphi = p2_gradients(l, &g);
            for i in 0..3 {
                for a in 0..6 {
                    for c in 0..2 {
                        local[i][2 * a + c] += w * area * l[i] * dphi[a][c];
                    }
                }
            }
        }
        for i in 0..3 {
            for s in 0..12 {
                trips.push((tri[i], 2 * nodes[s / 2] + s % 2, local[i][s]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_vertices(), dofs.ndof, trips)
}

/// `∫ f·v` for vector P2.
pub fn assemble_load_p2_vector(
    mesh: &StructuredMesh,
    f: impl Fn(f64, f64) -> [f64; 2],
) -> Vec<f64> {
    let dofs = DofMap::new(mesh, Space::P2Vector);
    let rule = TriangleRule::degree4();
    let mut b = vec![0.0; dofs.ndof];
    for (t, nodes) in dofs.cell_nodes.iter().enumerate() {
        let coords = mesh.triangle_coords(t);
        let area = mesh.signed_area(t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let [x, y] = physical_point(&coords, l);
            let fx = f(x, y);
            let phi = p2_values(l);
            for a in 0..6 {
                for c in 0..2 {
                    b[2 * nodes[a] + c] += w * area * fx[c] * phi[a];
                }
            }
        }
    }
    b
}

/// `‖u_h - u‖_{L²}` for a P1 field, using the degree-4 rule.
pub fn l2_error_p1(mesh: &StructuredMesh, uh: &[f64], exact: impl Fn(f64, f64) -> f64) -> f64 {
    let rule = TriangleRule::degree4();
    let mut sum = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let coords = mesh.triangle_coords(t);
        let area = mesh.signed_area(t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let [x, y] = physical_point(&coords, l);
            let v: f64 = (0..3).map(|i| l[i] * uh[tri[i]]).sum();
            sum += w * area * (v - exact(x, y)).powi(2);
        }
    }
    sum.sqrt()
}

/// `‖u_h - u‖_{L²}` for a vector P2 field.
pub fn l2_error_p2_vector(
    mesh: &StructuredMesh,
    uh: &[f64],
    exact: impl Fn(f64, f64) -> [f64; 2],
) -> f64 {
    let dofs = DofMap::new(mesh, Space::P2Vector);
    let rule = TriangleRule::degree4();
    let mut sum = 0.0;
    for (t, nodes) in dofs.cell_nodes.iter().enumerate() {
        let coords = mesh.triangle_coords(t);
        let area = mesh.signed_area(t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let [x, y] = physical_point(&coords, l);
            let phi = p2_values(l);
            let e = exact(x, y);
            for c in 0..2 {
                let v: f64 = (0..6).map(|a| phi[a] * uh[2 * nodes[a] + c]).sum();
                sum += w * area * (v - e[c]).powi(2);
            }
        }
    }
    sum.sqrt()
}
