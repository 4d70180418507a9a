use std::fmt::Write as _;

use crate::{Error, Result};

/// Uniform triangulation of the unit square: `N x N` squares, each split by
/// its lower-left to upper-right diagonal.
///
/// Vertex `(i, j)` sits at `(i/N, j/N)` with index `i + j (N + 1)`. Edges are
/// sorted by their `(min, max)` vertex pair; `triangle_edges[t][k]` is the
/// edge joining local vertices `k` and `(k + 1) % 3`.
#[derive(Clone, Debug)]
pub struct StructuredMesh {
    pub n: usize,
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_vertices: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub triangle_edges: Vec<[usize; 3]>,
}

pub fn build_unit_square_mesh(n: usize) -> Result<StructuredMesh> {
    if n == 0 {
        return Err(Error::validation("mesh needs at least one subdivision"));
    }
    let np = n + 1;
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            // Exact endpoints keep boundary tests free of rounding.
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let vid = |i: usize, j: usize| i + j * np;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let boundary_vertices = (0..np * np)
        .filter(|&v| {
            let (i, j) = (v % np, v / np);
            i == 0 || j == 0 || i == n || j == n
        })
        .collect();

    let mut edges: Vec<[usize; 2]> = triangles
        .iter()
        .flat_map(|t| (0..3).map(move |k| sorted_pair(t[k], t[(k + 1) % 3])))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let triangle_edges = triangles
        .iter()
        .map(|t| {
            let mut te = [0; 3];
            for (k, e) in te.iter_mut().enumerate() {
                let key = sorted_pair(t[k], t[(k + 1) % 3]);
                *e = edges.binary_search(&key).expect("edge of a triangle");
            }
            te
        })
        .collect();

    Ok(StructuredMesh {
        n,
        vertices,
        triangles,
        boundary_vertices,
        edges,
        triangle_edges,
    })
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl StructuredMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    /// Signed area, positive for counterclockwise triangles.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_coords(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Vertex and triangle listing: a `vertices <n>` header followed by
    /// `x y` lines, then `triangles <m>` and `a b c` lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("vertices {}\n", self.vertices.len());
        for [x, y] in &self.vertices {
            let _ = writeln!(out, "{x:.16e} {y:.16e}");
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for [a, b, c] in &self.triangles {
            let _ = writeln!(out, "{a} {b} {c}");
        }
        out
    }
}
