//! Structured triangulations of an axis-aligned rectangle.
//!
//! The rectangle `[0, a] x [0, b]` is split into `nx * ny` congruent cells,
//! each cut along its lower-left to upper-right diagonal. Vertices are
//! numbered row by row (`v = j * (nx + 1) + i`), and the two triangles of
//! cell `(i, j)` get indices `2 * (j * nx + i)` (lower, vertices LL-LR-UR)
//! and `2 * (j * nx + i) + 1` (upper, vertices LL-UR-UL). Both are oriented
//! counterclockwise.

use alloc::vec::Vec;

use crate::fmath;
use crate::Error;

/// Triangulation of `[0, a] x [0, b]` with the fixed structured topology
/// described in the module docs.
#[derive(Debug, Clone)]
pub struct RectMesh {
    pub nx: usize,
    pub ny: usize,
    pub a: f64,
    pub b: f64,
    /// Vertex coordinates, `(nx + 1) * (ny + 1)` entries.
    pub verts: Vec<[f64; 2]>,
    /// Vertex triples per triangle, counterclockwise.
    pub tris: Vec<[usize; 3]>,
    /// True for vertices on the boundary of the rectangle.
    pub boundary_vertex: Vec<bool>,
}

/// Per-triangle geometry used by assembly: the signed area and the constant
/// physical gradients of the three barycentric coordinate functions.
#[derive(Debug, Clone, Copy)]
pub struct TriGeometry {
    pub area: f64,
    /// `grad_lambda[k]` is the gradient of the barycentric function that is
    /// one at local vertex `k`.
    pub grad_lambda: [[f64; 2]; 3],
}

impl RectMesh {
    /// Builds the structured mesh. `nx`, `ny` are cell counts per direction
    /// and must be positive, as must the side lengths.
    pub fn new(nx: usize, ny: usize, a: f64, b: f64) -> Result<Self, Error> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("mesh needs at least one cell per direction"));
        }
        if !(a > 0.0) || !(b > 0.0) {
            return Err(Error::InvalidArgument("mesh side lengths must be positive"));
        }
        let mut verts = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut boundary_vertex = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                // i/nx hits 0 and 1 exactly at the ends, so boundary vertex
                // coordinates are exact.
                verts.push([a * i as f64 / nx as f64, b * j as f64 / ny as f64]);
                boundary_vertex.push(i == 0 || i == nx || j == 0 || j == ny);
            }
        }
        let mut tris = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let ll = j * (nx + 1) + i;
                let lr = ll + 1;
                let ul = ll + (nx + 1);
                let ur = ul + 1;
                tris.push([ll, lr, ur]);
                tris.push([ll, ur, ul]);
            }
        }
        Ok(RectMesh {
            nx,
            ny,
            a,
            b,
            verts,
            tris,
            boundary_vertex,
        })
    }

    /// Unit-square convenience constructor.
    pub fn unit(nx: usize, ny: usize) -> Result<Self, Error> {
        Self::new(nx, ny, 1.0, 1.0)
    }

    pub fn n_vertices(&self) -> usize {
        self.verts.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.tris.len()
    }

    /// Mesh size parameter: the longer cell edge.
    pub fn h(&self) -> f64 {
        let hx = self.a / self.nx as f64;
        let hy = self.b / self.ny as f64;
        if hx > hy {
            hx
        } else {
            hy
        }
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        self.tri_geometry(t).area
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [v0, v1, v2] = self.tris[t];
        let p0 = self.verts[v0];
        let p1 = self.verts[v1];
        let p2 = self.verts[v2];
        [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0]
    }

    /// Area and barycentric gradients of triangle `t`.
    pub fn tri_geometry(&self, t: usize) -> TriGeometry {
        let [v0, v1, v2] = self.tris[t];
        let p = [self.verts[v0], self.verts[v1], self.verts[v2]];
        let det =
            (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        let mut grad_lambda = [[0.0; 2]; 3];
        for k in 0..3 {
            let pa = p[(k + 1) % 3];
            let pb = p[(k + 2) % 3];
            grad_lambda[k] = [(pa[1] - pb[1]) / det, (pb[0] - pa[0]) / det];
        }
        TriGeometry {
            area: 0.5 * det,
            grad_lambda,
        }
    }

    /// Maps barycentric coordinates on triangle `t` to physical coordinates.
    pub fn bary_to_xy(&self, t: usize, lambda: [f64; 3]) -> [f64; 2] {
        let [v0, v1, v2] = self.tris[t];
        let p0 = self.verts[v0];
        let p1 = self.verts[v1];
        let p2 = self.verts[v2];
        [
            lambda[0] * p0[0] + lambda[1] * p1[0] + lambda[2] * p2[0],
            lambda[0] * p0[1] + lambda[1] * p1[1] + lambda[2] * p2[1],
        ]
    }

    /// Finds the triangle containing `(x, y)` in O(1) using the structured
    /// layout, returning its index and the barycentric coordinates of the
    /// point. Points on shared edges resolve to the lowest triangle index;
    /// points outside the rectangle are an error.
    pub fn locate_point(&self, x: f64, y: f64) -> Result<(usize, [f64; 3]), Error> {
        if !(x >= 0.0 && x <= self.a && y >= 0.0 && y <= self.b) {
            return Err(Error::OutOfDomain { x, y });
        }
        let gi = fmath::floor(x / self.a * self.nx as f64) as i64;
        let gj = fmath::floor(y / self.b * self.ny as f64) as i64;
        // Scan the 3x3 cell neighborhood in ascending cell order; rounding at
        // grid lines lands at most one cell off, and ascending order makes
        // the first hit the lowest triangle index.
        for jc in (gj - 1)..=(gj + 1) {
            if jc < 0 || jc >= self.ny as i64 {
                continue;
            }
            for ic in (gi - 1)..=(gi + 1) {
                if ic < 0 || ic >= self.nx as i64 {
                    continue;
                }
                let cell = jc as usize * self.nx + ic as usize;
                for k in 0..2 {
                    let t = 2 * cell + k;
                    if let Some(lambda) = self.bary_in(t, x, y) {
                        return Ok((t, lambda));
                    }
                }
            }
        }
        // Unreachable for points inside the rectangle; keep a defensive error.
        Err(Error::OutOfDomain { x, y })
    }

    fn bary_in(&self, t: usize, x: f64, y: f64) -> Option<[f64; 3]> {
        let [v0, v1, v2] = self.tris[t];
        let p0 = self.verts[v0];
        let p1 = self.verts[v1];
        let p2 = self.verts[v2];
        let det =
            (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
        let l1 = ((x - p0[0]) * (p2[1] - p0[1]) - (y - p0[1]) * (p2[0] - p0[0])) / det;
        let l2 = ((p1[0] - p0[0]) * (y - p0[1]) - (p1[1] - p0[1]) * (x - p0[0])) / det;
        let l0 = 1.0 - l1 - l2;
        let tol = 1e-12;
        if l0 < -tol || l1 < -tol || l2 < -tol {
            return None;
        }
        let mut lambda = [l0, l1, l2];
        let mut sum = 0.0;
        for l in lambda.iter_mut() {
            if *l < 0.0 {
                *l = 0.0;
            }
            sum += *l;
        }
        for l in lambda.iter_mut() {
            *l /= sum;
        }
        Some(lambda)
    }

    /// All mesh edges as `(vmin, vmax, on_boundary)`, sorted by vertex pair.
    /// An edge is a boundary edge when exactly one triangle touches it.
    pub fn edge_set(&self) -> Vec<(usize, usize, bool)> {
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(3 * self.tris.len());
        for tri in &self.tris {
            for k in 0..3 {
                let va = tri[k];
                let vb = tri[(k + 1) % 3];
                pairs.push((va.min(vb), va.max(vb)));
            }
        }
        pairs.sort_unstable();
        let mut edges = Vec::new();
        let mut idx = 0;
        while idx < pairs.len() {
            let edge = pairs[idx];
            let mut count = 1;
            while idx + count < pairs.len() && pairs[idx + count] == edge {
                count += 1;
            }
            edges.push((edge.0, edge.1, count == 1));
            idx += count;
        }
        edges
    }

    /// Plain-text dump: one `v x y` line per vertex followed by one
    /// `t i j k` line per triangle (0-based indices).
    pub fn to_plain_text(&self) -> alloc::string::String {
        use core::fmt::Write;
        let mut out = alloc::string::String::new();
        for v in &self.verts {
            let _ = writeln!(out, "v {} {}", v[0], v[1]);
        }
        for t in &self.tris {
            let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
        }
        out
    }
}
