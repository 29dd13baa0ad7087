//! Degrees of freedom, basis evaluation, and triangle quadrature.
//!
//! Three spaces cover the discretizations used here:
//!
//! - `P1Scalar`: continuous piecewise linears (the pressure space),
//!   one dof per vertex.
//! - `P1Vector`: its vector-valued version, components interleaved as
//!   `2 * vertex + component`.
//! - `MiniVector`: P1 vector enriched per triangle with the cubic bubble
//!   `27 l0 l1 l2` in each component. Vertex dofs keep the interleaved
//!   numbering; the two bubble dofs of triangle `t` follow all vertex dofs
//!   as `2 * n_vertices + 2 * t + component`.
//!
//! Homogeneous Dirichlet constraints are stored as a dof mask. The default
//! clamps every boundary vertex dof (all components); the `Tangential` mode
//! clamps only the component parallel to each boundary side, which is what
//! the point-source benchmark needs. Bubble dofs are never constrained.

use alloc::vec;
use alloc::vec::Vec;

use crate::mesh::RectMesh;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    P1Scalar,
    P1Vector,
    MiniVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletMode {
    /// Clamp every component of every boundary vertex.
    Full,
    /// Clamp the boundary-parallel component only: the x component on the
    /// horizontal sides, the y component on the vertical sides. Vector
    /// spaces only.
    Tangential,
}

/// A finite element space bound to a mesh.
#[derive(Debug, Clone)]
pub struct FeSpace {
    pub kind: SpaceKind,
    pub n_dofs: usize,
    /// Number of dofs attached to vertices (the leading block).
    pub n_vertex_dofs: usize,
    pub dofs_per_cell: usize,
    cell_dofs: Vec<usize>,
    /// Constraint mask, one entry per dof.
    pub dirichlet: Vec<bool>,
    /// Constrained dof indices, ascending.
    pub dirichlet_dofs: Vec<usize>,
}

impl FeSpace {
    /// Builds the space with the default full-clamp Dirichlet set.
    pub fn new(mesh: &RectMesh, kind: SpaceKind) -> FeSpace {
        // Full mode is valid for every kind, so this cannot fail.
        Self::with_dirichlet(mesh, kind, DirichletMode::Full).unwrap()
    }

    pub fn with_dirichlet(
        mesh: &RectMesh,
        kind: SpaceKind,
        mode: DirichletMode,
    ) -> Result<FeSpace, Error> {
        if mode == DirichletMode::Tangential && kind == SpaceKind::P1Scalar {
            return Err(Error::InvalidArgument(
                "tangential constraints need a vector space",
            ));
        }
        let nv = mesh.n_vertices();
        let nt = mesh.n_triangles();
        let (n_dofs, n_vertex_dofs, dofs_per_cell) = match kind {
            SpaceKind::P1Scalar => (nv, nv, 3),
            SpaceKind::P1Vector => (2 * nv, 2 * nv, 6),
            SpaceKind::MiniVector => (2 * nv + 2 * nt, 2 * nv, 8),
        };
        let mut cell_dofs = Vec::with_capacity(nt * dofs_per_cell);
        for (t, tri) in mesh.tris.iter().enumerate() {
            match kind {
                SpaceKind::P1Scalar => cell_dofs.extend(tri.iter().copied()),
                SpaceKind::P1Vector | SpaceKind::MiniVector => {
                    for &v in tri {
                        cell_dofs.push(2 * v);
                        cell_dofs.push(2 * v + 1);
                    }
                    if kind == SpaceKind::MiniVector {
                        cell_dofs.push(2 * nv + 2 * t);
                        cell_dofs.push(2 * nv + 2 * t + 1);
                    }
                }
            }
        }
        let mut dirichlet = vec![false; n_dofs];
        for v in 0..nv {
            if !mesh.boundary_vertex[v] {
                continue;
            }
            let [x, y] = mesh.verts[v];
            let on_vertical = x == 0.0 || x == mesh.a;
            let on_horizontal = y == 0.0 || y == mesh.b;
            match (kind, mode) {
                (SpaceKind::P1Scalar, _) => dirichlet[v] = true,
                (_, DirichletMode::Full) => {
                    dirichlet[2 * v] = true;
                    dirichlet[2 * v + 1] = true;
                }
                (_, DirichletMode::Tangential) => {
                    if on_horizontal {
                        dirichlet[2 * v] = true;
                    }
                    if on_vertical {
                        dirichlet[2 * v + 1] = true;
                    }
                }
            }
        }
        let dirichlet_dofs = dirichlet
            .iter()
            .enumerate()
            .filter_map(|(d, &c)| c.then_some(d))
            .collect();
        Ok(FeSpace {
            kind,
            n_dofs,
            n_vertex_dofs,
            dofs_per_cell,
            cell_dofs,
            dirichlet,
            dirichlet_dofs,
        })
    }

    /// Global dof indices of triangle `t`, in the local ordering documented
    /// on the module (vertex dofs first, interleaved; bubbles last).
    pub fn cell_dofs(&self, t: usize) -> &[usize] {
        &self.cell_dofs[t * self.dofs_per_cell..(t + 1) * self.dofs_per_cell]
    }

    /// Number of scalar generator functions per cell (3 for P1, 4 with the
    /// bubble); vector spaces use each generator once per component.
    pub fn scalar_basis_count(&self) -> usize {
        match self.kind {
            SpaceKind::P1Scalar | SpaceKind::P1Vector => 3,
            SpaceKind::MiniVector => 4,
        }
    }

    pub fn is_vector(&self) -> bool {
        matches!(self.kind, SpaceKind::P1Vector | SpaceKind::MiniVector)
    }
}

/// Values and barycentric derivatives of the scalar generator functions at
/// one point. `ref_grads[i][k]` is the derivative of generator `i` with
/// respect to barycentric coordinate `k`; physical gradients follow by
/// contraction with the mesh's `grad_lambda`.
#[derive(Debug, Clone, Copy)]
pub struct BasisEval {
    pub count: usize,
    pub values: [f64; 4],
    pub ref_grads: [[f64; 3]; 4],
}

pub fn eval_scalar_basis(kind: SpaceKind, lambda: [f64; 3]) -> BasisEval {
    let [l0, l1, l2] = lambda;
    let mut values = [l0, l1, l2, 0.0];
    let mut ref_grads = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0; 3],
    ];
    let count = match kind {
        SpaceKind::P1Scalar | SpaceKind::P1Vector => 3,
        SpaceKind::MiniVector => {
            values[3] = 27.0 * l0 * l1 * l2;
            ref_grads[3] = [27.0 * l1 * l2, 27.0 * l0 * l2, 27.0 * l0 * l1];
            4
        }
    };
    BasisEval {
        count,
        values,
        ref_grads,
    }
}

/// Evaluates a scalar FE function at a barycentric point of triangle `t`.
pub fn eval_scalar(space: &FeSpace, dofs: &[f64], t: usize, lambda: [f64; 3]) -> f64 {
    debug_assert_eq!(space.kind, SpaceKind::P1Scalar);
    let basis = eval_scalar_basis(space.kind, lambda);
    let cd = space.cell_dofs(t);
    (0..basis.count).map(|i| dofs[cd[i]] * basis.values[i]).sum()
}

/// Physical gradient of a scalar FE function.
pub fn eval_scalar_grad(
    mesh: &RectMesh,
    space: &FeSpace,
    dofs: &[f64],
    t: usize,
    lambda: [f64; 3],
) -> [f64; 2] {
    debug_assert_eq!(space.kind, SpaceKind::P1Scalar);
    let basis = eval_scalar_basis(space.kind, lambda);
    let geom = mesh.tri_geometry(t);
    let cd = space.cell_dofs(t);
    let mut grad = [0.0; 2];
    for i in 0..basis.count {
        let coeff = dofs[cd[i]];
        for k in 0..3 {
            grad[0] += coeff * basis.ref_grads[i][k] * geom.grad_lambda[k][0];
            grad[1] += coeff * basis.ref_grads[i][k] * geom.grad_lambda[k][1];
        }
    }
    grad
}

/// Evaluates a vector FE function at a barycentric point.
pub fn eval_vector(space: &FeSpace, dofs: &[f64], t: usize, lambda: [f64; 3]) -> [f64; 2] {
    debug_assert!(space.is_vector());
    let basis = eval_scalar_basis(space.kind, lambda);
    let cd = space.cell_dofs(t);
    let mut out = [0.0; 2];
    for i in 0..basis.count {
        for c in 0..2 {
            out[c] += dofs[cd[2 * i + c]] * basis.values[i];
        }
    }
    out
}

/// Physical Jacobian of a vector FE function: `grad[c][d] = d u_c / d x_d`.
pub fn eval_vector_grad(
    mesh: &RectMesh,
    space: &FeSpace,
    dofs: &[f64],
    t: usize,
    lambda: [f64; 3],
) -> [[f64; 2]; 2] {
    debug_assert!(space.is_vector());
    let basis = eval_scalar_basis(space.kind, lambda);
    let geom = mesh.tri_geometry(t);
    let cd = space.cell_dofs(t);
    let mut grad = [[0.0; 2]; 2];
    for i in 0..basis.count {
        let mut g = [0.0; 2];
        for k in 0..3 {
            g[0] += basis.ref_grads[i][k] * geom.grad_lambda[k][0];
            g[1] += basis.ref_grads[i][k] * geom.grad_lambda[k][1];
        }
        for c in 0..2 {
            let coeff = dofs[cd[2 * i + c]];
            grad[c][0] += coeff * g[0];
            grad[c][1] += coeff * g[1];
        }
    }
    grad
}

/// A symmetric quadrature rule on the reference triangle in barycentric
/// coordinates. Weights are positive and sum to the reference area 1/2, so a
/// physical integral is `sum_q w_q * 2 * |T| * f(x_q)`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Returns a rule exact for polynomials of the given total degree,
/// 1 through 6. Degree 3 maps up to the 6-point degree-4 rule because the
/// classical 4-point degree-3 rule carries a negative centroid weight.
pub fn quadrature(degree: usize) -> Result<QuadratureRule, Error> {
    let orbit3 = |a: f64| [[1.0 - 2.0 * a, a, a], [a, 1.0 - 2.0 * a, a], [a, a, 1.0 - 2.0 * a]];
    let (points, weights): (Vec<[f64; 3]>, Vec<f64>) = match degree {
        1 => (vec![[1.0 / 3.0; 3]], vec![0.5]),
        2 => (orbit3(1.0 / 6.0).to_vec(), vec![1.0 / 6.0; 3]),
        3 | 4 => {
            let a = 0.445_948_490_915_965;
            let b = 0.091_576_213_509_771;
            let wa = 0.223_381_589_678_011 / 2.0;
            let wb = 0.109_951_743_655_322 / 2.0;
            let mut pts = orbit3(a).to_vec();
            pts.extend_from_slice(&orbit3(b));
            (pts, vec![wa, wa, wa, wb, wb, wb])
        }
        5 => {
            let a = 0.470_142_064_105_115;
            let b = 0.101_286_507_323_456;
            let wa = 0.132_394_152_788_506 / 2.0;
            let wb = 0.125_939_180_544_827 / 2.0;
            let mut pts = vec![[1.0 / 3.0; 3]];
            pts.extend_from_slice(&orbit3(a));
            pts.extend_from_slice(&orbit3(b));
            (pts, vec![9.0 / 80.0, wa, wa, wa, wb, wb, wb])
        }
        6 => {
            let a = 0.249_286_745_170_910;
            let b = 0.063_089_014_491_502;
            let c1 = 0.310_352_451_033_785;
            let c2 = 0.053_145_049_844_816;
            let c3 = 1.0 - c1 - c2;
            let wa = 0.116_786_275_726_379 / 2.0;
            let wb = 0.050_844_906_370_207 / 2.0;
            let wc = 0.082_851_075_618_374 / 2.0;
            let mut pts = orbit3(a).to_vec();
            pts.extend_from_slice(&orbit3(b));
            pts.extend_from_slice(&[
                [c1, c2, c3],
                [c1, c3, c2],
                [c2, c1, c3],
                [c2, c3, c1],
                [c3, c1, c2],
                [c3, c2, c1],
            ]);
            (pts, vec![wa, wa, wa, wb, wb, wb, wc, wc, wc, wc, wc, wc])
        }
        _ => return Err(Error::UnsupportedDegree(degree)),
    };
    Ok(QuadratureRule {
        degree,
        points,
        weights,
    })
}
