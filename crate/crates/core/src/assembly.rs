//! Sparse matrices and the bilinear forms of the Biot system.
//!
//! Assembly is element by element into a triplet list, then compressed to
//! CSR with a stable sort, so entry summation order (and with it every bit
//! of the result) is independent of anything but the mesh. All forms use
//! quadrature; the default degree used by the schemes (4) integrates every
//! matrix integrand of both elements exactly.
//!
//! Sign and scaling conventions:
//!
//! - `elasticity_matrix`: `a(u, v) = int 2 mu eps(u):eps(v) + lambda div u div v`.
//! - `pressure_stiffness`: `b(p, q) = int k grad p . grad q`.
//! - `pressure_mass` / `lumped_pressure_mass`: the P1 mass matrix and its
//!   row-sum lumping.
//! - `coupling_matrix`: `g(v, q) = alpha int q div v`, stored with pressure
//!   rows and displacement columns, so `G u` lives in the pressure space and
//!   `G^T p` in the displacement space.

use alloc::vec;
use alloc::vec::Vec;

use crate::fespace::{eval_scalar_basis, quadrature, FeSpace, SpaceKind};
use crate::mesh::RectMesh;
use crate::Error;

/// Compressed sparse row matrix. Column indices are sorted and unique within
/// each row.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Compresses a triplet list, summing duplicates. Duplicate entries are
    /// accumulated in their insertion order (the sort is stable), which
    /// keeps assembly bitwise deterministic.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> CsrMatrix {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut row = 0;
        let mut it = triplets.iter().peekable();
        while let Some(&&(r, c, v)) = it.peek() {
            debug_assert!(r < n_rows && c < n_cols);
            while row < r {
                row_ptr.push(col_idx.len());
                row += 1;
            }
            let mut sum = v;
            it.next();
            while let Some(&&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    sum += v2;
                    it.next();
                } else {
                    break;
                }
            }
            col_idx.push(c);
            values.push(sum);
        }
        while row < n_rows {
            row_ptr.push(col_idx.len());
            row += 1;
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y = A x`.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for r in 0..self.n_rows {
            let mut sum = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                sum += self.values[idx] * x[self.col_idx[idx]];
            }
            y[r] = sum;
        }
    }

    pub fn spmv(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        y
    }

    /// `y = A^T x`.
    pub fn spmv_transpose(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_rows);
        let mut y = vec![0.0; self.n_cols];
        for r in 0..self.n_rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[idx]] += self.values[idx] * xr;
            }
        }
        y
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        debug_assert_eq!(self.n_rows, self.n_cols);
        (0..self.n_rows).map(|r| self.get(r, r)).collect()
    }

    /// Largest `|a_ij - a_ji|` over the pattern (square matrices).
    pub fn symmetry_defect(&self) -> f64 {
        debug_assert_eq!(self.n_rows, self.n_cols);
        let mut defect = 0.0f64;
        for r in 0..self.n_rows {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                let d = crate::fmath::abs(self.values[idx] - self.get(self.col_idx[idx], r));
                if d > defect {
                    defect = d;
                }
            }
        }
        defect
    }

    /// Builds `sum_k coeff_k * M_k` over matrices of identical shape.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        let (n_rows, n_cols) = (terms[0].1.n_rows, terms[0].1.n_cols);
        let total: usize = terms.iter().map(|(_, m)| m.nnz()).sum();
        let mut triplets = Vec::with_capacity(total);
        for &(coeff, mat) in terms {
            debug_assert_eq!((mat.n_rows, mat.n_cols), (n_rows, n_cols));
            for r in 0..n_rows {
                for idx in mat.row_ptr[r]..mat.row_ptr[r + 1] {
                    triplets.push((r, mat.col_idx[idx], coeff * mat.values[idx]));
                }
            }
        }
        CsrMatrix::from_triplets(n_rows, n_cols, triplets)
    }

    /// Quadratic form `x^T A y`.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut sum = 0.0;
        for r in 0..self.n_rows {
            let mut row = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.values[idx] * y[self.col_idx[idx]];
            }
            sum += x[r] * row;
        }
        sum
    }

    /// Coordinate-format text dump, one `i j value` line per stored entry
    /// in row-major order.
    pub fn to_coordinate_text(&self) -> alloc::string::String {
        use core::fmt::Write;
        let mut out = alloc::string::String::new();
        for r in 0..self.n_rows {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                let _ = writeln!(out, "{} {} {}", r, self.col_idx[idx], self.values[idx]);
            }
        }
        out
    }
}

/// Eliminates homogeneous Dirichlet dofs in place: constrained rows and
/// columns are zeroed and the diagonal set to one, preserving symmetry and
/// positive definiteness. The matrix pattern must contain the diagonal of
/// every constrained dof (assembled stiffness and mass matrices always do).
pub fn apply_dirichlet(mat: &mut CsrMatrix, mask: &[bool]) {
    assert_eq!(mat.n_rows, mat.n_cols);
    assert_eq!(mask.len(), mat.n_rows);
    for r in 0..mat.n_rows {
        let range = mat.row_ptr[r]..mat.row_ptr[r + 1];
        if mask[r] {
            let mut saw_diag = false;
            for idx in range {
                if mat.col_idx[idx] == r {
                    mat.values[idx] = 1.0;
                    saw_diag = true;
                } else {
                    mat.values[idx] = 0.0;
                }
            }
            assert!(saw_diag, "constrained dof {r} has no diagonal entry");
        } else {
            for idx in range {
                if mask[mat.col_idx[idx]] {
                    mat.values[idx] = 0.0;
                }
            }
        }
    }
}

/// Zeroes the constrained entries of a dof vector (homogeneous data).
pub fn zero_constrained(v: &mut [f64], mask: &[bool]) {
    for (x, &m) in v.iter_mut().zip(mask) {
        if m {
            *x = 0.0;
        }
    }
}

/// Physical gradients of the scalar generators at one quadrature point.
fn physical_grads(
    basis: &crate::fespace::BasisEval,
    grad_lambda: &[[f64; 2]; 3],
) -> [[f64; 2]; 4] {
    let mut g = [[0.0; 2]; 4];
    for i in 0..basis.count {
        for k in 0..3 {
            g[i][0] += basis.ref_grads[i][k] * grad_lambda[k][0];
            g[i][1] += basis.ref_grads[i][k] * grad_lambda[k][1];
        }
    }
    g
}

/// Assembles the linear elasticity form on a vector space.
pub fn elasticity_matrix(
    mesh: &RectMesh,
    space: &FeSpace,
    mu: f64,
    lambda: f64,
    qdeg: usize,
) -> Result<CsrMatrix, Error> {
    if !space.is_vector() {
        return Err(Error::InvalidArgument("elasticity needs a vector space"));
    }
    let rule = quadrature(qdeg)?;
    let nb = space.scalar_basis_count();
    let nd = space.dofs_per_cell;
    let mut triplets = Vec::with_capacity(mesh.n_triangles() * nd * nd);
    let mut local = vec![0.0; nd * nd];
    for t in 0..mesh.n_triangles() {
        let geom = mesh.tri_geometry(t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &lambda_q) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * 2.0 * geom.area;
            let basis = eval_scalar_basis(space.kind, lambda_q);
            let g = physical_grads(&basis, &geom.grad_lambda);
            for i in 0..nb {
                for j in 0..nb {
                    let dot = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                    for c in 0..2 {
                        for d in 0..2 {
                            // 2 mu eps(phi_ic):eps(phi_jd) + lambda div div
                            let mut val = mu * g[i][d] * g[j][c];
                            if c == d {
                                val += mu * dot;
                            }
                            val += lambda * g[i][c] * g[j][d];
                            local[(2 * i + c) * nd + (2 * j + d)] += w * val;
                        }
                    }
                }
            }
        }
        let cd = space.cell_dofs(t);
        for li in 0..nd {
            for lj in 0..nd {
                triplets.push((cd[li], cd[lj], local[li * nd + lj]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(space.n_dofs, space.n_dofs, triplets))
}

/// Assembles `int k grad p . grad q` on the scalar pressure space.
pub fn pressure_stiffness(
    mesh: &RectMesh,
    space: &FeSpace,
    k: f64,
    qdeg: usize,
) -> Result<CsrMatrix, Error> {
    if space.kind != SpaceKind::P1Scalar {
        return Err(Error::InvalidArgument("pressure space must be scalar P1"));
    }
    let rule = quadrature(qdeg)?;
    let mut triplets = Vec::with_capacity(mesh.n_triangles() * 9);
    for t in 0..mesh.n_triangles() {
        let geom = mesh.tri_geometry(t);
        let cd = space.cell_dofs(t);
        // P1 gradients are constant; the quadrature collapses to the area.
        let area: f64 = rule.weights.iter().map(|w| w * 2.0 * geom.area).sum();
        for i in 0..3 {
            for j in 0..3 {
                let dot = geom.grad_lambda[i][0] * geom.grad_lambda[j][0]
                    + geom.grad_lambda[i][1] * geom.grad_lambda[j][1];
                triplets.push((cd[i], cd[j], k * area * dot));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(space.n_dofs, space.n_dofs, triplets))
}

/// Assembles the consistent P1 mass matrix.
pub fn pressure_mass(mesh: &RectMesh, space: &FeSpace, qdeg: usize) -> Result<CsrMatrix, Error> {
    if space.kind != SpaceKind::P1Scalar {
        return Err(Error::InvalidArgument("pressure space must be scalar P1"));
    }
    let rule = quadrature(qdeg)?;
    let mut triplets = Vec::with_capacity(mesh.n_triangles() * 9);
    for t in 0..mesh.n_triangles() {
        let geom = mesh.tri_geometry(t);
        let cd = space.cell_dofs(t);
        for (q, &lambda_q) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * 2.0 * geom.area;
            for i in 0..3 {
                for j in 0..3 {
                    triplets.push((cd[i], cd[j], w * lambda_q[i] * lambda_q[j]));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(space.n_dofs, space.n_dofs, triplets))
}

/// Row-sum lumping of the P1 mass matrix: a diagonal matrix whose entry at a
/// vertex is one third of its patch area. The difference `M0 - M` is
/// positive semidefinite, which is what makes the equal-order stabilization
/// work.
pub fn lumped_pressure_mass(mesh: &RectMesh, space: &FeSpace) -> Result<CsrMatrix, Error> {
    if space.kind != SpaceKind::P1Scalar {
        return Err(Error::InvalidArgument("pressure space must be scalar P1"));
    }
    let mut triplets = Vec::with_capacity(space.n_dofs);
    for t in 0..mesh.n_triangles() {
        let area = mesh.tri_area(t);
        for &d in space.cell_dofs(t) {
            triplets.push((d, d, area / 3.0));
        }
    }
    Ok(CsrMatrix::from_triplets(space.n_dofs, space.n_dofs, triplets))
}

/// Assembles the coupling form `alpha int q div v` with pressure rows and
/// displacement columns.
pub fn coupling_matrix(
    mesh: &RectMesh,
    pspace: &FeSpace,
    uspace: &FeSpace,
    alpha: f64,
    qdeg: usize,
) -> Result<CsrMatrix, Error> {
    if pspace.kind != SpaceKind::P1Scalar || !uspace.is_vector() {
        return Err(Error::InvalidArgument(
            "coupling needs scalar pressure rows and vector displacement columns",
        ));
    }
    let rule = quadrature(qdeg)?;
    let nb = uspace.scalar_basis_count();
    let mut triplets = Vec::with_capacity(mesh.n_triangles() * 3 * uspace.dofs_per_cell);
    for t in 0..mesh.n_triangles() {
        let geom = mesh.tri_geometry(t);
        let pd = pspace.cell_dofs(t);
        let ud = uspace.cell_dofs(t);
        for (q, &lambda_q) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * 2.0 * geom.area;
            let basis = eval_scalar_basis(uspace.kind, lambda_q);
            let g = physical_grads(&basis, &geom.grad_lambda);
            for ip in 0..3 {
                let pv = lambda_q[ip];
                for i in 0..nb {
                    for c in 0..2 {
                        // div of (e_c phi_i) is the c-th gradient component.
                        triplets.push((pd[ip], ud[2 * i + c], alpha * w * pv * g[i][c]));
                    }
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(pspace.n_dofs, uspace.n_dofs, triplets))
}

/// Assembles `int f q` on the scalar space.
pub fn volume_load_scalar(
    mesh: &RectMesh,
    space: &FeSpace,
    f: &dyn Fn(f64, f64) -> f64,
    qdeg: usize,
) -> Result<Vec<f64>, Error> {
    if space.kind != SpaceKind::P1Scalar {
        return Err(Error::InvalidArgument("scalar load needs the scalar space"));
    }
    let rule = quadrature(qdeg)?;
    let mut load = vec![0.0; space.n_dofs];
    for t in 0..mesh.n_triangles() {
        let geom = mesh.tri_geometry(t);
        let cd = space.cell_dofs(t);
        for (q, &lambda_q) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * 2.0 * geom.area;
            let xy = mesh.bary_to_xy(t, lambda_q);
            let fv = f(xy[0], xy[1]);
            for i in 0..3 {
                load[cd[i]] += w * fv * lambda_q[i];
            }
        }
    }
    Ok(load)
}

/// Assembles `int f . v` on a vector space (bubbles included).
pub fn volume_load_vector(
    mesh: &RectMesh,
    space: &FeSpace,
    f: &dyn Fn(f64, f64) -> [f64; 2],
    qdeg: usize,
) -> Result<Vec<f64>, Error> {
    if !space.is_vector() {
        return Err(Error::InvalidArgument("vector load needs a vector space"));
    }
    let rule = quadrature(qdeg)?;
    let nb = space.scalar_basis_count();
    let mut load = vec![0.0; space.n_dofs];
    for t in 0..mesh.n_triangles() {
        let geom = mesh.tri_geometry(t);
        let cd = space.cell_dofs(t);
        for (q, &lambda_q) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * 2.0 * geom.area;
            let xy = mesh.bary_to_xy(t, lambda_q);
            let fv = f(xy[0], xy[1]);
            let basis = eval_scalar_basis(space.kind, lambda_q);
            for i in 0..nb {
                for c in 0..2 {
                    load[cd[2 * i + c]] += w * fv[c] * basis.values[i];
                }
            }
        }
    }
    Ok(load)
}

/// Load vector of a point source `value * delta_(x, y)` on the scalar
/// space: the basis values at the point, scaled. Entries sum to `value`
/// because P1 basis functions partition unity.
pub fn point_load(
    mesh: &RectMesh,
    space: &FeSpace,
    x: f64,
    y: f64,
    value: f64,
) -> Result<Vec<f64>, Error> {
    if space.kind != SpaceKind::P1Scalar {
        return Err(Error::InvalidArgument("point load needs the scalar space"));
    }
    let (t, lambda) = mesh.locate_point(x, y)?;
    let mut load = vec![0.0; space.n_dofs];
    let cd = space.cell_dofs(t);
    for i in 0..3 {
        load[cd[i]] += value * lambda[i];
    }
    Ok(load)
}
