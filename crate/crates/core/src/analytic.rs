//! Closed-form solutions, source terms, and error norms.
//!
//! Two reference problems drive validation:
//!
//! - [`Manufactured`]: a smooth space-time solution on the unit square with
//!   homogeneous Dirichlet boundaries whose source terms are derived
//!   analytically, used for convergence studies.
//! - [`BarryMercer`]: the classical point-source poroelastic benchmark on
//!   the unit square with drained boundaries and tangentially clamped,
//!   normally free displacement, whose solution is a double sine series.
//!
//! Error norms integrate the difference between an exact field (passed as a
//! closure) and a finite element function with high-order quadrature.

use alloc::vec::Vec;

use crate::assembly::{point_load, volume_load_scalar, volume_load_vector};
use crate::fespace::{eval_scalar, eval_scalar_grad, eval_vector_grad, quadrature, FeSpace};
use crate::fmath::{self, PI};
use crate::mesh::RectMesh;
use crate::schemes::{BiotParams, Discretization, Problem};
use crate::Error;

/// Smooth manufactured solution on the unit square:
///
/// ```text
///   u = sin(pi x t) cos(pi y t) x (1-x) y (1-y)
///   v = cos(pi x t) sin(pi y t) x (1-x) y (1-y)
///   p = cos(t + x - y) x (1-x) y (1-y)
/// ```
///
/// Body force and fluid source are the exact residuals of the Biot system
/// for these fields, so the pair (fields, sources) solves the continuous
/// problem with homogeneous Dirichlet boundary values.
#[derive(Debug, Clone, Copy)]
pub struct Manufactured {
    pub params: BiotParams,
}

impl Manufactured {
    pub fn new(params: BiotParams) -> Self {
        Manufactured { params }
    }

    pub fn displacement(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let xi = x * (1.0 - x);
        let ze = y * (1.0 - y);
        let sx = fmath::sin(PI * x * t);
        let cx = fmath::cos(PI * x * t);
        let sy = fmath::sin(PI * y * t);
        let cy = fmath::cos(PI * y * t);
        [sx * cy * xi * ze, cx * sy * xi * ze]
    }

    pub fn pressure(&self, x: f64, y: f64, t: f64) -> f64 {
        fmath::cos(t + x - y) * x * (1.0 - x) * y * (1.0 - y)
    }

    /// Jacobian of the displacement: `[[u_x, u_y], [v_x, v_y]]`.
    pub fn displacement_gradient(&self, x: f64, y: f64, t: f64) -> [[f64; 2]; 2] {
        let (xi, dxi) = (x * (1.0 - x), 1.0 - 2.0 * x);
        let (ze, dze) = (y * (1.0 - y), 1.0 - 2.0 * y);
        let k = PI * t;
        let sx = fmath::sin(PI * x * t);
        let cx = fmath::cos(PI * x * t);
        let sy = fmath::sin(PI * y * t);
        let cy = fmath::cos(PI * y * t);
        let u_x = (k * cx * xi + sx * dxi) * cy * ze;
        let u_y = sx * xi * (-k * sy * ze + cy * dze);
        let v_x = (-k * sx * xi + cx * dxi) * sy * ze;
        let v_y = cx * xi * (k * cy * ze + sy * dze);
        [[u_x, u_y], [v_x, v_y]]
    }

    pub fn pressure_gradient(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let (xi, dxi) = (x * (1.0 - x), 1.0 - 2.0 * x);
        let (ze, dze) = (y * (1.0 - y), 1.0 - 2.0 * y);
        let w = t + x - y;
        let cw = fmath::cos(w);
        let sw = fmath::sin(w);
        [
            -sw * xi * ze + cw * dxi * ze,
            sw * xi * ze + cw * xi * dze,
        ]
    }

    /// Elasticity residual `f = -div(2 mu eps(u) + lambda div u I) + alpha grad p`.
    pub fn body_force(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let p = &self.params;
        let (xi, dxi, ddxi) = (x * (1.0 - x), 1.0 - 2.0 * x, -2.0);
        let (ze, dze, ddze) = (y * (1.0 - y), 1.0 - 2.0 * y, -2.0);
        let k = PI * t;
        let sx = fmath::sin(PI * x * t);
        let cx = fmath::cos(PI * x * t);
        let sy = fmath::sin(PI * y * t);
        let cy = fmath::cos(PI * y * t);
        let u_xx = (-k * k * sx * xi + 2.0 * k * cx * dxi + sx * ddxi) * cy * ze;
        let u_yy = sx * xi * (-k * k * cy * ze - 2.0 * k * sy * dze + cy * ddze);
        let u_xy = (k * cx * xi + sx * dxi) * (-k * sy * ze + cy * dze);
        let v_xx = (-k * k * cx * xi - 2.0 * k * sx * dxi + cx * ddxi) * sy * ze;
        let v_yy = cx * xi * (-k * k * sy * ze + 2.0 * k * cy * dze + sy * ddze);
        let v_xy = (-k * sx * xi + cx * dxi) * (k * cy * ze + sy * dze);
        let grad_p = self.pressure_gradient(x, y, t);
        let fx = -(2.0 * p.mu * u_xx + p.lambda * (u_xx + v_xy) + p.mu * (u_yy + v_xy))
            + p.alpha * grad_p[0];
        let fy = -(p.mu * (u_xy + v_xx) + 2.0 * p.mu * v_yy + p.lambda * (u_xy + v_yy))
            + p.alpha * grad_p[1];
        [fx, fy]
    }

    /// Flow residual `g = c0 p_t + alpha div u_t - k laplace p`.
    pub fn fluid_source(&self, x: f64, y: f64, t: f64) -> f64 {
        let p = &self.params;
        let (xi, dxi, ddxi) = (x * (1.0 - x), 1.0 - 2.0 * x, -2.0);
        let (ze, dze, ddze) = (y * (1.0 - y), 1.0 - 2.0 * y, -2.0);
        let k = PI * t;
        let sx = fmath::sin(PI * x * t);
        let cx = fmath::cos(PI * x * t);
        let sy = fmath::sin(PI * y * t);
        let cy = fmath::cos(PI * y * t);
        let u_xt = (PI * cx * xi - k * PI * x * sx * xi + PI * x * cx * dxi) * cy * ze
            + (k * cx * xi + sx * dxi) * (-PI * y * sy) * ze;
        let v_yt = (-PI * x * sx) * xi * (k * cy * ze + sy * dze)
            + cx * xi * (PI * cy * ze - k * PI * y * sy * ze + PI * y * cy * dze);
        let w = t + x - y;
        let cw = fmath::cos(w);
        let sw = fmath::sin(w);
        let p_xx = -cw * xi * ze - 2.0 * sw * dxi * ze + cw * ddxi * ze;
        let p_yy = -cw * xi * ze + 2.0 * sw * xi * dze + cw * xi * ddze;
        let p_t = -sw * xi * ze;
        p.c0 * p_t + p.alpha * (u_xt + v_yt) - p.k * (p_xx + p_yy)
    }
}

/// Load vectors are integrated with degree-5 quadrature: one degree above
/// the exactness of the matrix integrals, enough that load quadrature never
/// limits the observed convergence orders.
const LOAD_QUADRATURE: usize = 5;

impl Problem for Manufactured {
    fn exact_u(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        self.displacement(x, y, t)
    }

    fn exact_p(&self, x: f64, y: f64, t: f64) -> f64 {
        self.pressure(x, y, t)
    }

    fn f_load(&self, disc: &Discretization, t: f64) -> Result<Vec<f64>, Error> {
        volume_load_vector(
            &disc.mesh,
            &disc.uspace,
            &|x, y| self.body_force(x, y, t),
            LOAD_QUADRATURE,
        )
    }

    fn g_load(&self, disc: &Discretization, t: f64) -> Result<Vec<f64>, Error> {
        volume_load_scalar(
            &disc.mesh,
            &disc.pspace,
            &|x, y| self.fluid_source(x, y, t),
            LOAD_QUADRATURE,
        )
    }
}

/// Point-source poroelastic benchmark on the unit square.
///
/// A pulsating fluid injection `2 ups sin(ups t) delta_(x0, y0)` with
/// `ups = (lambda + 2 mu) k` drives the system from rest; the boundary is
/// drained (`p = 0`) with tangentially clamped, normally free displacement.
/// The exact solution is a double sine series; truncation is controlled by
/// `n_modes` per direction. The closed form requires `alpha = 1` and
/// `c0 = 0`.
#[derive(Debug, Clone, Copy)]
pub struct BarryMercer {
    pub params: BiotParams,
    pub x0: f64,
    pub y0: f64,
    pub n_modes: usize,
}

impl BarryMercer {
    pub fn new(params: BiotParams, x0: f64, y0: f64, n_modes: usize) -> Result<Self, Error> {
        params.validate()?;
        if params.alpha != 1.0 {
            return Err(Error::InvalidArgument(
                "the point-source benchmark series assumes alpha = 1",
            ));
        }
        if params.c0 != 0.0 {
            return Err(Error::InvalidArgument(
                "the point-source benchmark series assumes c0 = 0",
            ));
        }
        if !(x0 > 0.0 && x0 < 1.0 && y0 > 0.0 && y0 < 1.0) {
            return Err(Error::InvalidArgument(
                "the injection point must lie strictly inside the unit square",
            ));
        }
        if n_modes == 0 {
            return Err(Error::InvalidArgument("need at least one series mode"));
        }
        Ok(BarryMercer {
            params,
            x0,
            y0,
            n_modes,
        })
    }

    /// Characteristic rate `(lambda + 2 mu) k` (unit square, so the area
    /// normalization drops out).
    pub fn upsilon(&self) -> f64 {
        (self.params.lambda + 2.0 * self.params.mu) * self.params.k
    }

    /// The customary observation time: a quarter period of the source.
    pub fn t_final(&self) -> f64 {
        PI / (2.0 * self.upsilon())
    }

    pub fn source_amplitude(&self, t: f64) -> f64 {
        let ups = self.upsilon();
        2.0 * ups * fmath::sin(ups * t)
    }

    /// Time factor of mode `(n, q)` divided by `8 ups / k`: the solution of
    /// the modal ODE driven by `sin(ups t)`.
    fn mode_coefficient(&self, lnq: f64, t: f64) -> f64 {
        let ups = self.upsilon();
        (lnq * fmath::sin(ups * t) - fmath::cos(ups * t) + fmath::exp(-lnq * ups * t))
            / (lnq * lnq + 1.0)
    }

    pub fn pressure(&self, x: f64, y: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let n = self.n_modes;
        let scale = 8.0 * self.upsilon() / self.params.k;
        let mut sin_nx = Vec::with_capacity(n);
        let mut sin_n0 = Vec::with_capacity(n);
        let mut sin_qy = Vec::with_capacity(n);
        let mut sin_q0 = Vec::with_capacity(n);
        for i in 1..=n {
            let l = i as f64 * PI;
            sin_nx.push(fmath::sin(l * x));
            sin_n0.push(fmath::sin(l * self.x0));
            sin_qy.push(fmath::sin(l * y));
            sin_q0.push(fmath::sin(l * self.y0));
        }
        let mut sum = 0.0;
        for i in 1..=n {
            let ln2 = (i as f64 * PI) * (i as f64 * PI);
            let mut row = 0.0;
            for j in 1..=n {
                let lq2 = (j as f64 * PI) * (j as f64 * PI);
                let lnq = ln2 + lq2;
                row += sin_q0[j - 1] * self.mode_coefficient(lnq, t) * sin_qy[j - 1];
            }
            sum += sin_n0[i - 1] * sin_nx[i - 1] * row;
        }
        scale * sum
    }

    pub fn displacement(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        if t <= 0.0 {
            return [0.0, 0.0];
        }
        let n = self.n_modes;
        let lam2mu = self.params.lambda + 2.0 * self.params.mu;
        let scale = 8.0 * self.upsilon() / self.params.k;
        let mut trig = Vec::with_capacity(n);
        for i in 1..=n {
            let l = i as f64 * PI;
            trig.push((
                fmath::sin(l * x),
                fmath::cos(l * x),
                fmath::sin(l * y),
                fmath::cos(l * y),
                fmath::sin(l * self.x0),
                fmath::sin(l * self.y0),
            ));
        }
        let mut u = 0.0;
        let mut v = 0.0;
        for i in 1..=n {
            let ln = i as f64 * PI;
            for j in 1..=n {
                let lq = j as f64 * PI;
                let lnq = ln * ln + lq * lq;
                let p_nq = trig[i - 1].4 * trig[j - 1].5 * self.mode_coefficient(lnq, t);
                u += -ln * p_nq / (lam2mu * lnq) * trig[i - 1].1 * trig[j - 1].2;
                v += -lq * p_nq / (lam2mu * lnq) * trig[i - 1].0 * trig[j - 1].3;
            }
        }
        [scale * u, scale * v]
    }
}

impl Problem for BarryMercer {
    fn exact_u(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        self.displacement(x, y, t)
    }

    fn exact_p(&self, x: f64, y: f64, t: f64) -> f64 {
        self.pressure(x, y, t)
    }

    fn f_load(&self, disc: &Discretization, _t: f64) -> Result<Vec<f64>, Error> {
        Ok(alloc::vec![0.0; disc.uspace.n_dofs])
    }

    fn g_load(&self, disc: &Discretization, t: f64) -> Result<Vec<f64>, Error> {
        point_load(
            &disc.mesh,
            &disc.pspace,
            self.x0,
            self.y0,
            self.source_amplitude(t),
        )
    }
}

/// Converts Young's modulus and Poisson ratio to the Lame pair
/// `(lambda, mu)`. The ratio must lie in `(-1, 1/2)`.
pub fn lame_from_young_poisson(e: f64, nu: f64) -> Result<(f64, f64), Error> {
    if !(e > 0.0) {
        return Err(Error::InvalidArgument("Young's modulus must be positive"));
    }
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::InvalidArgument(
            "Poisson ratio must lie in (-1, 1/2)",
        ));
    }
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    Ok((lambda, mu))
}

/// Observed order between errors on a mesh pair with halved resolution:
/// `log2(coarse / fine)`.
pub fn convergence_rate(coarse: f64, fine: f64) -> f64 {
    fmath::log2(coarse / fine)
}

/// `L2` distance between a scalar FE function and an exact field.
pub fn pressure_l2_error(
    mesh: &RectMesh,
    pspace: &FeSpace,
    p: &[f64],
    exact: &dyn Fn(f64, f64) -> f64,
    qdeg: usize,
) -> Result<f64, Error> {
    let rule = quadrature(qdeg)?;
    let mut sum = 0.0;
    for t in 0..mesh.n_triangles() {
        let area = mesh.tri_area(t);
        for (q, &lambda) in rule.points.iter().enumerate() {
            let xy = mesh.bary_to_xy(t, lambda);
            let diff = exact(xy[0], xy[1]) - eval_scalar(pspace, p, t, lambda);
            sum += rule.weights[q] * 2.0 * area * diff * diff;
        }
    }
    Ok(fmath::sqrt(sum))
}

/// Energy-norm distance `sqrt(int 2 mu |eps(e)|^2 + lambda (div e)^2)`
/// between a vector FE function and an exact field given by its Jacobian.
pub fn displacement_energy_error(
    mesh: &RectMesh,
    uspace: &FeSpace,
    u: &[f64],
    exact_grad: &dyn Fn(f64, f64) -> [[f64; 2]; 2],
    mu: f64,
    lambda: f64,
    qdeg: usize,
) -> Result<f64, Error> {
    let rule = quadrature(qdeg)?;
    let mut sum = 0.0;
    for t in 0..mesh.n_triangles() {
        let area = mesh.tri_area(t);
        for (q, &lambda_q) in rule.points.iter().enumerate() {
            let xy = mesh.bary_to_xy(t, lambda_q);
            let ge = exact_grad(xy[0], xy[1]);
            let gf = eval_vector_grad(mesh, uspace, u, t, lambda_q);
            let e = [
                [ge[0][0] - gf[0][0], ge[0][1] - gf[0][1]],
                [ge[1][0] - gf[1][0], ge[1][1] - gf[1][1]],
            ];
            let exx = e[0][0];
            let eyy = e[1][1];
            let exy = 0.5 * (e[0][1] + e[1][0]);
            let div = exx + eyy;
            let integrand =
                2.0 * mu * (exx * exx + eyy * eyy + 2.0 * exy * exy) + lambda * div * div;
            sum += rule.weights[q] * 2.0 * area * integrand;
        }
    }
    Ok(fmath::sqrt(sum))
}

/// Conductivity-weighted `H1` seminorm distance
/// `sqrt(int k |grad e|^2)` for the pressure.
pub fn pressure_bnorm_error(
    mesh: &RectMesh,
    pspace: &FeSpace,
    p: &[f64],
    exact_grad: &dyn Fn(f64, f64) -> [f64; 2],
    k: f64,
    qdeg: usize,
) -> Result<f64, Error> {
    let rule = quadrature(qdeg)?;
    let mut sum = 0.0;
    for t in 0..mesh.n_triangles() {
        let area = mesh.tri_area(t);
        for (q, &lambda) in rule.points.iter().enumerate() {
            let xy = mesh.bary_to_xy(t, lambda);
            let ge = exact_grad(xy[0], xy[1]);
            let gf = eval_scalar_grad(mesh, pspace, p, t, lambda);
            let dx = ge[0] - gf[0];
            let dy = ge[1] - gf[1];
            sum += rule.weights[q] * 2.0 * area * k * (dx * dx + dy * dy);
        }
    }
    Ok(fmath::sqrt(sum))
}
