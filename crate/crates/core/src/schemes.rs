//! Time discretizations of the two-field Biot system.
//!
//! With `M` the pressure mass matrix, `M0` its lumping, `B` the pressure
//! stiffness, `A` the elasticity matrix, and `G` the coupling form
//! `alpha (q, div v)`, the backward Euler step from `(u^j, p^j)` reads
//!
//! ```text
//!   (c0/tau) M (p' - p^j) + (1/tau) G (u' - u^j) + B p' = g(t')
//!   A u' - G^T p'                                       = f(t')
//! ```
//!
//! The monolithic scheme solves this coupled system at every step by a
//! fixed-stress inner iteration: the pressure equation is augmented on both
//! sides with `(L_fs/tau) M p` (with `L_fs = alpha^2 / (lambda + mu)`), and
//! pressure and displacement solves alternate until successive pressure
//! iterates differ by less than `inner_tol` in the euclidean dof norm.
//!
//! The explicit schemes solve the coupled system only for the first time
//! level and then advance with a single pressure solve and a single
//! displacement solve per step, replacing the implicit coupling increment
//! `G (u^{j+1} - u^j)` by the lagged `G (u^j - u^{j-1})` and compensating
//! with a stabilization of strength `L = omega alpha^2 / (lambda + mu)`:
//!
//! ```text
//!   [ (c0 + L)/tau M + B ] p^{j+1} = (c0 + L)/tau M p^j
//!       + (L/tau) M (p^j - p^{j-1}) - (1/tau) G (u^j - u^{j-1}) + g(t^{j+1})
//!   A u^{j+1} = G^T p^{j+1} + f(t^{j+1})
//! ```
//!
//! The naive variant is this scheme with `L = 0` (only conditionally
//! stable). The equal-order variant for the P1-P1 pair replaces the
//! new-time stabilization pair `(L/tau) M p^{j+1} / (L/tau) M p^j` by the
//! lumped `(L/tau) M0 p^{j+1} / (L/tau) M0 p^j` while the lagged difference
//! keeps the consistent `M`; equivalently it adds the stabilization
//! `(L/tau)(M0 - M)` to the implicit side, which also augments the coupled
//! first step and the monolithic stepper whenever the element pair is P1-P1.

use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{
    apply_dirichlet, coupling_matrix, elasticity_matrix, lumped_pressure_mass, pressure_mass,
    pressure_stiffness, zero_constrained, CsrMatrix,
};
use crate::fespace::{DirichletMode, FeSpace, SpaceKind};
use crate::fmath;
use crate::linsolve::{cg_solve, CgOptions};
use crate::mesh::RectMesh;
use crate::Error;

/// Material and coupling constants of the Biot system.
#[derive(Debug, Clone, Copy)]
pub struct BiotParams {
    /// Shear modulus, positive.
    pub mu: f64,
    /// First Lame parameter, nonnegative.
    pub lambda: f64,
    /// Biot-Willis coefficient, in (0, 1].
    pub alpha: f64,
    /// Constrained specific storage, nonnegative (zero is allowed and is
    /// the hardest case for splitting).
    pub c0: f64,
    /// Hydraulic conductivity, positive.
    pub k: f64,
}

impl BiotParams {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidArgument("mu must be positive"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidArgument("lambda must be nonnegative"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidArgument("alpha must lie in (0, 1]"));
        }
        if !(self.c0 >= 0.0) {
            return Err(Error::InvalidArgument("c0 must be nonnegative"));
        }
        if !(self.k > 0.0) {
            return Err(Error::InvalidArgument("conductivity k must be positive"));
        }
        Ok(())
    }
}

/// Stabilization strength `omega alpha^2 / (lambda + 2 mu / d)`; in two
/// dimensions the denominator is `lambda + mu`.
pub fn stabilization_constant(params: &BiotParams, omega: f64) -> f64 {
    omega * params.alpha * params.alpha / (params.lambda + params.mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementPair {
    /// MINI displacement (P1 plus cubic bubbles) with P1 pressure.
    Mini,
    /// Equal-order P1 displacement and pressure, stabilized.
    P1P1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Monolithic,
    ExplicitNaive,
    ExplicitFixedStress,
    ExplicitStabilizedP1P1,
}

#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Stabilization multiplier omega (dimensionless).
    pub omega: f64,
    /// Absolute dof-norm threshold for the fixed-stress inner iteration.
    pub inner_tol: f64,
    pub inner_max: usize,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind) -> Self {
        SchemeConfig {
            kind,
            omega: 1.0,
            inner_tol: 1e-10,
            inner_max: 200,
        }
    }
}

/// Assembled spatial discretization: spaces, matrices, and parameters.
/// The elasticity matrix is stored with Dirichlet dofs eliminated (ready to
/// solve); mass, stiffness, and coupling stay unconstrained, and right-hand
/// sides are masked instead.
pub struct Discretization {
    pub mesh: RectMesh,
    pub element: ElementPair,
    pub params: BiotParams,
    pub uspace: FeSpace,
    pub pspace: FeSpace,
    /// Elasticity, Dirichlet-eliminated.
    pub a: CsrMatrix,
    /// Coupling, pressure rows by displacement columns, unconstrained.
    pub g: CsrMatrix,
    /// Consistent pressure mass, unconstrained.
    pub m: CsrMatrix,
    /// Lumped pressure mass (diagonal), unconstrained.
    pub m0: CsrMatrix,
    /// Pressure stiffness scaled by the conductivity, unconstrained.
    pub b: CsrMatrix,
}

impl Discretization {
    /// Assembles all matrices with the given displacement boundary mode.
    /// The pressure space is always fully clamped (drained boundary).
    /// Matrix quadrature of degree 4 integrates every integrand of both
    /// element pairs exactly.
    pub fn new(
        mesh: RectMesh,
        element: ElementPair,
        params: BiotParams,
        u_bc: DirichletMode,
    ) -> Result<Self, Error> {
        params.validate()?;
        let ukind = match element {
            ElementPair::Mini => SpaceKind::MiniVector,
            ElementPair::P1P1 => SpaceKind::P1Vector,
        };
        let uspace = FeSpace::with_dirichlet(&mesh, ukind, u_bc)?;
        let pspace = FeSpace::new(&mesh, SpaceKind::P1Scalar);
        let qdeg = 4;
        let mut a = elasticity_matrix(&mesh, &uspace, params.mu, params.lambda, qdeg)?;
        apply_dirichlet(&mut a, &uspace.dirichlet);
        let g = coupling_matrix(&mesh, &pspace, &uspace, params.alpha, qdeg)?;
        let m = pressure_mass(&mesh, &pspace, qdeg)?;
        let m0 = lumped_pressure_mass(&mesh, &pspace)?;
        let b = pressure_stiffness(&mesh, &pspace, params.k, qdeg)?;
        Ok(Discretization {
            mesh,
            element,
            params,
            uspace,
            pspace,
            a,
            g,
            m,
            m0,
            b,
        })
    }

    /// L2 norm of a pressure dof vector, `sqrt(p^T M p)`.
    pub fn pressure_l2_norm(&self, p: &[f64]) -> f64 {
        fmath::sqrt(self.m.quadratic_form(p, p).max(0.0))
    }
}

/// Solution snapshot at one time level.
#[derive(Debug, Clone)]
pub struct State {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

/// A concrete problem instance: exact fields for initialization (and error
/// measurement where available) plus load vectors for the two equations.
/// Load vectors are assembled against the unconstrained spaces; the
/// steppers mask constrained entries.
pub trait Problem {
    fn exact_u(&self, x: f64, y: f64, t: f64) -> [f64; 2];
    fn exact_p(&self, x: f64, y: f64, t: f64) -> f64;
    fn f_load(&self, disc: &Discretization, t: f64) -> Result<Vec<f64>, Error>;
    fn g_load(&self, disc: &Discretization, t: f64) -> Result<Vec<f64>, Error>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Vertex interpolation of the exact fields; bubble dofs start at zero.
    Interpolate,
    /// Solve the stationary saddle system `a(u, v) - alpha (p, div v) = (f, v)`,
    /// `alpha (div u, q) = (g, q)` by alternating sub-solves (Uzawa).
    SaddleSolve,
}

/// Builds the discrete initial state at time `t0`.
pub fn initial_state(
    disc: &Discretization,
    problem: &dyn Problem,
    mode: InitMode,
    t0: f64,
    cfg: &SchemeConfig,
) -> Result<State, Error> {
    match mode {
        InitMode::Interpolate => {
            let mut u = vec![0.0; disc.uspace.n_dofs];
            let mut p = vec![0.0; disc.pspace.n_dofs];
            for (v, &[x, y]) in disc.mesh.verts.iter().enumerate() {
                let uv = problem.exact_u(x, y, t0);
                u[2 * v] = uv[0];
                u[2 * v + 1] = uv[1];
                p[v] = problem.exact_p(x, y, t0);
            }
            zero_constrained(&mut u, &disc.uspace.dirichlet);
            zero_constrained(&mut p, &disc.pspace.dirichlet);
            Ok(State { u, p, t: t0 })
        }
        InitMode::SaddleSolve => saddle_initial_state(disc, problem, t0, cfg),
    }
}

fn saddle_initial_state(
    disc: &Discretization,
    problem: &dyn Problem,
    t0: f64,
    cfg: &SchemeConfig,
) -> Result<State, Error> {
    let mut f0 = problem.f_load(disc, t0)?;
    let mut g0 = problem.g_load(disc, t0)?;
    zero_constrained(&mut f0, &disc.uspace.dirichlet);
    zero_constrained(&mut g0, &disc.pspace.dirichlet);
    let params = &disc.params;
    // Preconditioned Uzawa: the Schur complement G A^-1 G^T is bounded by
    // alpha^2 / (lambda + mu) times the lumped mass, so this step size
    // yields a monotone contraction.
    let rho = (params.lambda + params.mu) / (params.alpha * params.alpha);
    let m0_diag = disc.m0.diagonal();
    let mut p = vec![0.0; disc.pspace.n_dofs];
    let mut u = vec![0.0; disc.uspace.n_dofs];
    let cg = CgOptions::default();
    for iter in 1..=cfg.inner_max {
        let mut rhs_u = disc.g.spmv_transpose(&p);
        for (r, fv) in rhs_u.iter_mut().zip(&f0) {
            *r += fv;
        }
        zero_constrained(&mut rhs_u, &disc.uspace.dirichlet);
        let (u_new, _) = cg_solve(&disc.a, &rhs_u, Some(&u), &cg)?;
        u = u_new;
        let mut resid = disc.g.spmv(&u);
        for (r, gv) in resid.iter_mut().zip(&g0) {
            *r = gv - *r;
        }
        zero_constrained(&mut resid, &disc.pspace.dirichlet);
        let mut diff = 0.0;
        for i in 0..p.len() {
            let step = rho * resid[i] / m0_diag[i];
            p[i] += step;
            diff += step * step;
        }
        if fmath::sqrt(diff) < cfg.inner_tol {
            return Ok(State { u, p, t: t0 });
        }
        if iter == cfg.inner_max {
            return Err(Error::SolverFailure {
                what: "saddle-point initialization (Uzawa)",
                iterations: iter,
                residual: fmath::sqrt(diff),
            });
        }
    }
    unreachable!()
}

/// Matrices shared by all steps of one run.
struct RunMatrices {
    /// Coupled (backward Euler) pressure system, Dirichlet-eliminated:
    /// `(c0 + L_fs)/tau M + B + (lz/tau)(M0 - M)`.
    be_lhs: CsrMatrix,
    /// Explicit pressure system, Dirichlet-eliminated:
    /// `(c0/tau) M + (l/tau) S + B` with `S` the consistent or lumped mass.
    ex_lhs: Option<CsrMatrix>,
    /// Inner fixed-stress stabilization (always the omega = 1 value).
    lfs: f64,
    /// Stabilization put on the implicit side for P1-P1 (`(lz/tau)(M0 - M)`
    /// coefficient), zero for MINI.
    lz: f64,
    /// Explicit stabilization strength L.
    l_ex: f64,
    /// Whether the explicit new-time stabilization uses the lumped mass.
    lumped_stab: bool,
}

fn build_run_matrices(
    disc: &Discretization,
    cfg: &SchemeConfig,
    tau: f64,
) -> Result<RunMatrices, Error> {
    let params = &disc.params;
    let lfs = stabilization_constant(params, 1.0);
    let lz = match disc.element {
        ElementPair::P1P1 => stabilization_constant(params, cfg.omega),
        ElementPair::Mini => 0.0,
    };
    let (l_ex, lumped_stab) = match cfg.kind {
        SchemeKind::Monolithic => (0.0, false),
        SchemeKind::ExplicitNaive => (0.0, false),
        SchemeKind::ExplicitFixedStress => (stabilization_constant(params, cfg.omega), false),
        SchemeKind::ExplicitStabilizedP1P1 => {
            if disc.element != ElementPair::P1P1 {
                return Err(Error::InvalidArgument(
                    "the stabilized equal-order scheme needs the P1-P1 element pair",
                ));
            }
            (stabilization_constant(params, cfg.omega), true)
        }
    };
    let mut be_lhs = CsrMatrix::linear_combination(&[
        ((params.c0 + lfs - lz) / tau, &disc.m),
        (lz / tau, &disc.m0),
        (1.0, &disc.b),
    ]);
    apply_dirichlet(&mut be_lhs, &disc.pspace.dirichlet);
    let ex_lhs = match cfg.kind {
        SchemeKind::Monolithic => None,
        _ => {
            let stab = if lumped_stab { &disc.m0 } else { &disc.m };
            let mut lhs = CsrMatrix::linear_combination(&[
                (params.c0 / tau, &disc.m),
                (l_ex / tau, stab),
                (1.0, &disc.b),
            ]);
            apply_dirichlet(&mut lhs, &disc.pspace.dirichlet);
            Some(lhs)
        }
    };
    Ok(RunMatrices {
        be_lhs,
        ex_lhs,
        lfs,
        lz,
        l_ex,
        lumped_stab,
    })
}

fn axpy(y: &mut [f64], coeff: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += coeff * xi;
    }
}

/// One coupled backward Euler step from `prev`, solved by the fixed-stress
/// inner iteration. Returns the new state and the inner iteration count.
fn coupled_be_step(
    disc: &Discretization,
    mats: &RunMatrices,
    prev: &State,
    tau: f64,
    f_new: &[f64],
    g_new: &[f64],
    cfg: &SchemeConfig,
    start: Option<&State>,
) -> Result<(State, usize), Error> {
    let params = &disc.params;
    let cg = CgOptions::default();
    // Step-constant part of the pressure right-hand side.
    let mut rhs_base = g_new.to_vec();
    let m_p_prev = disc.m.spmv(&prev.p);
    axpy(&mut rhs_base, params.c0 / tau, &m_p_prev);
    if mats.lz != 0.0 {
        let m0_p_prev = disc.m0.spmv(&prev.p);
        axpy(&mut rhs_base, mats.lz / tau, &m0_p_prev);
        axpy(&mut rhs_base, -mats.lz / tau, &m_p_prev);
    }
    let g_u_prev = disc.g.spmv(&prev.u);
    // The converged result does not depend on the starting guess; warm
    // starting from the previous state just saves iterations.
    let guess = start.unwrap_or(prev);
    let mut u = guess.u.clone();
    let mut p = guess.p.clone();
    let mut last_diff = f64::INFINITY;
    for iter in 1..=cfg.inner_max {
        let mut rhs = rhs_base.clone();
        let m_p = disc.m.spmv(&p);
        axpy(&mut rhs, mats.lfs / tau, &m_p);
        let g_u = disc.g.spmv(&u);
        for i in 0..rhs.len() {
            rhs[i] -= (g_u[i] - g_u_prev[i]) / tau;
        }
        zero_constrained(&mut rhs, &disc.pspace.dirichlet);
        let (p_new, _) = cg_solve(&mats.be_lhs, &rhs, Some(&p), &cg)?;
        let mut rhs_u = disc.g.spmv_transpose(&p_new);
        for (r, fv) in rhs_u.iter_mut().zip(f_new) {
            *r += fv;
        }
        zero_constrained(&mut rhs_u, &disc.uspace.dirichlet);
        let (u_new, _) = cg_solve(&disc.a, &rhs_u, Some(&u), &cg)?;
        let diff = fmath::sqrt(
            p_new
                .iter()
                .zip(&p)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>(),
        );
        u = u_new;
        p = p_new;
        last_diff = diff;
        if diff < cfg.inner_tol {
            return Ok((
                State {
                    u,
                    p,
                    t: prev.t + tau,
                },
                iter,
            ));
        }
    }
    Err(Error::SolverFailure {
        what: "fixed-stress inner iteration",
        iterations: cfg.inner_max,
        residual: last_diff,
    })
}

/// One explicit (decoupled) step from `prev`, lagging the coupling with
/// `prev2`.
fn explicit_step(
    disc: &Discretization,
    mats: &RunMatrices,
    prev2: &State,
    prev: &State,
    tau: f64,
    f_new: &[f64],
    g_new: &[f64],
) -> Result<State, Error> {
    let params = &disc.params;
    let cg = CgOptions::default();
    let mut rhs = g_new.to_vec();
    let m_p_prev = disc.m.spmv(&prev.p);
    axpy(&mut rhs, params.c0 / tau, &m_p_prev);
    if mats.l_ex != 0.0 {
        if mats.lumped_stab {
            let m0_p_prev = disc.m0.spmv(&prev.p);
            axpy(&mut rhs, mats.l_ex / tau, &m0_p_prev);
        } else {
            axpy(&mut rhs, mats.l_ex / tau, &m_p_prev);
        }
        // Lagged difference always uses the consistent mass.
        let mut dp = prev.p.clone();
        axpy(&mut dp, -1.0, &prev2.p);
        let m_dp = disc.m.spmv(&dp);
        axpy(&mut rhs, mats.l_ex / tau, &m_dp);
    }
    let mut du = prev.u.clone();
    axpy(&mut du, -1.0, &prev2.u);
    let g_du = disc.g.spmv(&du);
    axpy(&mut rhs, -1.0 / tau, &g_du);
    zero_constrained(&mut rhs, &disc.pspace.dirichlet);
    let lhs = mats.ex_lhs.as_ref().expect("explicit matrices present");
    let (p_new, _) = cg_solve(lhs, &rhs, Some(&prev.p), &cg)?;
    let mut rhs_u = disc.g.spmv_transpose(&p_new);
    for (r, fv) in rhs_u.iter_mut().zip(f_new) {
        *r += fv;
    }
    zero_constrained(&mut rhs_u, &disc.uspace.dirichlet);
    let (u_new, _) = cg_solve(&disc.a, &rhs_u, Some(&prev.u), &cg)?;
    Ok(State {
        u: u_new,
        p: p_new,
        t: prev.t + tau,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub tau: f64,
    pub n_steps: usize,
    pub t0: f64,
    pub init: InitMode,
    /// Keep every time level (memory permitting) instead of only the last.
    pub keep_all: bool,
}

pub struct SimResult {
    /// Final state; also the last entry of `states` when `keep_all` is set.
    pub final_state: State,
    /// All states from `t0` to the final time if requested.
    pub states: Option<Vec<State>>,
    /// Inner iterations spent on the coupled first step.
    pub first_step_inner: usize,
    /// Total inner iterations over all coupled solves (monolithic runs).
    pub total_inner: usize,
}

/// Runs a full simulation: initial state at `t0`, one coupled backward
/// Euler step to `t1` (all schemes need two time levels), then `n_steps - 1`
/// further steps with the configured scheme. Non-finite states abort with
/// [`Error::Instability`].
pub fn run_simulation(
    disc: &Discretization,
    problem: &dyn Problem,
    cfg: &SchemeConfig,
    opts: &RunOptions,
) -> Result<SimResult, Error> {
    if !(opts.tau > 0.0) {
        return Err(Error::InvalidArgument("time step must be positive"));
    }
    if opts.n_steps == 0 {
        return Err(Error::InvalidArgument("need at least one time step"));
    }
    if !(cfg.omega >= 0.0) {
        return Err(Error::InvalidArgument("omega must be nonnegative"));
    }
    if !(cfg.inner_tol > 0.0) {
        return Err(Error::InvalidArgument("inner tolerance must be positive"));
    }
    let mats = build_run_matrices(disc, cfg, opts.tau)?;
    let s0 = initial_state(disc, problem, opts.init, opts.t0, cfg)?;
    let mut states = if opts.keep_all {
        let mut v = Vec::with_capacity(opts.n_steps + 1);
        v.push(s0.clone());
        Some(v)
    } else {
        None
    };

    let t1 = opts.t0 + opts.tau;
    let f1 = problem.f_load(disc, t1)?;
    let g1 = problem.g_load(disc, t1)?;
    let (s1, first_inner) = coupled_be_step(disc, &mats, &s0, opts.tau, &f1, &g1, cfg, None)?;
    check_finite(&s1, 1)?;
    let mut total_inner = first_inner;
    if let Some(v) = states.as_mut() {
        v.push(s1.clone());
    }

    let mut prev2 = s0;
    let mut prev = s1;
    for step in 2..=opts.n_steps {
        let t_new = opts.t0 + opts.tau * step as f64;
        let f_new = problem.f_load(disc, t_new)?;
        let g_new = problem.g_load(disc, t_new)?;
        let next = match cfg.kind {
            SchemeKind::Monolithic => {
                let (s, inner) =
                    coupled_be_step(disc, &mats, &prev, opts.tau, &f_new, &g_new, cfg, None)?;
                total_inner += inner;
                s
            }
            _ => match explicit_step(disc, &mats, &prev2, &prev, opts.tau, &f_new, &g_new) {
                Ok(s) => s,
                // A blow-up eventually poisons the linear algebra with
                // overflow; report it as the instability it is.
                Err(Error::NonFinite(_)) => return Err(Error::Instability { step }),
                Err(Error::SolverFailure { residual, .. })
                    if !residual.is_finite() || residual.abs() > 1e80 =>
                {
                    return Err(Error::Instability { step })
                }
                Err(e) => return Err(e),
            },
        };
        check_finite(&next, step)?;
        // Geometric divergence guard: stop a runaway explicit iteration
        // while the values are still comfortably representable.
        if !matches!(cfg.kind, SchemeKind::Monolithic) {
            let amp = next.p.iter().chain(&next.u).fold(0.0f64, |m, &v| {
                if v.abs() > m {
                    v.abs()
                } else {
                    m
                }
            });
            if amp > 1e100 {
                return Err(Error::Instability { step });
            }
        }
        if let Some(v) = states.as_mut() {
            v.push(next.clone());
        }
        prev2 = prev;
        prev = next;
    }
    Ok(SimResult {
        final_state: prev,
        states,
        first_step_inner: first_inner,
        total_inner,
    })
}

fn check_finite(state: &State, step: usize) -> Result<(), Error> {
    let ok = state.p.iter().all(|v| v.is_finite()) && state.u.iter().all(|v| v.is_finite());
    if ok {
        Ok(())
    } else {
        Err(Error::Instability { step })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::Manufactured;

    fn test_params() -> BiotParams {
        BiotParams {
            mu: 2.0,
            lambda: 1.0,
            alpha: 1.0,
            c0: 0.01,
            k: 1.0,
        }
    }

    struct ZeroProblem;
    impl Problem for ZeroProblem {
        fn exact_u(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
            [0.0, 0.0]
        }
        fn exact_p(&self, _: f64, _: f64, _: f64) -> f64 {
            0.0
        }
        fn f_load(&self, disc: &Discretization, _: f64) -> Result<Vec<f64>, Error> {
            Ok(vec![0.0; disc.uspace.n_dofs])
        }
        fn g_load(&self, disc: &Discretization, _: f64) -> Result<Vec<f64>, Error> {
            Ok(vec![0.0; disc.pspace.n_dofs])
        }
    }

    fn mini_disc(n: usize) -> Discretization {
        Discretization::new(
            RectMesh::unit(n, n).unwrap(),
            ElementPair::Mini,
            test_params(),
            DirichletMode::Full,
        )
        .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(test_params().validate().is_ok());
        let mut p = test_params();
        p.mu = 0.0;
        assert!(p.validate().is_err());
        p = test_params();
        p.alpha = 1.5;
        assert!(p.validate().is_err());
        p = test_params();
        p.c0 = -1e-9;
        assert!(p.validate().is_err());
        p = test_params();
        p.k = 0.0;
        assert!(p.validate().is_err());
        p = test_params();
        p.lambda = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn stabilization_constant_values() {
        // alpha^2 / (lambda + mu) = 1 / 3 for the manufactured parameters.
        let l1 = stabilization_constant(&test_params(), 1.0);
        assert!((l1 - 1.0 / 3.0).abs() < 1e-15);
        let l32 = stabilization_constant(&test_params(), 1.5);
        assert!((l32 - 0.5).abs() < 1e-15);
        assert_eq!(stabilization_constant(&test_params(), 0.0), 0.0);
    }

    #[test]
    fn interpolated_initial_state() {
        let disc = mini_disc(8);
        let problem = Manufactured::new(test_params());
        let cfg = SchemeConfig::new(SchemeKind::Monolithic);
        // At t = 0 the manufactured displacement vanishes identically.
        let s = initial_state(&disc, &problem, InitMode::Interpolate, 0.0, &cfg).unwrap();
        assert!(s.u.iter().all(|&v| v == 0.0));
        // Pressure interpolates cos(x - y) x y (1-x)(1-y) at the vertices.
        let v = 3 * 9 + 2; // vertex (2, 3) on the 8x8 grid
        let (x, y) = (0.25f64, 0.375f64);
        let expected = (x - y).cos() * x * (1.0 - x) * y * (1.0 - y);
        assert!((s.p[v] - expected).abs() < 1e-15);
        // Dirichlet dofs are exactly zero.
        for &d in &disc.pspace.dirichlet_dofs {
            assert_eq!(s.p[d], 0.0);
        }
    }

    #[test]
    fn saddle_solve_recovers_a_manufactured_discrete_solution() {
        // Build loads from a known discrete pair and check the Uzawa
        // alternation reproduces it.
        let disc = mini_disc(6);
        let mut u_star = vec![0.0; disc.uspace.n_dofs];
        let mut p_star = vec![0.0; disc.pspace.n_dofs];
        for (v, &[x, y]) in disc.mesh.verts.iter().enumerate() {
            u_star[2 * v] = x * (1.0 - x) * y * (1.0 - y);
            u_star[2 * v + 1] = (x * y * (1.0 - y)).sin() * (1.0 - x);
            p_star[v] = x * (1.0 - x) * (y - 0.3) * (1.0 - y) * y;
        }
        zero_constrained(&mut u_star, &disc.uspace.dirichlet);
        zero_constrained(&mut p_star, &disc.pspace.dirichlet);
        // f = A u* - G^T p*, g = G u* (dof-level identities).
        let mut f = disc.a.spmv(&u_star);
        let gt_p = disc.g.spmv_transpose(&p_star);
        for i in 0..f.len() {
            f[i] -= gt_p[i];
        }
        let g = disc.g.spmv(&u_star);
        struct Fixed {
            f: Vec<f64>,
            g: Vec<f64>,
        }
        impl Problem for Fixed {
            fn exact_u(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
                [0.0, 0.0]
            }
            fn exact_p(&self, _: f64, _: f64, _: f64) -> f64 {
                0.0
            }
            fn f_load(&self, _: &Discretization, _: f64) -> Result<Vec<f64>, Error> {
                Ok(self.f.clone())
            }
            fn g_load(&self, _: &Discretization, _: f64) -> Result<Vec<f64>, Error> {
                Ok(self.g.clone())
            }
        }
        let problem = Fixed { f, g };
        let mut cfg = SchemeConfig::new(SchemeKind::Monolithic);
        cfg.inner_tol = 1e-12;
        cfg.inner_max = 5000;
        let s = initial_state(&disc, &problem, InitMode::SaddleSolve, 0.0, &cfg).unwrap();
        let du: f64 = s
            .u
            .iter()
            .zip(&u_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let dp: f64 = s
            .p
            .iter()
            .zip(&p_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(du < 1e-9 && dp < 1e-8, "du = {du:.3e}, dp = {dp:.3e}");
    }

    #[test]
    fn zero_data_stays_exactly_zero_for_all_schemes() {
        for (element, kind) in [
            (ElementPair::Mini, SchemeKind::Monolithic),
            (ElementPair::Mini, SchemeKind::ExplicitNaive),
            (ElementPair::Mini, SchemeKind::ExplicitFixedStress),
            (ElementPair::P1P1, SchemeKind::ExplicitStabilizedP1P1),
        ] {
            let disc = Discretization::new(
                RectMesh::unit(4, 4).unwrap(),
                element,
                test_params(),
                DirichletMode::Full,
            )
            .unwrap();
            let cfg = SchemeConfig::new(kind);
            let opts = RunOptions {
                tau: 0.1,
                n_steps: 5,
                t0: 0.0,
                init: InitMode::Interpolate,
                keep_all: true,
            };
            let result = run_simulation(&disc, &ZeroProblem, &cfg, &opts).unwrap();
            for s in result.states.unwrap() {
                assert!(s.u.iter().all(|&v| v == 0.0), "{kind:?}");
                assert!(s.p.iter().all(|&v| v == 0.0), "{kind:?}");
            }
        }
    }

    #[test]
    fn naive_equals_fixed_stress_with_zero_omega_bitwise() {
        let disc = mini_disc(8);
        let problem = Manufactured::new(test_params());
        let opts = RunOptions {
            tau: 0.1,
            n_steps: 10,
            t0: 0.0,
            init: InitMode::Interpolate,
            keep_all: false,
        };
        let naive = run_simulation(
            &disc,
            &problem,
            &SchemeConfig::new(SchemeKind::ExplicitNaive),
            &opts,
        )
        .unwrap();
        let mut cfg_fs = SchemeConfig::new(SchemeKind::ExplicitFixedStress);
        cfg_fs.omega = 0.0;
        let fs = run_simulation(&disc, &problem, &cfg_fs, &opts).unwrap();
        for (a, b) in naive.final_state.p.iter().zip(&fs.final_state.p) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in naive.final_state.u.iter().zip(&fs.final_state.u) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn single_step_run_is_the_coupled_first_step() {
        let disc = mini_disc(8);
        let problem = Manufactured::new(test_params());
        let cfg = SchemeConfig::new(SchemeKind::ExplicitFixedStress);
        let opts = RunOptions {
            tau: 0.1,
            n_steps: 1,
            t0: 0.0,
            init: InitMode::Interpolate,
            keep_all: false,
        };
        let r = run_simulation(&disc, &problem, &cfg, &opts).unwrap();
        assert!((r.final_state.t - 0.1).abs() < 1e-15);
        assert_eq!(r.first_step_inner, r.total_inner);
        assert!(r.first_step_inner > 1);
        // The first step is scheme independent (all schemes share it).
        let r2 = run_simulation(
            &disc,
            &problem,
            &SchemeConfig::new(SchemeKind::Monolithic),
            &opts,
        )
        .unwrap();
        for (a, b) in r.final_state.p.iter().zip(&r2.final_state.p) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn coupled_step_is_invariant_to_the_inner_starting_guess() {
        let disc = mini_disc(8);
        let problem = Manufactured::new(test_params());
        let mut cfg = SchemeConfig::new(SchemeKind::Monolithic);
        cfg.inner_tol = 1e-12;
        let tau = 0.1;
        let mats = build_run_matrices(&disc, &cfg, tau).unwrap();
        let s0 = initial_state(&disc, &problem, InitMode::Interpolate, 0.0, &cfg).unwrap();
        let f1 = problem.f_load(&disc, tau).unwrap();
        let g1 = problem.g_load(&disc, tau).unwrap();
        let (warm, _) = coupled_be_step(&disc, &mats, &s0, tau, &f1, &g1, &cfg, None).unwrap();
        let cold_guess = State {
            u: vec![0.0; disc.uspace.n_dofs],
            p: vec![0.0; disc.pspace.n_dofs],
            t: 0.0,
        };
        let (cold, _) =
            coupled_be_step(&disc, &mats, &s0, tau, &f1, &g1, &cfg, Some(&cold_guess)).unwrap();
        let dp = warm
            .p
            .iter()
            .zip(&cold.p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let du = warm
            .u
            .iter()
            .zip(&cold.u)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(dp < 10.0 * cfg.inner_tol, "pressure guess dependence {dp:e}");
        assert!(du < 10.0 * cfg.inner_tol, "displacement guess dependence {du:e}");
    }

    #[test]
    fn first_step_pressure_accuracy_is_first_order() {
        // Frozen reference: at h = 1/40, tau = 1/10, the coupled first step
        // of the manufactured problem has an L2 pressure error of about
        // 3.47e-4; a loose bracket guards against regressions in the first
        // time level without pinning rounding details.
        let disc = Discretization::new(
            RectMesh::unit(40, 40).unwrap(),
            ElementPair::Mini,
            test_params(),
            DirichletMode::Full,
        )
        .unwrap();
        let problem = Manufactured::new(test_params());
        let cfg = SchemeConfig::new(SchemeKind::Monolithic);
        let opts = RunOptions {
            tau: 0.1,
            n_steps: 1,
            t0: 0.0,
            init: InitMode::Interpolate,
            keep_all: false,
        };
        let r = run_simulation(&disc, &problem, &cfg, &opts).unwrap();
        let err = crate::analytic::pressure_l2_error(
            &disc.mesh,
            &disc.pspace,
            &r.final_state.p,
            &|x, y| problem.pressure(x, y, 0.1),
            5,
        )
        .unwrap();
        assert!(
            (1e-4..1.5e-3).contains(&err),
            "first-step pressure error {err:.6e} outside the frozen bracket"
        );
    }

    #[test]
    fn monolithic_energy_decays_without_forcing() {
        // With zero loads, the coupled backward Euler iteration dissipates
        // the energy E = (u^T A u + c0 p^T M p) / 2 monotonically.
        let disc = mini_disc(8);
        struct DecayProblem;
        impl Problem for DecayProblem {
            fn exact_u(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
                [0.0, 0.0]
            }
            fn exact_p(&self, x: f64, y: f64, _: f64) -> f64 {
                // Any smooth hump supported inside the domain.
                x * (1.0 - x) * y * (1.0 - y) * (1.0 + (3.0 * x - y).sin())
            }
            fn f_load(&self, disc: &Discretization, _: f64) -> Result<Vec<f64>, Error> {
                Ok(vec![0.0; disc.uspace.n_dofs])
            }
            fn g_load(&self, disc: &Discretization, _: f64) -> Result<Vec<f64>, Error> {
                Ok(vec![0.0; disc.pspace.n_dofs])
            }
        }
        let mut cfg = SchemeConfig::new(SchemeKind::Monolithic);
        cfg.inner_tol = 1e-12;
        let opts = RunOptions {
            tau: 0.05,
            n_steps: 10,
            t0: 0.0,
            init: InitMode::Interpolate,
            keep_all: true,
        };
        let r = run_simulation(&disc, &DecayProblem, &cfg, &opts).unwrap();
        let states = r.states.unwrap();
        let energy = |s: &State| {
            0.5 * (disc.a.quadratic_form(&s.u, &s.u)
                + disc.params.c0 * disc.m.quadratic_form(&s.p, &s.p))
        };
        let e0 = energy(&states[0]);
        assert!(e0 > 0.0);
        let mut prev = f64::INFINITY;
        for s in &states {
            let e = energy(s);
            assert!(e <= prev + 1e-12 * e0, "energy grew: {e} after {prev}");
            prev = e;
        }
        assert!(prev < 0.05 * e0, "energy barely decayed: {prev} vs {e0}");
    }

    #[test]
    fn naive_scheme_blows_up_at_small_steps_without_storage() {
        // With c0 = 0 the explicit scheme without stabilization violates its
        // stability condition; at tau = 1e-4 the blow-up reaches overflow
        // within about 200 steps and must surface as an instability error.
        let mut params = test_params();
        params.c0 = 0.0;
        let disc = Discretization::new(
            RectMesh::unit(16, 16).unwrap(),
            ElementPair::Mini,
            params,
            DirichletMode::Full,
        )
        .unwrap();
        let problem = Manufactured::new(params);
        let mut cfg = SchemeConfig::new(SchemeKind::ExplicitNaive);
        // The coupled first step converges slowly in this regime (the
        // contraction rate degrades as tau -> 0 with c0 = 0); give it room.
        cfg.inner_max = 1000;
        let opts = RunOptions {
            tau: 1e-4,
            n_steps: 250,
            t0: 0.0,
            init: InitMode::Interpolate,
            keep_all: false,
        };
        match run_simulation(&disc, &problem, &cfg, &opts) {
            Err(Error::Instability { step }) => {
                assert!(step > 2, "blow-up reported at step {step}");
            }
            Ok(_) => panic!("expected the naive scheme to blow up"),
            Err(e) => panic!("expected an instability error, got {e:?}"),
        }
    }

    #[test]
    fn naive_scheme_is_stable_with_large_storage() {
        let mut params = test_params();
        params.c0 = 1.0; // comfortably above alpha^2 / (lambda + mu)
        let disc = Discretization::new(
            RectMesh::unit(8, 8).unwrap(),
            ElementPair::Mini,
            params,
            DirichletMode::Full,
        )
        .unwrap();
        let problem = Manufactured::new(params);
        let cfg = SchemeConfig::new(SchemeKind::ExplicitNaive);
        let opts = RunOptions {
            tau: 0.05,
            n_steps: 20,
            t0: 0.0,
            init: InitMode::Interpolate,
            keep_all: false,
        };
        let r = run_simulation(&disc, &problem, &cfg, &opts).unwrap();
        let peak = r.final_state.p.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(peak < 1.0, "pressure peak {peak}");
    }

    #[test]
    fn stabilized_scheme_requires_equal_order_elements() {
        let disc = mini_disc(4);
        let problem = Manufactured::new(test_params());
        let cfg = SchemeConfig::new(SchemeKind::ExplicitStabilizedP1P1);
        let opts = RunOptions {
            tau: 0.1,
            n_steps: 2,
            t0: 0.0,
            init: InitMode::Interpolate,
            keep_all: false,
        };
        assert!(matches!(
            run_simulation(&disc, &problem, &cfg, &opts),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn dirichlet_dofs_stay_exactly_zero_through_a_run() {
        let disc = mini_disc(8);
        let problem = Manufactured::new(test_params());
        let cfg = SchemeConfig::new(SchemeKind::ExplicitFixedStress);
        let opts = RunOptions {
            tau: 0.1,
            n_steps: 6,
            t0: 0.0,
            init: InitMode::Interpolate,
            keep_all: true,
        };
        let r = run_simulation(&disc, &problem, &cfg, &opts).unwrap();
        for s in r.states.unwrap() {
            for &d in &disc.pspace.dirichlet_dofs {
                assert_eq!(s.p[d], 0.0);
            }
            for &d in &disc.uspace.dirichlet_dofs {
                assert_eq!(s.u[d], 0.0);
            }
        }
    }
}
