//! Finite element core for quasi-static two-field Biot poroelasticity on
//! rectangular domains.
//!
//! The crate discretizes the coupled system
//!
//! ```text
//!   -div( 2 mu eps(u) + lambda (div u) I ) + alpha grad p = f
//!   c0 dp/dt + alpha d(div u)/dt - div( k grad p )        = g
//! ```
//!
//! with MINI or equal-order P1-P1 elements on structured triangulations, and
//! advances it in time either monolithically (backward Euler, solved by a
//! fixed-stress inner iteration) or by explicit decoupled steps that lag the
//! coupling term and stabilize the pressure equation.
//!
//! Modules:
//!
//! - [`mesh`]: structured triangulations of a rectangle, point location,
//!   edge enumeration.
//! - [`fespace`]: degrees of freedom, basis evaluation, triangle quadrature.
//! - [`assembly`]: CSR matrices and the bilinear forms of the Biot system.
//! - [`linsolve`]: preconditioned conjugate gradients.
//! - [`schemes`]: time steppers (monolithic and the explicit splittings).
//! - [`analytic`]: closed-form solutions, source terms, and error norms.
//!
//! The crate is `no_std` (with `alloc`); the default `std` feature only adds
//! `std::error::Error` for [`Error`].

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analytic;
pub mod assembly;
pub mod fespace;
pub(crate) mod fmath;
pub mod linsolve;
pub mod mesh;
pub mod schemes;

/// Crate-wide error type.
///
/// Everything that can fail at run time funnels through this enum; the
/// binary maps variants onto process exit codes (config problems are caught
/// before this layer).
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor or routine received an argument outside its domain.
    InvalidArgument(&'static str),
    /// A point lies outside the meshed rectangle.
    OutOfDomain { x: f64, y: f64 },
    /// No quadrature rule of the requested degree is available.
    UnsupportedDegree(usize),
    /// An iterative solver stopped without reaching its tolerance.
    SolverFailure {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    /// A computed quantity became NaN or infinite outside of time stepping.
    NonFinite(&'static str),
    /// A time step produced non-finite state, i.e. the scheme blew up.
    Instability { step: usize },
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
            Error::OutOfDomain { x, y } => {
                write!(f, "point ({x}, {y}) lies outside the meshed rectangle")
            }
            Error::UnsupportedDegree(d) => {
                write!(f, "no quadrature rule of degree {d} (supported: 1..=6)")
            }
            Error::SolverFailure {
                what,
                iterations,
                residual,
            } => write!(
                f,
                "{what} failed to converge: {iterations} iterations, final relative residual {residual:e}"
            ),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::Instability { step } => {
                write!(f, "time step {step} produced non-finite state (scheme instability)")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
