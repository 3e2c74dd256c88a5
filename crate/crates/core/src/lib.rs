//! Cramér-Rao lower bounds for locating a z-oriented dipole from noisy
//! observations of its radiated electric field over a square surface.
//!
//! The crate is organised bottom-up:
//!
//! - [`fieldmodel`]: dipole field phasors (vector and scalar power-flux
//!   models), spherical coordinates about the source, far-field checks.
//! - [`quadrature`]: tensor-product Gauss-Legendre integration over the
//!   observation square, with optional sinh grading toward the foot point.
//! - [`fim`]: field Jacobians, Fisher information assembly, bound extraction,
//!   and the central-perpendicular-line (CPL) integrals.
//! - [`closedform`]: closed forms, sandwich bounds and asymptotic limits for
//!   the CPL integrals.
//! - [`montecarlo`]: discretised noisy observations, maximum-likelihood
//!   estimation and empirical MSE campaigns.
//! - [`sweep`] and [`validation`]: parameter sweeps and the oracle suite used
//!   by the command-line driver.
//!
//! Coordinates live in the surface-centred frame: the surface is the plane
//! `x = 0`, `|y|, |z| <= L/2`, and the source centre sits at `(x_C, y_C, z_C)`
//! with `x_C > 0`. The source-centred frame of the model differs from this one
//! by a pure translation, so it is never materialised.

pub mod closedform;
pub mod error;
pub mod fieldmodel;
pub mod fim;
pub mod montecarlo;
pub mod quadrature;
pub mod sweep;
pub mod validation;

pub use error::{CrbError, Result};
pub use num_complex::Complex64;
