//! Spectral simulation and verification of time-decay estimates for
//! dissipative equations in (a periodic approximation of) three-dimensional
//! whole space.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: periodic-box Fourier fields, multipliers `Λ^s`, norms.
//! * [`quadrature`]: adaptive Gauss–Kronrod integration used by the oracles.
//! * [`continuum`]: exact radial-quadrature norms of the heat and linearized
//!   compressible Navier–Stokes semigroups on `ℝ³`.
//! * [`fit`]: power-law exponent fits and verdicts.
//! * [`heat`]: heat-equation decay experiments.
//! * [`cns`]: pseudospectral integrator for the compressible Navier–Stokes
//!   perturbation system with energy-functional monitoring.
//! * [`kinetic`]: Maxwellian, macro–micro projection and collision frequency
//!   on a discrete velocity grid.
//! * [`inequality`]: randomized checks of the interpolation toolbox.

pub mod cns;
pub mod continuum;
pub mod error;
pub mod fit;
pub mod heat;
pub mod inequality;
pub mod kinetic;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
