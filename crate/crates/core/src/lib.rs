//! Spectral solvers for the Klein-Gordon and sine-Gordon equations with a
//! point (Dirac delta) potential, stochastic Galerkin polynomial-chaos
//! systems in the uncertain parameter, and the estimators that turn those
//! runs into critical parameter values.
//!
//! Module map:
//!
//! * [`orthopoly`]: Legendre / probabilists' Hermite evaluation, Gauss rules
//!   and the closed-form integrals used by the Galerkin couplings.
//! * [`spectral1d`]: Chebyshev Gauss-Lobatto grid, differentiation matrix,
//!   consistent delta vector, exponential filter, leapfrog update.
//! * [`kleingordon`]: deterministic Klein-Gordon solver with the
//!   self-interacting delta potential, analytic oracles, discrete critical
//!   strength.
//! * [`gpc_kg`]: Legendre-chaos Galerkin system for the potential strength,
//!   mean estimators, locus-intersection critical value.
//! * [`sinegordon`]: deterministic sine-Gordon kink / impurity solver,
//!   pass-or-trap classification and bisection.
//! * [`gpc_sg`]: Legendre and Hermite chaos for the kink velocity and
//!   Legendre chaos for the impurity amplitude.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod gpc_kg;
pub mod gpc_sg;
pub mod kleingordon;
pub mod orthopoly;
pub mod sinegordon;
pub mod spectral1d;

pub use error::{Error, Result};
pub use estimate::CriticalEstimate;
