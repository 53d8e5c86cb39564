//! modalnf: symbolic-numeric normal forms for non-autonomous modal ODE systems.
//!
//! Given a finite spectral truncation `x' = A x + f(t, x)` with diagonal `A`
//! and polynomial modal nonlinearity `f`, the engine constructs, order by
//! order, a near-identity coordinate transform `xi_p` and a separated
//! normal-form nonlinearity `F_p` such that transformed solutions satisfy the
//! original system up to a residual vanishing to order `p`. A numerical lab
//! then verifies the conjugacy identity, the residual's scaling order,
//! subspace invariance, and the exponential decay/growth bounds that define
//! the system's centre, stable and unstable invariant subsets.
//!
//! All symbolic coefficients are exact complex rationals; floating point
//! enters only when series are evaluated along trajectories.

pub mod algebra;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod io;
pub mod model;
pub mod problem;

#[cfg(test)]
pub(crate) mod testsupport;

pub use error::{Error, Result};
