//! Radial solutions of the Brezis-Nirenberg problem on hyperbolic space.
//!
//! Solutions of `-Δ_B u - λu = |u|^{p-2}u` on the Poincaré ball are computed
//! by shooting in the geodesic radius, checked against integral identities
//! and energy bounds, and followed along families in `p` toward the critical
//! exponent.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod continuation;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod linear_ode;
pub mod ode;
pub mod radial_ode;
pub mod shooting;

pub use error::{Error, Result};
pub use geometry::{make_params, Params};
pub use radial_ode::{classify, integrate, Gauge, RadialProfile, ShotClass, ShotControls, ShotResult};
