//! Volumes of bodies cut out of a simplex by parallel hyperplane families and
//! concentric ellipsoids, and the portfolio copulas built from them.
//!
//! Four volume methods are provided:
//!
//! * [`exact::varsi_fraction`]: exact fraction of the unit simplex below one hyperplane.
//! * [`sampling::rejection_volume`]: uniform simplex sampling with rejection.
//! * [`exact::lawrence_volume`]: Lawrence sign decomposition for the simplex cut by up
//!   to two parallel families, in floating point or exact rational arithmetic.
//! * [`walk::volume_hnr`] / [`walk::volume_nonconvex`]: coordinate hit-and-run with a
//!   multiphase ball schedule, for bodies with ellipsoid constraints.
//!
//! Everything works in the full-dimensional unit simplex frame; [`geometry::standardize`]
//! maps an arbitrary simplex and its constraints there.

pub mod error;
pub mod estimate;
pub mod exact;
pub mod finance;
pub mod geometry;
pub mod rng;
pub mod sampling;
pub mod walk;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use estimate::{Method, VolumeEstimate};
