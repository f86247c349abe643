//! Exact volumes: the single-cut fraction and Lawrence's sign decomposition.

mod lawrence;
pub mod rational;
mod varsi;

pub use lawrence::{
    enumerate_vertices, lawrence_volume, Active, Backend, ExactVolume, Family, LawrenceProblem,
    LawrenceScalar, LawrenceSum, LawrenceVertex, Plane, FLOAT_MAX_DIM,
};
pub use varsi::{band_fraction, bisect_level_for_fraction, varsi_fraction, LevelSearch};
