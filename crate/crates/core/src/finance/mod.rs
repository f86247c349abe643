//! Returns data, copulas over simplex bands, and the diagonal-band indicators.

mod copula;
mod data;
mod rolling;
pub mod synthetic;

pub use copula::{
    build_copula, build_copula_with, diagonal_band_indicator, ellipsoid_levels, hyperplane_levels,
    AxisKind, BandIndicator, CopulaAxis, CopulaGrid, CopulaMethod, LEVEL_TOL,
};
pub use data::{
    compound_returns, shrink_covariance, shrink_covariance_rows, ReturnsMatrix, MIN_SHRINKAGE,
};
pub use rolling::{
    copula_sampler, detect_persistent_periods, momentum_axes, momentum_pipeline, rolling_indicator,
    volatility_axes, write_warnings_csv, IndicatorSeries, RollingConfig, WarningPeriod,
};
