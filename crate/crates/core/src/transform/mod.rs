//! Transforms and grid computations for the busy period and busy cycle.

pub mod grid;
pub mod laplace;
pub mod series;

pub use grid::{grid_convolve, GridFunction, GridKind, GridSpec};
pub use laplace::{
    busy_cycle_laplace, busy_period_laplace, busy_period_laplace_closed_form,
    busy_period_laplace_from_service, busy_period_laplace_general, grid_cdf_laplace,
    mean_from_transform, LaplacePoint,
};
pub use series::{
    busy_cycle_cdf_series, busy_period_cdf_series, series_truncation_order, SeriesResult,
    MAX_STEP_PRODUCT, TERM_BUDGET,
};
