//! Inf-sup estimation, kappa asymptotics and objective landscapes.

mod asymptotics;
mod infsup;
mod landscape;

pub use asymptotics::{
    kappa_sweep, large_kappa_limit, log_grid, loglog_slope, omega_norm, small_kappa_limit, trimmed_loglog_slope,
    AsymptoticsReport, LimitFields, Regime, DENSE_LIMIT_LARGE_KAPPA,
};
pub use infsup::{
    complete_bc_lower_bound, frequency_grid, infsup_constant, infsup_dense, infsup_iterative, infsup_sweep,
    InfSupReport, DENSE_INFSUP_LIMIT, EIGEN_TOLERANCE,
};
pub use landscape::{grid_metrics, landscape_scan, linear_grid, ConvexityMetrics, Landscape, LandscapeCell};
