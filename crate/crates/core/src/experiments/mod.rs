//! Ready-made setups for the bar and plate studies, shared by the command
//! line, the acceptance checks and the benchmarks.

mod bar;
mod oracle;
mod plate;

pub use bar::{
    convergence_study, discrete_eigenvalues, hessian_positivity, infsup_study, large_kappa_bar, manufactured_bar,
    relative_l2_error, resonance_check, small_kappa_bar, two_zone_bar, unit_bar, BarInstance, ConvergenceRow,
    InfSupSetup, InfSupStudy, Manufactured, PointSet, ResonanceCheck, TwoZoneBar,
};
pub use oracle::{oracle_errors, oracle_instance, OracleErrors, OracleInstance, RELATIVE_STEPS};
pub use plate::{inclusion_experiment, summarize_inclusion, InclusionExperiment, InclusionSpec, InclusionSummary};
