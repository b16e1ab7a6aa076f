//! Modified error in constitutive equations (MECE) for frequency-domain
//! elastography: finite elements, the coupled stationarity system, the
//! objective with its derivatives, analysis tools and inversion.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod coupled;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod fem;
pub mod inversion;
pub mod linalg;
pub mod measurement;
pub mod objective;
pub mod params;
pub mod problem;

pub use error::{Error, Result};
pub use exec::Execution;

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
