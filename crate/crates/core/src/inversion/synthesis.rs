//! Synthetic measurements from a fine-mesh forward solve.

use crate::error::{Error, Result};
use crate::fem::{MaterialField, Mesh};
use crate::measurement::{interpolate_data, Flavor, MeasurementSet};
use crate::problem::Problem;

/// Smallest ratio of inversion to synthesis element size accepted without the
/// inverse-crime flag.
pub const MIN_REFINEMENT: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct SynthesisSpec<'a> {
    /// fine mesh with complete boundary conditions and the true loading
    pub forward: &'a Problem,
    pub truth: &'a MaterialField,
    /// mesh the inversion will run on
    pub target: &'a Mesh,
    /// measured elements of `target`
    pub region: Vec<usize>,
    pub flavor: Flavor,
    pub length_scale: Option<f64>,
    pub allow_inverse_crime: bool,
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub measurements: MeasurementSet,
    /// full forward field on the fine mesh
    pub fine_solution: Vec<f64>,
    /// target over fine element size
    pub refinement: f64,
    pub warnings: Vec<String>,
}

pub fn synthesize_experiment(spec: &SynthesisSpec) -> Result<Synthesis> {
    if spec.flavor == Flavor::Pointwise {
        return Err(Error::InvalidArgument("synthesis builds region measurements; use sample_field for points".into()));
    }
    let fine = spec.forward.disc().mesh();
    let refinement = spec.target.max_element_size() / fine.max_element_size();
    let mut warnings = Vec::new();
    if refinement < MIN_REFINEMENT * (1.0 - 1e-9) {
        if !spec.allow_inverse_crime {
            return Err(Error::InvalidArgument(format!(
                "synthesis mesh is only {refinement:.3}x finer than the inversion mesh (need {MIN_REFINEMENT}); \
                 refine it or allow the inverse crime explicitly"
            )));
        }
        warnings.push(format!("inverse crime: synthesis mesh only {refinement:.3}x finer than the inversion mesh"));
    }
    let fwd = spec.forward.forward(spec.truth)?;
    if fwd.near_singular {
        let hz = spec.forward.omega() / (2.0 * std::f64::consts::PI);
        return Err(Error::Assumption(format!(
            "forward operator is near-resonant at {hz} Hz (rcond {:e}); move the frequency away from an eigenfrequency",
            fwd.rcond
        )));
    }
    let values = interpolate_data(fine, &fwd.u, spec.target)?;
    let mut measurements = MeasurementSet::region(spec.flavor, spec.region.clone(), values);
    measurements.length_scale = spec.length_scale;
    measurements.validate(spec.target)?;
    Ok(Synthesis { measurements, fine_solution: fwd.u, refinement, warnings })
}
