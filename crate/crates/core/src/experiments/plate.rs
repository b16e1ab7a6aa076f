//! Plane-strain plate with a stiff circular inclusion: synthetic interior
//! data from a fine forward solve and reconstruction on an interior window
//! whose boundary conditions are all unknown.

use crate::error::Result;
use crate::exec::Execution;
use crate::fem::{traction_load, BoundaryTag, Discretization, MaterialField, Mesh, Side};
use crate::inversion::{synthesize_experiment, InversionConfig, Scaling, Synthesis, SynthesisSpec};
use crate::measurement::Flavor;
use crate::params::ParameterMap;
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionSpec {
    /// side of the square body
    pub length: f64,
    /// lower-left corner and side of the measured window
    pub window_origin: f64,
    pub window_size: f64,
    pub inversion_cells: usize,
    pub synthesis_cells: usize,
    pub centre: [f64; 2],
    pub radius: f64,
    /// `(bulk, shear)`
    pub background: [f64; 2],
    pub inclusion: [f64; 2],
    pub density: f64,
    pub frequency_hz: f64,
    /// downward pressure on the top side
    pub pressure: f64,
    /// initial guess as a multiple of the background moduli
    pub initial_factor: f64,
    pub bounds: (f64, f64),
    pub kappa: f64,
    pub max_iterations: usize,
    pub allow_inverse_crime: bool,
}

impl Default for InclusionSpec {
    fn default() -> Self {
        InclusionSpec {
            length: 0.1,
            window_origin: 0.015,
            window_size: 0.07,
            inversion_cells: 23,
            synthesis_cells: 100,
            centre: [0.05, 0.05],
            radius: 0.015,
            background: [8.0e3, 1.5e3],
            inclusion: [20.0e3, 4.0e3],
            density: 1000.0,
            frequency_hz: 10.0,
            pressure: 1.0e3,
            initial_factor: 1.25,
            bounds: (100.0, 1.0e6),
            kappa: 1.0e6,
            max_iterations: 400,
            allow_inverse_crime: false,
        }
    }
}

impl InclusionSpec {
    fn inside(&self, x: [f64; 2]) -> bool {
        let (dx, dy) = (x[0] - self.centre[0], x[1] - self.centre[1]);
        dx * dx + dy * dy <= self.radius * self.radius
    }

    /// True moduli by element centroid on `mesh`.
    pub fn truth(&self, mesh: &Mesh) -> Result<MaterialField> {
        let (bulk, shear): (Vec<f64>, Vec<f64>) = (0..mesh.n_elements())
            .map(|e| {
                let m = if self.inside(mesh.centroid(e)) { self.inclusion } else { self.background };
                (m[0], m[1])
            })
            .unzip();
        MaterialField::bulk_shear(&bulk, &shear, vec![self.density; mesh.n_elements()])
    }

    pub fn inversion_config(&self, n_params: usize) -> InversionConfig {
        let mut cfg = InversionConfig::uniform_bounds(self.kappa, n_params, self.bounds.0, self.bounds.1);
        cfg.max_iterations = self.max_iterations;
        cfg.scaling = Scaling::Log;
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct InclusionExperiment {
    pub spec: InclusionSpec,
    /// window problem with all sides unknown and H1 data over every element
    pub problem: Problem,
    /// per-element bulk and shear, starting from the scaled background
    pub map: ParameterMap,
    pub synthesis: Synthesis,
    /// window elements with every node inside the inclusion
    pub inclusion_elements: Vec<usize>,
    /// window elements with every node outside the inclusion
    pub background_elements: Vec<usize>,
}

pub fn inclusion_experiment(spec: &InclusionSpec, exec: Execution) -> Result<InclusionExperiment> {
    let l = spec.length;
    let fine_mesh = Mesh::rectangle(spec.synthesis_cells, spec.synthesis_cells, [0.0, 0.0], [l, l])?
        .with_side(Side::Bottom, BoundaryTag::Dirichlet)?
        .with_side(Side::Left, BoundaryTag::Neumann)?
        .with_side(Side::Right, BoundaryTag::Neumann)?
        .with_side(Side::Top, BoundaryTag::Neumann)?;
    let top = fine_mesh.side_facets(Side::Top);
    let load = traction_load(&fine_mesh, &top, &[0.0, -spec.pressure])?;
    let truth = spec.truth(&fine_mesh)?;
    let omega = 2.0 * std::f64::consts::PI * spec.frequency_hz;
    let forward = Problem::new(Discretization::new(fine_mesh, exec), omega, load)?.with_execution(exec);

    let o = spec.window_origin;
    let n = spec.inversion_cells;
    let window = Mesh::rectangle(n, n, [o, o], [spec.window_size, spec.window_size])?;
    let all: Vec<usize> = (0..window.n_elements()).collect();
    let synthesis = synthesize_experiment(&SynthesisSpec {
        forward: &forward,
        truth: &truth,
        target: &window,
        region: all.clone(),
        flavor: Flavor::H1Region,
        length_scale: Some(spec.window_size),
        allow_inverse_crime: spec.allow_inverse_crime,
    })?;
    let (mut inclusion_elements, mut background_elements) = (Vec::new(), Vec::new());
    for e in all {
        let nodes = window.element(e);
        if nodes.iter().all(|&v| spec.inside(window.node(v))) {
            inclusion_elements.push(e);
        } else if nodes.iter().all(|&v| !spec.inside(window.node(v))) {
            background_elements.push(e);
        }
    }
    let ne = window.n_elements();
    let f = spec.initial_factor;
    let base = MaterialField::uniform_bulk_shear(ne, f * spec.background[0], f * spec.background[1], spec.density)?;
    let disc = Discretization::new(window, exec);
    let zero = vec![0.0; disc.n_dofs()];
    let problem = Problem::new(disc, omega, zero)?.with_execution(exec).with_measurements(&synthesis.measurements)?;
    Ok(InclusionExperiment {
        spec: spec.clone(),
        problem,
        map: ParameterMap::per_element(base),
        synthesis,
        inclusion_elements,
        background_elements,
    })
}

/// Mean recovered moduli per region and their errors against the targets.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionSummary {
    pub background: [f64; 2],
    pub inclusion: [f64; 2],
    /// relative errors of the four means, `(bulk, shear)` background then inclusion
    pub mean_errors: [f64; 4],
    /// relative errors of the inclusion/background ratio, `(bulk, shear)`
    pub contrast_errors: [f64; 2],
}

impl InclusionSummary {
    pub fn within(&self, mean_tolerance: f64, contrast_tolerance: f64) -> bool {
        self.mean_errors.iter().all(|e| *e <= mean_tolerance)
            && self.contrast_errors.iter().all(|e| *e <= contrast_tolerance)
    }
}

pub fn summarize_inclusion(exp: &InclusionExperiment, recovered: &MaterialField) -> InclusionSummary {
    let mean = |elements: &[usize], k: usize| {
        elements.iter().map(|&e| recovered.param(e, k)).sum::<f64>() / elements.len() as f64
    };
    let background = [mean(&exp.background_elements, 0), mean(&exp.background_elements, 1)];
    let inclusion = [mean(&exp.inclusion_elements, 0), mean(&exp.inclusion_elements, 1)];
    let s = &exp.spec;
    let rel = |got: f64, want: f64| (got - want).abs() / want;
    InclusionSummary {
        background,
        inclusion,
        mean_errors: [
            rel(background[0], s.background[0]),
            rel(background[1], s.background[1]),
            rel(inclusion[0], s.inclusion[0]),
            rel(inclusion[1], s.inclusion[1]),
        ],
        contrast_errors: [
            rel(inclusion[0] / background[0], s.inclusion[0] / s.background[0]),
            rel(inclusion[1] / background[1], s.inclusion[1] / s.background[1]),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_setup_classifies_elements_and_refuses_the_crime() {
        let spec = InclusionSpec { inversion_cells: 7, synthesis_cells: 32, ..InclusionSpec::default() };
        let exp = inclusion_experiment(&spec, Execution::Sequential).unwrap();
        assert!(!exp.inclusion_elements.is_empty() && !exp.background_elements.is_empty());
        assert!(exp.synthesis.refinement >= 3.0);
        let summary = summarize_inclusion(&exp, &spec.truth(exp.problem.disc().mesh()).unwrap());
        assert!(summary.within(1e-12, 1e-12), "{summary:?}");

        let crime = InclusionSpec { synthesis_cells: 10, ..spec };
        assert!(inclusion_experiment(&crime, Execution::Sequential).is_err());
    }
}
