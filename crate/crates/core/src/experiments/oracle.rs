//! Finite-difference and dense cross-checks of the objective derivatives on
//! random bar instances.

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fem::{uniform_body_load, BoundaryTag, MaterialField};
use crate::linalg::norm2;
use crate::measurement::{random_points_1d, sample_field, MeasurementSet};
use crate::objective::{evaluate, gradient, hessian_quadratic, hessian_sign_revealing};
use crate::problem::Problem;

use super::bar::unit_bar;

/// Relative steps scanned by the difference checks; the best one is kept.
pub const RELATIVE_STEPS: [f64; 6] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5];

#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub seed: u64,
    pub problem: Problem,
    pub material: MaterialField,
    pub kappa: f64,
    /// relative perturbation pattern, entries in `[-1, 1]`
    pub pattern: Vec<f64>,
}

impl OracleInstance {
    /// Absolute parameter direction `p_e * pattern_e`.
    pub fn direction(&self) -> Vec<f64> {
        self.material.params().iter().zip(&self.pattern).map(|(p, d)| p * d).collect()
    }

    fn value_at(&self, t: f64, direction: &[f64]) -> Result<f64> {
        let params = self.material.params().iter().zip(direction).map(|(p, d)| p + t * d).collect();
        Ok(evaluate(&self.problem, &self.material.with_params(params)?, self.kappa)?.value)
    }
}

/// Seeded bar with random moduli, frequency, kappa, data points and end
/// condition on the right (fixed, traction-free or unspecified).
pub fn oracle_instance(seed: u64, n: usize) -> Result<OracleInstance> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let right = [BoundaryTag::Dirichlet, BoundaryTag::Neumann, BoundaryTag::FreeUnknown][rng.gen_range(0..3)];
    let exec = Execution::Sequential;
    let (disc, _) = unit_bar(n, BoundaryTag::Dirichlet, right, exec)?;
    let (full, _) = unit_bar(n, BoundaryTag::Dirichlet, BoundaryTag::Neumann, exec)?;
    let omega = rng.gen_range(0.5..4.0);
    let load = uniform_body_load(&disc, &[1.0])?;
    let truth = MaterialField::young((0..n).map(|_| rng.gen_range(0.8..1.2)).collect(), vec![1.0; n])?;
    let um = Problem::new(full, omega, load.clone())?.forward(&truth)?.u;
    let pts = random_points_1d(seed, n + 3, 0.0, 1.0);
    let mut values = sample_field(disc.mesh(), &um, &pts).map_err(|p| Error::InvalidArgument(format!("{p:?}")))?;
    for v in values.iter_mut() {
        *v *= 1.0 + 0.05 * rng.gen_range(-1.0..1.0);
    }
    let problem = Problem::new(disc, omega, load)?
        .with_execution(exec)
        .with_measurements(&MeasurementSet::pointwise(pts, values))?;
    let material = MaterialField::young((0..n).map(|_| rng.gen_range(0.5..2.0)).collect(), vec![1.0; n])?;
    let kappa = 10f64.powf(rng.gen_range(-1.0..2.0));
    let pattern = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Ok(OracleInstance { seed, problem, material, kappa, pattern })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleErrors {
    /// `||g - g_fd|| / ||g||` at the best step
    pub gradient: f64,
    /// relative gap of the Hessian form to fourth-order second differences
    pub hessian_fd: f64,
    /// relative gap of the Hessian form to its dense sign-revealing split
    pub sign_revealing: f64,
    pub hessian: f64,
}

pub fn oracle_errors(inst: &OracleInstance) -> Result<OracleErrors> {
    let p = inst.material.params();
    let n = p.len();
    let g = gradient(&inst.problem, &inst.material, inst.kappa)?;
    let mut gradient_err = f64::INFINITY;
    for &t in &RELATIVE_STEPS {
        let mut diff = 0.0;
        for e in 0..n {
            let mut dir = vec![0.0; n];
            dir[e] = p[e];
            let fd = (inst.value_at(t, &dir)? - inst.value_at(-t, &dir)?) / (2.0 * t * p[e]);
            diff += (fd - g[e]).powi(2);
        }
        gradient_err = gradient_err.min(diff.sqrt() / norm2(&g));
    }

    let dir = inst.direction();
    let state = inst.problem.solve(&inst.material, inst.kappa)?;
    let hessian = hessian_quadratic(&inst.problem, &inst.material, &state, &dir)?;
    let f0 = inst.value_at(0.0, &dir)?;
    let mut hessian_fd = f64::INFINITY;
    for &t in &RELATIVE_STEPS {
        let f = |s: f64| inst.value_at(s * t, &dir);
        let fd = (-f(2.0)? + 16.0 * f(1.0)? - 30.0 * f0 + 16.0 * f(-1.0)? - f(-2.0)?) / (12.0 * t * t);
        hessian_fd = hessian_fd.min((fd - hessian).abs() / hessian.abs());
    }
    let split = hessian_sign_revealing(&inst.problem, &inst.material, &state, &dir)?;
    let sign_revealing = (split.total - hessian).abs() / hessian.abs();
    Ok(OracleErrors { gradient: gradient_err, hessian_fd, sign_revealing, hessian })
}
