//! One-dimensional bar setups: inf-sup sweeps, manufactured convergence,
//! kappa asymptotics, two-zone landscapes and resonance.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};

use crate::analysis::{frequency_grid, infsup_constant, infsup_sweep, InfSupReport};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fem::{
    nodal_field_load, restrict, uniform_body_load, BoundaryTag, Discretization, DofMap, MaterialField, Mesh, Side,
    Space,
};
use crate::linalg::{generalized_symmetric_eigen, norm2, to_dense};
use crate::measurement::{random_points_1d, sample_field, MeasurementSet};
use crate::params::ParameterMap;
use crate::problem::Problem;

/// Unit bar with the given end conditions, unit modulus and density.
pub fn unit_bar(
    n: usize,
    left: BoundaryTag,
    right: BoundaryTag,
    exec: Execution,
) -> Result<(Discretization, MaterialField)> {
    let mesh = Mesh::bar(n, 1.0)?.with_side(Side::Left, left)?.with_side(Side::Right, right)?;
    Ok((Discretization::new(mesh, exec), MaterialField::uniform_young(n, 1.0, 1.0)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfSupSetup {
    /// mesh used for the frequency sweep
    pub elements: usize,
    pub start_hz: f64,
    pub stop_hz: f64,
    pub step_hz: f64,
    pub refine_hz: f64,
    /// successively halved element sizes
    pub refine_elements: Vec<usize>,
}

impl Default for InfSupSetup {
    fn default() -> Self {
        InfSupSetup {
            elements: 400,
            start_hz: 1.0,
            stop_hz: 20.0,
            step_hz: 0.1,
            refine_hz: 20.0,
            refine_elements: vec![100, 200, 400],
        }
    }
}

#[derive(Debug, Clone)]
pub struct InfSupStudy {
    pub sweep: Vec<InfSupReport>,
    pub refinement: Vec<InfSupReport>,
}

impl InfSupStudy {
    pub fn min_beta(&self) -> f64 {
        self.sweep.iter().map(|r| r.beta_h).fold(f64::INFINITY, f64::min)
    }

    /// `|beta_{h/2} - beta_{h/4}| < |beta_h - beta_{h/2}|` for every
    /// consecutive triple of the refinement sequence.
    pub fn is_cauchy(&self) -> bool {
        self.refinement.windows(3).all(|t| (t[1].beta_h - t[2].beta_h).abs() < (t[0].beta_h - t[1].beta_h).abs())
            && self.refinement.len() >= 3
    }
}

/// Inf-sup constants of the unit bar with a fixed left end and an unspecified
/// right end.
pub fn infsup_study(setup: &InfSupSetup, exec: Execution) -> Result<InfSupStudy> {
    let (disc, mat) = unit_bar(setup.elements, BoundaryTag::Dirichlet, BoundaryTag::FreeUnknown, exec)?;
    let freqs = frequency_grid(setup.start_hz, setup.stop_hz, setup.step_hz);
    let sweep = infsup_sweep(&disc, &mat, &freqs, exec)?;
    let omega = 2.0 * PI * setup.refine_hz;
    let refinement = exec
        .map(setup.refine_elements.len(), |i| {
            let (d, m) = unit_bar(setup.refine_elements[i], BoundaryTag::Dirichlet, BoundaryTag::FreeUnknown, exec)?;
            infsup_constant(&d, &m, omega)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(InfSupStudy { sweep, refinement })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSet {
    /// the points `k pi / omega`, on the zeros of the exact solution
    Nodal,
    /// seeded uniform points, two more than the mode number
    Random { seed: u64 },
}

/// Bar with both ends fixed whose coupled solution tends to
/// `(u, w) = (sin(omega x), sin(omega x))` at `omega = mode * pi`.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub problem: Problem,
    pub material: MaterialField,
    pub omega: f64,
}

impl Manufactured {
    pub fn exact(&self, x: f64) -> f64 {
        (self.omega * x).sin()
    }
}

pub fn manufactured_bar(n: usize, mode: usize, points: PointSet, exec: Execution) -> Result<Manufactured> {
    if mode == 0 {
        return Err(Error::InvalidArgument("mode must be at least 1".into()));
    }
    let omega = mode as f64 * PI;
    let (disc, material) = unit_bar(n, BoundaryTag::Dirichlet, BoundaryTag::Dirichlet, exec)?;
    let field: Vec<f64> = disc.mesh().coords().iter().map(|c| omega * omega * (omega * c[0]).sin()).collect();
    let load = nodal_field_load(&disc, &field)?;
    let pts: Vec<[f64; 2]> = match points {
        PointSet::Nodal => (1..=mode).map(|k| [k as f64 * PI / omega, 0.0]).collect(),
        PointSet::Random { seed } => random_points_1d(seed, mode + 2, 0.0, 1.0),
    };
    let values = pts.iter().map(|p| (omega * p[0]).sin()).collect();
    let problem = Problem::new(disc, omega, load)?
        .with_execution(exec)
        .with_measurements(&MeasurementSet::pointwise(pts, values))?;
    Ok(Manufactured { problem, material, omega })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub elements: usize,
    pub h: f64,
    pub e_ls: f64,
}

/// Relative L2 error of `(u, w)` against the manufactured pair on each mesh.
pub fn convergence_study(
    elements: &[usize],
    mode: usize,
    kappa: f64,
    points: PointSet,
    exec: Execution,
) -> Result<Vec<ConvergenceRow>> {
    exec.map(elements.len(), |i| {
        let n = elements[i];
        let m = manufactured_bar(n, mode, points, Execution::Sequential)?;
        let st = m.problem.solve(&m.material, kappa)?;
        let mesh = m.problem.disc().mesh();
        let e_ls = relative_l2_error(mesh, &[&st.u, &st.w], |x| m.exact(x));
        Ok(ConvergenceRow { elements: n, h: mesh.max_element_size(), e_ls })
    })
    .into_iter()
    .collect()
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// `sqrt(sum ||exact - f_h||^2 / sum ||exact||^2)` over linear 1D fields,
/// with five-point Gauss quadrature per element.
pub fn relative_l2_error(mesh: &Mesh, fields: &[&[f64]], exact: impl Fn(f64) -> f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for e in 0..mesh.n_elements() {
        let nodes = mesh.element(e);
        let (a, b) = (mesh.node(nodes[0])[0], mesh.node(nodes[1])[0]);
        let half = 0.5 * (b - a);
        for &(xi, wt) in &GAUSS5 {
            let x = 0.5 * (a + b) + half * xi;
            let t = 0.5 * (1.0 + xi);
            let ex = exact(x);
            for f in fields {
                let fh = (1.0 - t) * f[nodes[0]] + t * f[nodes[1]];
                num += wt * half * (ex - fh).powi(2);
                den += wt * half * ex * ex;
            }
        }
    }
    (num / den).sqrt()
}

/// A problem with its model material, for kappa sweeps.
#[derive(Debug, Clone)]
pub struct BarInstance {
    pub problem: Problem,
    pub material: MaterialField,
}

/// Fixed-free bar at `omega = 2 pi` (between the second and third
/// eigenfrequencies) with noisy point data from another material.
pub fn small_kappa_bar(n: usize, seed: u64, exec: Execution) -> Result<BarInstance> {
    let (disc, material) = unit_bar(n, BoundaryTag::Dirichlet, BoundaryTag::Neumann, exec)?;
    let load = uniform_body_load(&disc, &[1.0])?;
    let problem = Problem::new(disc, 2.0 * PI, load)?.with_execution(exec);
    let pts = random_points_1d(seed, n / 2, 0.0, 1.0);
    let data = perturbed_data(&problem, seed, &pts, 0.05)?;
    Ok(BarInstance { problem: problem.with_measurements(&data)?, material })
}

/// Fixed left end, unspecified right end, point data from a different
/// material forward-solved with a traction-free right end.
pub fn large_kappa_bar(n: usize, seed: u64, exec: Execution) -> Result<BarInstance> {
    let (disc, material) = unit_bar(n, BoundaryTag::Dirichlet, BoundaryTag::FreeUnknown, exec)?;
    let (full, _) = unit_bar(n, BoundaryTag::Dirichlet, BoundaryTag::Neumann, exec)?;
    let omega = 2.0 * PI;
    let load = uniform_body_load(&disc, &[1.0])?;
    let synth = Problem::new(full, omega, load.clone())?;
    let mids: Vec<[f64; 2]> = (0..n / 2).map(|k| [(2 * k) as f64 / n as f64 + 0.5 / n as f64, 0.0]).collect();
    let data = perturbed_data(&synth, seed, &mids, 0.0)?;
    let problem = Problem::new(disc, omega, load)?.with_execution(exec).with_measurements(&data)?;
    Ok(BarInstance { problem, material })
}

/// Point data sampled from the forward solution of a seeded random material,
/// each value scaled by `1 + noise * U(-1, 1)`.
fn perturbed_data(forward: &Problem, seed: u64, pts: &[[f64; 2]], noise: f64) -> Result<MeasurementSet> {
    let mesh = forward.disc().mesh();
    let n = mesh.n_elements();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let truth = MaterialField::young((0..n).map(|_| rng.gen_range(0.7..1.4)).collect(), vec![1.0; n])?;
    let u = forward.forward(&truth)?.u;
    let mut values =
        sample_field(mesh, &u, pts).map_err(|p| Error::InvalidArgument(format!("point {p:?} outside the bar")))?;
    for v in values.iter_mut() {
        *v *= 1.0 + noise * rng.gen_range(-1.0..1.0);
    }
    Ok(MeasurementSet::pointwise(pts.to_vec(), values))
}

/// Fixed-fixed bar under a unit body load, split into two material zones at
/// `x = 1/2`, with data at every interior node generated on the same mesh.
/// Generating and inverting on one mesh is an inverse crime, kept because
/// the scan studies the shape of the objective rather than accuracy.
#[derive(Debug, Clone)]
pub struct TwoZoneBar {
    pub problem: Problem,
    /// the two zone moduli over a unit-density base field
    pub map: ParameterMap,
    pub truth: [f64; 2],
}

pub fn two_zone_bar(n: usize, frequency_hz: f64, truth: [f64; 2], exec: Execution) -> Result<TwoZoneBar> {
    let (disc, base) = unit_bar(n, BoundaryTag::Dirichlet, BoundaryTag::Dirichlet, exec)?;
    let mesh = disc.mesh();
    let (left, right): (Vec<usize>, Vec<usize>) = (0..n).partition(|&e| mesh.centroid(e)[0] < 0.5);
    let map = ParameterMap::zones(base, &[left, right])?;
    let load = uniform_body_load(&disc, &[1.0])?;
    let nodes: Vec<[f64; 2]> = mesh.coords()[1..n].to_vec();
    let problem = Problem::new(disc, 2.0 * PI * frequency_hz, load)?.with_execution(exec);
    let fwd = problem.forward(&map.expand(&truth)?)?;
    if fwd.near_singular {
        return Err(Error::Assumption(format!("{frequency_hz} Hz is a resonance of the data-generating bar")));
    }
    let values = fwd.u[1..n].to_vec();
    let problem = problem.with_measurements(&MeasurementSet::pointwise(nodes, values))?;
    Ok(TwoZoneBar { problem, map, truth })
}

/// Hessian quadratic forms of the two-zone bar at zone moduli `at`, along
/// seeded random per-element directions, for every kappa. Rows are
/// `(kappa, direction index, value)`.
pub fn hessian_positivity(
    bar: &TwoZoneBar,
    at: [f64; 2],
    kappas: &[f64],
    directions: usize,
    seed: u64,
) -> Result<Vec<(f64, usize, f64)>> {
    let mat = bar.map.expand(&at)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> =
        (0..directions).map(|_| (0..mat.params().len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut rows = Vec::new();
    for &kappa in kappas {
        let state = bar.problem.solve(&mat, kappa)?;
        let values = bar
            .problem
            .execution()
            .map(dirs.len(), |k| crate::objective::hessian_quadratic(&bar.problem, &mat, &state, &dirs[k]));
        for (k, v) in values.into_iter().enumerate() {
            rows.push((kappa, k, v?));
        }
    }
    Ok(rows)
}

/// Coupled solve at an exact discrete eigenfrequency next to a plain forward
/// solve at the same frequency.
#[derive(Debug, Clone)]
pub struct ResonanceCheck {
    pub omega: f64,
    pub residual: f64,
    /// residual over `||f|| + kappa ||d||`
    pub relative_residual: f64,
    pub solution_norm: f64,
    pub forward_rcond: f64,
    pub forward_near_singular: bool,
}

/// Fixed-fixed bar driven at its `mode`-th discrete eigenfrequency with point
/// data at seeded random locations.
pub fn resonance_check(n: usize, mode: usize, kappa: f64, seed: u64) -> Result<ResonanceCheck> {
    let exec = Execution::Sequential;
    let (disc, mat) = unit_bar(n, BoundaryTag::Dirichlet, BoundaryTag::Dirichlet, exec)?;
    let eigenvalues = discrete_eigenvalues(&disc, &mat)?;
    let mu = *eigenvalues
        .get(mode.wrapping_sub(1))
        .ok_or_else(|| Error::InvalidArgument(format!("mode {mode} outside 1..={}", eigenvalues.len())))?;
    let omega = mu.sqrt();
    let load = uniform_body_load(&disc, &[1.0])?;
    let pts = random_points_1d(seed, n / 2, 0.0, 1.0);
    let values: Vec<f64> = pts.iter().map(|p| (PI * p[0]).sin()).collect();
    let problem = Problem::new(disc, omega, load)?
        .with_execution(exec)
        .with_measurements(&MeasurementSet::pointwise(pts, values))?;
    let forward = problem.forward(&mat)?;
    let st = problem.solve(&mat, kappa)?;
    let residual = st.solution.residual_norm;
    let scale = norm2(&st.system.f) + kappa * norm2(&st.system.data);
    Ok(ResonanceCheck {
        omega,
        residual,
        relative_residual: residual / scale,
        solution_norm: (norm2(&st.u).powi(2) + norm2(&st.w).powi(2)).sqrt(),
        forward_rcond: forward.rcond,
        forward_near_singular: forward.near_singular,
    })
}

/// Ascending eigenvalues `omega_n^2` of `K v = omega^2 M v` on the W dofs.
pub fn discrete_eigenvalues(disc: &Discretization, mat: &MaterialField) -> Result<Vec<f64>> {
    let w = DofMap::new(disc.mesh(), Space::W);
    let exec = Execution::Sequential;
    let k = restrict(&disc.stiffness(mat, exec)?, &w, &w)?;
    let m = restrict(&disc.mass(mat, exec)?, &w, &w)?;
    let (mu, _) = generalized_symmetric_eigen(&to_dense(&k), &to_dense(&m))?;
    let mut mu = mu;
    mu.sort_by(f64::total_cmp);
    Ok(mu)
}
