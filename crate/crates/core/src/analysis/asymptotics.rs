//! Leading-order fields of the coupled problem for small and large kappa, and
//! sweeps measuring the rate at which solutions approach them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::MaterialField;
use crate::linalg::{quad_form, to_dense};
use crate::measurement::MeasuredSplit;
use crate::problem::{Operators, Problem};

/// Free-dof count (U plus W) accepted by the dense large-kappa solve.
pub const DENSE_LIMIT_LARGE_KAPPA: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// kappa -> 0, error against kappa
    SmallKappa,
    /// kappa -> infinity, error against 1/kappa
    LargeKappa,
}

/// Leading-order fields, full length (`u` includes the Dirichlet lifting).
#[derive(Debug, Clone)]
pub struct LimitFields {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AsymptoticsReport {
    pub regime: Regime,
    pub kappa_grid: Vec<f64>,
    /// `||U_kappa - U_0||` in the omega norm of `(u, w)`
    pub errors: Vec<f64>,
    /// log-log slope against kappa (small) or 1/kappa (large)
    pub fitted_slope: f64,
}

/// `w = 0` and `u` the forward solution; needs complete boundary conditions
/// and a nonsingular forward operator.
pub fn small_kappa_limit(problem: &Problem, mat: &MaterialField) -> Result<LimitFields> {
    if !problem.has_complete_bcs() {
        return Err(Error::Unsupported(
            "the small-kappa limit is implemented for complete boundary conditions only".into(),
        ));
    }
    let fwd = problem.forward(mat)?;
    if fwd.near_singular {
        return Err(Error::Assumption(format!(
            "forward operator is near-singular (rcond {:e}); B has a kernel at this frequency",
            fwd.rcond
        )));
    }
    let n = fwd.u.len();
    Ok(LimitFields { u: fwd.u, w: vec![0.0; n] })
}

/// Measured part of `u` fitted to the data, the rest and `w` from the
/// constrained saddle system `[[A, B1], [B1^T, 0]]`.
pub fn large_kappa_limit(problem: &Problem, mat: &MaterialField) -> Result<LimitFields> {
    let ops = problem.operators(mat)?;
    let sys = problem.coupled_system(&ops, 1.0)?;
    let (n_w, n_u) = (sys.n_w(), sys.n_u());
    if n_w + n_u > DENSE_LIMIT_LARGE_KAPPA {
        return Err(Error::TooLarge {
            what: "large-kappa limit (dense measured split)",
            size: n_w + n_u,
            limit: DENSE_LIMIT_LARGE_KAPPA,
        });
    }
    let split = MeasuredSplit::new(&to_dense(&sys.d));
    if split.d0.is_empty() {
        return Err(Error::Assumption("no measured directions: D vanishes on U".into()));
    }
    let a0 = DVector::from_iterator(
        split.d0.len(),
        (split.q0.transpose() * DVector::from_column_slice(&sys.data)).iter().zip(split.d0.iter()).map(|(v, d)| v / d),
    );
    let b = to_dense(&sys.b);
    let b0 = &b * &split.q0;
    let b1 = &b * &split.q1;
    let n1 = split.q1.ncols();
    let mut k = DMatrix::zeros(n_w + n1, n_w + n1);
    k.view_mut((0, 0), (n_w, n_w)).copy_from(&to_dense(&sys.a));
    k.view_mut((0, n_w), (n_w, n1)).copy_from(&b1);
    k.view_mut((n_w, 0), (n1, n_w)).copy_from(&b1.transpose());
    let mut rhs = DVector::zeros(n_w + n1);
    rhs.rows_mut(0, n_w).copy_from(&(DVector::from_column_slice(&sys.f) - &b0 * &a0));
    let x = k.lu().solve(&rhs).ok_or_else(|| {
        Error::Assumption("large-kappa saddle system is singular; B does not control the unmeasured part".into())
    })?;
    let w = x.rows(0, n_w).into_owned();
    let a1 = x.rows(n_w, n1).into_owned();
    let u = &split.q0 * a0 + &split.q1 * a1;
    let (u, w) = problem.full_fields(u.as_slice(), w.as_slice());
    Ok(LimitFields { u, w })
}

/// `sqrt(u^T S u + w^T S w)` with `S = K + omega^2 M` on the full dof set.
pub fn omega_norm(problem: &Problem, ops: &Operators, u: &[f64], w: &[f64]) -> Result<f64> {
    let s = problem.inner_product(ops)?;
    Ok((quad_form(&s, u, u) + quad_form(&s, w, w)).max(0.0).sqrt())
}

/// Distance of the coupled solutions to the leading-order fields over a kappa
/// grid, with the log-log slope fitted after dropping the two extreme points.
pub fn kappa_sweep(
    problem: &Problem,
    mat: &MaterialField,
    regime: Regime,
    kappas: &[f64],
) -> Result<AsymptoticsReport> {
    let limit = match regime {
        Regime::SmallKappa => small_kappa_limit(problem, mat)?,
        Regime::LargeKappa => large_kappa_limit(problem, mat)?,
    };
    let ops = problem.operators(mat)?;
    let s = problem.inner_product(&ops)?;
    let errors: Vec<f64> = problem
        .execution()
        .map(kappas.len(), |i| -> Result<f64> {
            let st = problem.solve_with(&ops, kappas[i])?;
            let du: Vec<f64> = st.u.iter().zip(&limit.u).map(|(a, b)| a - b).collect();
            let dw: Vec<f64> = st.w.iter().zip(&limit.w).map(|(a, b)| a - b).collect();
            Ok((quad_form(&s, &du, &du) + quad_form(&s, &dw, &dw)).max(0.0).sqrt())
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = kappas
        .iter()
        .map(|&k| match regime {
            Regime::SmallKappa => k,
            Regime::LargeKappa => 1.0 / k,
        })
        .collect();
    let fitted_slope = trimmed_loglog_slope(&xs, &errors)?;
    Ok(AsymptoticsReport { regime, kappa_grid: kappas.to_vec(), errors, fitted_slope })
}

/// `count` points log-spaced from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count).map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)).collect()
}

/// Least-squares slope of `log y` against `log x`, excluding the points with
/// the smallest and largest `x` when at least five points are given.
pub fn trimmed_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("slope fit needs at least two paired points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs positive values".into()));
    }
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    if idx.len() >= 5 {
        idx = idx[1..idx.len() - 1].to_vec();
    }
    let lx: Vec<f64> = idx.iter().map(|&i| xs[i].ln()).collect();
    let ly: Vec<f64> = idx.iter().map(|&i| ys[i].ln()).collect();
    Ok(ols_slope(&lx, &ly))
}

/// Least-squares slope of `log y` against `log x` over all points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("slope fit needs at least two paired points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(ols_slope(&lx, &ly))
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::fem::{nodal_field_load, BoundaryTag, Discretization, Mesh, Side};
    use crate::measurement::{random_points_1d, sample_field, MeasurementSet};

    fn complete_bar(load_scale: f64) -> (Problem, MaterialField) {
        let mesh = Mesh::bar(20, 1.0)
            .unwrap()
            .with_side(Side::Left, BoundaryTag::Dirichlet)
            .unwrap()
            .with_side(Side::Right, BoundaryTag::Dirichlet)
            .unwrap();
        let disc = Discretization::new(mesh.clone(), Execution::Sequential);
        let load = nodal_field_load(&disc, &[load_scale; 21]).unwrap();
        let pts = random_points_1d(9, 7, 0.0, 1.0);
        let vals: Vec<f64> = pts.iter().map(|p| 0.01 * p[0]).collect();
        let p =
            Problem::new(disc, 2.0, load).unwrap().with_measurements(&MeasurementSet::pointwise(pts, vals)).unwrap();
        (p, MaterialField::uniform_young(20, 1.0, 1.0).unwrap())
    }

    #[test]
    fn small_kappa_rate_is_one() {
        let (p, mat) = complete_bar(1.0);
        let rep = kappa_sweep(&p, &mat, Regime::SmallKappa, &log_grid(1e-6, 1e-2, 9)).unwrap();
        assert!((rep.fitted_slope - 1.0).abs() < 0.1, "{rep:?}");
        let lim = small_kappa_limit(&p, &mat).unwrap();
        assert!(lim.w.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_load_and_data_give_zero_fields() {
        let mesh = Mesh::bar(6, 1.0).unwrap().with_side(Side::Left, BoundaryTag::Dirichlet).unwrap();
        let disc = Discretization::new(mesh, Execution::Sequential);
        let ms = MeasurementSet::pointwise(vec![[0.3, 0.0], [0.9, 0.0]], vec![0.0, 0.0]);
        let p = Problem::new(disc, 2.0, vec![0.0; 7]).unwrap().with_measurements(&ms).unwrap();
        let mat = MaterialField::uniform_young(6, 1.0, 1.0).unwrap();
        for k in log_grid(1e-6, 1e6, 5) {
            let st = p.solve(&mat, k).unwrap();
            assert!(st.u.iter().chain(&st.w).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn large_kappa_limit_of_consistent_data_is_exact() {
        let mesh = Mesh::bar(12, 1.0).unwrap().with_side(Side::Left, BoundaryTag::Dirichlet).unwrap();
        let disc = Discretization::new(mesh.clone(), Execution::Sequential);
        let load = nodal_field_load(&disc, &[1.0; 13]).unwrap();
        let mat = MaterialField::young((0..12).map(|e| 1.0 + 0.05 * e as f64).collect(), vec![1.0; 12]).unwrap();
        let full = mesh.clone().with_side(Side::Right, BoundaryTag::Neumann).unwrap();
        let synth = Problem::new(Discretization::new(full, Execution::Sequential), 1.7, load.clone()).unwrap();
        let um = synth.forward(&mat).unwrap().u;
        let pts: Vec<[f64; 2]> = (3..=12).map(|i| [i as f64 / 12.0, 0.0]).collect();
        let vals = sample_field(&mesh, &um, &pts).unwrap();
        let p =
            Problem::new(disc, 1.7, load).unwrap().with_measurements(&MeasurementSet::pointwise(pts, vals)).unwrap();
        let lim = large_kappa_limit(&p, &mat).unwrap();
        assert!(lim.w.iter().all(|v| v.abs() < 1e-10));
        for (a, b) in lim.u.iter().zip(&um) {
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn trimmed_slope_drops_extremes() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let mut ys: Vec<f64> = xs.iter().map(|x: &f64| x * x).collect();
        ys[0] = 100.0;
        ys[4] = 0.001;
        assert!((trimmed_loglog_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(trimmed_loglog_slope(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e2, 1e6, 9);
        assert!((g[0] - 1e2).abs() < 1e-9 && (g[8] - 1e6).abs() < 1e-4);
    }
}
