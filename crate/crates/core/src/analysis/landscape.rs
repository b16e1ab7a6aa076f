//! Two-parameter scans of the reduced objective and grid convexity metrics.

use crate::error::{Error, Result};
use crate::objective::{evaluate, ObjectiveEval};
use crate::params::ParameterMap;
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeCell {
    pub p1: f64,
    pub p2: f64,
    pub kappa: f64,
    /// `None` when the solve failed at this point
    pub eval: Option<ObjectiveEval>,
}

/// Cells ordered kappa-major, then `p1`, then `p2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    pub kappas: Vec<f64>,
    pub cells: Vec<LandscapeCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityMetrics {
    pub kappa: f64,
    /// grid indices `(i, j)` of strict discrete local minima
    pub local_minima: Vec<(usize, usize)>,
    /// smallest eigenvalue of the finite-difference Hessian at interior
    /// points, row-major over `(1..n1-1) x (1..n2-1)`; `None` near missing cells
    pub fd_hessian_min_eig: Vec<Option<f64>>,
    pub nonnegative_fraction: f64,
    pub missing: usize,
}

/// Evaluates the objective on `grid1 x grid2` for every kappa. `map` must have
/// exactly two reduced parameters. Points are independent and run through the
/// problem's execution mode.
pub fn landscape_scan(
    problem: &Problem,
    map: &ParameterMap,
    grid1: &[f64],
    grid2: &[f64],
    kappas: &[f64],
) -> Result<Landscape> {
    if map.len() != 2 {
        return Err(Error::InvalidArgument(format!("landscape needs 2 parameters, map has {}", map.len())));
    }
    if grid1.is_empty() || grid2.is_empty() || kappas.is_empty() {
        return Err(Error::InvalidArgument("empty landscape grid".into()));
    }
    let (n1, n2) = (grid1.len(), grid2.len());
    let per_kappa = n1 * n2;
    let cells = problem.execution().map(kappas.len() * per_kappa, |idx| {
        let kappa = kappas[idx / per_kappa];
        let (i, j) = ((idx % per_kappa) / n2, idx % n2);
        let (p1, p2) = (grid1[i], grid2[j]);
        let eval = map.expand(&[p1, p2]).and_then(|mat| evaluate(problem, &mat, kappa)).ok();
        LandscapeCell { p1, p2, kappa, eval }
    });
    Ok(Landscape { grid1: grid1.to_vec(), grid2: grid2.to_vec(), kappas: kappas.to_vec(), cells })
}

impl Landscape {
    /// Objective values of one kappa slice, row-major in `(p1, p2)`.
    pub fn values(&self, kappa_index: usize) -> Vec<Option<f64>> {
        let per = self.grid1.len() * self.grid2.len();
        self.cells[kappa_index * per..(kappa_index + 1) * per]
            .iter()
            .map(|c| c.eval.as_ref().map(|e| e.value))
            .collect()
    }

    pub fn metrics(&self) -> Vec<ConvexityMetrics> {
        (0..self.kappas.len())
            .map(|k| grid_metrics(self.kappas[k], &self.values(k), &self.grid1, &self.grid2))
            .collect()
    }
}

/// Strict local minima over the 8-neighbourhood (fewer on the grid edge) and
/// finite-difference Hessian eigenvalues at interior points.
pub fn grid_metrics(kappa: f64, values: &[Option<f64>], grid1: &[f64], grid2: &[f64]) -> ConvexityMetrics {
    let (n1, n2) = (grid1.len(), grid2.len());
    let at = |i: usize, j: usize| values[i * n2 + j];
    let mut local_minima = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            let Some(v) = at(i, j) else { continue };
            let mut strict = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a < 0 || b < 0 || a >= n1 as i64 || b >= n2 as i64 {
                        continue;
                    }
                    if let Some(nv) = at(a as usize, b as usize) {
                        if nv <= v {
                            strict = false;
                        }
                    }
                }
            }
            if strict {
                local_minima.push((i, j));
            }
        }
    }
    let mut eigs = Vec::new();
    for i in 1..n1.saturating_sub(1) {
        for j in 1..n2.saturating_sub(1) {
            eigs.push(fd_hessian_min_eig(&at, grid1, grid2, i, j));
        }
    }
    let known: Vec<f64> = eigs.iter().flatten().copied().collect();
    let nonnegative_fraction =
        if known.is_empty() { 0.0 } else { known.iter().filter(|e| **e >= 0.0).count() as f64 / known.len() as f64 };
    ConvexityMetrics {
        kappa,
        local_minima,
        fd_hessian_min_eig: eigs,
        nonnegative_fraction,
        missing: values.iter().filter(|v| v.is_none()).count(),
    }
}

fn fd_hessian_min_eig(
    at: &impl Fn(usize, usize) -> Option<f64>,
    g1: &[f64],
    g2: &[f64],
    i: usize,
    j: usize,
) -> Option<f64> {
    let f = |a: usize, b: usize| at(a, b);
    let (h1m, h1p) = (g1[i] - g1[i - 1], g1[i + 1] - g1[i]);
    let (h2m, h2p) = (g2[j] - g2[j - 1], g2[j + 1] - g2[j]);
    let c = f(i, j)?;
    // nonuniform three-point second differences
    let fxx = 2.0 * (f(i + 1, j)? * h1m - c * (h1m + h1p) + f(i - 1, j)? * h1p) / (h1m * h1p * (h1m + h1p));
    let fyy = 2.0 * (f(i, j + 1)? * h2m - c * (h2m + h2p) + f(i, j - 1)? * h2p) / (h2m * h2p * (h2m + h2p));
    let fxy = (f(i + 1, j + 1)? - f(i + 1, j - 1)? - f(i - 1, j + 1)? + f(i - 1, j - 1)?) / ((h1m + h1p) * (h2m + h2p));
    let mean = 0.5 * (fxx + fyy);
    let rad = (0.25 * (fxx - fyy).powi(2) + fxy * fxy).sqrt();
    Some(mean - rad)
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}
