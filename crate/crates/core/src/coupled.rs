//! The coupled stationarity system in `(w, u)` and its direct solution.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{Discretization, DofMap, MaterialField};
use crate::linalg::{block_2x2, dot, matvec, norm2, submatrix, transpose, BandedLu, SparseMatrix};

/// Normwise backward-error target of the stationarity solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Forward operators with a reciprocal condition estimate below this are
/// reported as near-resonant.
pub const NEAR_SINGULAR_RCOND: f64 = 1e-10;

/// Blocks of `G = [[A, B], [B^T, -kappa D]]` with right-hand side
/// `[f; -kappa d]`, unknowns ordered `[w; u]`.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    /// stiffness on W x W
    pub a: SparseMatrix,
    /// dynamic stiffness on W x U
    pub b: SparseMatrix,
    /// measurement form on U x U
    pub d: SparseMatrix,
    pub kappa: f64,
    pub f: Vec<f64>,
    pub data: Vec<f64>,
}

pub fn assemble_coupled(
    a: SparseMatrix,
    b: SparseMatrix,
    d: SparseMatrix,
    kappa: f64,
    f: Vec<f64>,
    data: Vec<f64>,
) -> Result<CoupledSystem> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    let (n_w, n_u) = b.shape();
    if a.shape() != (n_w, n_w) || d.shape() != (n_u, n_u) || f.len() != n_w || data.len() != n_u {
        return Err(Error::DimensionMismatch(format!(
            "A {:?}, B {:?}, D {:?}, f {}, d {}",
            a.shape(),
            b.shape(),
            d.shape(),
            f.len(),
            data.len()
        )));
    }
    Ok(CoupledSystem { a, b, d, kappa, f, data })
}

impl CoupledSystem {
    pub fn n_w(&self) -> usize {
        self.a.rows()
    }

    pub fn n_u(&self) -> usize {
        self.d.rows()
    }

    pub fn matrix(&self) -> SparseMatrix {
        let bt = transpose(&self.b);
        let kd = self.d.map(|v| -self.kappa * v);
        block_2x2(&self.a, &self.b, &bt, &kd).expect("block shapes checked at assembly")
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut r = self.f.clone();
        r.extend(self.data.iter().map(|v| -self.kappa * v));
        r
    }

    /// Residuals of rows (a) and (b).
    pub fn residual(&self, w: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let aw = matvec(&self.a, w);
        let bu = matvec(&self.b, u);
        let ra: Vec<f64> = (0..self.n_w()).map(|i| aw[i] + bu[i] - self.f[i]).collect();
        let btw = matvec(&transpose(&self.b), w);
        let du = matvec(&self.d, u);
        let rb: Vec<f64> = (0..self.n_u()).map(|i| btw[i] - self.kappa * du[i] + self.kappa * self.data[i]).collect();
        (ra, rb)
    }

    /// Largest absolute row sum of `G`.
    pub fn norm_inf(&self) -> f64 {
        self.matrix().outer_iterator().map(|row| row.iter().map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Residual bound for a normwise backward error of `RESIDUAL_TOLERANCE`
    /// at the candidate solution `(w, u)`.
    pub fn residual_tolerance(&self, w: &[f64], u: &[f64]) -> f64 {
        let x = (dot(w, w) + dot(u, u)).sqrt();
        let rhs = (dot(&self.f, &self.f) + (self.kappa * norm2(&self.data)).powi(2)).sqrt();
        RESIDUAL_TOLERANCE * (self.norm_inf() * x + rhs)
    }

    /// `A(w,w) + kappa D(u,u) - kappa <d,u> - <f,w>`, zero at the solution.
    pub fn energy_identity_defect(&self, w: &[f64], u: &[f64]) -> f64 {
        let lhs = dot(w, &matvec(&self.a, w)) + self.kappa * dot(u, &matvec(&self.d, u));
        let rhs = self.kappa * dot(&self.data, u) + dot(&self.f, w);
        lhs - rhs
    }
}

/// Factorization of `G`, reusable for any right-hand side.
#[derive(Debug, Clone)]
pub struct CoupledFactor {
    lu: BandedLu,
    n_w: usize,
}

impl CoupledFactor {
    pub fn new(sys: &CoupledSystem) -> Result<Self> {
        Ok(CoupledFactor { lu: BandedLu::factor(&sys.matrix())?, n_w: sys.n_w() })
    }

    /// Solves `G [w; u] = [rw; ru]`.
    pub fn solve(&self, rw: &[f64], ru: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut rhs = rw.to_vec();
        rhs.extend_from_slice(ru);
        let mut x = self.lu.solve(&rhs);
        let u = x.split_off(self.n_w);
        (x, u)
    }

    pub fn rcond(&self) -> f64 {
        self.lu.rcond()
    }
}

#[derive(Debug, Clone)]
pub struct StationaritySolution {
    /// on U free dofs
    pub u: Vec<f64>,
    /// on W free dofs
    pub w: Vec<f64>,
    pub residual_norm: f64,
    pub factor: Arc<CoupledFactor>,
}

pub fn solve_stationarity(sys: &CoupledSystem) -> Result<StationaritySolution> {
    let factor = CoupledFactor::new(sys).map_err(|e| match e {
        Error::Singular { step, pivot } => Error::Assumption(format!(
            "coupled operator is singular (zero pivot {pivot:e} at step {step}); \
             the data do not control the kernel of B, run the diagnostic"
        )),
        other => other,
    })?;
    let rhs_u: Vec<f64> = sys.data.iter().map(|v| -sys.kappa * v).collect();
    let (mut w, mut u) = factor.solve(&sys.f, &rhs_u);
    let norm = sys.norm_inf();
    let rhs_norm = (dot(&sys.f, &sys.f) + dot(&rhs_u, &rhs_u)).sqrt();
    let tol_at = |w: &[f64], u: &[f64]| RESIDUAL_TOLERANCE * (norm * (dot(w, w) + dot(u, u)).sqrt() + rhs_norm);
    let mut res = residual_norm(sys, &w, &u);
    for _ in 0..3 {
        if res <= tol_at(&w, &u) {
            break;
        }
        let (ra, rb) = sys.residual(&w, &u);
        let (dw, du) = factor.solve(&ra, &rb);
        let w2: Vec<f64> = w.iter().zip(&dw).map(|(a, b)| a - b).collect();
        let u2: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a - b).collect();
        let r2 = residual_norm(sys, &w2, &u2);
        if r2 >= res {
            break;
        }
        w = w2;
        u = u2;
        res = r2;
    }
    let tol = tol_at(&w, &u);
    if !(res <= tol) {
        return Err(Error::Inaccurate { residual: res, tolerance: tol });
    }
    Ok(StationaritySolution { u, w, residual_norm: res, factor: Arc::new(factor) })
}

fn residual_norm(sys: &CoupledSystem, w: &[f64], u: &[f64]) -> f64 {
    let (ra, rb) = sys.residual(w, u);
    (dot(&ra, &ra) + dot(&rb, &rb)).sqrt()
}

/// Stress `C : eps[u + w]` at every quadrature point, Voigt order
/// `(sxx, syy, sxy)`; 1D stores the axial stress first.
pub fn compute_stress(disc: &Discretization, mat: &MaterialField, u: &[f64], w: &[f64]) -> Result<Vec<Vec<[f64; 3]>>> {
    disc.check_material(mat)?;
    let n = disc.n_dofs();
    if u.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch(format!("fields need {n} entries")));
    }
    let sum: Vec<f64> = u.iter().zip(w).map(|(a, b)| a + b).collect();
    Ok((0..disc.mesh().n_elements())
        .map(|e| {
            let k = disc.kernel(e);
            let ue = nalgebra::DVector::from_vec(disc.gather(e, &sum));
            let c = mat.tensor(e);
            k.points
                .iter()
                .map(|q| {
                    let eps = &q.strain * &ue;
                    let mut s = [0.0; 3];
                    for i in 0..eps.len() {
                        for j in 0..eps.len() {
                            s[i] += c[(i, j)] * eps[j];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect())
}

/// Forward displacement with a resonance indicator.
#[derive(Debug, Clone)]
pub struct ForwardSolution {
    /// full dof vector, zero on constrained dofs
    pub u: Vec<f64>,
    pub rcond: f64,
    pub near_singular: bool,
}

/// Solves `B u = f` on the free dofs of `u_map` (`b` and `f` on the full set).
pub fn solve_forward(b: &SparseMatrix, f: &[f64], u_map: &DofMap) -> Result<ForwardSolution> {
    if b.rows() != u_map.n_full() || f.len() != u_map.n_full() {
        return Err(Error::DimensionMismatch("forward operator and dof map disagree".into()));
    }
    let bu = submatrix(b, u_map.free(), u_map.free());
    let lu = BandedLu::factor(&bu)?;
    let x = lu.solve(&u_map.restrict_vec(f));
    let rcond = lu.rcond();
    Ok(ForwardSolution { u: u_map.extend(&x), rcond, near_singular: rcond < NEAR_SINGULAR_RCOND })
}
