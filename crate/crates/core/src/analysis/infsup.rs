//! Discrete inf-sup constant of the coupling form between U and W.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fem::{dynamic_stiffness, omega_inner_product, restrict, Discretization, DofMap, MaterialField, Space};
use crate::linalg::{
    block_2x2, dot, from_triplets, generalized_symmetric_eigen, generalized_symmetric_eigenvalues, matvec, to_dense,
    transpose, BandedLu, SparseMatrix,
};

/// Problems up to this many free dofs (U plus W) use the dense eigensolver.
pub const DENSE_INFSUP_LIMIT: usize = 2000;
/// Eigen-residual target of the inverse iteration.
pub const EIGEN_TOLERANCE: f64 = 1e-10;
const MAX_INVERSE_ITERATIONS: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct InfSupReport {
    pub frequency_hz: f64,
    /// square root of `lambda_min`
    pub beta_h: f64,
    /// smallest eigenvalue of `B^T S^-1 B v = lambda S v` on W
    pub lambda_min: f64,
    pub mesh_size_h: f64,
    /// zero for the dense path
    pub eigen_iterations: usize,
}

/// The matrices of the inf-sup eigenproblem.
struct Pencil {
    s_uu: SparseMatrix,
    s_ww: SparseMatrix,
    /// rows U, columns W
    b_uw: SparseMatrix,
}

fn pencil(disc: &Discretization, mat: &MaterialField, omega: f64) -> Result<Pencil> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidArgument(format!("angular frequency must be positive, got {omega}")));
    }
    let exec = Execution::Sequential;
    let k = disc.stiffness(mat, exec)?;
    let m = disc.mass(mat, exec)?;
    let s = omega_inner_product(&k, &m, omega)?;
    let b = dynamic_stiffness(&k, &m, omega)?;
    let u = DofMap::new(disc.mesh(), Space::U);
    let w = DofMap::new(disc.mesh(), Space::W);
    if w.n_free() == 0 {
        return Err(Error::InvalidArgument("W has no free dofs; nothing to test".into()));
    }
    Ok(Pencil { s_uu: restrict(&s, &u, &u)?, s_ww: restrict(&s, &w, &w)?, b_uw: restrict(&b, &u, &w)? })
}

fn report(omega: f64, disc: &Discretization, lambda: f64, iterations: usize) -> InfSupReport {
    InfSupReport {
        frequency_hz: omega / (2.0 * std::f64::consts::PI),
        beta_h: lambda.max(0.0).sqrt(),
        lambda_min: lambda,
        mesh_size_h: disc.mesh().max_element_size(),
        eigen_iterations: iterations,
    }
}

/// Dense path when small enough, inverse iteration otherwise.
pub fn infsup_constant(disc: &Discretization, mat: &MaterialField, omega: f64) -> Result<InfSupReport> {
    let p = pencil(disc, mat, omega)?;
    if p.s_uu.rows() + p.s_ww.rows() <= DENSE_INFSUP_LIMIT {
        let lambda = dense_lambda_min(&p)?;
        Ok(report(omega, disc, lambda, 0))
    } else {
        let (lambda, it) = inverse_iteration(&p)?;
        Ok(report(omega, disc, lambda, it))
    }
}

/// Dense generalized eigensolve; used as the oracle of the iterative path.
pub fn infsup_dense(disc: &Discretization, mat: &MaterialField, omega: f64) -> Result<InfSupReport> {
    let p = pencil(disc, mat, omega)?;
    let size = p.s_uu.rows() + p.s_ww.rows();
    if size > DENSE_INFSUP_LIMIT {
        return Err(Error::TooLarge { what: "dense inf-sup eigensolve", size, limit: DENSE_INFSUP_LIMIT });
    }
    Ok(report(omega, disc, dense_lambda_min(&p)?, 0))
}

/// Inverse iteration through the saddle system `[[S_UU, B], [B^T, 0]]`.
pub fn infsup_iterative(disc: &Discretization, mat: &MaterialField, omega: f64) -> Result<InfSupReport> {
    let p = pencil(disc, mat, omega)?;
    let (lambda, it) = inverse_iteration(&p)?;
    Ok(report(omega, disc, lambda, it))
}

fn dense_lambda_min(p: &Pencil) -> Result<f64> {
    let s_uu = to_dense(&p.s_uu);
    let b = to_dense(&p.b_uw);
    let chol = s_uu.cholesky().ok_or_else(|| {
        Error::InvalidArgument("omega inner product is not positive definite on U (check the Dirichlet data)".into())
    })?;
    let sinv_b = chol.solve(&b);
    let t: DMatrix<f64> = b.transpose() * sinv_b;
    let vals = generalized_symmetric_eigenvalues(&t, &to_dense(&p.s_ww)).map_err(|e| match e {
        Error::Assumption(m) => Error::InvalidArgument(m),
        other => other,
    })?;
    Ok(vals[0])
}

fn inverse_iteration(p: &Pencil) -> Result<(f64, usize)> {
    let (nu, nw) = p.b_uw.shape();
    let saddle = block_2x2(&p.s_uu, &p.b_uw, &transpose(&p.b_uw), &from_triplets((nw, nw), []))?;
    let lu = match BandedLu::factor(&saddle) {
        Ok(lu) => lu,
        // B has a kernel on W: the constant is zero
        Err(Error::Singular { .. }) => return Ok((0.0, 0)),
        Err(e) => return Err(e),
    };
    let s_norm = |v: &[f64]| dot(v, &matvec(&p.s_ww, v)).sqrt();
    // deterministic start with all modes present
    let mut v: Vec<f64> = (0..nw).map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.7548776662).fract()).collect();
    let n0 = s_norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut lambda = f64::INFINITY;
    for it in 1..=MAX_INVERSE_ITERATIONS {
        let sv = matvec(&p.s_ww, &v);
        let mut rhs = vec![0.0; nu];
        rhs.extend(sv.iter().map(|x| -x));
        let x = lu.solve(&rhs)[nu..].to_vec();
        let sx = matvec(&p.s_ww, &x);
        let xsx = dot(&x, &sx);
        if !(xsx > 0.0) {
            return Ok((0.0, it));
        }
        lambda = dot(&x, &sv) / xsx;
        // eigen-residual of T^-1 S: x - v / lambda, in the S norm
        let r: Vec<f64> = x.iter().zip(&v).map(|(a, b)| lambda * a - b).collect();
        let res = s_norm(&r);
        let nx = xsx.sqrt();
        v = x.iter().map(|a| a / nx).collect();
        if res <= EIGEN_TOLERANCE {
            return Ok((lambda, it));
        }
    }
    Err(Error::NoConvergence { iterations: MAX_INVERSE_ITERATIONS, residual: lambda })
}

/// `min_n |mu_n - omega^2| / (mu_n + omega^2)` over the discrete eigenvalues
/// of `K v = mu M v` on W; a lower bound of `beta_h` when U = W.
pub fn complete_bc_lower_bound(disc: &Discretization, mat: &MaterialField, omega: f64) -> Result<f64> {
    let u = DofMap::new(disc.mesh(), Space::U);
    let w = DofMap::new(disc.mesh(), Space::W);
    if u.n_free() != w.n_free() {
        return Err(Error::Unsupported("the eigenvalue bound needs complete boundary conditions".into()));
    }
    if w.n_free() > DENSE_INFSUP_LIMIT {
        return Err(Error::TooLarge { what: "dense eigenvalue bound", size: w.n_free(), limit: DENSE_INFSUP_LIMIT });
    }
    let exec = Execution::Sequential;
    let k = restrict(&disc.stiffness(mat, exec)?, &w, &w)?;
    let m = restrict(&disc.mass(mat, exec)?, &w, &w)?;
    let (mu, _) = generalized_symmetric_eigen(&to_dense(&k), &to_dense(&m))?;
    let o2 = omega * omega;
    Ok(mu.iter().map(|&m| (m - o2).abs() / (m + o2)).fold(f64::INFINITY, f64::min))
}

/// Inf-sup constants over a list of frequencies in Hz, computed concurrently.
pub fn infsup_sweep(
    disc: &Discretization,
    mat: &MaterialField,
    frequencies_hz: &[f64],
    exec: Execution,
) -> Result<Vec<InfSupReport>> {
    exec.map(frequencies_hz.len(), |i| infsup_constant(disc, mat, 2.0 * std::f64::consts::PI * frequencies_hz[i]))
        .into_iter()
        .collect()
}

/// `start, start + step, ...` up to `stop` inclusive, without accumulated drift.
pub fn frequency_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{BoundaryTag, Mesh, Side};

    fn bar(n: usize, right: Option<BoundaryTag>) -> (Discretization, MaterialField) {
        let mut mesh = Mesh::bar(n, 1.0).unwrap().with_side(Side::Left, BoundaryTag::Dirichlet).unwrap();
        if let Some(t) = right {
            mesh.tag_side(Side::Right, t).unwrap();
        }
        (Discretization::new(mesh, Execution::Sequential), MaterialField::uniform_young(n, 1.0, 1.0).unwrap())
    }

    #[test]
    fn two_element_bar_matches_hand_oracle() {
        // U = {1, 2}, W = {1}
        let (disc, mat) = bar(2, None);
        let omega = 2.0;
        let h: f64 = 0.5;
        let k = DMatrix::from_row_slice(2, 2, &[2.0 / h, -1.0 / h, -1.0 / h, 1.0 / h]);
        let m = DMatrix::from_row_slice(2, 2, &[4.0 * h / 6.0, h / 6.0, h / 6.0, 2.0 * h / 6.0]);
        let s = &k + &m * omega * omega;
        let b = &k - &m * omega * omega;
        let bcol = b.column(0).into_owned();
        let t = bcol.dot(&(s.clone().try_inverse().unwrap() * &bcol));
        let expect = t / s[(0, 0)];
        let rep = infsup_constant(&disc, &mat, omega).unwrap();
        assert!((rep.lambda_min - expect).abs() <= 1e-10 * expect, "{} vs {expect}", rep.lambda_min);
        assert_eq!(rep.beta_h, expect.sqrt());
    }

    #[test]
    fn iterative_matches_dense() {
        let (disc, mat) = bar(40, None);
        for f in [1.0, 7.3, 20.0] {
            let omega = 2.0 * std::f64::consts::PI * f;
            let d = infsup_dense(&disc, &mat, omega).unwrap();
            let i = infsup_iterative(&disc, &mat, omega).unwrap();
            assert!((d.lambda_min - i.lambda_min).abs() <= 1e-8 * d.lambda_min, "{f}: {d:?} {i:?}");
            assert!(i.eigen_iterations > 0);
        }
    }

    #[test]
    fn complete_bcs_satisfy_eigenvalue_bound() {
        let (disc, mat) = bar(30, Some(BoundaryTag::Dirichlet));
        for f in [0.7, 1.3, 2.9] {
            let omega = 2.0 * std::f64::consts::PI * f;
            let rep = infsup_constant(&disc, &mat, omega).unwrap();
            let bound = complete_bc_lower_bound(&disc, &mat, omega).unwrap();
            assert!(rep.beta_h >= 0.95 * bound, "{f}: {} < {bound}", rep.beta_h);
        }
    }

    #[test]
    fn frequency_grid_is_exact() {
        let g = frequency_grid(1.0, 20.0, 0.1);
        assert_eq!(g.len(), 191);
        assert_eq!(*g.last().unwrap(), 20.0);
    }

    #[test]
    fn rejects_nonpositive_frequency() {
        let (disc, mat) = bar(4, None);
        assert!(infsup_constant(&disc, &mat, 0.0).is_err());
    }
}
