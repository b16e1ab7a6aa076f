use nalgebra::DMatrix;

use super::sparse::{to_dense_impl, SparseMatrix};
use crate::error::{Error, Result};

pub fn to_dense(a: &SparseMatrix) -> DMatrix<f64> {
    to_dense_impl(a)
}

/// Right null space of a dense matrix by SVD.
#[derive(Debug, Clone)]
pub struct NullSpace {
    /// orthonormal columns spanning the numerical null space
    pub basis: DMatrix<f64>,
    pub sigma_max: f64,
    /// smallest singular value counted as nonzero (infinite when none)
    pub sigma_min_kept: f64,
    /// right singular vector of the smallest singular value overall
    pub weakest: Vec<f64>,
    pub sigma_weakest: f64,
}

/// Singular values below `rel_tol * sigma_max` count as null directions.
///
/// A wide matrix is padded with zero rows so that the SVD yields a full set of
/// right singular vectors.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> NullSpace {
    let (r, c) = m.shape();
    if c == 0 {
        return NullSpace {
            basis: DMatrix::zeros(0, 0),
            sigma_max: 0.0,
            sigma_min_kept: f64::INFINITY,
            weakest: Vec::new(),
            sigma_weakest: f64::INFINITY,
        };
    }
    let square = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = square.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let sv = &svd.singular_values;
    let sigma_max = sv.max();
    let tol = rel_tol * sigma_max;
    let null_idx: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] <= tol).collect();
    let kept_min = (0..sv.len()).filter(|&k| sv[k] > tol).map(|k| sv[k]).fold(f64::INFINITY, f64::min);
    let mut basis = DMatrix::zeros(c, null_idx.len());
    for (col, &k) in null_idx.iter().enumerate() {
        for i in 0..c {
            basis[(i, col)] = vt[(k, i)];
        }
    }
    let kw = (0..sv.len()).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap_or(0);
    NullSpace {
        basis,
        sigma_max,
        sigma_min_kept: kept_min,
        weakest: (0..c).map(|i| vt[(kw, i)]).collect(),
        sigma_weakest: sv[kw],
    }
}

/// Eigenpairs of `T v = lambda S v` for symmetric `T` and SPD `S`, ascending.
pub fn generalized_symmetric_eigen(t: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = s.nrows();
    if t.shape() != (n, n) || s.ncols() != n {
        return Err(Error::DimensionMismatch("generalized eigenproblem".into()));
    }
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Assumption("inner-product matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Assumption("Cholesky factor not invertible".into()))?;
    let mut c = &linv * t * linv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let lt_inv = linv.transpose();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = &lt_inv * eig.eigenvectors.column(k);
        vecs.set_column(col, &v);
    }
    Ok((values, vecs))
}

/// Ascending eigenvalues of `T v = lambda S v` without the eigenvectors.
pub fn generalized_symmetric_eigenvalues(t: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = s.nrows();
    if t.shape() != (n, n) || s.ncols() != n {
        return Err(Error::DimensionMismatch("generalized eigenproblem".into()));
    }
    let l = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Assumption("inner-product matrix is not positive definite".into()))?
        .unpack();
    let singular = || Error::Assumption("Cholesky factor not invertible".into());
    // C = L^-1 T L^-T
    let x = l.solve_lower_triangular(t).ok_or_else(singular)?;
    let c = l.solve_lower_triangular(&x.transpose()).ok_or_else(singular)?;
    let c = (&c + c.transpose()) * 0.5;
    let mut values: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        // rank 1, three columns: null space of dimension two
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&m, 1e-8);
        assert_eq!(ns.basis.ncols(), 2);
        let prod = &m * &ns.basis;
        assert!(prod.amax() < 1e-12);
    }

    #[test]
    fn generalized_eigen_of_diagonal_pair() {
        let t = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 9.0]));
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0]));
        let (vals, vecs) = generalized_symmetric_eigen(&t, &s).unwrap();
        assert!((vals[0] - 2.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        let r = &t * vecs.column(0) - &s * vecs.column(0) * vals[0];
        assert!(r.amax() < 1e-12);
    }

    #[test]
    fn eigenvalues_only_match_full_solve() {
        let t = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, -1.0]);
        let s = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, 0.1, 0.0, 0.1, 1.0]);
        let (full, _) = generalized_symmetric_eigen(&t, &s).unwrap();
        let only = generalized_symmetric_eigenvalues(&t, &s).unwrap();
        for (a, b) in full.iter().zip(&only) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
