use nalgebra::DMatrix;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};

/// Row-compressed sparse matrix.
pub type SparseMatrix = CsMat<f64>;

/// Builds a CSR matrix, summing duplicate entries.
pub fn from_triplets(shape: (usize, usize), entries: impl IntoIterator<Item = (usize, usize, f64)>) -> SparseMatrix {
    let mut tri = TriMat::new(shape);
    for (i, j, v) in entries {
        tri.add_triplet(i, j, v);
    }
    tri.to_csr()
}

pub fn matvec(a: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.cols(), x.len(), "matvec: dimension mismatch");
    let mut y = vec![0.0; a.rows()];
    for (i, row) in a.outer_iterator().enumerate() {
        y[i] = row.iter().map(|(j, v)| v * x[j]).sum();
    }
    y
}

/// `x^T A y`
pub fn quad_form(a: &SparseMatrix, x: &[f64], y: &[f64]) -> f64 {
    let ay = matvec(a, y);
    super::dot(x, &ay)
}

pub fn transpose(a: &SparseMatrix) -> SparseMatrix {
    let mut tri = TriMat::with_capacity((a.cols(), a.rows()), a.nnz());
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, &v) in row.iter() {
            tri.add_triplet(j, i, v);
        }
    }
    tri.to_csr()
}

/// `a + alpha * b`
pub fn add_scaled(a: &SparseMatrix, alpha: f64, b: &SparseMatrix) -> Result<SparseMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!("cannot add {:?} and {:?}", a.shape(), b.shape())));
    }
    let mut tri = TriMat::with_capacity(a.shape(), a.nnz() + b.nnz());
    for (m, s) in [(a, 1.0), (b, alpha)] {
        for (i, row) in m.outer_iterator().enumerate() {
            for (j, &v) in row.iter() {
                tri.add_triplet(i, j, s * v);
            }
        }
    }
    Ok(tri.to_csr())
}

/// Extracts `a[rows, cols]`.
pub fn submatrix(a: &SparseMatrix, rows: &[usize], cols: &[usize]) -> SparseMatrix {
    let mut col_pos = vec![usize::MAX; a.cols()];
    for (k, &c) in cols.iter().enumerate() {
        col_pos[c] = k;
    }
    let mut tri = TriMat::new((rows.len(), cols.len()));
    for (k, &r) in rows.iter().enumerate() {
        if let Some(row) = a.outer_view(r) {
            for (j, &v) in row.iter() {
                let c = col_pos[j];
                if c != usize::MAX {
                    tri.add_triplet(k, c, v);
                }
            }
        }
    }
    tri.to_csr()
}

/// Assembles `[[a, b], [c, d]]`; any block may be empty in one dimension.
pub fn block_2x2(a: &SparseMatrix, b: &SparseMatrix, c: &SparseMatrix, d: &SparseMatrix) -> Result<SparseMatrix> {
    let (n0, m0) = a.shape();
    let (n1, m1) = d.shape();
    if b.shape() != (n0, m1) || c.shape() != (n1, m0) {
        return Err(Error::DimensionMismatch(format!(
            "block layout {:?} {:?} / {:?} {:?}",
            a.shape(),
            b.shape(),
            c.shape(),
            d.shape()
        )));
    }
    let mut tri = TriMat::with_capacity((n0 + n1, m0 + m1), a.nnz() + b.nnz() + c.nnz() + d.nnz());
    for (m, r0, c0) in [(a, 0, 0), (b, 0, m0), (c, n0, 0), (d, n0, m0)] {
        for (i, row) in m.outer_iterator().enumerate() {
            for (j, &v) in row.iter() {
                tri.add_triplet(r0 + i, c0 + j, v);
            }
        }
    }
    Ok(tri.to_csr())
}

pub fn max_abs(a: &SparseMatrix) -> f64 {
    a.data().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `max |a - a^T|`
pub fn symmetry_defect(a: &SparseMatrix) -> f64 {
    let t = transpose(a);
    match add_scaled(a, -1.0, &t) {
        Ok(diff) => max_abs(&diff),
        Err(_) => f64::INFINITY,
    }
}

pub(super) fn to_dense_impl(a: &SparseMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.rows(), a.cols());
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, &v) in row.iter() {
            m[(i, j)] += v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseMatrix {
        from_triplets(
            (3, 3),
            [
                (0, 0, 2.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 2.0),
                (2, 2, 1.0),
            ],
        )
    }

    #[test]
    fn duplicates_are_summed() {
        let a = sample();
        assert_eq!(a.get(2, 2), Some(&3.0));
    }

    #[test]
    fn submatrix_picks_rows_and_cols() {
        let a = sample();
        let s = submatrix(&a, &[1, 2], &[0, 2]);
        assert_eq!(s.shape(), (2, 2));
        assert_eq!(to_dense_impl(&s), DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, 0.0, 3.0]));
    }

    #[test]
    fn block_layout_matches_dense() {
        let a = sample();
        let b = submatrix(&a, &[0, 1, 2], &[0]);
        let c = transpose(&b);
        let d = from_triplets((1, 1), [(0, 0, -5.0)]);
        let g = to_dense_impl(&block_2x2(&a, &b, &c, &d).unwrap());
        assert_eq!(g[(3, 3)], -5.0);
        assert_eq!(g[(1, 3)], -1.0);
        assert_eq!(g[(3, 1)], -1.0);
        assert_eq!(symmetry_defect(&block_2x2(&a, &b, &c, &d).unwrap()), 0.0);
    }

    #[test]
    fn matvec_and_quad_form() {
        let a = sample();
        let x = [1.0, 2.0, 3.0];
        assert_eq!(matvec(&a, &x), vec![0.0, 0.0, 7.0]);
        assert_eq!(quad_form(&a, &x, &x), 21.0);
    }
}
