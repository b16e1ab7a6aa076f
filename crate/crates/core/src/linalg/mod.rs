//! Sparse storage helpers, a pivoted banded LU, and dense utilities for oracles
//! and small diagnostics.

mod banded;
mod dense;
mod sparse;

pub use banded::BandedLu;
pub use dense::{generalized_symmetric_eigen, generalized_symmetric_eigenvalues, null_space, to_dense, NullSpace};
pub use sparse::{
    add_scaled, block_2x2, from_triplets, matvec, max_abs, quad_form, submatrix, symmetry_defect, transpose,
    SparseMatrix,
};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
