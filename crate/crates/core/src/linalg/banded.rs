use rand::{Rng, SeedableRng};

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// LU factorization with partial pivoting of a sparse matrix stored in band
/// form after a reverse Cuthill-McKee reordering.
///
/// Suited to symmetric indefinite systems of moderate size: pivoting keeps it
/// stable where an unpivoted Cholesky or LDL^T would break down.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    width: usize,
    /// row i holds columns i - kl ..= i + kl + ku
    data: Vec<f64>,
    piv: Vec<usize>,
    /// new index -> original index
    perm: Vec<usize>,
    norm1: f64,
    min_pivot: f64,
    max_pivot: f64,
}

impl BandedLu {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch(format!("LU needs a square matrix, got {:?}", a.shape())));
        }
        let perm = if n > 0 {
            let pattern = structural_symmetrization(a);
            sprs::linalg::reverse_cuthill_mckee(pattern.view()).perm.vec()
        } else {
            Vec::new()
        };
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut kl = 0usize;
        let mut ku = 0usize;
        let mut col_sums = vec![0.0; n];
        for (i, row) in a.outer_iterator().enumerate() {
            for (j, &v) in row.iter() {
                let (pi, pj) = (inv[i], inv[j]);
                if pi > pj {
                    kl = kl.max(pi - pj);
                } else {
                    ku = ku.max(pj - pi);
                }
                col_sums[j] += v.abs();
            }
        }
        let norm1 = col_sums.iter().cloned().fold(0.0, f64::max);

        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            width,
            data: vec![0.0; n * width],
            piv: vec![0; n],
            perm,
            norm1,
            min_pivot: f64::INFINITY,
            max_pivot: 0.0,
        };
        for (i, row) in a.outer_iterator().enumerate() {
            for (j, &v) in row.iter() {
                let k = lu.idx(inv[i], inv[j]);
                lu.data[k] += v;
            }
        }
        lu.eliminate(ku)?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, row: usize, col: usize) -> usize {
        row * self.width + (col + self.kl - row)
    }

    fn eliminate(&mut self, ku: usize) -> Result<()> {
        let n = self.n;
        let kl = self.kl;
        let reach = kl + ku;
        for j in 0..n {
            let last_row = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.data[self.idx(j, j)].abs();
            for r in j + 1..=last_row {
                let v = self.data[self.idx(r, j)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular { step: j, pivot: best });
            }
            self.min_pivot = self.min_pivot.min(best);
            self.max_pivot = self.max_pivot.max(best);
            self.piv[j] = p;
            let last_col = (j + reach).min(n - 1);
            if p != j {
                for c in j..=last_col {
                    let (a, b) = (self.idx(j, c), self.idx(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(j, j)];
            for r in j + 1..=last_row {
                let lrj = self.idx(r, j);
                let l = self.data[lrj] / pivot;
                self.data[lrj] = l;
                if l == 0.0 {
                    continue;
                }
                for c in j + 1..=last_col {
                    let src = self.idx(j, c);
                    let dst = self.idx(r, c);
                    self.data[dst] -= l * self.data[src];
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower and upper bandwidth after reordering (upper includes fill room).
    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.width - 1 - self.kl)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "solve: rhs length");
        let mut x: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        self.solve_permuted(&mut x);
        let mut out = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "solve: rhs length");
        let mut x: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        self.solve_transpose_permuted(&mut x);
        let mut out = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }

    // band offsets read clearest as explicit indices
    #[allow(clippy::needless_range_loop)]
    fn solve_permuted(&self, x: &mut [f64]) {
        let n = self.n;
        let ku_eff = self.width - 1 - self.kl;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                x.swap(j, p);
            }
            let xj = x[j];
            if xj != 0.0 {
                for r in j + 1..=(j + self.kl).min(n.saturating_sub(1)) {
                    x[r] -= self.data[self.idx(r, j)] * xj;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for c in i + 1..=(i + ku_eff).min(n - 1) {
                s -= self.data[self.idx(i, c)] * x[c];
            }
            x[i] = s / self.data[self.idx(i, i)];
        }
    }

    // band offsets read clearest as explicit indices
    #[allow(clippy::needless_range_loop)]
    fn solve_transpose_permuted(&self, x: &mut [f64]) {
        let n = self.n;
        let ku_eff = self.width - 1 - self.kl;
        // U^T z = b
        for i in 0..n {
            let zi = x[i] / self.data[self.idx(i, i)];
            x[i] = zi;
            for c in i + 1..=(i + ku_eff).min(n.saturating_sub(1)) {
                x[c] -= self.data[self.idx(i, c)] * zi;
            }
        }
        // L^T with the row interchanges undone in reverse
        for j in (0..n).rev() {
            let mut s = x[j];
            for r in j + 1..=(j + self.kl).min(n.saturating_sub(1)) {
                s -= self.data[self.idx(r, j)] * x[r];
            }
            x[j] = s;
            let p = self.piv[j];
            if p != j {
                x.swap(j, p);
            }
        }
    }

    /// Ratio of smallest to largest pivot magnitude; a cheap singularity hint.
    pub fn pivot_ratio(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        self.min_pivot / self.max_pivot
    }

    /// Estimate of the reciprocal 1-norm condition number (Hager's method).
    pub fn rcond(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        if self.norm1 == 0.0 {
            return 0.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&xi);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0), |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            x[jmax] = 1.0;
        }
        // Hager's iteration can miss modes orthogonal to its start vector;
        // the alternating ramp of LAPACK's xLACN2 and a fixed random vector
        // give independent lower bounds
        let ramp: Vec<f64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let random: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for probe in [ramp, random] {
            let y = self.solve(&probe);
            let ratio = l1(&y) / l1(&probe);
            est = f64::max(est, ratio);
        }
        if !est.is_finite() || est == 0.0 {
            return 0.0;
        }
        1.0 / (self.norm1 * est)
    }
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Pattern of `a + a^T` with unit values, for the ordering.
fn structural_symmetrization(a: &SparseMatrix) -> SparseMatrix {
    let n = a.rows();
    let mut tri = sprs::TriMat::with_capacity((n, n), 2 * a.nnz() + n);
    for i in 0..n {
        tri.add_triplet(i, i, 1.0);
    }
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, _) in row.iter() {
            if i != j {
                tri.add_triplet(i, j, 1.0);
                tri.add_triplet(j, i, 1.0);
            }
        }
    }
    let m: SparseMatrix = tri.to_csr();
    m.map(|_| 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_triplets, matvec, to_dense};
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn laplacian(n: usize, shift: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 - shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        from_triplets((n, n), t)
    }

    #[test]
    fn solves_tridiagonal() {
        let a = laplacian(50, 0.0);
        let lu = BandedLu::factor(&a).unwrap();
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = matvec(&a, &x_true);
        let x = lu.solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-10);
        }
        assert_eq!(lu.bandwidth().0, 1);
    }

    #[test]
    fn zero_leading_block_needs_pivoting() {
        // saddle matrix [[0, 1], [1, 0]] breaks any unpivoted factorization
        let a = from_triplets((2, 2), [(0, 1, 1.0), (1, 0, 1.0)]);
        let lu = BandedLu::factor(&a).unwrap();
        assert_eq!(lu.solve(&[3.0, 4.0]), vec![4.0, 3.0]);
    }

    #[test]
    fn singular_is_reported() {
        let a = from_triplets((2, 2), [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(BandedLu::factor(&a), Err(Error::Singular { .. })));
    }

    #[test]
    fn rcond_tracks_near_singularity() {
        let good = BandedLu::factor(&laplacian(20, 0.0)).unwrap();
        assert!(good.rcond() > 1e-4);
        // smallest eigenvalue of the shifted laplacian sits next to zero
        let lam = 2.0 - 2.0 * (std::f64::consts::PI / 21.0).cos();
        let bad = BandedLu::factor(&laplacian(20, lam)).unwrap();
        assert!(bad.rcond() < 1e-10, "rcond {}", bad.rcond());
        // antisymmetric mode, orthogonal to the constant start vector
        let lam2 = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / 21.0).cos();
        let bad2 = BandedLu::factor(&laplacian(20, lam2)).unwrap();
        assert!(bad2.rcond() < 1e-10, "rcond {}", bad2.rcond());
    }

    proptest! {
        #[test]
        fn matches_dense_lu(seed in 0u64..500, n in 1usize..30) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut t = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if (i as isize - j as isize).abs() <= 3 && rng.gen_bool(0.7) {
                        t.push((i, j, rng.gen_range(-1.0..1.0)));
                    }
                }
                t.push((i, i, rng.gen_range(-0.1..0.1)));
            }
            let a = from_triplets((n, n), t);
            let dense = to_dense(&a);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let Some(oracle) = dense.clone().lu().solve(&DVector::from_column_slice(&b)) else {
                return Ok(());
            };
            if dense.clone().svd(false, false).singular_values.min() < 1e-8 {
                return Ok(());
            }
            let lu = BandedLu::factor(&a).unwrap();
            let x = lu.solve(&b);
            let xt = lu.solve_transpose(&b);
            let oracle_t = dense.transpose().lu().solve(&DVector::from_column_slice(&b)).unwrap();
            let scale = oracle.amax().max(1.0);
            for i in 0..n {
                prop_assert!((x[i] - oracle[i]).abs() <= 1e-8 * scale);
                prop_assert!((xt[i] - oracle_t[i]).abs() <= 1e-8 * oracle_t.amax().max(1.0));
            }
        }
    }
}
