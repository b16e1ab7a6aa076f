//! Measurement operator D, data functional d, synthetic-data interpolation and
//! the data-sufficiency diagnostic.

mod io;

pub use io::{load_measurements, read_measurements, save_measurements, write_measurements};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fem::{Discretization, Mesh, PointLocator};
use crate::linalg::{add_scaled, from_triplets, matvec, null_space, quad_form, to_dense, SparseMatrix};

/// Null directions of B: singular values below this fraction of the largest.
pub const NULL_TOLERANCE: f64 = 1e-8;
/// Largest problem (U + W free dofs) handled by the dense diagnostic.
pub const DENSE_DIAGNOSTIC_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    L2Region,
    H1Region,
    Pointwise,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::L2Region => "l2_region",
            Flavor::H1Region => "h1_region",
            Flavor::Pointwise => "pointwise",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2_region" | "l2" => Some(Flavor::L2Region),
            "h1_region" | "h1" => Some(Flavor::H1Region),
            "pointwise" => Some(Flavor::Pointwise),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Elements(Vec<usize>),
    Points(Vec<[f64; 2]>),
}

/// Interior measurements. For region flavors `values` is the measured field as
/// a full dof vector (entries outside the region are ignored); for pointwise
/// data it holds one value per point and displacement component.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub flavor: Flavor,
    pub region: Region,
    pub values: Vec<f64>,
    pub weight: f64,
    /// length scale of the gradient term in the H1 form; defaults to the
    /// region's largest bounding-box side
    pub length_scale: Option<f64>,
}

impl MeasurementSet {
    pub fn region(flavor: Flavor, elements: Vec<usize>, values: Vec<f64>) -> Self {
        MeasurementSet { flavor, region: Region::Elements(elements), values, weight: 1.0, length_scale: None }
    }

    pub fn pointwise(points: Vec<[f64; 2]>, values: Vec<f64>) -> Self {
        MeasurementSet {
            flavor: Flavor::Pointwise,
            region: Region::Points(points),
            values,
            weight: 1.0,
            length_scale: None,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(Error::InvalidMeasurement(format!("weight must be positive, got {}", self.weight)));
        }
        match (&self.region, self.flavor) {
            (Region::Elements(els), Flavor::L2Region | Flavor::H1Region) => {
                if els.is_empty() {
                    return Err(Error::InvalidMeasurement("empty measurement region".into()));
                }
                if let Some(e) = els.iter().find(|&&e| e >= mesh.n_elements()) {
                    return Err(Error::InvalidMeasurement(format!("region references missing element {e}")));
                }
                if self.values.len() != mesh.n_dofs() {
                    return Err(Error::DimensionMismatch(format!(
                        "region data has {} values, mesh has {} dofs",
                        self.values.len(),
                        mesh.n_dofs()
                    )));
                }
            }
            (Region::Points(pts), Flavor::Pointwise) => {
                if pts.is_empty() {
                    return Err(Error::InvalidMeasurement("no measurement points".into()));
                }
                if self.values.len() != pts.len() * mesh.dofs_per_node() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} point values for {} points",
                        self.values.len(),
                        pts.len()
                    )));
                }
                let loc = PointLocator::new(mesh);
                if let Some(p) = pts.iter().find(|p| loc.locate(**p).is_none()) {
                    return Err(Error::InvalidMeasurement(format!("point {p:?} lies outside the domain")));
                }
            }
            _ => return Err(Error::InvalidMeasurement("flavor does not match region kind".into())),
        }
        if let Some(l) = self.length_scale {
            if !(l > 0.0) {
                return Err(Error::InvalidMeasurement("length scale must be positive".into()));
            }
        }
        Ok(())
    }

    fn region_extent(&self, mesh: &Mesh) -> f64 {
        let Region::Elements(els) = &self.region else { return 1.0 };
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for &e in els {
            for &n in mesh.element(e) {
                let p = mesh.node(n);
                b = [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])];
            }
        }
        (b[2] - b[0]).max(b[3] - b[1])
    }
}

/// Measurement matrix on the full dof set: L2 mass over the region, mass plus
/// scaled gradient form for H1, or a sum of rank-one point evaluations.
pub fn build_d_matrix(disc: &Discretization, ms: &MeasurementSet) -> Result<SparseMatrix> {
    let mesh = disc.mesh();
    ms.validate(mesh)?;
    let exec = Execution::Sequential;
    let d = match (&ms.region, ms.flavor) {
        (Region::Elements(els), Flavor::L2Region) => disc.region_mass(els, exec),
        (Region::Elements(els), Flavor::H1Region) => {
            let l = ms.length_scale.unwrap_or_else(|| ms.region_extent(mesh));
            add_scaled(&disc.region_mass(els, exec), l * l, &disc.region_gradient(els, exec))?
        }
        (Region::Points(pts), _) => {
            let rows = evaluation_rows(mesh, pts)?;
            let n = mesh.n_dofs();
            let mut t = Vec::new();
            for row in &rows {
                for &(i, a) in row {
                    for &(j, b) in row {
                        t.push((i, j, a * b));
                    }
                }
            }
            from_triplets((n, n), t)
        }
        _ => unreachable!("validated above"),
    };
    Ok(d.map(|v| v * ms.weight))
}

/// `d = D u_m`.
pub fn build_d_vector(d: &SparseMatrix, u_m: &[f64]) -> Result<Vec<f64>> {
    if d.cols() != u_m.len() {
        return Err(Error::DimensionMismatch(format!(
            "data vector of length {} for a {}-column measurement matrix",
            u_m.len(),
            d.cols()
        )));
    }
    Ok(matvec(d, u_m))
}

/// Evaluation functionals for each point and component, in value order.
fn evaluation_rows(mesh: &Mesh, pts: &[[f64; 2]]) -> Result<Vec<Vec<(usize, f64)>>> {
    let loc = PointLocator::new(mesh);
    let dpn = mesh.dofs_per_node();
    let mut rows = Vec::with_capacity(pts.len() * dpn);
    for p in pts {
        for c in 0..dpn {
            rows.push(
                loc.evaluation(*p, c)
                    .ok_or_else(|| Error::InvalidMeasurement(format!("point {p:?} lies outside the domain")))?,
            );
        }
    }
    Ok(rows)
}

/// Measurement matrix, data functional and data energy `D(u_m, u_m)` on the
/// full dof set, so that `D(u - u_m, u - u_m) = u'Du - 2 d'u + energy`.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    pub matrix: SparseMatrix,
    pub data: Vec<f64>,
    pub data_energy: f64,
}

impl MeasurementOperator {
    pub fn new(disc: &Discretization, ms: &MeasurementSet) -> Result<Self> {
        let matrix = build_d_matrix(disc, ms)?;
        let (data, data_energy) = match &ms.region {
            Region::Elements(_) => {
                let d = build_d_vector(&matrix, &ms.values)?;
                let e = crate::linalg::dot(&d, &ms.values);
                (d, e)
            }
            Region::Points(pts) => {
                let rows = evaluation_rows(disc.mesh(), pts)?;
                let mut d = vec![0.0; disc.n_dofs()];
                for (row, &v) in rows.iter().zip(&ms.values) {
                    for &(i, a) in row {
                        d[i] += ms.weight * a * v;
                    }
                }
                let e = ms.weight * ms.values.iter().map(|v| v * v).sum::<f64>();
                (d, e)
            }
        };
        Ok(MeasurementOperator { matrix, data, data_energy })
    }

    pub fn empty(n_dofs: usize) -> Self {
        MeasurementOperator { matrix: from_triplets((n_dofs, n_dofs), []), data: vec![0.0; n_dofs], data_energy: 0.0 }
    }

    /// `D(u - u_m, u - u_m)` for a full displacement vector.
    pub fn misfit_form(&self, u: &[f64]) -> f64 {
        let v = quad_form(&self.matrix, u, u) - 2.0 * crate::linalg::dot(&self.data, u) + self.data_energy;
        v.max(0.0)
    }
}

/// Nodal values of the fine-mesh interpolant at the coarse nodes.
pub fn interpolate_data(fine: &Mesh, fine_solution: &[f64], coarse: &Mesh) -> Result<Vec<f64>> {
    if fine.dim() != coarse.dim() {
        return Err(Error::DimensionMismatch("meshes of different dimension".into()));
    }
    if fine_solution.len() != fine.n_dofs() {
        return Err(Error::DimensionMismatch(format!(
            "fine solution has {} entries, fine mesh {} dofs",
            fine_solution.len(),
            fine.n_dofs()
        )));
    }
    sample_field(fine, fine_solution, coarse.coords())
        .map_err(|p| Error::InvalidMeasurement(format!("coarse node {p:?} lies outside the fine mesh")))
}

/// Values of a finite-element field at arbitrary points, one per component.
pub fn sample_field(mesh: &Mesh, field: &[f64], points: &[[f64; 2]]) -> std::result::Result<Vec<f64>, [f64; 2]> {
    let loc = PointLocator::new(mesh);
    let d = mesh.dofs_per_node();
    let mut out = Vec::with_capacity(points.len() * d);
    for &p in points {
        let (e, shape) = loc.locate(p).ok_or(p)?;
        for c in 0..d {
            out.push(mesh.element(e).iter().zip(&shape).map(|(&n, s)| s * field[n * d + c]).sum());
        }
    }
    Ok(out)
}

/// Seeded uniform points strictly inside `(a, b)`, sorted.
pub fn random_points_1d(seed: u64, count: usize, a: f64, b: f64) -> Vec<[f64; 2]> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<f64> = (0..count)
        .map(|_| loop {
            let x = rng.gen_range(a..b);
            if x > a {
                break x;
            }
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.into_iter().map(|x| [x, 0.0]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of the data-sufficiency check `H ∩ N(D) = {0}` with `H = N(B)`.
#[derive(Debug, Clone)]
pub struct KerReport {
    pub n_u: usize,
    pub n_w: usize,
    /// estimated dimension of the discrete null space of B
    pub null_dim: usize,
    /// smallest eigenvalue of D restricted to that null space
    pub min_d_on_null: Option<f64>,
    /// largest eigenvalue of D, the scale for the verdict
    pub d_scale: f64,
    /// smallest over largest singular value of B
    pub weakest_sigma_ratio: f64,
    /// D-form on the unit right singular vector of the smallest singular value
    pub d_on_weakest: f64,
    pub verdict: Verdict,
}

/// Dense null-space analysis of `B: U -> W'` (rows W, columns U) against the
/// measurement form `D` on U.
pub fn diagnose_assumption_ker(b: &SparseMatrix, d: &SparseMatrix) -> Result<KerReport> {
    let (n_w, n_u) = b.shape();
    if d.shape() != (n_u, n_u) {
        return Err(Error::DimensionMismatch(format!("B is {:?} but D is {:?}", b.shape(), d.shape())));
    }
    if n_u + n_w > DENSE_DIAGNOSTIC_LIMIT {
        return Err(Error::TooLarge { what: "assumption diagnostic", size: n_u + n_w, limit: DENSE_DIAGNOSTIC_LIMIT });
    }
    let bd = to_dense(b);
    let dd = to_dense(d);
    let d_eig = dd.clone().symmetric_eigen();
    let d_scale = d_eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let ns = null_space(&bd, NULL_TOLERANCE);
    let null_dim = ns.basis.ncols();
    let min_d_on_null = if null_dim > 0 {
        let h: &DMatrix<f64> = &ns.basis;
        let r = h.transpose() * &dd * h;
        let r = (&r + r.transpose()) * 0.5;
        Some(r.symmetric_eigen().eigenvalues.min())
    } else {
        None
    };
    let weak = DVector::from_column_slice(&ns.weakest);
    let d_on_weakest = if n_u > 0 { (weak.transpose() * &dd * &weak)[(0, 0)] } else { 0.0 };
    let tol = NULL_TOLERANCE * d_scale.max(f64::MIN_POSITIVE);
    let verdict = match min_d_on_null {
        Some(m) if m <= tol => Verdict::Fail,
        _ => Verdict::Pass,
    };
    Ok(KerReport {
        n_u,
        n_w,
        null_dim,
        min_d_on_null,
        d_scale,
        weakest_sigma_ratio: if ns.sigma_max > 0.0 { ns.sigma_weakest / ns.sigma_max } else { 0.0 },
        d_on_weakest,
        verdict,
    })
}

/// Orthonormal split of U into the range (`q0`, eigenvalues `d0`) and null
/// space (`q1`) of a symmetric PSD measurement matrix.
#[derive(Debug, Clone)]
pub struct MeasuredSplit {
    pub q0: DMatrix<f64>,
    pub d0: DVector<f64>,
    pub q1: DMatrix<f64>,
}

/// Eigenvalues at or below this fraction of the largest count as null.
pub const MEASURED_SPLIT_TOLERANCE: f64 = 1e-10;

impl MeasuredSplit {
    pub fn new(d: &DMatrix<f64>) -> Self {
        let n = d.nrows();
        let sym = (d + d.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let tol = MEASURED_SPLIT_TOLERANCE * lmax;
        let range: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > tol).collect();
        let null: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] <= tol).collect();
        let pick = |idx: &[usize]| {
            let mut m = DMatrix::zeros(n, idx.len());
            for (c, &k) in idx.iter().enumerate() {
                m.set_column(c, &eig.eigenvectors.column(k));
            }
            m
        };
        MeasuredSplit {
            q0: pick(&range),
            d0: DVector::from_iterator(range.len(), range.iter().map(|&k| eig.eigenvalues[k])),
            q1: pick(&null),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, MaterialField};
    use crate::linalg::to_dense;

    fn bar_disc(n: usize) -> Discretization {
        Discretization::new(Mesh::bar(n, 1.0).unwrap(), Execution::Sequential)
    }

    #[test]
    fn l2_over_whole_domain_is_mass() {
        let disc = bar_disc(6);
        let ms = MeasurementSet::region(Flavor::L2Region, (0..6).collect(), vec![0.0; 7]);
        let d = build_d_matrix(&disc, &ms).unwrap();
        let m = assemble_mass(disc.mesh(), &MaterialField::uniform_young(6, 1.0, 1.0).unwrap()).unwrap();
        assert!((to_dense(&d) - to_dense(&m)).amax() < 1e-15);
    }

    #[test]
    fn point_at_node_gives_single_entry() {
        let disc = bar_disc(4);
        let ms = MeasurementSet::pointwise(vec![[0.5, 0.0]], vec![1.0]);
        let d = to_dense(&build_d_matrix(&disc, &ms).unwrap());
        assert_eq!(d[(2, 2)], 1.0);
        assert_eq!(d.iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn points_on_sine_nodes_annihilate_it() {
        let omega = 3.0 * std::f64::consts::PI;
        let disc = bar_disc(30);
        let pts: Vec<[f64; 2]> = (1..=3).map(|k| [k as f64 * std::f64::consts::PI / omega, 0.0]).collect();
        let ms = MeasurementSet::pointwise(pts, vec![0.0; 3]);
        let d = build_d_matrix(&disc, &ms).unwrap();
        let ubar: Vec<f64> = disc.mesh().coords().iter().map(|p| (omega * p[0]).sin()).collect();
        assert!(matvec(&d, &ubar).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn data_vector_of_identity_region() {
        let d = from_triplets((3, 3), [(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        assert_eq!(build_d_vector(&d, &[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
        assert_eq!(build_d_vector(&d, &[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert!(build_d_vector(&d, &[0.0; 2]).is_err());
    }

    #[test]
    fn invalid_sets_rejected() {
        let disc = bar_disc(4);
        let empty = MeasurementSet::region(Flavor::L2Region, vec![], vec![0.0; 5]);
        assert!(build_d_matrix(&disc, &empty).is_err());
        let outside = MeasurementSet::pointwise(vec![[1.5, 0.0]], vec![0.0]);
        assert!(build_d_matrix(&disc, &outside).is_err());
    }

    #[test]
    fn interpolation_reproduces_linear_field() {
        let fine = Mesh::bar(37, 1.0).unwrap();
        let coarse = Mesh::bar(5, 1.0).unwrap();
        let u: Vec<f64> = fine.coords().iter().map(|p| p[0]).collect();
        let c = interpolate_data(&fine, &u, &coarse).unwrap();
        for (v, p) in c.iter().zip(coarse.coords()) {
            assert!((v - p[0]).abs() < 1e-14);
        }
        assert_eq!(interpolate_data(&fine, &u, &fine).unwrap(), u);
    }

    #[test]
    fn interpolation_error_is_second_order() {
        let fine = Mesh::bar(1000, 1.0).unwrap();
        let coarse = Mesh::bar(10, 1.0).unwrap();
        let u: Vec<f64> = fine.coords().iter().map(|p| (std::f64::consts::PI * p[0]).sin()).collect();
        let c = interpolate_data(&fine, &u, &coarse).unwrap();
        // coarse nodes are fine nodes here; the bound still holds at h_fine^2
        let bound = std::f64::consts::PI.powi(2) / 8.0 * 1e-6;
        for (v, p) in c.iter().zip(coarse.coords()) {
            assert!((v - (std::f64::consts::PI * p[0]).sin()).abs() <= bound);
        }
        let off = Mesh::new(1, vec![[0.0005, 0.0], [0.3333, 0.0], [0.9995, 0.0]], vec![0, 1, 1, 2], []).unwrap();
        let c = interpolate_data(&fine, &u, &off).unwrap();
        for (v, p) in c.iter().zip(off.coords()) {
            assert!((v - (std::f64::consts::PI * p[0]).sin()).abs() <= bound);
        }
    }

    #[test]
    fn random_points_are_interior_and_sorted() {
        let p = random_points_1d(3, 50, 0.0, 1.0);
        assert!(p.windows(2).all(|w| w[0][0] <= w[1][0]));
        assert!(p.iter().all(|x| x[0] > 0.0 && x[0] < 1.0));
        assert_eq!(p, random_points_1d(3, 50, 0.0, 1.0));
    }
}
