use nalgebra::DMatrix;

use super::dofmap::DofMap;
use super::element::{element_kernel, ElementKernel};
use super::material::{MaterialField, MaterialMode};
use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{add_scaled, from_triplets, submatrix, SparseMatrix};

/// A mesh together with its cached element kernels.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    kernels: Vec<ElementKernel>,
}

impl Discretization {
    pub fn new(mesh: Mesh, exec: Execution) -> Self {
        let kernels = exec.map(mesh.n_elements(), |e| element_kernel(&mesh, e));
        Discretization { mesh, kernels }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn kernel(&self, e: usize) -> &ElementKernel {
        &self.kernels[e]
    }

    pub fn kernels(&self) -> &[ElementKernel] {
        &self.kernels
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_dofs()
    }

    pub fn check_material(&self, mat: &MaterialField) -> Result<()> {
        if mat.n_elements() != self.mesh.n_elements() {
            return Err(Error::DimensionMismatch(format!(
                "material has {} elements, mesh has {}",
                mat.n_elements(),
                self.mesh.n_elements()
            )));
        }
        let expected = if self.mesh.dim() == 1 { MaterialMode::Young1d } else { MaterialMode::BulkShear2d };
        if mat.mode() != expected {
            return Err(Error::InvalidMaterial(format!("{:?} material on a {}D mesh", mat.mode(), self.mesh.dim())));
        }
        Ok(())
    }

    /// Sums element matrices over `elements`; local matrices are computed
    /// with `exec`, scattering is sequential so the result is deterministic.
    pub fn assemble<F>(&self, elements: &[usize], exec: Execution, local: F) -> SparseMatrix
    where
        F: Fn(usize) -> DMatrix<f64> + Sync + Send,
    {
        let locals = exec.map(elements.len(), |k| local(elements[k]));
        let n = self.n_dofs();
        let mut triplets = Vec::with_capacity(locals.iter().map(|m| m.len()).sum());
        for (&e, m) in elements.iter().zip(&locals) {
            let dofs = &self.kernels[e].dofs;
            for (a, &i) in dofs.iter().enumerate() {
                for (b, &j) in dofs.iter().enumerate() {
                    triplets.push((i, j, m[(a, b)]));
                }
            }
        }
        from_triplets((n, n), triplets)
    }

    pub fn all_elements(&self) -> Vec<usize> {
        (0..self.mesh.n_elements()).collect()
    }

    pub fn stiffness(&self, mat: &MaterialField, exec: Execution) -> Result<SparseMatrix> {
        self.check_material(mat)?;
        Ok(self.assemble(&self.all_elements(), exec, |e| self.kernels[e].stiffness(mat.element_params(e))))
    }

    pub fn mass(&self, mat: &MaterialField, exec: Execution) -> Result<SparseMatrix> {
        self.check_material(mat)?;
        Ok(self.assemble(&self.all_elements(), exec, |e| &self.kernels[e].mass * mat.density()[e]))
    }

    /// Stiffness of a parameter perturbation: `sum_p direction[p] * dK/dp`.
    pub fn parameter_stiffness(&self, npe: usize, direction: &[f64], exec: Execution) -> SparseMatrix {
        let elements: Vec<usize> = (0..self.mesh.n_elements())
            .filter(|&e| direction[e * npe..(e + 1) * npe].iter().any(|v| *v != 0.0))
            .collect();
        self.assemble(&elements, exec, |e| self.kernels[e].stiffness(&direction[e * npe..(e + 1) * npe]))
    }

    /// Unit-density mass over a subset of elements.
    pub fn region_mass(&self, elements: &[usize], exec: Execution) -> SparseMatrix {
        self.assemble(elements, exec, |e| self.kernels[e].mass.clone())
    }

    /// `(grad u, grad v)` over a subset of elements.
    pub fn region_gradient(&self, elements: &[usize], exec: Execution) -> SparseMatrix {
        self.assemble(elements, exec, |e| self.kernels[e].gradient.clone())
    }

    /// Element vector of a full dof vector.
    pub fn gather(&self, e: usize, full: &[f64]) -> Vec<f64> {
        self.kernels[e].dofs.iter().map(|&i| full[i]).collect()
    }
}

pub fn assemble_stiffness(mesh: &Mesh, mat: &MaterialField) -> Result<SparseMatrix> {
    Discretization::new(mesh.clone(), Execution::default()).stiffness(mat, Execution::default())
}

pub fn assemble_mass(mesh: &Mesh, mat: &MaterialField) -> Result<SparseMatrix> {
    Discretization::new(mesh.clone(), Execution::default()).mass(mat, Execution::default())
}

/// `K - omega^2 M`
pub fn dynamic_stiffness(k: &SparseMatrix, m: &SparseMatrix, omega: f64) -> Result<SparseMatrix> {
    add_scaled(k, -omega * omega, m)
}

/// `K + omega^2 M`, the matrix of the omega inner product.
pub fn omega_inner_product(k: &SparseMatrix, m: &SparseMatrix, omega: f64) -> Result<SparseMatrix> {
    add_scaled(k, omega * omega, m)
}

/// Submatrix on the free dofs of `rows` x `cols`.
pub fn restrict(a: &SparseMatrix, rows: &DofMap, cols: &DofMap) -> Result<SparseMatrix> {
    if a.rows() != rows.n_full() || a.cols() != cols.n_full() {
        return Err(Error::DimensionMismatch(format!(
            "matrix {:?} vs dof maps ({}, {})",
            a.shape(),
            rows.n_full(),
            cols.n_full()
        )));
    }
    Ok(submatrix(a, rows.free(), cols.free()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{BoundaryTag, Facet, Space};
    use crate::linalg::{matvec, symmetry_defect, to_dense};

    #[test]
    fn hundred_element_bar_interior_diagonal() {
        let m = Mesh::bar(100, 1.0).unwrap();
        let k = assemble_stiffness(&m, &MaterialField::uniform_young(100, 1.0, 1.0).unwrap()).unwrap();
        let d = to_dense(&k);
        // oracle: two hand-summed element matrices of E/h = 100
        assert!((d[(50, 50)] - 200.0).abs() < 1e-10);
        assert!((d[(50, 51)] + 100.0).abs() < 1e-10);
        assert!((d[(0, 0)] - 100.0).abs() < 1e-10);
        assert_eq!(d[(50, 52)], 0.0);
    }

    #[test]
    fn two_element_mass_interior_entry() {
        let m = Mesh::bar(2, 1.0).unwrap();
        let mm = assemble_mass(&m, &MaterialField::uniform_young(2, 1.0, 1.0).unwrap()).unwrap();
        let h = 0.5;
        assert!((to_dense(&mm)[(1, 1)] - 2.0 * h / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mass_row_sums_equal_rho_h() {
        let m = Mesh::bar(10, 1.0).unwrap();
        let mm = assemble_mass(&m, &MaterialField::uniform_young(10, 1.0, 3.0).unwrap()).unwrap();
        let rows = matvec(&mm, &[1.0; 11]);
        for r in &rows[1..10] {
            assert!((r - 3.0 * 0.1).abs() < 1e-14);
        }
    }

    #[test]
    fn dynamic_stiffness_one_element() {
        let m = Mesh::bar(1, 1.0).unwrap();
        let mat = MaterialField::uniform_young(1, 1.0, 1.0).unwrap();
        let k = assemble_stiffness(&m, &mat).unwrap();
        let mm = assemble_mass(&m, &mat).unwrap();
        assert_eq!(to_dense(&dynamic_stiffness(&k, &mm, 0.0).unwrap()), to_dense(&k));
        let b = to_dense(&dynamic_stiffness(&k, &mm, 1.0).unwrap());
        let oracle = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
            - DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) / 6.0;
        assert!((b - oracle).amax() < 1e-15);
        let s = to_dense(&omega_inner_product(&k, &mm, 1.0).unwrap());
        let diff = s - to_dense(&dynamic_stiffness(&k, &mm, 1.0).unwrap()) - to_dense(&mm) * 2.0;
        assert!(diff.amax() < 1e-15);
    }

    #[test]
    fn restrict_fixed_ends_single_dof() {
        let mut m = Mesh::bar(2, 1.0).unwrap();
        m.set_tag(Facet::point(0), BoundaryTag::Dirichlet).unwrap();
        m.set_tag(Facet::point(2), BoundaryTag::Dirichlet).unwrap();
        let k = assemble_stiffness(&m, &MaterialField::uniform_young(2, 1.0, 1.0).unwrap()).unwrap();
        let u = DofMap::new(&m, Space::U);
        let r = restrict(&k, &u, &u).unwrap();
        assert_eq!(r.shape(), (1, 1));
        assert!((to_dense(&r)[(0, 0)] - 4.0).abs() < 1e-14);
        let full = DofMap::new(&m, Space::Full);
        assert_eq!(to_dense(&restrict(&k, &full, &full).unwrap()), to_dense(&k));
        assert_eq!(symmetry_defect(&k), 0.0);
    }
}
