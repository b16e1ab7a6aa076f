use nalgebra::{DMatrix, Matrix2};

use super::material::plane_strain_basis;
use super::mesh::Mesh;

const XI: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
const ETA: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

fn gauss2() -> [f64; 2] {
    let g = 1.0 / 3f64.sqrt();
    [-g, g]
}

/// Data at one quadrature point of an element.
#[derive(Debug, Clone)]
pub struct QuadPoint {
    /// quadrature weight times the Jacobian determinant
    pub weight: f64,
    pub position: [f64; 2],
    /// shape function values per element node
    pub shape: Vec<f64>,
    /// maps element dofs to Voigt strain (1 row in 1D, 3 rows in 2D)
    pub strain: DMatrix<f64>,
    /// maps element dofs to the full displacement gradient (1 or 4 rows)
    pub gradient: DMatrix<f64>,
}

/// Parameter-independent element matrices. The stiffness is linear in the
/// element parameters: `K_e = sum_k p_k * stiffness_basis[k]`.
#[derive(Debug, Clone)]
pub struct ElementKernel {
    pub dofs: Vec<usize>,
    pub stiffness_basis: Vec<DMatrix<f64>>,
    /// consistent mass at unit density
    pub mass: DMatrix<f64>,
    /// `(grad u, grad v)` over the element
    pub gradient: DMatrix<f64>,
    pub points: Vec<QuadPoint>,
}

impl ElementKernel {
    pub fn stiffness(&self, params: &[f64]) -> DMatrix<f64> {
        let mut k = &self.stiffness_basis[0] * params[0];
        for (b, p) in self.stiffness_basis.iter().zip(params).skip(1) {
            k += b * *p;
        }
        k
    }

    pub fn measure(&self) -> f64 {
        self.points.iter().map(|q| q.weight).sum()
    }
}

pub(crate) fn quad_jacobian(mesh: &Mesh, e: usize, xi: f64, eta: f64) -> Matrix2<f64> {
    let nodes = mesh.element(e);
    let mut j = Matrix2::zeros();
    for a in 0..4 {
        let p = mesh.node(nodes[a]);
        let dxi = 0.25 * XI[a] * (1.0 + ETA[a] * eta);
        let deta = 0.25 * ETA[a] * (1.0 + XI[a] * xi);
        j[(0, 0)] += dxi * p[0];
        j[(0, 1)] += dxi * p[1];
        j[(1, 0)] += deta * p[0];
        j[(1, 1)] += deta * p[1];
    }
    j
}

/// Bilinear shape functions at reference point `(xi, eta)`.
pub fn quad_shape(xi: f64, eta: f64) -> [f64; 4] {
    let mut n = [0.0; 4];
    for a in 0..4 {
        n[a] = 0.25 * (1.0 + XI[a] * xi) * (1.0 + ETA[a] * eta);
    }
    n
}

pub fn element_kernel(mesh: &Mesh, e: usize) -> ElementKernel {
    if mesh.dim() == 1 {
        bar_kernel(mesh, e)
    } else {
        quad_kernel(mesh, e)
    }
}

fn bar_kernel(mesh: &Mesh, e: usize) -> ElementKernel {
    let nodes = mesh.element(e);
    let (x0, x1) = (mesh.node(nodes[0])[0], mesh.node(nodes[1])[0]);
    let h = x1 - x0;
    let mut kb = DMatrix::zeros(2, 2);
    let mut mass = DMatrix::zeros(2, 2);
    let mut points = Vec::with_capacity(2);
    for g in gauss2() {
        let w = 0.5 * h;
        let shape = vec![0.5 * (1.0 - g), 0.5 * (1.0 + g)];
        let b = DMatrix::from_row_slice(1, 2, &[-1.0 / h, 1.0 / h]);
        kb += b.transpose() * &b * w;
        let nrow = DMatrix::from_row_slice(1, 2, &shape);
        mass += nrow.transpose() * &nrow * w;
        points.push(QuadPoint { weight: w, position: [x0 + shape[1] * h, 0.0], shape, strain: b.clone(), gradient: b });
    }
    ElementKernel { dofs: mesh.element_dofs(e), gradient: kb.clone(), stiffness_basis: vec![kb], mass, points }
}

fn quad_kernel(mesh: &Mesh, e: usize) -> ElementKernel {
    let nodes = mesh.element(e);
    let basis = plane_strain_basis();
    let pb: Vec<DMatrix<f64>> = basis.iter().map(|m| DMatrix::from_iterator(3, 3, m.iter().cloned())).collect();
    let mut kbs = vec![DMatrix::zeros(8, 8), DMatrix::zeros(8, 8)];
    let mut mass = DMatrix::zeros(8, 8);
    let mut grad = DMatrix::zeros(8, 8);
    let mut points = Vec::with_capacity(4);
    for eta in gauss2() {
        for xi in gauss2() {
            let j = quad_jacobian(mesh, e, xi, eta);
            let det = j.determinant();
            let jinv = j.try_inverse().expect("element Jacobian checked at construction");
            let shape = quad_shape(xi, eta);
            let mut dndx = [[0.0; 2]; 4];
            let mut pos = [0.0; 2];
            for a in 0..4 {
                let dxi = 0.25 * XI[a] * (1.0 + ETA[a] * eta);
                let deta = 0.25 * ETA[a] * (1.0 + XI[a] * xi);
                dndx[a][0] = jinv[(0, 0)] * dxi + jinv[(0, 1)] * deta;
                dndx[a][1] = jinv[(1, 0)] * dxi + jinv[(1, 1)] * deta;
                let p = mesh.node(nodes[a]);
                pos[0] += shape[a] * p[0];
                pos[1] += shape[a] * p[1];
            }
            let mut b = DMatrix::zeros(3, 8);
            let mut g = DMatrix::zeros(4, 8);
            let mut nm = DMatrix::zeros(2, 8);
            for a in 0..4 {
                let (dx, dy) = (dndx[a][0], dndx[a][1]);
                b[(0, 2 * a)] = dx;
                b[(1, 2 * a + 1)] = dy;
                b[(2, 2 * a)] = dy;
                b[(2, 2 * a + 1)] = dx;
                g[(0, 2 * a)] = dx;
                g[(1, 2 * a)] = dy;
                g[(2, 2 * a + 1)] = dx;
                g[(3, 2 * a + 1)] = dy;
                nm[(0, 2 * a)] = shape[a];
                nm[(1, 2 * a + 1)] = shape[a];
            }
            let w = det;
            for (kb, p) in kbs.iter_mut().zip(&pb) {
                *kb += b.transpose() * p * &b * w;
            }
            mass += nm.transpose() * &nm * w;
            grad += g.transpose() * &g * w;
            points.push(QuadPoint { weight: w, position: pos, shape: shape.to_vec(), strain: b, gradient: g });
        }
    }
    ElementKernel { dofs: mesh.element_dofs(e), stiffness_basis: kbs, mass, gradient: grad, points }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_bar_element() {
        let m = Mesh::bar(1, 1.0).unwrap();
        let k = element_kernel(&m, 0);
        assert_eq!(k.stiffness(&[1.0]), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) / 6.0;
        assert!((k.mass.clone() - expect).amax() < 1e-15);
    }

    #[test]
    fn quad_area_and_mass_total() {
        let m = Mesh::rectangle(1, 1, [0.0, 0.0], [2.0, 0.5]).unwrap();
        let k = element_kernel(&m, 0);
        assert!((k.measure() - 1.0).abs() < 1e-14);
        // sum of all mass entries per component equals the area
        let total: f64 = k.mass.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }
}
