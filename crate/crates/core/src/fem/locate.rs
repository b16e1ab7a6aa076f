use super::element::quad_shape;
use super::mesh::Mesh;

/// Finds the element containing a point and the shape function values there.
#[derive(Debug, Clone)]
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
    tol: f64,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let bb = mesh.bounding_box();
        let ne = mesh.n_elements();
        let (nx, ny) = if mesh.dim() == 1 {
            (ne.max(1), 1)
        } else {
            let s = (ne as f64).sqrt().ceil() as usize;
            (s.max(1), s.max(1))
        };
        let span = [(bb[2] - bb[0]).max(1e-300), (bb[3] - bb[1]).max(1e-300)];
        let cell = [span[0] / nx as f64, span[1] / ny as f64];
        let tol = 1e-10 * span[0].max(if mesh.dim() == 2 { span[1] } else { 0.0 });
        let mut loc = PointLocator {
            mesh,
            origin: [bb[0], bb[1]],
            cell,
            dims: [nx, ny],
            buckets: vec![Vec::new(); nx * ny],
            tol,
        };
        for e in 0..ne {
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for &n in mesh.element(e) {
                let p = mesh.node(n);
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            let (i0, j0) = loc.bucket_of([lo[0] - tol, lo[1] - tol]);
            let (i1, j1) = loc.bucket_of([hi[0] + tol, hi[1] + tol]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * nx + i].push(e);
                }
            }
        }
        loc
    }

    fn bucket_of(&self, p: [f64; 2]) -> (usize, usize) {
        let f = |k: usize| {
            let t = ((p[k] - self.origin[k]) / self.cell[k]).floor();
            (t.max(0.0) as usize).min(self.dims[k] - 1)
        };
        (f(0), if self.mesh.dim() == 1 { 0 } else { f(1) })
    }

    /// Element index and per-node shape values, or None outside the mesh.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, Vec<f64>)> {
        let bb = self.mesh.bounding_box();
        if p[0] < bb[0] - self.tol || p[0] > bb[2] + self.tol {
            return None;
        }
        if self.mesh.dim() == 2 && (p[1] < bb[1] - self.tol || p[1] > bb[3] + self.tol) {
            return None;
        }
        let (i, j) = self.bucket_of(p);
        for &e in &self.buckets[j * self.dims[0] + i] {
            if let Some(shape) = self.local_shape(e, p) {
                return Some((e, shape));
            }
        }
        None
    }

    fn local_shape(&self, e: usize, p: [f64; 2]) -> Option<Vec<f64>> {
        let nodes = self.mesh.element(e);
        if self.mesh.dim() == 1 {
            let (x0, x1) = (self.mesh.node(nodes[0])[0], self.mesh.node(nodes[1])[0]);
            if p[0] < x0 - self.tol || p[0] > x1 + self.tol {
                return None;
            }
            let t = ((p[0] - x0) / (x1 - x0)).clamp(0.0, 1.0);
            return Some(vec![1.0 - t, t]);
        }
        // Newton on the bilinear map
        let (mut xi, mut eta) = (0.0f64, 0.0f64);
        for _ in 0..30 {
            let n = quad_shape(xi, eta);
            let j = super::element::quad_jacobian(self.mesh, e, xi, eta);
            let mut r = [-p[0], -p[1]];
            for a in 0..4 {
                let q = self.mesh.node(nodes[a]);
                r[0] += n[a] * q[0];
                r[1] += n[a] * q[1];
            }
            // j rows are d/dxi, d/deta of (x, y); solve J^T delta = -r
            let jt = j.transpose();
            let inv = jt.try_inverse()?;
            let dxi = -(inv[(0, 0)] * r[0] + inv[(0, 1)] * r[1]);
            let deta = -(inv[(1, 0)] * r[0] + inv[(1, 1)] * r[1]);
            xi += dxi;
            eta += deta;
            if dxi.abs() + deta.abs() < 1e-14 {
                break;
            }
        }
        let slack = 1e-9;
        if xi.abs() > 1.0 + slack || eta.abs() > 1.0 + slack {
            return None;
        }
        Some(quad_shape(xi.clamp(-1.0, 1.0), eta.clamp(-1.0, 1.0)).to_vec())
    }

    /// Evaluation functional of displacement component `c` at `p`, as
    /// `(dof, weight)` pairs.
    pub fn evaluation(&self, p: [f64; 2], c: usize) -> Option<Vec<(usize, f64)>> {
        let (e, shape) = self.locate(p)?;
        let d = self.mesh.dofs_per_node();
        Some(self.mesh.element(e).iter().zip(shape).map(|(&n, s)| (n * d + c, s)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bar_point_between_nodes() {
        let m = Mesh::bar(4, 1.0).unwrap();
        let loc = PointLocator::new(&m);
        let (e, s) = loc.locate([0.3, 0.0]).unwrap();
        assert_eq!(e, 1);
        assert!((s[1] - 0.2).abs() < 1e-12);
        assert!(loc.locate([1.5, 0.0]).is_none());
        assert!(loc.locate([1.0, 0.0]).is_some());
    }

    #[test]
    fn quad_reproduces_bilinear_field() {
        let m = Mesh::rectangle(5, 3, [0.1, -0.2], [1.0, 0.6]).unwrap();
        let loc = PointLocator::new(&m);
        let f = |p: [f64; 2]| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
        for p in [[0.1, -0.2], [0.55, 0.1], [1.1, 0.4], [0.77, 0.01]] {
            let (e, s) = loc.locate(p).unwrap();
            let v: f64 = m.element(e).iter().zip(&s).map(|(&n, w)| w * f(m.node(n))).sum();
            assert!((v - f(p)).abs() < 1e-12, "{p:?}");
        }
        assert!(loc.locate([1.2, 0.0]).is_none());
    }
}
