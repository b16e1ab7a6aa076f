use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
    FreeUnknown,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Neumann => "neumann",
            BoundaryTag::FreeUnknown => "free_unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Some(BoundaryTag::Dirichlet),
            "neumann" => Some(BoundaryTag::Neumann),
            "free_unknown" | "free" | "unknown" => Some(BoundaryTag::FreeUnknown),
            _ => None,
        }
    }
}

/// Per-node boundary class, ordered by precedence: a node touching a
/// Dirichlet facet is Dirichlet, else one touching an unknown facet is
/// FreeUnknown, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeClass {
    Interior,
    Neumann,
    FreeUnknown,
    Dirichlet,
}

/// A boundary facet: one node in 1D, an edge (sorted node pair) in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Facet(pub usize, pub usize);

impl Facet {
    pub fn point(n: usize) -> Self {
        Facet(n, n)
    }

    pub fn edge(a: usize, b: usize) -> Self {
        Facet(a.min(b), a.max(b))
    }

    pub fn nodes(&self) -> Vec<usize> {
        if self.0 == self.1 {
            vec![self.0]
        } else {
            vec![self.0, self.1]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Some(Side::Left),
            "right" => Some(Side::Right),
            "bottom" => Some(Side::Bottom),
            "top" => Some(Side::Top),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    coords: Vec<[f64; 2]>,
    connectivity: Vec<usize>,
    boundary: Vec<Facet>,
    tags: BTreeMap<Facet, BoundaryTag>,
}

impl Mesh {
    /// Validates geometry and connectivity. `tags` must reference boundary
    /// facets; untagged boundary facets are FREE_UNKNOWN.
    pub fn new(
        dim: usize,
        coords: Vec<[f64; 2]>,
        connectivity: Vec<usize>,
        tags: impl IntoIterator<Item = (Facet, BoundaryTag)>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidMesh(format!("dimension must be 1 or 2, got {dim}")));
        }
        let npe = if dim == 1 { 2 } else { 4 };
        if coords.is_empty() || connectivity.is_empty() {
            return Err(Error::InvalidMesh("mesh has no nodes or no elements".into()));
        }
        if !connectivity.len().is_multiple_of(npe) {
            return Err(Error::InvalidMesh(format!(
                "connectivity length {} is not a multiple of {npe}",
                connectivity.len()
            )));
        }
        if let Some(&bad) = connectivity.iter().find(|&&n| n >= coords.len()) {
            return Err(Error::InvalidMesh(format!("element references missing node {bad}")));
        }
        if coords.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidMesh("non-finite node coordinate".into()));
        }
        if dim == 1 && coords.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::InvalidMesh("1D node coordinates must be strictly increasing".into()));
        }
        let mut mesh = Mesh { dim, coords, connectivity, boundary: Vec::new(), tags: BTreeMap::new() };
        for e in 0..mesh.n_elements() {
            mesh.check_element(e)?;
        }
        mesh.boundary = mesh.find_boundary();
        for (facet, tag) in tags {
            mesh.set_tag(facet, tag)?;
        }
        Ok(mesh)
    }

    fn check_element(&self, e: usize) -> Result<()> {
        let nodes = self.element(e);
        if self.dim == 1 {
            let h = self.coords[nodes[1]][0] - self.coords[nodes[0]][0];
            if h <= 0.0 {
                return Err(Error::InvalidMesh(format!("element {e} has nonpositive length {h}")));
            }
            return Ok(());
        }
        let g = 1.0 / 3f64.sqrt();
        for (xi, eta) in [(-g, -g), (g, -g), (g, g), (-g, g)] {
            let det = super::element::quad_jacobian(self, e, xi, eta).determinant();
            if det <= 0.0 || !det.is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "element {e} has nonpositive Jacobian {det:e} (nodes must be counter-clockwise)"
                )));
            }
        }
        Ok(())
    }

    fn local_facets(&self, e: usize) -> Vec<Facet> {
        let n = self.element(e);
        if self.dim == 1 {
            vec![Facet::point(n[0]), Facet::point(n[1])]
        } else {
            (0..4).map(|k| Facet::edge(n[k], n[(k + 1) % 4])).collect()
        }
    }

    fn find_boundary(&self) -> Vec<Facet> {
        let mut count: BTreeMap<Facet, usize> = BTreeMap::new();
        for e in 0..self.n_elements() {
            for f in self.local_facets(e) {
                *count.entry(f).or_default() += 1;
            }
        }
        count.into_iter().filter(|&(_, c)| c == 1).map(|(f, _)| f).collect()
    }

    /// Uniform bar on `[0, length]`, untagged.
    pub fn bar(n_elements: usize, length: f64) -> Result<Self> {
        if n_elements == 0 || length <= 0.0 {
            return Err(Error::InvalidMesh("bar needs at least one element and positive length".into()));
        }
        let h = length / n_elements as f64;
        let coords = (0..=n_elements).map(|i| [i as f64 * h, 0.0]).collect();
        let conn = (0..n_elements).flat_map(|e| [e, e + 1]).collect();
        Mesh::new(1, coords, conn, [])
    }

    /// Structured `nx x ny` quads on `[x0, x0+lx] x [y0, y0+ly]`, untagged.
    /// Node id `j * (nx + 1) + i`.
    pub fn rectangle(nx: usize, ny: usize, origin: [f64; 2], size: [f64; 2]) -> Result<Self> {
        if nx == 0 || ny == 0 || size[0] <= 0.0 || size[1] <= 0.0 {
            return Err(Error::InvalidMesh("rectangle needs nx, ny >= 1 and positive size".into()));
        }
        let (hx, hy) = (size[0] / nx as f64, size[1] / ny as f64);
        let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                coords.push([origin[0] + i as f64 * hx, origin[1] + j as f64 * hy]);
            }
        }
        let mut conn = Vec::with_capacity(4 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let a = j * (nx + 1) + i;
                conn.extend([a, a + 1, a + nx + 2, a + nx + 1]);
            }
        }
        Mesh::new(2, coords, conn, [])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.connectivity.len() / self.nodes_per_element()
    }

    pub fn nodes_per_element(&self) -> usize {
        if self.dim == 1 {
            2
        } else {
            4
        }
    }

    /// Displacement components per node.
    pub fn dofs_per_node(&self) -> usize {
        self.dim
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes() * self.dim
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn node(&self, n: usize) -> [f64; 2] {
        self.coords[n]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.nodes_per_element();
        &self.connectivity[e * k..(e + 1) * k]
    }

    pub fn element_dofs(&self, e: usize) -> Vec<usize> {
        let d = self.dim;
        self.element(e).iter().flat_map(|&n| (0..d).map(move |c| n * d + c)).collect()
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let nodes = self.element(e);
        let k = nodes.len() as f64;
        let mut c = [0.0, 0.0];
        for &n in nodes {
            c[0] += self.coords[n][0] / k;
            c[1] += self.coords[n][1] / k;
        }
        c
    }

    /// Longest element edge over the mesh.
    pub fn max_element_size(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| {
                let n = self.element(e);
                let k = n.len();
                (0..k).map(|i| dist(self.coords[n[i]], self.coords[n[(i + 1) % k]])).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Axis-aligned bounding box `[xmin, ymin, xmax, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &self.coords {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].min(p[1]);
            b[2] = b[2].max(p[0]);
            b[3] = b[3].max(p[1]);
        }
        b
    }

    pub fn boundary_facets(&self) -> &[Facet] {
        &self.boundary
    }

    /// Tag of a boundary facet, FREE_UNKNOWN when untagged.
    pub fn tag(&self, facet: Facet) -> BoundaryTag {
        self.tags.get(&facet).copied().unwrap_or(BoundaryTag::FreeUnknown)
    }

    pub fn explicit_tags(&self) -> impl Iterator<Item = (Facet, BoundaryTag)> + '_ {
        self.tags.iter().map(|(f, t)| (*f, *t))
    }

    pub fn set_tag(&mut self, facet: Facet, tag: BoundaryTag) -> Result<()> {
        if self.boundary.binary_search(&facet).is_err() {
            return Err(Error::InvalidMesh(format!("{facet:?} is not a boundary facet")));
        }
        if let Some(old) = self.tags.insert(facet, tag) {
            if old != tag {
                return Err(Error::InvalidMesh(format!("{facet:?} tagged both {} and {}", old.name(), tag.name())));
            }
        }
        Ok(())
    }

    /// Boundary facets lying on one side of the bounding box.
    pub fn side_facets(&self, side: Side) -> Vec<Facet> {
        let b = self.bounding_box();
        let scale = (b[2] - b[0]).max(b[3] - b[1]).max(1e-300);
        let tol = 1e-9 * scale;
        let on = |p: [f64; 2]| match side {
            Side::Left => (p[0] - b[0]).abs() <= tol,
            Side::Right => (p[0] - b[2]).abs() <= tol,
            Side::Bottom => (p[1] - b[1]).abs() <= tol,
            Side::Top => (p[1] - b[3]).abs() <= tol,
        };
        self.boundary.iter().copied().filter(|f| f.nodes().iter().all(|&n| on(self.coords[n]))).collect()
    }

    pub fn tag_side(&mut self, side: Side, tag: BoundaryTag) -> Result<()> {
        let facets = self.side_facets(side);
        if facets.is_empty() {
            return Err(Error::InvalidMesh(format!("no boundary facets on side {side:?}")));
        }
        for f in facets {
            self.set_tag(f, tag)?;
        }
        Ok(())
    }

    pub fn with_side(mut self, side: Side, tag: BoundaryTag) -> Result<Self> {
        self.tag_side(side, tag)?;
        Ok(self)
    }

    pub fn node_classes(&self) -> Vec<NodeClass> {
        let mut class = vec![NodeClass::Interior; self.n_nodes()];
        for &f in &self.boundary {
            let c = match self.tag(f) {
                BoundaryTag::Dirichlet => NodeClass::Dirichlet,
                BoundaryTag::Neumann => NodeClass::Neumann,
                BoundaryTag::FreeUnknown => NodeClass::FreeUnknown,
            };
            for n in f.nodes() {
                class[n] = class[n].max(c);
            }
        }
        class
    }

    /// Facet length (1 for a 1D point facet).
    pub fn facet_measure(&self, f: Facet) -> f64 {
        if f.0 == f.1 {
            1.0
        } else {
            dist(self.coords[f.0], self.coords[f.1])
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bar_boundary_is_two_end_points() {
        let m = Mesh::bar(4, 2.0).unwrap();
        assert_eq!(m.boundary_facets(), &[Facet::point(0), Facet::point(4)]);
        assert_eq!(m.tag(Facet::point(0)), BoundaryTag::FreeUnknown);
    }

    #[test]
    fn rectangle_boundary_edges() {
        let m = Mesh::rectangle(3, 2, [0.0, 0.0], [3.0, 2.0]).unwrap();
        assert_eq!(m.boundary_facets().len(), 10);
        assert_eq!(m.side_facets(Side::Bottom).len(), 3);
        assert_eq!(m.side_facets(Side::Left).len(), 2);
    }

    #[test]
    fn dirichlet_wins_at_corners() {
        let m = Mesh::rectangle(2, 2, [0.0, 0.0], [1.0, 1.0])
            .unwrap()
            .with_side(Side::Bottom, BoundaryTag::Dirichlet)
            .unwrap()
            .with_side(Side::Left, BoundaryTag::Neumann)
            .unwrap();
        let c = m.node_classes();
        assert_eq!(c[0], NodeClass::Dirichlet);
        assert_eq!(c[3], NodeClass::Neumann);
        // untagged right side
        assert_eq!(c[5], NodeClass::FreeUnknown);
        assert_eq!(c[4], NodeClass::Interior);
    }

    #[test]
    fn conflicting_tags_rejected() {
        let mut m = Mesh::bar(2, 1.0).unwrap();
        m.set_tag(Facet::point(0), BoundaryTag::Dirichlet).unwrap();
        assert!(m.set_tag(Facet::point(0), BoundaryTag::Neumann).is_err());
        assert!(m.set_tag(Facet::point(1), BoundaryTag::Neumann).is_err());
    }

    #[test]
    fn clockwise_quad_rejected() {
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(Mesh::new(2, coords.clone(), vec![0, 3, 2, 1], []).is_err());
        assert!(Mesh::new(2, coords, vec![0, 1, 2, 3], []).is_ok());
    }

    #[test]
    fn bad_references_rejected() {
        assert!(Mesh::new(1, vec![[0.0, 0.0], [1.0, 0.0]], vec![0, 2], []).is_err());
        assert!(Mesh::new(1, vec![[1.0, 0.0], [0.0, 0.0]], vec![0, 1], []).is_err());
        assert!(Mesh::new(1, vec![], vec![], []).is_err());
    }
}
