use super::mesh::{Mesh, NodeClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// kinematically admissible: Dirichlet dofs constrained
    U,
    /// error field: Dirichlet and unknown-boundary dofs constrained
    W,
    /// nothing constrained
    Full,
}

/// Free/constrained split of the full dof set for one space.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    space: Space,
    free: Vec<usize>,
    constrained: Vec<usize>,
    position: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, space: Space) -> Self {
        let classes = mesh.node_classes();
        let d = mesh.dofs_per_node();
        let constrained_node = |c: NodeClass| match space {
            Space::Full => false,
            Space::U => c == NodeClass::Dirichlet,
            Space::W => c == NodeClass::Dirichlet || c == NodeClass::FreeUnknown,
        };
        let mut free = Vec::new();
        let mut constrained = Vec::new();
        for (n, &c) in classes.iter().enumerate() {
            for k in 0..d {
                if constrained_node(c) {
                    constrained.push(n * d + k);
                } else {
                    free.push(n * d + k);
                }
            }
        }
        DofMap::from_free(space, mesh.n_dofs(), free, constrained)
    }

    fn from_free(space: Space, n_full: usize, free: Vec<usize>, constrained: Vec<usize>) -> Self {
        let mut position = vec![None; n_full];
        for (k, &f) in free.iter().enumerate() {
            position[f] = Some(k);
        }
        DofMap { space, free, constrained, position }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn n_full(&self) -> usize {
        self.position.len()
    }

    pub fn position(&self, dof: usize) -> Option<usize> {
        self.position[dof]
    }

    pub fn restrict_vec(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Full vector with zeros on constrained dofs.
    pub fn extend(&self, free_values: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_full()];
        for (&i, &v) in self.free.iter().zip(free_values) {
            full[i] = v;
        }
        full
    }
}
