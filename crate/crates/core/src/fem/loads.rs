use super::assembly::Discretization;
use super::mesh::{Facet, Mesh};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::matvec;

/// Consistent load of a body force given by its nodal interpolant
/// (full dof vector).
pub fn nodal_field_load(disc: &Discretization, field: &[f64]) -> Result<Vec<f64>> {
    if field.len() != disc.n_dofs() {
        return Err(Error::DimensionMismatch(format!(
            "body force field has {} entries, mesh has {} dofs",
            field.len(),
            disc.n_dofs()
        )));
    }
    let m = disc.region_mass(&disc.all_elements(), Execution::Sequential);
    Ok(matvec(&m, field))
}

/// Constant body force per unit volume, one value per displacement component.
pub fn uniform_body_load(disc: &Discretization, value: &[f64]) -> Result<Vec<f64>> {
    let d = disc.mesh().dofs_per_node();
    if value.len() != d {
        return Err(Error::DimensionMismatch(format!("body force needs {d} components")));
    }
    let field: Vec<f64> = (0..disc.n_dofs()).map(|i| value[i % d]).collect();
    nodal_field_load(disc, &field)
}

/// Constant traction on boundary facets (a point force in 1D), lumped
/// consistently for linear edges.
pub fn traction_load(mesh: &Mesh, facets: &[Facet], traction: &[f64]) -> Result<Vec<f64>> {
    let d = mesh.dofs_per_node();
    if traction.len() != d {
        return Err(Error::DimensionMismatch(format!("traction needs {d} components")));
    }
    let mut f = vec![0.0; mesh.n_dofs()];
    for &facet in facets {
        if mesh.boundary_facets().binary_search(&facet).is_err() {
            return Err(Error::InvalidMesh(format!("{facet:?} is not a boundary facet")));
        }
        let nodes = facet.nodes();
        let share = mesh.facet_measure(facet) / nodes.len() as f64;
        for n in nodes {
            for c in 0..d {
                f[n * d + c] += share * traction[c];
            }
        }
    }
    Ok(f)
}
