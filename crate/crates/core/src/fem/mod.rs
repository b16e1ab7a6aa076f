//! Meshes, materials, element kernels, dof maps and global assembly.

mod assembly;
mod dofmap;
mod element;
mod loads;
mod locate;
mod material;
mod mesh;
mod mesh_io;

pub use assembly::{
    assemble_mass, assemble_stiffness, dynamic_stiffness, omega_inner_product, restrict, Discretization,
};
pub use dofmap::{DofMap, Space};
pub use element::{element_kernel, quad_shape, ElementKernel, QuadPoint};
pub use loads::{nodal_field_load, traction_load, uniform_body_load};
pub use locate::PointLocator;
pub use material::{lame_lambda, plane_strain_basis, plane_strain_tensor, MaterialField, MaterialMode};
pub use mesh::{BoundaryTag, Facet, Mesh, NodeClass, Side};
pub use mesh_io::{load_mesh, read_mesh, save_mesh, write_mesh};
