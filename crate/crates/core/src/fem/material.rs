use nalgebra::Matrix3;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaterialMode {
    /// one Young's modulus per element
    Young1d,
    /// bulk and shear modulus per element, plane strain
    BulkShear2d,
}

impl MaterialMode {
    pub fn params_per_element(self) -> usize {
        match self {
            MaterialMode::Young1d => 1,
            MaterialMode::BulkShear2d => 2,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            MaterialMode::Young1d => &["E"],
            MaterialMode::BulkShear2d => &["B", "G"],
        }
    }
}

/// Element-wise constant moduli and density. Parameter `k` of element `e`
/// sits at index `e * params_per_element + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    mode: MaterialMode,
    params: Vec<f64>,
    density: Vec<f64>,
}

impl MaterialField {
    pub fn new(mode: MaterialMode, params: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let k = mode.params_per_element();
        if params.len() != k * density.len() {
            return Err(Error::InvalidMaterial(format!("{} parameters for {} elements", params.len(), density.len())));
        }
        let field = MaterialField { mode, params, density };
        field.check()?;
        Ok(field)
    }

    pub fn young(modulus: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        MaterialField::new(MaterialMode::Young1d, modulus, density)
    }

    pub fn bulk_shear(bulk: &[f64], shear: &[f64], density: Vec<f64>) -> Result<Self> {
        if bulk.len() != shear.len() {
            return Err(Error::InvalidMaterial("bulk and shear lengths differ".into()));
        }
        let params = bulk.iter().zip(shear).flat_map(|(&b, &g)| [b, g]).collect();
        MaterialField::new(MaterialMode::BulkShear2d, params, density)
    }

    pub fn uniform_young(n_elements: usize, e: f64, rho: f64) -> Result<Self> {
        MaterialField::young(vec![e; n_elements], vec![rho; n_elements])
    }

    pub fn uniform_bulk_shear(n_elements: usize, b: f64, g: f64, rho: f64) -> Result<Self> {
        MaterialField::bulk_shear(&vec![b; n_elements], &vec![g; n_elements], vec![rho; n_elements])
    }

    fn check(&self) -> Result<()> {
        if let Some((i, p)) = self.params.iter().enumerate().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidMaterial(format!("parameter {i} must be positive, got {p}")));
        }
        if let Some((e, r)) = self.density.iter().enumerate().find(|(_, r)| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidMaterial(format!("density of element {e} must be positive, got {r}")));
        }
        Ok(())
    }

    pub fn mode(&self) -> MaterialMode {
        self.mode
    }

    pub fn n_elements(&self) -> usize {
        self.density.len()
    }

    pub fn params_per_element(&self) -> usize {
        self.mode.params_per_element()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn param(&self, e: usize, k: usize) -> f64 {
        self.params[e * self.params_per_element() + k]
    }

    pub fn element_params(&self, e: usize) -> &[f64] {
        let k = self.params_per_element();
        &self.params[e * k..(e + 1) * k]
    }

    /// Same mode and density with new parameters.
    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        MaterialField::new(self.mode, params, self.density.clone())
    }

    /// Elasticity matrix of element `e` in Voigt form (1x1 block in 1D).
    pub fn tensor(&self, e: usize) -> Matrix3<f64> {
        match self.mode {
            MaterialMode::Young1d => {
                let mut c = Matrix3::zeros();
                c[(0, 0)] = self.param(e, 0);
                c
            }
            MaterialMode::BulkShear2d => plane_strain_tensor(self.param(e, 0), self.param(e, 1)),
        }
    }
}

/// Lame's first parameter from the 3D bulk and shear moduli.
pub fn lame_lambda(bulk: f64, shear: f64) -> f64 {
    bulk - 2.0 * shear / 3.0
}

/// Plane-strain elasticity matrix in Voigt order `(exx, eyy, 2exy)`:
/// `C:e = 2G dev(e) + (B + G/3) tr(e) I` with `dev` the 2D deviator.
pub fn plane_strain_tensor(bulk: f64, shear: f64) -> Matrix3<f64> {
    let [db, dg] = plane_strain_basis();
    db * bulk + dg * shear
}

/// Derivatives of the plane-strain matrix with respect to B and G. The matrix
/// is linear in (B, G), so these are also its basis.
pub fn plane_strain_basis() -> [Matrix3<f64>; 2] {
    let db = Matrix3::new(1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0);
    let dg = Matrix3::new(4.0 / 3.0, -2.0 / 3.0, 0.0, -2.0 / 3.0, 4.0 / 3.0, 0.0, 0.0, 0.0, 1.0);
    [db, dg]
}
