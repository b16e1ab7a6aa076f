//! Reduced parameterizations of a material field.
//!
//! Each reduced parameter drives a group of entries of the per-element
//! parameter vector; entries in no group stay at their base value.

use crate::error::{Error, Result};
use crate::fem::MaterialField;

#[derive(Debug, Clone)]
pub struct ParameterMap {
    base: MaterialField,
    groups: Vec<Vec<usize>>,
}

impl ParameterMap {
    pub fn new(base: MaterialField, groups: Vec<Vec<usize>>) -> Result<Self> {
        let n = base.params().len();
        let mut seen = vec![false; n];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::InvalidArgument("empty parameter group".into()));
            }
            for &i in g {
                if i >= n {
                    return Err(Error::InvalidArgument(format!("parameter index {i} out of range ({n})")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidArgument(format!("parameter {i} belongs to two groups")));
                }
            }
        }
        Ok(ParameterMap { base, groups })
    }

    /// Every element parameter free.
    pub fn per_element(base: MaterialField) -> Self {
        let groups = (0..base.params().len()).map(|i| vec![i]).collect();
        ParameterMap { base, groups }
    }

    /// Every parameter of the listed elements free, the rest frozen.
    pub fn elements(base: MaterialField, elements: &[usize]) -> Result<Self> {
        let npe = base.params_per_element();
        let groups = elements.iter().flat_map(|&e| (0..npe).map(move |k| vec![e * npe + k])).collect();
        ParameterMap::new(base, groups)
    }

    /// One reduced parameter per (zone, element parameter), zones given by
    /// element lists.
    pub fn zones(base: MaterialField, zones: &[Vec<usize>]) -> Result<Self> {
        let npe = base.params_per_element();
        let mut groups = Vec::new();
        for z in zones {
            for k in 0..npe {
                groups.push(z.iter().map(|&e| e * npe + k).collect());
            }
        }
        ParameterMap::new(base, groups)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn base(&self) -> &MaterialField {
        &self.base
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Reduced vector of the base field (first member of each group).
    pub fn initial(&self) -> Vec<f64> {
        self.groups.iter().map(|g| self.base.params()[g[0]]).collect()
    }

    pub fn expand(&self, reduced: &[f64]) -> Result<MaterialField> {
        if reduced.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} reduced parameters for a map of {}",
                reduced.len(),
                self.len()
            )));
        }
        let mut p = self.base.params().to_vec();
        for (g, &v) in self.groups.iter().zip(reduced) {
            for &i in g {
                p[i] = v;
            }
        }
        self.base.with_params(p)
    }

    /// Chain rule from the full parameter gradient to the reduced one.
    pub fn reduce(&self, full: &[f64]) -> Vec<f64> {
        self.groups.iter().map(|g| g.iter().map(|&i| full[i]).sum()).collect()
    }

    /// Full-length direction of a reduced direction.
    pub fn lift(&self, reduced: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.base.params().len()];
        for (g, &v) in self.groups.iter().zip(reduced) {
            for &i in g {
                d[i] = v;
            }
        }
        d
    }
}
