//! A discretized identification problem: mesh, frequency, boundary data,
//! loads and measurements, ready to be solved for any material field.

use crate::coupled::{
    assemble_coupled, solve_forward, solve_stationarity, CoupledSystem, ForwardSolution, StationaritySolution,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fem::{dynamic_stiffness, omega_inner_product, restrict, Discretization, DofMap, MaterialField, Space};
use crate::linalg::{matvec, SparseMatrix};
use crate::measurement::{diagnose_assumption_ker, KerReport, MeasurementOperator, MeasurementSet};

#[derive(Debug, Clone)]
pub struct Problem {
    disc: Discretization,
    omega: f64,
    u_map: DofMap,
    w_map: DofMap,
    load: Vec<f64>,
    dirichlet: Vec<f64>,
    measurement: MeasurementOperator,
    d_uu: SparseMatrix,
    exec: Execution,
}

/// Global matrices of one material field.
#[derive(Debug, Clone)]
pub struct Operators {
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    /// `K - omega^2 M` on the full dof set
    pub dynamic: SparseMatrix,
}

/// Stationarity solution at one material field, with full-length fields.
#[derive(Debug, Clone)]
pub struct State {
    pub kappa: f64,
    /// model displacement including Dirichlet lifting
    pub u: Vec<f64>,
    /// constitutive-error field, zero off W
    pub w: Vec<f64>,
    pub system: CoupledSystem,
    pub solution: StationaritySolution,
}

impl Problem {
    /// `load` is the full-dof load vector. The problem starts without
    /// measurements (D = 0); see [`Problem::with_measurements`].
    pub fn new(disc: Discretization, omega: f64, load: Vec<f64>) -> Result<Self> {
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!("angular frequency must be nonnegative, got {omega}")));
        }
        if load.len() != disc.n_dofs() {
            return Err(Error::DimensionMismatch(format!(
                "load has {} entries, mesh has {} dofs",
                load.len(),
                disc.n_dofs()
            )));
        }
        let measurement = MeasurementOperator::empty(disc.n_dofs());
        let u_map = DofMap::new(disc.mesh(), Space::U);
        let w_map = DofMap::new(disc.mesh(), Space::W);
        let d_uu = restrict(&measurement.matrix, &u_map, &u_map)?;
        let n = disc.n_dofs();
        Ok(Problem {
            disc,
            omega,
            u_map,
            w_map,
            load,
            dirichlet: vec![0.0; n],
            measurement,
            d_uu,
            exec: Execution::default(),
        })
    }

    pub fn with_measurements(mut self, ms: &MeasurementSet) -> Result<Self> {
        self.measurement = MeasurementOperator::new(&self.disc, ms)?;
        self.d_uu = restrict(&self.measurement.matrix, &self.u_map, &self.u_map)?;
        Ok(self)
    }

    /// Prescribed values on Dirichlet dofs (full vector; other entries ignored).
    pub fn with_dirichlet(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.disc.n_dofs() {
            return Err(Error::DimensionMismatch("Dirichlet vector length".into()));
        }
        let mut lift = vec![0.0; values.len()];
        for &i in self.u_map.constrained() {
            lift[i] = values[i];
        }
        self.dirichlet = lift;
        Ok(self)
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn u_map(&self) -> &DofMap {
        &self.u_map
    }

    pub fn w_map(&self) -> &DofMap {
        &self.w_map
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn dirichlet(&self) -> &[f64] {
        &self.dirichlet
    }

    pub fn measurement(&self) -> &MeasurementOperator {
        &self.measurement
    }

    /// Measurement form restricted to U.
    pub fn d_uu(&self) -> &SparseMatrix {
        &self.d_uu
    }

    /// True when no boundary part is left unspecified (W = U).
    pub fn has_complete_bcs(&self) -> bool {
        self.u_map.n_free() == self.w_map.n_free()
    }

    pub fn operators(&self, mat: &MaterialField) -> Result<Operators> {
        let stiffness = self.disc.stiffness(mat, self.exec)?;
        let mass = self.disc.mass(mat, self.exec)?;
        let dynamic = dynamic_stiffness(&stiffness, &mass, self.omega)?;
        Ok(Operators { stiffness, mass, dynamic })
    }

    /// `K + omega^2 M` on the full dof set.
    pub fn inner_product(&self, ops: &Operators) -> Result<SparseMatrix> {
        omega_inner_product(&ops.stiffness, &ops.mass, self.omega)
    }

    /// Coupled system for the free dofs, Dirichlet lifting moved to the
    /// right-hand side.
    pub fn coupled_system(&self, ops: &Operators, kappa: f64) -> Result<CoupledSystem> {
        let a = restrict(&ops.stiffness, &self.w_map, &self.w_map)?;
        let b = restrict(&ops.dynamic, &self.w_map, &self.u_map)?;
        let blift = matvec(&ops.dynamic, &self.dirichlet);
        let dlift = matvec(&self.measurement.matrix, &self.dirichlet);
        let f: Vec<f64> = self.w_map.free().iter().map(|&i| self.load[i] - blift[i]).collect();
        let data: Vec<f64> = self.u_map.free().iter().map(|&i| self.measurement.data[i] - dlift[i]).collect();
        assemble_coupled(a, b, self.d_uu.clone(), kappa, f, data)
    }

    pub fn solve(&self, mat: &MaterialField, kappa: f64) -> Result<State> {
        let ops = self.operators(mat)?;
        self.solve_with(&ops, kappa)
    }

    pub fn solve_with(&self, ops: &Operators, kappa: f64) -> Result<State> {
        let system = self.coupled_system(ops, kappa)?;
        let solution = solve_stationarity(&system)?;
        let (u, w) = self.full_fields(&solution.u, &solution.w);
        Ok(State { kappa, u, w, system, solution })
    }

    /// Full-length `(u, w)` from free-dof vectors, lifting included in `u`.
    pub fn full_fields(&self, u_free: &[f64], w_free: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut u = self.u_map.extend(u_free);
        for (ui, li) in u.iter_mut().zip(&self.dirichlet) {
            *ui += li;
        }
        (u, self.w_map.extend(w_free))
    }

    /// Data-sufficiency check of the measurements against the kernel of the
    /// coupling operator at `mat`.
    pub fn diagnose(&self, mat: &MaterialField) -> Result<KerReport> {
        let ops = self.operators(mat)?;
        let b = restrict(&ops.dynamic, &self.w_map, &self.u_map)?;
        diagnose_assumption_ker(&b, &self.d_uu)
    }

    /// Plain forward solve `B u = f` with the problem's Dirichlet data.
    pub fn forward(&self, mat: &MaterialField) -> Result<ForwardSolution> {
        if !self.has_complete_bcs() {
            return Err(Error::Unsupported(
                "forward solve needs complete boundary conditions (no free_unknown facets)".into(),
            ));
        }
        let ops = self.operators(mat)?;
        let blift = matvec(&ops.dynamic, &self.dirichlet);
        let rhs: Vec<f64> = self.load.iter().zip(&blift).map(|(f, b)| f - b).collect();
        let mut sol = solve_forward(&ops.dynamic, &rhs, &self.u_map)?;
        for (ui, li) in sol.u.iter_mut().zip(&self.dirichlet) {
            *ui += li;
        }
        Ok(sol)
    }
}
