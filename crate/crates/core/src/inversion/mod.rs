//! Material reconstruction by bounded quasi-Newton descent on the reduced
//! objective, and synthetic experiments to feed it.

mod lbfgs;
mod synthesis;

pub use lbfgs::{minimize_bounded, Iterate, LbfgsOptions, LbfgsResult, Sample, Termination};
pub use synthesis::{synthesize_experiment, Synthesis, SynthesisSpec, MIN_REFINEMENT};

use crate::error::{Error, Result};
use crate::fem::MaterialField;
use crate::objective::evaluate_with_gradient;
use crate::params::ParameterMap;
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    Linear,
    /// optimize log-moduli
    Log,
}

impl Scaling {
    pub fn name(self) -> &'static str {
        match self {
            Scaling::Linear => "linear",
            Scaling::Log => "log",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Some(Scaling::Linear),
            "log" => Some(Scaling::Log),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionConfig {
    pub kappa: f64,
    /// per reduced parameter, `0 < lower <= upper`
    pub bounds: Vec<(f64, f64)>,
    pub max_iterations: usize,
    /// on the projected gradient in the optimization variables
    pub gradient_tolerance: f64,
    pub decrease_tolerance: f64,
    pub scaling: Scaling,
    pub memory: usize,
    /// largest change of any optimization variable on the first step
    pub initial_step: f64,
}

impl InversionConfig {
    pub fn new(kappa: f64, bounds: Vec<(f64, f64)>) -> Self {
        InversionConfig {
            kappa,
            bounds,
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            decrease_tolerance: 0.0,
            scaling: Scaling::Log,
            memory: 10,
            initial_step: 0.1,
        }
    }

    pub fn uniform_bounds(kappa: f64, n: usize, lower: f64, upper: f64) -> Self {
        InversionConfig::new(kappa, vec![(lower, upper); n])
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!("kappa must be positive, got {}", self.kappa)));
        }
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch(format!("{} bounds for {n} parameters", self.bounds.len())));
        }
        if let Some((l, u)) = self.bounds.iter().find(|(l, u)| !(*l > 0.0 && l <= u && u.is_finite())) {
            return Err(Error::InvalidArgument(format!("bounds must satisfy 0 < lower <= upper, got ({l}, {u})")));
        }
        if self.memory == 0 {
            return Err(Error::InvalidArgument("memory must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub value: f64,
    pub ece: f64,
    pub misfit: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct InversionTrace {
    pub rows: Vec<TraceRow>,
    pub final_material: MaterialField,
    /// reduced parameters of the final material
    pub final_params: Vec<f64>,
    pub termination: Termination,
    pub evaluations: usize,
}

/// Minimizes the reduced objective over the free parameters of `map`,
/// starting from its base field. Every iterate stays inside the bounds.
pub fn invert(problem: &Problem, map: &ParameterMap, cfg: &InversionConfig) -> Result<InversionTrace> {
    cfg.validate(map.len())?;
    let p0 = map.initial();
    if let Some(i) = (0..p0.len()).find(|&i| p0[i] < cfg.bounds[i].0 || p0[i] > cfg.bounds[i].1) {
        return Err(Error::InvalidArgument(format!(
            "initial parameter {i} = {} outside bounds {:?}",
            p0[i], cfg.bounds[i]
        )));
    }
    let to_x = |p: f64| match cfg.scaling {
        Scaling::Linear => p,
        Scaling::Log => p.ln(),
    };
    let to_p = |x: f64| match cfg.scaling {
        Scaling::Linear => x,
        Scaling::Log => x.exp(),
    };
    let x0: Vec<f64> = p0.iter().map(|&p| to_x(p)).collect();
    let lower: Vec<f64> = cfg.bounds.iter().map(|b| to_x(b.0)).collect();
    let upper: Vec<f64> = cfg.bounds.iter().map(|b| to_x(b.1)).collect();
    let clamp = |i: usize, p: f64| p.clamp(cfg.bounds[i].0, cfg.bounds[i].1);
    let objective = |x: &[f64]| -> Result<Sample<(f64, f64)>> {
        // exp(ln p) may step a hair outside the box
        let p: Vec<f64> = x.iter().enumerate().map(|(i, &v)| clamp(i, to_p(v))).collect();
        let mat = map.expand(&p)?;
        let ev = evaluate_with_gradient(problem, &mat, cfg.kappa)?;
        let g = map.reduce(ev.gradient.as_deref().unwrap_or_default());
        let gradient = match cfg.scaling {
            Scaling::Linear => g,
            Scaling::Log => g.iter().zip(&p).map(|(gi, pi)| gi * pi).collect(),
        };
        Ok(Sample { value: ev.value, gradient, extra: (ev.ece, ev.misfit) })
    };
    let opts = LbfgsOptions {
        memory: cfg.memory,
        max_iterations: cfg.max_iterations,
        gradient_tolerance: cfg.gradient_tolerance,
        decrease_tolerance: cfg.decrease_tolerance,
        initial_step: cfg.initial_step,
        ..LbfgsOptions::default()
    };
    let res = minimize_bounded(objective, &x0, &lower, &upper, &opts)?;
    let rows = res
        .history
        .iter()
        .enumerate()
        .map(|(k, it)| TraceRow {
            iteration: k,
            value: it.value,
            ece: it.extra.0,
            misfit: it.extra.1,
            grad_norm: it.projected_gradient_norm,
            step: it.step,
        })
        .collect();
    let last = res.history.last().expect("history holds the start point");
    let final_params: Vec<f64> = last.x.iter().enumerate().map(|(i, &v)| clamp(i, to_p(v))).collect();
    Ok(InversionTrace {
        rows,
        final_material: map.expand(&final_params)?,
        final_params,
        termination: res.termination,
        evaluations: res.evaluations,
    })
}
