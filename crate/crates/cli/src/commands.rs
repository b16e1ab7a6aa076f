//! The seven commands, each turning a resolved config into tables.

use std::f64::consts::PI;

use mece::analysis::{
    frequency_grid, infsup_constant, infsup_sweep, kappa_sweep, landscape_scan, linear_grid, log_grid, loglog_slope,
    Regime,
};
use mece::experiments::{convergence_study, PointSet};
use mece::fem::{Discretization, MaterialField};
use mece::inversion::{invert, InversionConfig, Scaling};
use mece::measurement::{KerReport, Verdict};
use mece::params::ParameterMap;
use mece::Execution;

use crate::build::{self, Built};
use crate::config::{
    Command, GridSpec, InclusionMetricSpec, MeshSpec, ParametersSpec, PointSetSpec, ProblemSpec, RegimeSpec, RunConfig,
    ScalingSpec,
};
use crate::error::CliError;
use crate::output::{fmt_f64, Table};

/// Tables of a finished computation, plus a failure to report after they are
/// written (a diagnostic verdict the user asked to see).
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
    pub failure: Option<CliError>,
}

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub exec: Execution,
    pub override_diagnostics: bool,
}

impl Context<'_> {
    fn problem_spec(&self) -> Result<&ProblemSpec, CliError> {
        self.config.problem.as_ref().ok_or_else(|| CliError::Config("missing [problem] section".into()))
    }

    fn section<'s, T>(&self, s: &'s Option<T>, name: &str) -> Result<&'s T, CliError> {
        s.as_ref().ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
    }

    fn built(&self) -> Result<Built, CliError> {
        build::problem(self.problem_spec()?, self.config.seed, self.exec)
    }

    fn measured(&self) -> Result<Built, CliError> {
        if self.problem_spec()?.measurement.is_none() {
            return Err(CliError::Config("this command needs [problem.measurement]".into()));
        }
        self.built()
    }
}

pub fn run(command: Command, ctx: &Context) -> Result<Outcome, CliError> {
    match command {
        Command::Infsup => infsup(ctx),
        Command::Converge => converge(ctx),
        Command::Asymptotics => asymptotics(ctx),
        Command::Landscape => landscape(ctx),
        Command::Forward => forward(ctx),
        Command::Invert => inversion(ctx),
        Command::Diagnose => diagnose(ctx),
    }
}

fn positive(v: f64, name: &str) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn infsup_row(t: &mut Table, r: &mece::analysis::InfSupReport) {
    t.push_floats(&[r.frequency_hz, r.mesh_size_h, r.beta_h]);
}

fn infsup(ctx: &Context) -> Result<Outcome, CliError> {
    let p = ctx.problem_spec()?;
    let s = ctx.section(&ctx.config.infsup, "infsup")?;
    positive(s.start_hz, "start_hz")?;
    positive(s.step_hz, "step_hz")?;
    if s.stop_hz < s.start_hz {
        return Err(CliError::Config("stop_hz is below start_hz".into()));
    }
    let setup = |spec: &MeshSpec| -> Result<(Discretization, MaterialField), CliError> {
        let mesh = build::mesh(spec, &p.boundary)?;
        let (mat, _) = build::material(&p.material, &mesh)?;
        Ok((Discretization::new(mesh, ctx.exec), mat))
    };
    let (disc, mat) = setup(&p.mesh)?;
    let freqs = frequency_grid(s.start_hz, s.stop_hz, s.step_hz);
    let mut sweep = Table::new("infsup.csv", &["frequency_hz", "h", "beta_h"]);
    for r in infsup_sweep(&disc, &mat, &freqs, ctx.exec)? {
        infsup_row(&mut sweep, &r);
    }
    let mut tables = vec![sweep];
    if let Some(refine) = &s.refine {
        let MeshSpec::Bar { length, .. } = p.mesh else {
            return Err(CliError::Config("mesh refinement is defined for bars only".into()));
        };
        let omega = 2.0 * PI * positive(refine.frequency_hz, "refine.frequency_hz")?;
        let reports = ctx.exec.map(refine.elements.len(), |i| {
            let (disc, mat) = setup(&MeshSpec::Bar { elements: refine.elements[i], length })?;
            Ok::<_, CliError>(infsup_constant(&disc, &mat, omega)?)
        });
        let mut t = Table::new("infsup_refinement.csv", &["frequency_hz", "h", "beta_h"]);
        for r in reports {
            infsup_row(&mut t, &r?);
        }
        tables.push(t);
    }
    Ok(Outcome { tables, ..Default::default() })
}

fn converge(ctx: &Context) -> Result<Outcome, CliError> {
    let s = ctx.section(&ctx.config.converge, "converge")?;
    positive(s.kappa, "kappa")?;
    if s.elements.len() < 2 || s.elements.contains(&0) {
        return Err(CliError::Config("converge needs at least two nonzero element counts".into()));
    }
    if s.point_sets.is_empty() {
        return Err(CliError::Config("converge needs at least one point set".into()));
    }
    let mut summary = Table::new("converge_summary.csv", &["point_set", "slope", "growth"]);
    let mut tables = Vec::new();
    for set in &s.point_sets {
        let (name, points) = match set {
            PointSetSpec::Nodal => ("nodal", PointSet::Nodal),
            PointSetSpec::Random => ("random", PointSet::Random { seed: ctx.config.seed }),
        };
        let rows = convergence_study(&s.elements, s.mode, s.kappa, points, ctx.exec)?;
        let mut t = Table::new(&format!("converge_{name}.csv"), &["elements", "h", "e_ls"]);
        for r in &rows {
            t.push(vec![r.elements.to_string(), fmt_f64(r.h), fmt_f64(r.e_ls)]);
        }
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let es: Vec<f64> = rows.iter().map(|r| r.e_ls).collect();
        let slope = loglog_slope(&hs, &es).map(fmt_f64).unwrap_or_else(|_| "NaN".into());
        let growth = es[es.len() - 1] / es[0];
        summary.push(vec![name.into(), slope, fmt_f64(growth)]);
        tables.push(t);
    }
    tables.push(summary);
    Ok(Outcome { tables, ..Default::default() })
}

fn asymptotics(ctx: &Context) -> Result<Outcome, CliError> {
    let s = ctx.section(&ctx.config.asymptotics, "asymptotics")?;
    positive(s.kappa_min, "kappa_min")?;
    positive(s.kappa_max, "kappa_max")?;
    if s.count < 3 || s.kappa_max <= s.kappa_min {
        return Err(CliError::Config("asymptotics needs count >= 3 and kappa_min < kappa_max".into()));
    }
    let b = ctx.measured()?;
    let regime = match s.regime {
        RegimeSpec::Small => Regime::SmallKappa,
        RegimeSpec::Large => Regime::LargeKappa,
    };
    let report = kappa_sweep(&b.problem, &b.material, regime, &log_grid(s.kappa_min, s.kappa_max, s.count))?;
    let mut t = Table::new("asymptotics.csv", &["kappa", "error"]);
    for (k, e) in report.kappa_grid.iter().zip(&report.errors) {
        t.push_floats(&[*k, *e]);
    }
    let t = t.footer("fitted_slope", fmt_f64(report.fitted_slope));
    Ok(Outcome { tables: vec![t], warnings: b.warnings, failure: None })
}

fn grid(g: &GridSpec, name: &str) -> Result<Vec<f64>, CliError> {
    if g.count == 0 || g.lo > g.hi || !g.lo.is_finite() || !g.hi.is_finite() {
        return Err(CliError::Config(format!("{name} grid needs count >= 1 and lo <= hi")));
    }
    Ok(linear_grid(g.lo, g.hi, g.count))
}

fn landscape(ctx: &Context) -> Result<Outcome, CliError> {
    let s = ctx.section(&ctx.config.landscape, "landscape")?;
    let (g1, g2) = (grid(&s.e1, "e1")?, grid(&s.e2, "e2")?);
    if s.kappas.is_empty() {
        return Err(CliError::Config("landscape needs at least one kappa".into()));
    }
    for &k in &s.kappas {
        positive(k, "kappa")?;
    }
    let b = ctx.measured()?;
    if b.zones.len() != 2 || b.material.params_per_element() != 1 {
        return Err(CliError::Config("landscape scans a bar with exactly two material zones".into()));
    }
    let map = ParameterMap::zones(b.material.clone(), &b.zones)?;
    let scan = landscape_scan(&b.problem, &map, &g1, &g2, &s.kappas)?;
    let mut values = Table::new("landscape.csv", &["E1", "E2", "kappa", "lambda", "ece", "misfit"]);
    for c in &scan.cells {
        let (v, e, m) = c.eval.as_ref().map_or((f64::NAN, f64::NAN, f64::NAN), |ev| (ev.value, ev.ece, ev.misfit));
        values.push_floats(&[c.p1, c.p2, c.kappa, v, e, m]);
    }
    let mut metrics = Table::new(
        "landscape_metrics.csv",
        &["kappa", "local_minima", "nonnegative_fraction", "min_hessian_eig", "missing"],
    );
    let mut minima = Table::new("landscape_minima.csv", &["kappa", "E1", "E2"]);
    for m in scan.metrics() {
        let lowest = m.fd_hessian_min_eig.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let lowest = if lowest.is_finite() { fmt_f64(lowest) } else { "NaN".into() };
        metrics.push(vec![
            fmt_f64(m.kappa),
            m.local_minima.len().to_string(),
            fmt_f64(m.nonnegative_fraction),
            lowest,
            m.missing.to_string(),
        ]);
        for (i, j) in &m.local_minima {
            minima.push_floats(&[m.kappa, g1[*i], g2[*j]]);
        }
    }
    let missing: usize = scan.cells.iter().filter(|c| c.eval.is_none()).count();
    let mut warnings = b.warnings;
    if missing > 0 {
        warnings.push(format!("{missing} landscape points failed to solve and are written as NaN"));
    }
    Ok(Outcome { tables: vec![values, metrics, minima], warnings, failure: None })
}

fn forward(ctx: &Context) -> Result<Outcome, CliError> {
    let b = ctx.built()?;
    let sol = b.problem.forward(&b.material)?;
    let mut warnings = b.warnings;
    if sol.near_singular {
        let msg = format!("forward operator is near-resonant (rcond {:e})", sol.rcond);
        if !ctx.override_diagnostics {
            return Err(CliError::Diagnostics(format!("{msg}; move the frequency or pass --override-diagnostics")));
        }
        warnings.push(msg);
    }
    let mesh = b.problem.disc().mesh();
    let d = mesh.dofs_per_node();
    let names = ["node", "x", "y", "u_x", "u_y"];
    let mut field = Table::new("forward.csv", &names[..3 + d]);
    for n in 0..mesh.n_nodes() {
        let x = mesh.node(n);
        let mut row = vec![n.to_string(), fmt_f64(x[0]), fmt_f64(x[1])];
        row.extend((0..d).map(|c| fmt_f64(sol.u[n * d + c])));
        field.push(row);
    }
    let mut summary = Table::new("forward_summary.csv", &["omega", "rcond", "near_singular"]);
    summary.push(vec![fmt_f64(b.problem.omega()), fmt_f64(sol.rcond), sol.near_singular.to_string()]);
    Ok(Outcome { tables: vec![field, summary], warnings, failure: None })
}

fn ker_table(r: &KerReport) -> Table {
    let mut t = Table::new(
        "diagnose.csv",
        &["n_u", "n_w", "null_dim", "min_d_on_null", "d_scale", "weakest_sigma_ratio", "d_on_weakest", "verdict"],
    );
    t.push(vec![
        r.n_u.to_string(),
        r.n_w.to_string(),
        r.null_dim.to_string(),
        r.min_d_on_null.map_or_else(|| "NaN".into(), fmt_f64),
        fmt_f64(r.d_scale),
        fmt_f64(r.weakest_sigma_ratio),
        fmt_f64(r.d_on_weakest),
        verdict_name(r.verdict).into(),
    ]);
    t
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
    }
}

const INSUFFICIENT: &str = "the measurements do not control the null space of the dynamic operator";

fn diagnose(ctx: &Context) -> Result<Outcome, CliError> {
    let b = ctx.measured()?;
    let report = b.problem.diagnose(&b.material)?;
    let mut out = Outcome { tables: vec![ker_table(&report)], warnings: b.warnings, failure: None };
    if report.verdict == Verdict::Fail {
        if ctx.override_diagnostics {
            out.warnings.push(format!("diagnostic FAIL overridden: {INSUFFICIENT}"));
        } else {
            out.failure = Some(CliError::Diagnostics(INSUFFICIENT.into()));
        }
    }
    Ok(out)
}

/// Runs the data-sufficiency check before an inversion; a failing or
/// impossible check stops the run unless overridden.
fn precheck(ctx: &Context, b: &Built, warnings: &mut Vec<String>) -> Result<(), CliError> {
    let problem = match b.problem.diagnose(&b.material) {
        Ok(r) if r.verdict == Verdict::Pass => return Ok(()),
        Ok(_) => INSUFFICIENT.to_string(),
        Err(e @ mece::Error::TooLarge { .. }) => format!("diagnostic could not run: {e}"),
        Err(e) => return Err(e.into()),
    };
    if ctx.override_diagnostics {
        warnings.push(format!("diagnostic overridden: {problem}"));
        Ok(())
    } else {
        Err(CliError::Diagnostics(format!("{problem}; pass --override-diagnostics to invert anyway")))
    }
}

fn inversion(ctx: &Context) -> Result<Outcome, CliError> {
    let s = ctx.section(&ctx.config.invert, "invert")?;
    let b = ctx.measured()?;
    let mut warnings = b.warnings.clone();
    precheck(ctx, &b, &mut warnings)?;
    let map = match s.parameters {
        ParametersSpec::Elements => ParameterMap::per_element(b.material.clone()),
        ParametersSpec::Measured => match &b.measured {
            Some(region) => ParameterMap::elements(b.material.clone(), region)?,
            None => ParameterMap::per_element(b.material.clone()),
        },
        ParametersSpec::Zones => {
            if b.zones.is_empty() {
                return Err(CliError::Config("parameters = \"zones\" needs material zones".into()));
            }
            ParameterMap::zones(b.material.clone(), &b.zones)?
        }
    };
    let mut cfg = InversionConfig::uniform_bounds(s.kappa, map.len(), s.bounds[0], s.bounds[1]);
    cfg.max_iterations = s.max_iterations;
    cfg.gradient_tolerance = s.gradient_tolerance;
    cfg.decrease_tolerance = s.decrease_tolerance;
    cfg.memory = s.memory;
    cfg.initial_step = s.initial_step;
    cfg.scaling = match s.scaling {
        ScalingSpec::Linear => Scaling::Linear,
        ScalingSpec::Log => Scaling::Log,
    };
    let trace = invert(&b.problem, &map, &cfg)?;

    let mut rows = Table::new("invert_trace.csv", &["iteration", "value", "ece", "misfit", "grad_norm", "step"]);
    for r in &trace.rows {
        let mut row = vec![r.iteration.to_string()];
        row.extend([r.value, r.ece, r.misfit, r.grad_norm, r.step].map(fmt_f64));
        rows.push(row);
    }
    let mat = &trace.final_material;
    let mesh = b.problem.disc().mesh();
    let mut header = vec!["element", "cx", "cy"];
    header.extend(mat.mode().param_names());
    let mut field = Table::new("invert_material.csv", &header);
    for e in 0..mat.n_elements() {
        let c = mesh.centroid(e);
        let mut row = vec![e.to_string(), fmt_f64(c[0]), fmt_f64(c[1])];
        row.extend(mat.element_params(e).iter().map(|&v| fmt_f64(v)));
        field.push(row);
    }
    let last = trace.rows.last();
    let mut summary =
        Table::new("invert_summary.csv", &["termination", "iterations", "evaluations", "parameters", "final_value"]);
    summary.push(vec![
        trace.termination.name().into(),
        last.map_or(0, |r| r.iteration).to_string(),
        trace.evaluations.to_string(),
        map.len().to_string(),
        last.map_or_else(|| "NaN".into(), |r| fmt_f64(r.value)),
    ]);
    let mut tables = vec![rows, field, summary];
    if let Some(inc) = &s.inclusion {
        tables.push(inclusion_summary(inc, mesh, mat)?);
    }
    Ok(Outcome { tables, warnings, failure: None })
}

/// Mean recovered moduli over elements entirely inside or outside the circle,
/// with relative errors against the targets.
fn inclusion_summary(
    inc: &InclusionMetricSpec,
    mesh: &mece::fem::Mesh,
    mat: &MaterialField,
) -> Result<Table, CliError> {
    let k = mat.params_per_element();
    if inc.background.len() != k || inc.inclusion.len() != k {
        return Err(CliError::Config(format!("inclusion targets need {k} values each")));
    }
    let inside = |p: [f64; 2]| (p[0] - inc.centre[0]).powi(2) + (p[1] - inc.centre[1]).powi(2) <= inc.radius.powi(2);
    let (mut bg, mut ic) = (Vec::new(), Vec::new());
    for e in 0..mesh.n_elements() {
        let nodes = mesh.element(e);
        if nodes.iter().all(|&n| inside(mesh.node(n))) {
            ic.push(e);
        } else if nodes.iter().all(|&n| !inside(mesh.node(n))) {
            bg.push(e);
        }
    }
    if bg.is_empty() || ic.is_empty() {
        return Err(CliError::Config("inclusion circle leaves one region without elements".into()));
    }
    let mean = |els: &[usize], p: usize| els.iter().map(|&e| mat.param(e, p)).sum::<f64>() / els.len() as f64;
    let mut t = Table::new(
        "inclusion_summary.csv",
        &["parameter", "background_mean", "inclusion_mean", "background_error", "inclusion_error", "contrast_error"],
    );
    for (p, name) in mat.mode().param_names().iter().enumerate() {
        let (mb, mi) = (mean(&bg, p), mean(&ic, p));
        let (tb, ti) = (inc.background[p], inc.inclusion[p]);
        let rel = |got: f64, want: f64| (got - want).abs() / want.abs();
        let mut row = vec![name.to_string()];
        row.extend([mb, mi, rel(mb, tb), rel(mi, ti), rel(mi / mb, ti / tb)].map(fmt_f64));
        t.push(row);
    }
    Ok(t)
}
