//! Acceptance checks, one PASS/FAIL line per criterion. Exits nonzero when
//! any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mece::analysis::{kappa_sweep, landscape_scan, linear_grid, log_grid, loglog_slope, Regime};
use mece::experiments::{
    convergence_study, hessian_positivity, inclusion_experiment, infsup_study, large_kappa_bar, oracle_errors,
    oracle_instance, resonance_check, small_kappa_bar, summarize_inclusion, two_zone_bar, InclusionSpec, InfSupSetup,
    PointSet,
};
use mece::inversion::invert;
use mece::{Execution, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Outcome>;

const EXEC: Execution = Execution::Parallel;

fn infsup() -> Result<Outcome> {
    let study = infsup_study(&InfSupSetup::default(), EXEC)?;
    let betas: Vec<String> = study.refinement.iter().map(|r| format!("{:.6e}", r.beta_h)).collect();
    Ok(Outcome {
        pass: study.min_beta() > 1e-6 && study.is_cauchy(),
        detail: format!(
            "min beta_h over {} frequencies = {:.3e}; beta_h at 20 Hz for h, h/2, h/4 = [{}]",
            study.sweep.len(),
            study.min_beta(),
            betas.join(", ")
        ),
    })
}

fn dichotomy() -> Result<Outcome> {
    let elements = [16, 32, 64, 128, 256];
    let random = convergence_study(&elements, 3, 1.0, PointSet::Random { seed: 2024 }, EXEC)?;
    let nodal = convergence_study(&elements, 3, 1.0, PointSet::Nodal, EXEC)?;
    let hs: Vec<f64> = random.iter().map(|r| r.h).collect();
    let es: Vec<f64> = random.iter().map(|r| r.e_ls).collect();
    let slope = loglog_slope(&hs, &es)?;
    let growth = nodal.last().unwrap().e_ls / nodal[0].e_ls;
    Ok(Outcome {
        pass: (slope - 2.0).abs() <= 0.3 && growth >= 10.0,
        detail: format!(
            "random points slope = {slope:.4}; nodal points e_ls {:.3e} -> {:.3e} (factor {growth:.1})",
            nodal[0].e_ls,
            nodal.last().unwrap().e_ls
        ),
    })
}

fn small_kappa() -> Result<Outcome> {
    let bar = small_kappa_bar(50, 3, EXEC)?;
    let report = kappa_sweep(&bar.problem, &bar.material, Regime::SmallKappa, &log_grid(1e-6, 1e-2, 9))?;
    Ok(Outcome {
        pass: (0.9..=1.1).contains(&report.fitted_slope),
        detail: format!("slope vs kappa = {:.4}", report.fitted_slope),
    })
}

fn large_kappa() -> Result<Outcome> {
    let bar = large_kappa_bar(40, 5, EXEC)?;
    let report = kappa_sweep(&bar.problem, &bar.material, Regime::LargeKappa, &log_grid(1e2, 1e6, 9))?;
    Ok(Outcome {
        pass: (0.9..=1.1).contains(&report.fitted_slope),
        detail: format!("slope vs 1/kappa = {:.4}", report.fitted_slope),
    })
}

fn oracles() -> Result<Outcome> {
    let errors = EXEC
        .map(20, |i| oracle_instance(i as u64 + 1, 10).and_then(|inst| oracle_errors(&inst)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let worst = |f: fn(&mece::experiments::OracleErrors) -> f64| errors.iter().map(f).fold(0.0, f64::max);
    let (g, h, s) = (worst(|e| e.gradient), worst(|e| e.hessian_fd), worst(|e| e.sign_revealing));
    Ok(Outcome {
        pass: g <= 1e-6 && h <= 1e-4 && s <= 1e-8,
        detail: format!("worst over 20 instances: gradient {g:.2e}, hessian {h:.2e}, sign-revealing {s:.2e}"),
    })
}

fn convexification() -> Result<Outcome> {
    let bar = two_zone_bar(100, 3.0, [1.0, 1.0], EXEC)?;
    let grid = linear_grid(0.5, 2.5, 41);
    let scan = landscape_scan(&bar.problem, &bar.map, &grid, &grid, &[1e-3, 1e5])?;
    let metrics = scan.metrics();
    let (small, large) = (&metrics[0], &metrics[1]);
    let cell = grid[1] - grid[0];
    let near_truth = large.local_minima.len() == 1 && {
        let (i, j) = large.local_minima[0];
        (grid[i] - bar.truth[0]).abs() <= cell + 1e-12 && (grid[j] - bar.truth[1]).abs() <= cell + 1e-12
    };
    let minima: Vec<String> = large.local_minima.iter().map(|&(i, j)| format!("({}, {})", grid[i], grid[j])).collect();
    Ok(Outcome {
        pass: small.local_minima.len() >= 2
            && near_truth
            && large.nonnegative_fraction >= 0.95
            && small.missing + large.missing == 0,
        detail: format!(
            "minima at kappa=1e-3: {}; at kappa=1e5: {} [{}]; nonnegative Hessian fraction {:.4}",
            small.local_minima.len(),
            large.local_minima.len(),
            minima.join(" "),
            large.nonnegative_fraction
        ),
    })
}

fn hessian_sign() -> Result<Outcome> {
    let bar = two_zone_bar(100, 3.0, [1.0, 1.0], EXEC)?;
    let rows = hessian_positivity(&bar, [1.8, 0.6], &[1e4, 1e5, 1e6], 10, 77)?;
    let min = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        pass: rows.len() == 30 && rows.iter().all(|r| r.2 > 0.0),
        detail: format!("smallest of {} quadratic forms = {min:.4e}", rows.len()),
    })
}

fn reconstruction() -> Result<Outcome> {
    let spec = InclusionSpec::default();
    let exp = inclusion_experiment(&spec, EXEC)?;
    let trace = invert(&exp.problem, &exp.map, &spec.inversion_config(exp.map.len()))?;
    let s = summarize_inclusion(&exp, &trace.final_material);
    Ok(Outcome {
        pass: s.within(0.15, 0.25),
        detail: format!(
            "B bg/inc = {:.0}/{:.0}, G bg/inc = {:.0}/{:.0}; mean errors [{}]; contrast errors [{}]; {} iterations ({})",
            s.background[0],
            s.inclusion[0],
            s.background[1],
            s.inclusion[1],
            s.mean_errors.iter().map(|e| format!("{e:.3}")).collect::<Vec<_>>().join(", "),
            s.contrast_errors.iter().map(|e| format!("{e:.3}")).collect::<Vec<_>>().join(", "),
            trace.rows.len() - 1,
            trace.termination.name()
        ),
    })
}

fn resonance() -> Result<Outcome> {
    let r = resonance_check(50, 3, 1.0, 9)?;
    Ok(Outcome {
        pass: r.relative_residual <= 1e-10 && r.solution_norm.is_finite() && r.forward_near_singular,
        detail: format!(
            "omega = {:.6}; coupled residual {:.2e} (relative {:.2e}), |U| = {:.4e}; forward rcond {:.2e}",
            r.omega, r.residual, r.relative_residual, r.solution_norm, r.forward_rcond
        ),
    })
}

fn main() -> ExitCode {
    let checks: [(&str, Check, Duration); 9] = [
        ("inf-sup sweep", infsup, Duration::from_secs(60)),
        ("nodal/random point dichotomy", dichotomy, Duration::from_secs(120)),
        ("small-kappa rate", small_kappa, Duration::from_secs(30)),
        ("large-kappa rate", large_kappa, Duration::from_secs(30)),
        ("gradient/Hessian oracles", oracles, Duration::from_secs(60)),
        ("convexification", convexification, Duration::from_secs(600)),
        ("large-kappa Hessian positivity", hessian_sign, Duration::from_secs(60)),
        ("2D unknown-BC reconstruction", reconstruction, Duration::from_secs(900)),
        ("solvability at resonance", resonance, Duration::from_secs(10)),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, check, budget)) in checks.iter().enumerate() {
        let id = k + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= *budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {detail}; {:.1} s of {} s",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
