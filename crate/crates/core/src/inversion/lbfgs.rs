//! Projected limited-memory BFGS for box-constrained smooth minimization.
//!
//! Variables sitting on a bound with the gradient pushing outward are held
//! fixed for the step; the quasi-Newton direction acts on the rest, and the
//! Armijo backtracking follows the projected arc.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// stop when the projected-gradient 2-norm drops to this
    pub gradient_tolerance: f64,
    /// stop when the relative decrease of one accepted step drops to this
    pub decrease_tolerance: f64,
    /// largest component of the first step
    pub initial_step: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iterations: 200,
            gradient_tolerance: 1e-8,
            decrease_tolerance: 0.0,
            initial_step: 0.1,
            armijo: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    InsufficientDecrease,
    LineSearchFailure,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::GradientTolerance => "gradient_tolerance",
            Termination::MaxIterations => "max_iterations",
            Termination::InsufficientDecrease => "insufficient_decrease",
            Termination::LineSearchFailure => "line_search_failure",
        }
    }
}

/// One objective sample; `extra` carries caller data into the history.
#[derive(Debug, Clone)]
pub struct Sample<T> {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub extra: T,
}

#[derive(Debug, Clone)]
pub struct Iterate<T> {
    pub x: Vec<f64>,
    pub value: f64,
    pub projected_gradient_norm: f64,
    /// 2-norm of the accepted step (0 for the starting point)
    pub step: f64,
    pub extra: T,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult<T> {
    /// starting point first; values are nonincreasing
    pub history: Vec<Iterate<T>>,
    pub termination: Termination,
    pub evaluations: usize,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*l, *u);
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((xi, gi), (l, u))| ((xi - gi).clamp(*l, *u) - xi).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Components held at a bound this step.
fn active_set(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<bool> {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((xi, gi), (l, u))| (*xi <= *l && *gi > 0.0) || (*xi >= *u && *gi < 0.0))
        .collect()
}

/// Two-loop recursion on the free components.
fn direction(g: &[f64], active: &[bool], pairs: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(active).map(|(x, a)| if *a { 0.0 } else { *x }).collect() };
    let mut q = mask(g);
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let (s, y) = (mask(s), mask(y));
        let sy = dot(&s, &y);
        if sy <= 0.0 {
            alphas.push((0.0, 0.0, s, y));
            continue;
        }
        let rho = 1.0 / sy;
        let a = rho * dot(&s, &q);
        q.iter_mut().zip(&y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push((a, rho, s, y));
    }
    if let Some((s, y)) = pairs.back() {
        let (s, y) = (mask(s), mask(y));
        let (sy, yy) = (dot(&s, &y), dot(&y, &y));
        if sy > 0.0 && yy > 0.0 {
            q.iter_mut().for_each(|v| *v *= sy / yy);
        }
    }
    for (a, rho, s, y) in alphas.into_iter().rev() {
        if rho == 0.0 {
            continue;
        }
        let b = rho * dot(&y, &q);
        q.iter_mut().zip(&s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter().zip(active).map(|(v, a)| if *a { 0.0 } else { -v }).collect()
}

/// Minimizes `f` over the box `[lower, upper]`. Failed evaluations at trial
/// points are treated as infinite values; a failure at the start is returned.
pub fn minimize_bounded<T, F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &LbfgsOptions,
) -> Result<LbfgsResult<T>>
where
    T: Clone,
    F: FnMut(&[f64]) -> Result<Sample<T>>,
{
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(Error::DimensionMismatch("bounds and starting point differ in length".into()));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::InvalidArgument("lower bound above upper bound".into()));
    }
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut cur = f(&x)?;
    let mut evaluations = 1;
    let mut pg = projected_gradient_norm(&x, &cur.gradient, lower, upper);
    let mut history = vec![Iterate {
        x: x.clone(),
        value: cur.value,
        projected_gradient_norm: pg,
        step: 0.0,
        extra: cur.extra.clone(),
    }];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(opts.memory);
    let mut termination = Termination::MaxIterations;
    for _ in 0..opts.max_iterations {
        if pg <= opts.gradient_tolerance {
            termination = Termination::GradientTolerance;
            break;
        }
        let active = active_set(&x, &cur.gradient, lower, upper);
        let mut d = direction(&cur.gradient, &active, &pairs);
        if !(dot(&d, &cur.gradient) < 0.0) {
            pairs.clear();
            d = direction(&cur.gradient, &active, &pairs);
        }
        if pairs.is_empty() {
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dmax > 0.0 {
                d.iter_mut().for_each(|v| *v *= opts.initial_step / dmax);
            }
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            project(&mut trial, lower, upper);
            let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let predicted = dot(&cur.gradient, &s);
            if !(predicted < 0.0) {
                alpha *= 0.5;
                continue;
            }
            evaluations += 1;
            if let Ok(sample) = f(&trial) {
                if sample.value.is_finite() && sample.value <= cur.value + opts.armijo * predicted {
                    accepted = Some((trial, s, sample));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, s, next)) = accepted else {
            termination = Termination::LineSearchFailure;
            break;
        };
        let y: Vec<f64> = next.gradient.iter().zip(&cur.gradient).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s.clone(), y));
        }
        let decrease = cur.value - next.value;
        let scale = cur.value.abs().max(next.value.abs()).max(f64::MIN_POSITIVE);
        x = trial;
        cur = next;
        pg = projected_gradient_norm(&x, &cur.gradient, lower, upper);
        history.push(Iterate {
            x: x.clone(),
            value: cur.value,
            projected_gradient_norm: pg,
            step: dot(&s, &s).sqrt(),
            extra: cur.extra.clone(),
        });
        if pg <= opts.gradient_tolerance {
            termination = Termination::GradientTolerance;
            break;
        }
        if decrease <= opts.decrease_tolerance * scale {
            termination = Termination::InsufficientDecrease;
            break;
        }
    }
    Ok(LbfgsResult { history, termination, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rosenbrock(x: &[f64]) -> Result<Sample<()>> {
        let (a, b) = (x[0], x[1]);
        Ok(Sample {
            value: (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
            gradient: vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)],
            extra: (),
        })
    }

    #[test]
    fn solves_rosenbrock() {
        let opts = LbfgsOptions { max_iterations: 500, gradient_tolerance: 1e-10, ..Default::default() };
        let r = minimize_bounded(rosenbrock, &[-1.2, 1.0], &[-5.0; 2], &[5.0; 2], &opts).unwrap();
        let x = &r.history.last().unwrap().x;
        assert_eq!(r.termination, Termination::GradientTolerance);
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn active_bound_is_respected() {
        // minimum of (x-2)^2 + (y+1)^2 on [0,1]^2 is (1, 0)
        let f = |x: &[f64]| -> Result<Sample<()>> {
            Ok(Sample {
                value: (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2),
                gradient: vec![2.0 * (x[0] - 2.0), 2.0 * (x[1] + 1.0)],
                extra: (),
            })
        };
        let r = minimize_bounded(f, &[0.5, 0.5], &[0.0; 2], &[1.0; 2], &LbfgsOptions::default()).unwrap();
        assert_eq!(r.history.last().unwrap().x, vec![1.0, 0.0]);
        assert_eq!(r.termination, Termination::GradientTolerance);
    }

    #[test]
    fn stationary_start_stops_immediately() {
        let f = |x: &[f64]| -> Result<Sample<()>> {
            Ok(Sample { value: x[0] * x[0], gradient: vec![2.0 * x[0]], extra: () })
        };
        let r = minimize_bounded(f, &[0.0], &[-1.0], &[1.0], &LbfgsOptions::default()).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.evaluations, 1);
    }

    proptest! {
        #[test]
        fn iterates_feasible_and_monotone(
            c in proptest::collection::vec(-3.0f64..3.0, 3),
            w in proptest::collection::vec(0.1f64..10.0, 3),
            x0 in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let f = |x: &[f64]| -> Result<Sample<()>> {
                let value = (0..3).map(|i| w[i] * (x[i] - c[i]).powi(2) + (x[i] * x[(i + 1) % 3]).powi(2)).sum();
                let gradient = (0..3).map(|i| {
                    let (p, n) = ((i + 2) % 3, (i + 1) % 3);
                    2.0 * w[i] * (x[i] - c[i]) + 2.0 * x[i] * x[n] * x[n] + 2.0 * x[i] * x[p] * x[p]
                }).collect();
                Ok(Sample { value, gradient, extra: () })
            };
            let r = minimize_bounded(f, &x0, &[-1.0; 3], &[1.0; 3], &LbfgsOptions::default()).unwrap();
            for it in &r.history {
                prop_assert!(it.x.iter().all(|v| (-1.0..=1.0).contains(v)));
            }
            for pair in r.history.windows(2) {
                prop_assert!(pair[1].value <= pair[0].value);
            }
        }
    }
}
