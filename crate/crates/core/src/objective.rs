//! Reduced MECE objective, its exact gradient and Hessian quadratic forms.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::MaterialField;
use crate::linalg::{dot, matvec, quad_form, to_dense};
use crate::measurement::MeasuredSplit;
use crate::problem::{Problem, State};

/// Largest free-dof count accepted by the dense sign-revealing Hessian.
pub const DENSE_HESSIAN_LIMIT: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    /// `ece + kappa * misfit`
    pub value: f64,
    /// `1/2 A(w, w)`
    pub ece: f64,
    /// `1/2 D(u - u_m, u - u_m)`
    pub misfit: f64,
    /// one entry per material parameter, element-major
    pub gradient: Option<Vec<f64>>,
}

/// First-order field sensitivities along a parameter direction, full length.
#[derive(Debug, Clone)]
pub struct Derivative {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

/// Sign-revealing split of the Hessian quadratic form:
/// `total = term_pos - term_neg1 - term_neg2`, each term nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignRevealing {
    pub total: f64,
    pub term_pos: f64,
    pub term_neg1: f64,
    pub term_neg2: f64,
}

pub fn evaluate(problem: &Problem, mat: &MaterialField, kappa: f64) -> Result<ObjectiveEval> {
    let state = problem.solve(mat, kappa)?;
    Ok(values_at(problem, &state))
}

pub fn evaluate_with_gradient(problem: &Problem, mat: &MaterialField, kappa: f64) -> Result<ObjectiveEval> {
    let state = problem.solve(mat, kappa)?;
    let mut eval = values_at(problem, &state);
    eval.gradient = Some(gradient_at(problem, mat, &state));
    Ok(eval)
}

pub fn gradient(problem: &Problem, mat: &MaterialField, kappa: f64) -> Result<Vec<f64>> {
    let state = problem.solve(mat, kappa)?;
    Ok(gradient_at(problem, mat, &state))
}

/// Objective parts at an already solved state.
pub fn values_at(problem: &Problem, state: &State) -> ObjectiveEval {
    let sys = &state.system;
    let ece = 0.5 * quad_form(&sys.a, &state.solution.w, &state.solution.w);
    let misfit = 0.5 * problem.measurement().misfit_form(&state.u);
    ObjectiveEval { value: ece + state.kappa * misfit, ece, misfit, gradient: None }
}

/// `1/2 A(u, u, dC) - 1/2 A(u + w, u + w, dC)` for every unit parameter
/// perturbation, one element at a time.
pub fn gradient_at(problem: &Problem, mat: &MaterialField, state: &State) -> Vec<f64> {
    let disc = problem.disc();
    let npe = mat.params_per_element();
    let sum: Vec<f64> = state.u.iter().zip(&state.w).map(|(a, b)| a + b).collect();
    let per_element = problem.execution().map(disc.mesh().n_elements(), |e| {
        let k = disc.kernel(e);
        let ue = DVector::from_vec(disc.gather(e, &state.u));
        let se = DVector::from_vec(disc.gather(e, &sum));
        k.stiffness_basis.iter().map(|kb| 0.5 * (ue.dot(&(kb * &ue)) - se.dot(&(kb * &se)))).collect::<Vec<f64>>()
    });
    debug_assert!(per_element.iter().all(|v| v.len() == npe));
    per_element.into_iter().flatten().collect()
}

fn check_direction(mat: &MaterialField, direction: &[f64]) -> Result<()> {
    if direction.len() != mat.params().len() {
        return Err(Error::DimensionMismatch(format!(
            "direction has {} entries, material has {} parameters",
            direction.len(),
            mat.params().len()
        )));
    }
    Ok(())
}

/// Solves the derivative problem along `direction` with the factorization of
/// the base state.
pub fn solve_derivative_problem(
    problem: &Problem,
    mat: &MaterialField,
    state: &State,
    direction: &[f64],
) -> Result<Derivative> {
    check_direction(mat, direction)?;
    let khat = problem.disc().parameter_stiffness(mat.params_per_element(), direction, problem.execution());
    let sum: Vec<f64> = state.u.iter().zip(&state.w).map(|(a, b)| a + b).collect();
    let ks = matvec(&khat, &sum);
    let kw = matvec(&khat, &state.w);
    let rw: Vec<f64> = problem.w_map().free().iter().map(|&i| -ks[i]).collect();
    let ru: Vec<f64> = problem.u_map().free().iter().map(|&i| -kw[i]).collect();
    let (w, u) = state.solution.factor.solve(&rw, &ru);
    Ok(Derivative { u: problem.u_map().extend(&u), w: problem.w_map().extend(&w) })
}

/// `A(w', w') + 2 B(u', w') - kappa D(u', u')` for the derivative fields of
/// `direction`.
pub fn hessian_quadratic(problem: &Problem, mat: &MaterialField, state: &State, direction: &[f64]) -> Result<f64> {
    let der = solve_derivative_problem(problem, mat, state, direction)?;
    Ok(hessian_quadratic_at(problem, state, &der))
}

pub fn hessian_quadratic_at(problem: &Problem, state: &State, der: &Derivative) -> f64 {
    let sys = &state.system;
    let w = problem.w_map().restrict_vec(&der.w);
    let u = problem.u_map().restrict_vec(&der.u);
    quad_form(&sys.a, &w, &w) + 2.0 * quad_form(&sys.b, &w, &u) - sys.kappa * quad_form(&sys.d, &u, &u)
}

/// Hessian bilinear form `H(a, b)` given the derivative fields of `b`.
pub fn hessian_bilinear_at(
    problem: &Problem,
    mat: &MaterialField,
    state: &State,
    direction_a: &[f64],
    der_b: &Derivative,
) -> Result<f64> {
    check_direction(mat, direction_a)?;
    let ka = problem.disc().parameter_stiffness(mat.params_per_element(), direction_a, problem.execution());
    let sum: Vec<f64> = state.u.iter().zip(&state.w).map(|(a, b)| a + b).collect();
    Ok(-quad_form(&ka, &der_b.u, &state.w) - quad_form(&ka, &sum, &der_b.w))
}

/// Hessian applied to `direction`, one extra solve.
pub fn hessian_vector_product(
    problem: &Problem,
    mat: &MaterialField,
    state: &State,
    direction: &[f64],
) -> Result<Vec<f64>> {
    let der = solve_derivative_problem(problem, mat, state, direction)?;
    let disc = problem.disc();
    let sum: Vec<f64> = state.u.iter().zip(&state.w).map(|(a, b)| a + b).collect();
    let per_element = problem.execution().map(disc.mesh().n_elements(), |e| {
        let k = disc.kernel(e);
        let w = DVector::from_vec(disc.gather(e, &state.w));
        let s = DVector::from_vec(disc.gather(e, &sum));
        let du = DVector::from_vec(disc.gather(e, &der.u));
        let dw = DVector::from_vec(disc.gather(e, &der.w));
        k.stiffness_basis.iter().map(|kb| -du.dot(&(kb * &w)) - s.dot(&(kb * &dw))).collect::<Vec<f64>>()
    });
    Ok(per_element.into_iter().flatten().collect())
}

/// Dense sign-revealing form of the Hessian quadratic form, splitting U along
/// the range and null space of the measurement form.
pub fn hessian_sign_revealing(
    problem: &Problem,
    mat: &MaterialField,
    state: &State,
    direction: &[f64],
) -> Result<SignRevealing> {
    let sys = &state.system;
    let size = sys.n_u() + sys.n_w();
    if size > DENSE_HESSIAN_LIMIT {
        return Err(Error::TooLarge { what: "sign-revealing Hessian", size, limit: DENSE_HESSIAN_LIMIT });
    }
    let der = solve_derivative_problem(problem, mat, state, direction)?;
    let khat = problem.disc().parameter_stiffness(mat.params_per_element(), direction, problem.execution());
    let kw_full = matvec(&khat, &state.w);
    let kw = DVector::from_vec(problem.u_map().restrict_vec(&kw_full));
    let wp = DVector::from_vec(problem.w_map().restrict_vec(&der.w));
    let up = DVector::from_vec(problem.u_map().restrict_vec(&der.u));

    let split = MeasuredSplit::new(&to_dense(&sys.d));
    let a = to_dense(&sys.a);
    let b = to_dense(&sys.b);
    let b0 = &b * &split.q0;
    let b1 = &b * &split.q1;
    let d0_inv = DMatrix::from_diagonal(&split.d0.map(|v| 1.0 / v));
    let z = &a + &b0 * &d0_inv * b0.transpose() / sys.kappa;
    let z_lu = z.clone().lu();
    let b1a1 = &b1 * (split.q1.transpose() * &up);
    let zinv_b1a1 =
        z_lu.solve(&b1a1).ok_or_else(|| Error::Assumption("Z is singular; the W block is not coercive".into()))?;
    let x = &wp + &zinv_b1a1;
    let term_pos = x.dot(&(&z * &x));
    let term_neg1 = b1a1.dot(&zinv_b1a1);
    let q = split.q0.transpose() * &kw;
    let term_neg2 = q.dot(&(&d0_inv * &q)) / sys.kappa;
    Ok(SignRevealing { total: term_pos - term_neg1 - term_neg2, term_pos, term_neg1, term_neg2 })
}

/// `1/2 (sigma - C eps[u]) : C^-1 : (sigma - C eps[u])` integrated, with the
/// stress recovered from the solved fields. Equals `ece` at a stationary
/// state.
pub fn ece_from_stress(problem: &Problem, mat: &MaterialField, state: &State) -> Result<f64> {
    let disc = problem.disc();
    let stress = crate::coupled::compute_stress(disc, mat, &state.u, &state.w)?;
    let zero = vec![0.0; state.u.len()];
    let model = crate::coupled::compute_stress(disc, mat, &state.u, &zero)?;
    let ncomp = if disc.mesh().dim() == 1 { 1 } else { 3 };
    let mut total = 0.0;
    for e in 0..disc.mesh().n_elements() {
        let c = mat.tensor(e);
        let c = c.view((0, 0), (ncomp, ncomp)).into_owned();
        let cinv = c
            .try_inverse()
            .ok_or_else(|| Error::InvalidMaterial(format!("elasticity tensor of element {e} is singular")))?;
        for (q, (s, m)) in disc.kernel(e).points.iter().zip(stress[e].iter().zip(&model[e])) {
            let r = nalgebra::DVector::from_iterator(ncomp, (0..ncomp).map(|i| s[i] - m[i]));
            total += 0.5 * q.weight * r.dot(&(&cinv * &r));
        }
    }
    Ok(total)
}

/// Directional derivative `g . direction`.
pub fn directional(gradient: &[f64], direction: &[f64]) -> f64 {
    dot(gradient, direction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{nodal_field_load, BoundaryTag, Discretization, Mesh, Side};
    use crate::measurement::{random_points_1d, sample_field, MeasurementSet};
    use crate::Execution;
    use rand::{Rng, SeedableRng};

    /// Fixed-left bar with an unspecified right end, pointwise data from a
    /// different material.
    fn instance(seed: u64, n: usize) -> (Problem, MaterialField) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mesh = Mesh::bar(n, 1.0).unwrap().with_side(Side::Left, BoundaryTag::Dirichlet).unwrap();
        let disc = Discretization::new(mesh.clone(), Execution::Sequential);
        let ones = vec![1.0; mesh.n_dofs()];
        let load = nodal_field_load(&disc, &ones).unwrap();
        let omega = 2.0;
        let truth = MaterialField::young((0..n).map(|_| rng.gen_range(0.8..1.2)).collect(), vec![1.0; n]).unwrap();
        let fwd = Problem::new(disc.clone(), omega, load.clone()).unwrap().with_execution(Execution::Sequential);
        // complete the BCs for synthesis only
        let mut full = mesh.clone();
        full.tag_side(Side::Right, BoundaryTag::Neumann).unwrap();
        let synth = Problem::new(Discretization::new(full, Execution::Sequential), omega, load).unwrap();
        let um = synth.forward(&truth).unwrap().u;
        let pts = random_points_1d(seed, n + 3, 0.0, 1.0);
        let mut vals = sample_field(&mesh, &um, &pts).unwrap();
        for v in vals.iter_mut() {
            *v *= 1.0 + 0.05 * rng.gen_range(-1.0..1.0);
        }
        let problem = fwd.with_measurements(&MeasurementSet::pointwise(pts, vals)).unwrap();
        let mat = MaterialField::young((0..n).map(|_| rng.gen_range(0.5..2.0)).collect(), vec![1.0; n]).unwrap();
        (problem, mat)
    }

    fn value(p: &Problem, mat: &MaterialField, params: &[f64], kappa: f64) -> f64 {
        evaluate(p, &mat.with_params(params.to_vec()).unwrap(), kappa).unwrap().value
    }

    fn random_direction(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xd1ec);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn parts_are_nonnegative_and_sum() {
        let (p, mat) = instance(1, 10);
        let ev = evaluate(&p, &mat, 3.0).unwrap();
        assert!(ev.ece >= 0.0 && ev.misfit >= 0.0);
        assert!((ev.value - (ev.ece + 3.0 * ev.misfit)).abs() <= 1e-15 * ev.value.abs());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (p, mat) = instance(2, 6);
        let kappa = 10.0;
        let g = gradient(&p, &mat, kappa).unwrap();
        for e in 0..6 {
            let h = 1e-6 * mat.params()[e];
            let mut plus = mat.params().to_vec();
            let mut minus = plus.clone();
            plus[e] += h;
            minus[e] -= h;
            let fd = (value(&p, &mat, &plus, kappa) - value(&p, &mat, &minus, kappa)) / (2.0 * h);
            assert!(
                (fd - g[e]).abs() <= 1e-6 * g.iter().map(|v| v.abs()).fold(0.0, f64::max),
                "e={e} fd={fd} g={}",
                g[e]
            );
        }
    }

    #[test]
    fn derivative_fields_match_finite_differences() {
        let (p, mat) = instance(3, 8);
        let kappa = 5.0;
        let state = p.solve(&mat, kappa).unwrap();
        let dir = random_direction(3, 8);
        let der = solve_derivative_problem(&p, &mat, &state, &dir).unwrap();
        let t = 1e-6;
        let shift = |s: f64| {
            let q: Vec<f64> = mat.params().iter().zip(&dir).map(|(a, d)| a + s * d).collect();
            p.solve(&mat.with_params(q).unwrap(), kappa).unwrap()
        };
        let (sp, sm) = (shift(t), shift(-t));
        let fd_u: Vec<f64> = sp.u.iter().zip(&sm.u).map(|(a, b)| (a - b) / (2.0 * t)).collect();
        let fd_w: Vec<f64> = sp.w.iter().zip(&sm.w).map(|(a, b)| (a - b) / (2.0 * t)).collect();
        let err = |a: &[f64], b: &[f64]| {
            let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            num / b.iter().map(|x| x * x).sum::<f64>().sqrt()
        };
        assert!(err(&der.u, &fd_u) < 1e-5);
        assert!(err(&der.w, &fd_w) < 1e-5);
        let doubled: Vec<f64> = dir.iter().map(|d| 2.0 * d).collect();
        let der2 = solve_derivative_problem(&p, &mat, &state, &doubled).unwrap();
        for (a, b) in der2.u.iter().zip(&der.u) {
            assert!((a - 2.0 * b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn zero_direction_gives_zero_everything() {
        let (p, mat) = instance(4, 5);
        let state = p.solve(&mat, 1.0).unwrap();
        let zero = vec![0.0; 5];
        let der = solve_derivative_problem(&p, &mat, &state, &zero).unwrap();
        assert!(der.u.iter().chain(&der.w).all(|v| *v == 0.0));
        assert_eq!(hessian_quadratic_at(&p, &state, &der), 0.0);
        let sr = hessian_sign_revealing(&p, &mat, &state, &zero).unwrap();
        assert_eq!((sr.term_pos, sr.term_neg1, sr.term_neg2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hessian_matches_second_differences_and_sign_revealing_form() {
        for seed in 0..3 {
            let (p, mat) = instance(10 + seed, 10);
            let kappa = 7.0;
            let state = p.solve(&mat, kappa).unwrap();
            let dir = random_direction(seed, 10);
            let h = hessian_quadratic(&p, &mat, &state, &dir).unwrap();
            let t = 1e-4;
            let at = |s: f64| {
                let q: Vec<f64> = mat.params().iter().zip(&dir).map(|(a, d)| a + s * d).collect();
                value(&p, &mat, &q, kappa)
            };
            let fd = (at(t) - 2.0 * at(0.0) + at(-t)) / (t * t);
            assert!((fd - h).abs() <= 1e-4 * h.abs().max(1e-12), "seed {seed}: fd={fd} h={h}");
            let sr = hessian_sign_revealing(&p, &mat, &state, &dir).unwrap();
            assert!((sr.total - h).abs() <= 1e-8 * h.abs(), "sr={} h={h}", sr.total);
            assert!(sr.term_pos >= 0.0 && sr.term_neg1 >= 0.0 && sr.term_neg2 >= 0.0);
        }
    }

    #[test]
    fn hessian_is_symmetric_and_hvp_consistent() {
        let (p, mat) = instance(21, 10);
        let state = p.solve(&mat, 3.0).unwrap();
        let a = random_direction(1, 10);
        let b = random_direction(2, 10);
        let da = solve_derivative_problem(&p, &mat, &state, &a).unwrap();
        let db = solve_derivative_problem(&p, &mat, &state, &b).unwrap();
        let hab = hessian_bilinear_at(&p, &mat, &state, &a, &db).unwrap();
        let hba = hessian_bilinear_at(&p, &mat, &state, &b, &da).unwrap();
        assert!((hab - hba).abs() <= 1e-8 * hab.abs().max(hba.abs()));
        let haa = hessian_bilinear_at(&p, &mat, &state, &a, &da).unwrap();
        assert!((haa - hessian_quadratic_at(&p, &state, &da)).abs() <= 1e-8 * haa.abs());
        let hv = hessian_vector_product(&p, &mat, &state, &b).unwrap();
        assert!((directional(&hv, &a) - hab).abs() <= 1e-10 * hab.abs());
    }

    #[test]
    fn consistent_data_gives_zero_gradient() {
        let mesh = Mesh::bar(8, 1.0)
            .unwrap()
            .with_side(Side::Left, BoundaryTag::Dirichlet)
            .unwrap()
            .with_side(Side::Right, BoundaryTag::Neumann)
            .unwrap();
        let disc = Discretization::new(mesh.clone(), Execution::Sequential);
        let load = nodal_field_load(&disc, &[1.0; 9]).unwrap();
        let mat = MaterialField::young((0..8).map(|e| 1.0 + 0.1 * e as f64).collect(), vec![1.0; 8]).unwrap();
        let p = Problem::new(disc, 1.5, load).unwrap();
        let um = p.forward(&mat).unwrap().u;
        let pts: Vec<[f64; 2]> = (1..=8).map(|i| [i as f64 / 8.0, 0.0]).collect();
        let vals = sample_field(&mesh, &um, &pts).unwrap();
        let p = p.with_measurements(&MeasurementSet::pointwise(pts, vals)).unwrap();
        let ev = evaluate_with_gradient(&p, &mat, 10.0).unwrap();
        assert!(ev.value <= 1e-20, "{}", ev.value);
        assert!(ev.gradient.unwrap().iter().all(|g| g.abs() <= 1e-10));
    }

    #[test]
    fn ece_agrees_with_stress_route() {
        let (p, mat) = instance(5, 10);
        let state = p.solve(&mat, 2.0).unwrap();
        let ev = values_at(&p, &state);
        let via_stress = ece_from_stress(&p, &mat, &state).unwrap();
        assert!((ev.ece - via_stress).abs() <= 1e-10 * ev.ece);
    }

    #[test]
    fn ece_agrees_with_stress_route_2d() {
        let mesh = Mesh::rectangle(3, 2, [0.0, 0.0], [1.0, 0.7])
            .unwrap()
            .with_side(Side::Bottom, BoundaryTag::Dirichlet)
            .unwrap();
        let disc = Discretization::new(mesh.clone(), Execution::Sequential);
        let n = mesh.n_elements();
        let b: Vec<f64> = (0..n).map(|e| 8.0 + e as f64).collect();
        let g: Vec<f64> = (0..n).map(|e| 1.5 + 0.2 * e as f64).collect();
        let mat = MaterialField::bulk_shear(&b, &g, vec![1.0; n]).unwrap();
        let load = nodal_field_load(&disc, &vec![0.3; mesh.n_dofs()]).unwrap();
        let values: Vec<f64> = (0..mesh.n_dofs()).map(|i| 0.01 * ((i * 7 % 5) as f64 - 2.0)).collect();
        let ms = MeasurementSet::region(crate::measurement::Flavor::H1Region, (0..n).collect(), values);
        let p = Problem::new(disc, 1.0, load).unwrap().with_measurements(&ms).unwrap();
        let state = p.solve(&mat, 4.0).unwrap();
        let ev = values_at(&p, &state);
        assert!(ev.ece > 0.0);
        assert!((ev.ece - ece_from_stress(&p, &mat, &state).unwrap()).abs() <= 1e-10 * ev.ece);
    }

    #[test]
    fn negative_gradient_is_a_descent_direction() {
        let (p, mat) = instance(6, 10);
        let kappa = 4.0;
        let ev = evaluate_with_gradient(&p, &mat, kappa).unwrap();
        let g = ev.gradient.unwrap();
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tau = 1e-3 / gn;
        let q: Vec<f64> = mat.params().iter().zip(&g).map(|(a, d)| a - tau * d).collect();
        assert!(value(&p, &mat, &q, kappa) < ev.value);
    }

    #[test]
    fn sign_revealing_refuses_large_problems() {
        let (p, mat) = instance(7, 260);
        let state = p.solve(&mat, 1.0).unwrap();
        let dir = vec![1.0; 260];
        assert!(matches!(hessian_sign_revealing(&p, &mat, &state, &dir), Err(Error::TooLarge { .. })));
    }
}
