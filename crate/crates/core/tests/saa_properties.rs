mod common;

use glmvi::glm::{GlmModel, Observation};
use glmvi::links::ScalarLink;
use glmvi::rng::{seeded, stream, unit_sphere};
use glmvi::saa::{empirical_field, logistic_nll_gradient, solve_saa, SaaOptions};
use glmvi::vi::{jacobian_modulus, weak_solution_residual, Ball, ConvexCompactSet, VectorField};
use nalgebra::DVector;

fn draw(link: ScalarLink, n: usize, k: usize, sigma: f64, seed: u64) -> (DVector<f64>, Vec<Observation>) {
    let model = GlmModel::scalar(n, link, sigma).unwrap();
    let mut rng = seeded(seed);
    let x = unit_sphere(n, &mut rng);
    let obs = model.sample_observations(&x, k, &mut rng).unwrap();
    (x, obs)
}

#[test]
fn logistic_field_is_the_nll_gradient() {
    let (_, obs) = draw(ScalarLink::Logistic, 20, 500, 1.0, 1);
    let field = empirical_field(&obs, ScalarLink::Logistic).unwrap();
    let mut rng = seeded(2);
    for _ in 0..20 {
        let z = Ball::unit(20).sample(&mut rng);
        let gap = (field.eval(&z) - logistic_nll_gradient(&obs, &z).unwrap()).amax();
        assert!(gap <= 1e-10);
        let (_, oracle) = common::nll_and_grad(&obs, &z);
        assert!((field.eval(&z) - oracle).amax() <= 1e-10);
    }
}

#[test]
fn logistic_saa_is_constrained_ml() {
    for seed in 0..3 {
        let (_, obs) = draw(ScalarLink::Logistic, 20, 500, 1.0, 10 + seed);
        let res = solve_saa(&obs, ScalarLink::Logistic, &Ball::unit(20), &SaaOptions::default(), &mut seeded(seed))
            .unwrap();
        assert!(res.converged);
        let ml = common::minimize_nll_on_unit_ball(&obs, 20);
        assert!((&res.point - &ml).norm() <= 1e-6, "seed {seed}: {}", (&res.point - &ml).norm());
    }
}

#[test]
fn noiseless_linear_matches_normal_equations() {
    let n = 8;
    let (x, obs) = draw(ScalarLink::Linear, n, 60, 0.0, 3);
    let x = x * 0.7;
    let model = GlmModel::scalar(n, ScalarLink::Linear, 0.0).unwrap();
    let obs: Vec<Observation> = obs
        .into_iter()
        .map(|o| Observation {
            y: model.sample_labels(&o.eta, &x, &mut seeded(0)),
            eta: o.eta,
        })
        .collect();
    let field = empirical_field(&obs, ScalarLink::Linear).unwrap();
    let gram = field.gram();
    let rhs = obs.iter().fold(DVector::zeros(n), |acc, o| acc + &o.eta * &o.y) / obs.len() as f64;
    let ls = gram.clone().cholesky().unwrap().solve(&rhs);
    let tol = 1e-8;
    let res = solve_saa(&obs, ScalarLink::Linear, &Ball::unit(n), &SaaOptions { tol, ..Default::default() }, &mut seeded(1))
        .unwrap();
    let kappa = gram.symmetric_eigen().eigenvalues.min();
    assert!((&res.point - &ls).norm() <= 10.0 * tol / kappa);
    assert!((&res.point - &x).norm() <= 10.0 * tol / kappa);
}

#[test]
fn empirical_fields_are_monotone() {
    for link in ScalarLink::ALL {
        let (_, obs) = draw(link, 5, 30, 1.0, 4);
        let field = empirical_field(&obs, link).unwrap();
        let mut rng = seeded(5);
        let ball = Ball::unit(5);
        for _ in 0..500 {
            let z = ball.sample(&mut rng) * 3.0;
            let w = ball.sample(&mut rng) * 3.0;
            assert!((field.eval(&z) - field.eval(&w)).dot(&(&z - &w)) >= -1e-10);
        }
    }
}

#[test]
fn residual_certificate_and_distance_inequality() {
    let n = 10;
    let tol = 1e-8;
    for link in ScalarLink::GLM_CASES {
        for rep in 0..5 {
            let (_, obs) = draw(link, n, 400, 1.0, 100 + rep);
            let ball = Ball::unit(n);
            let mut rng = stream(6, &[rep]);
            let res = solve_saa(&obs, link, &ball, &SaaOptions { tol, ..Default::default() }, &mut rng).unwrap();
            assert!(res.converged, "{link}");
            let field = empirical_field(&obs, link).unwrap();
            let probes: Vec<_> = (0..500).map(|_| ball.sample(&mut rng)).collect();
            let r = weak_solution_residual(&field, &ball, &res.point, &probes).unwrap();
            let scale = field.eval(&ball.center()).norm().max(1.0);
            assert!(r.weak <= tol * (1.0 + scale), "{link}: {}", r.weak);
            let kappa = jacobian_modulus(&field, &ball, 64, &mut rng).unwrap().modulus_lower;
            let v = common::distance_inequality_violation(&field, &ball, &res.point, kappa, 10.0 * tol, 500, &mut rng);
            assert!(v <= 0.0, "{link}: {v}");
        }
    }
}

#[test]
fn gaussian_likelihood_differs_for_kinked_links() {
    // The Gaussian-label likelihood gradient weights each residual by f'(ηᵀz);
    // for hinge and ramp that differs from the empirical field.
    for link in [ScalarLink::Hinge, ScalarLink::Ramp] {
        let (_, obs) = draw(link, 4, 200, 1.0, 7);
        let field = empirical_field(&obs, link).unwrap();
        let z = DVector::from_element(4, 0.3);
        let lik = obs.iter().fold(DVector::zeros(4), |acc, o| {
            let s = o.eta.column(0).dot(&z);
            acc + o.eta.column(0) * ((link.eval(s) - o.y[0]) * link.derivative(s))
        }) / obs.len() as f64;
        assert!((field.eval(&z) - lik).norm() > 1e-3, "{link}");
    }
}
