mod common;

use glmvi::links::{diagonal_field, ScalarLink};
use glmvi::rng::{normal_matrix, normal_vector, seeded};
use glmvi::vi::{
    affine_substitution, estimate_modulus, jacobian_modulus, project_ball, solve_strongly_monotone_vi,
    solve_strongly_monotone_vi_from, uniform_average, weak_solution_residual, AffineField, Ball, ConvexCompactSet,
    VectorField,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn vec_strategy(n: usize, scale: f64) -> impl Strategy<Value = DVector<f64>> {
    proptest::collection::vec(-scale..scale, n).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn projection_is_a_contraction(
        c in vec_strategy(4, 2.0),
        r in 0.0f64..3.0,
        z in vec_strategy(4, 10.0),
        u_raw in vec_strategy(4, 1.0),
    ) {
        let ball = Ball::new(c.clone(), r).unwrap();
        let u = ball.project(&(&c + u_raw * r));
        let p = project_ball(r, &c, &z).unwrap();
        prop_assert!((&p - &u).norm() <= (&z - &u).norm() + 1e-12);
        prop_assert!(ball.contains(&p));
    }

    #[test]
    fn projection_is_nonexpansive_and_idempotent(
        z in vec_strategy(5, 10.0),
        w in vec_strategy(5, 10.0),
    ) {
        let ball = Ball::unit(5);
        let pz = ball.project(&z);
        let pw = ball.project(&w);
        prop_assert!((&pz - &pw).norm() <= (&z - &w).norm() + 1e-12);
        prop_assert!((ball.project(&pz) - &pz).norm() <= 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affine_substitution_preserves_monotonicity(seed in any::<u64>(), link_idx in 0usize..5) {
        let link = ScalarLink::ALL[link_idx];
        let mut rng = seeded(seed);
        let a = normal_matrix(3, 6, &mut rng);
        let shift = normal_vector(6, &mut rng);
        let g = affine_substitution(diagonal_field(link, 6).unwrap(), a, shift).unwrap();
        let ball = Ball::unit(3);
        for _ in 0..50 {
            let z = ball.sample(&mut rng);
            let w = ball.sample(&mut rng);
            prop_assert!((g.eval(&z) - g.eval(&w)).dot(&(&z - &w)) >= -1e-12);
        }
    }

    #[test]
    fn averaging_preserves_monotonicity(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let fields: Vec<Box<dyn VectorField>> = ScalarLink::ALL
            .iter()
            .map(|&l| {
                let a = normal_matrix(3, 2, &mut rng);
                Box::new(affine_substitution(diagonal_field(l, 2).unwrap(), a, DVector::zeros(2)).unwrap())
                    as Box<dyn VectorField>
            })
            .collect();
        let avg = uniform_average(fields).unwrap();
        let ball = Ball::unit(3);
        for _ in 0..50 {
            let z = ball.sample(&mut rng);
            let w = ball.sample(&mut rng);
            prop_assert!((avg.eval(&z) - avg.eval(&w)).dot(&(&z - &w)) >= -1e-12);
        }
    }

    #[test]
    fn substitution_scales_modulus_by_singular_value(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = normal_matrix(3, 5, &mut rng);
        let sigma_min = a.clone().svd(false, false).singular_values.min();
        let g = affine_substitution(diagonal_field(ScalarLink::Linear, 5).unwrap(), a, DVector::zeros(5)).unwrap();
        let est = jacobian_modulus(&g, &Ball::unit(3), 4, &mut rng).unwrap();
        prop_assert!((est.modulus_lower - sigma_min * sigma_min).abs() <= 1e-9 * (1.0 + sigma_min * sigma_min));
    }
}

fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seeded(seed);
    let a = normal_matrix(n, n, &mut rng);
    &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.3
}

#[test]
fn quadratic_over_ball_matches_kkt_oracle() {
    for seed in 0..20 {
        let n = 6;
        let q = random_spd(n, seed);
        let b = normal_vector(n, &mut seeded(seed + 100)) * (0.5 + seed as f64 * 0.3);
        let g = AffineField::new(q.clone(), b.clone()).unwrap();
        let eig = q.clone().symmetric_eigen().eigenvalues;
        let (kappa, l) = (eig.min(), eig.max());
        let tol = 1e-10;
        let sol = solve_strongly_monotone_vi(&g, &Ball::unit(n), kappa, l, tol, 1_000_000).unwrap();
        assert!(sol.converged);
        let oracle = common::kkt_ball_quadratic(&q, &b, 1.0);
        assert!((sol.point - oracle).norm() <= 1e-7, "seed {seed}");
    }
}

#[test]
fn distance_inequality_and_two_start_agreement() {
    let tol = 1e-9;
    for seed in 0..10 {
        let n = 5;
        let mut rng = seeded(seed);
        let a = normal_matrix(n, 3 * n, &mut rng);
        let shift = normal_vector(3 * n, &mut rng);
        let g = affine_substitution(diagonal_field(ScalarLink::Arctan, 3 * n).unwrap(), a.clone() / 3.0, shift)
            .unwrap();
        let ball = Ball::unit(n);
        let kappa = jacobian_modulus(&g, &ball, 64, &mut rng).unwrap().modulus_lower;
        let l = 1.5 * (a.clone() * a.transpose() / 9.0).symmetric_eigen().eigenvalues.max();
        let s1 = solve_strongly_monotone_vi(&g, &ball, kappa, l, tol, 1_000_000).unwrap();
        let start = ball.sample(&mut rng);
        let s2 = solve_strongly_monotone_vi_from(&g, &ball, kappa, l, tol, 1_000_000, start).unwrap();
        assert!(s1.converged && s2.converged);
        assert!((&s1.point - &s2.point).norm() <= 2.0 * tol / kappa);
        let v = common::distance_inequality_violation(&g, &ball, &s1.point, kappa, 10.0 * tol, 500, &mut rng);
        assert!(v <= 0.0, "seed {seed}: violation {v}");
        let probes: Vec<_> = (0..200).map(|_| ball.sample(&mut rng)).collect();
        let r = weak_solution_residual(&g, &ball, &s1.point, &probes).unwrap();
        assert!(r.weak <= 1e-7 && r.strong <= 1e-7);
    }
}

#[test]
fn pair_estimate_never_below_jacobian_floor_for_affine_fields() {
    for seed in 0..10 {
        let q = random_spd(4, seed);
        let g = AffineField::new(q.clone(), DVector::zeros(4)).unwrap();
        let lam = q.symmetric_eigen().eigenvalues.min();
        let est = estimate_modulus(&g, &Ball::unit(4), 200, &mut seeded(seed)).unwrap();
        assert!(est.modulus_lower >= lam - 1e-12);
    }
}
