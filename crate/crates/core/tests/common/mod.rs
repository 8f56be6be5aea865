#![allow(dead_code)]

//! Independent oracles shared by the integration tests.

use glmvi::glm::Observation;
use glmvi::vi::{ConvexCompactSet, VectorField};
use nalgebra::{DMatrix, DVector};
use rand::RngCore;

/// `argmin ½zᵀQz - bᵀz` over `‖z‖ ≤ r` for symmetric positive definite `Q`,
/// by bisection on the multiplier of the ball constraint.
pub fn kkt_ball_quadratic(q: &DMatrix<f64>, b: &DVector<f64>, r: f64) -> DVector<f64> {
    let n = b.len();
    let solve = |mu: f64| {
        (q + DMatrix::identity(n, n) * mu)
            .cholesky()
            .expect("positive definite")
            .solve(b)
    };
    let free = solve(0.0);
    if free.norm() <= r {
        return free;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while solve(hi).norm() > r {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if solve(mid).norm() > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    solve(hi)
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn log1pexp(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Average logistic negative log-likelihood and its gradient.
pub fn nll_and_grad(obs: &[Observation], z: &DVector<f64>) -> (f64, DVector<f64>) {
    let mut f = 0.0;
    let mut g = DVector::zeros(z.len());
    for o in obs {
        let eta = o.eta.column(0);
        let s = eta.dot(z);
        f += log1pexp(s) - o.y[0] * s;
        g += eta * (sigmoid(s) - o.y[0]);
    }
    let k = obs.len() as f64;
    (f / k, g / k)
}

/// Projected gradient descent with Armijo backtracking on the unit ball.
pub fn minimize_nll_on_unit_ball(obs: &[Observation], n: usize) -> DVector<f64> {
    let project = |z: DVector<f64>| {
        let r = z.norm();
        if r > 1.0 {
            z / r
        } else {
            z
        }
    };
    let mut z = DVector::zeros(n);
    let mut step = 1.0;
    for _ in 0..100_000 {
        let (f, g) = nll_and_grad(obs, &z);
        loop {
            let cand = project(&z - &g * step);
            let d = &cand - &z;
            let (fc, _) = nll_and_grad(obs, &cand);
            if fc <= f + g.dot(&d) + d.norm_squared() / (2.0 * step) {
                break;
            }
            step *= 0.5;
        }
        let next = project(&z - &g * step);
        let moved = (&next - &z).norm();
        z = next;
        if moved / step < 1e-13 {
            break;
        }
        step *= 1.5;
    }
    z
}

/// Largest violation of `g(z)ᵀ(z - z̄) ≥ κ‖z - z̄‖² - slack·‖z - z̄‖` over
/// `probes` uniform points of the set. Nonpositive means no violation.
pub fn distance_inequality_violation<G, S>(
    g: &G,
    set: &S,
    zbar: &DVector<f64>,
    kappa: f64,
    slack: f64,
    probes: usize,
    rng: &mut dyn RngCore,
) -> f64
where
    G: VectorField + ?Sized,
    S: ConvexCompactSet + ?Sized,
{
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..probes {
        let z = set.sample(rng);
        let d = &z - zbar;
        let dn = d.norm();
        let lhs = g.eval(&z).dot(&d);
        worst = worst.max(kappa * dn * dn - slack * dn - lhs);
    }
    worst
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
