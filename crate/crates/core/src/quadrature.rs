//! Gaussian expectations `E{g(ζ)}`, `ζ ~ N(0,1)`.
//!
//! Two rules are available. [`NormalRule::Hermite`] is the classical
//! Gauss-Hermite rule with the `ζ = √2·x` change of variables; it is exact for
//! polynomials but converges slowly when `g` has kinks or complex
//! singularities close to the real axis. [`NormalRule::Composite`] integrates
//! the density-weighted integrand over a truncated range with panel-wise
//! Gauss-Legendre, splitting at caller-supplied breakpoints so that kinks sit on
//! panel boundaries.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

type Rule = Arc<Vec<(f64, f64)>>;

fn cache(kind: u8, n: usize, build: impl FnOnce(usize) -> Vec<(f64, f64)>) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<(u8, usize), Rule>>> = OnceLock::new();
    let map = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = map.lock().unwrap().get(&(kind, n)) {
        return rule.clone();
    }
    let rule = Arc::new(build(n));
    map.lock().unwrap().insert((kind, n), rule.clone());
    rule
}

/// Nodes and normalized weights of the `n`-point Gauss-Hermite rule for the
/// standard normal density (nodes already scaled by √2, weights sum to 1).
///
/// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix of the
/// physicists' Hermite recurrence, off-diagonal `sqrt(i/2)`.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
    cache(0, n, |n| {
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for i in 0..n - 1 {
            let off = ((i + 1) as f64 / 2.0).sqrt();
            jacobi[(i, i + 1)] = off;
            jacobi[(i + 1, i)] = off;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut rule: Vec<(f64, f64)> = eig
            .eigenvalues
            .iter()
            .zip(eig.eigenvectors.row(0).iter())
            .map(|(&x, &v)| (std::f64::consts::SQRT_2 * x, v * v))
            .collect();
        rule.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = rule.iter().map(|p| p.1).sum();
        for p in &mut rule {
            p.1 /= total;
        }
        rule
    })
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    cache(1, n, |n| {
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        rule.sort_by(|a, b| a.0.total_cmp(&b.0));
        rule
    })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalRule {
    /// Gauss-Hermite with the given starting node count.
    Hermite { nodes: usize },
    /// Panel-wise Gauss-Legendre on `[-half_range, half_range]`.
    Composite {
        nodes_per_panel: usize,
        panel_width: f64,
        half_range: f64,
    },
}

impl NormalRule {
    pub const HERMITE_DEFAULT: NormalRule = NormalRule::Hermite { nodes: 64 };

    pub fn composite(panel_width: f64) -> Self {
        NormalRule::Composite {
            nodes_per_panel: 16,
            panel_width,
            half_range: 12.0,
        }
    }

    fn refined(self) -> Self {
        match self {
            NormalRule::Hermite { nodes } => NormalRule::Hermite { nodes: nodes * 2 },
            NormalRule::Composite {
                nodes_per_panel,
                panel_width,
                half_range,
            } => NormalRule::Composite {
                nodes_per_panel: nodes_per_panel * 2,
                panel_width,
                half_range,
            },
        }
    }

    fn nodes(self) -> usize {
        match self {
            NormalRule::Hermite { nodes } => nodes,
            NormalRule::Composite {
                nodes_per_panel, ..
            } => nodes_per_panel,
        }
    }
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// One application of `rule` to `E{g(ζ)}`. `breakpoints` are only used by the
/// composite rule.
pub fn expect_normal<F: Fn(f64) -> f64>(g: F, breakpoints: &[f64], rule: NormalRule) -> f64 {
    match rule {
        NormalRule::Hermite { nodes } => gauss_hermite_normal(nodes)
            .iter()
            .map(|&(x, w)| w * g(x))
            .sum(),
        NormalRule::Composite {
            nodes_per_panel,
            panel_width,
            half_range,
        } => {
            let gl = gauss_legendre(nodes_per_panel);
            let mut cuts: Vec<f64> = breakpoints
                .iter()
                .copied()
                .filter(|b| b.is_finite() && b.abs() < half_range)
                .collect();
            cuts.push(-half_range);
            cuts.push(half_range);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut total = 0.0;
            for seg in cuts.windows(2) {
                let (a, b) = (seg[0], seg[1]);
                let panels = ((b - a) / panel_width).ceil().max(1.0) as usize;
                let h = (b - a) / panels as f64;
                for p in 0..panels {
                    let mid = a + (p as f64 + 0.5) * h;
                    let half = 0.5 * h;
                    for &(x, w) in gl.iter() {
                        let z = mid + half * x;
                        total += half * w * g(z) * (-0.5 * z * z).exp();
                    }
                }
            }
            total * INV_SQRT_2PI
        }
    }
}

/// Applies `rule`, doubling the node count while two successive values
/// disagree by more than `tol`, up to `max_nodes`.
pub fn expect_normal_adaptive<F: Fn(f64) -> f64>(
    g: F,
    breakpoints: &[f64],
    rule: NormalRule,
    tol: f64,
    max_nodes: usize,
) -> f64 {
    let mut current = rule;
    let mut value = expect_normal(&g, breakpoints, current);
    while current.nodes() * 2 <= max_nodes {
        let next = current.refined();
        let next_value = expect_normal(&g, breakpoints, next);
        let converged = (next_value - value).abs() <= tol;
        value = next_value;
        current = next;
        if converged {
            break;
        }
    }
    value
}
