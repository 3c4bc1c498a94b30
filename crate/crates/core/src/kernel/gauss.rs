//! Gauss-Legendre rules on [0, 1].

use std::sync::OnceLock;

const MAX_ORDER: usize = 64;

/// Nodes and weights of an n-point Gauss-Legendre rule on [0, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn compute(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = ((i as f64 + 0.75) / (n as f64 + 0.5) * std::f64::consts::PI).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1]; fill symmetric pairs.
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    GaussRule { nodes, weights }
}

/// Cached rule of order `n` (1 ≤ n ≤ 64).
pub fn gauss_legendre(n: usize) -> &'static GaussRule {
    static TABLE: OnceLock<Vec<GaussRule>> = OnceLock::new();
    assert!((1..=MAX_ORDER).contains(&n), "Gauss order {n} out of range");
    &TABLE.get_or_init(|| {
        (0..=MAX_ORDER)
            .map(|n| {
                if n == 0 {
                    GaussRule {
                        nodes: vec![],
                        weights: vec![],
                    }
                } else {
                    compute(n)
                }
            })
            .collect()
    })[n]
}

/// Integrates `f` over [a, b] with an n-point rule.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let g = gauss_legendre(n);
    let len = b - a;
    g.nodes
        .iter()
        .zip(&g.weights)
        .map(|(&t, &w)| w * f(a + len * t))
        .sum::<f64>()
        * len
}
