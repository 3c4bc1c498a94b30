//! Quadrature over products of two elements for integrands of the form
//! (φ_i(x) − φ_i(y)) (φ_j(x) − φ_j(y)) |x − y|^{−1−2s}.
//!
//! Points carry the basis jumps φ_i(x) − φ_i(y) and the distance |x − y|
//! computed from relative coordinates, so that nothing cancels near the
//! singular set.

use crate::geometry::Element;

use super::gauss::gauss_legendre;

/// Tuning of the element-pair rules.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    /// Geometric ratio of consecutive graded cells toward the singularity.
    pub grading_ratio: f64,
    /// Number of graded cells.
    pub levels: usize,
    /// Gauss order per graded cell and direction.
    pub order: usize,
    /// Target relative accuracy for the disjoint-pair order selection.
    pub disjoint_tol: f64,
    /// Smallest Gauss order used for disjoint pairs.
    pub min_order: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            grading_ratio: 0.15,
            levels: 24,
            order: 12,
            disjoint_tol: 1e-13,
            min_order: 2,
        }
    }
}

const MAX_DISJOINT_ORDER: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PairClass {
    Identical,
    Touching,
    Disjoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPoint {
    pub weight: f64,
    pub dist: f64,
    /// φ_i(x) − φ_i(y) for each entry of [`QuadRule::nodes`].
    pub jumps: [f64; 4],
}

/// Points and weights on one element pair.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub class: PairClass,
    /// Global nodes whose hats are nonzero on the pair, in jump order.
    pub nodes: Vec<usize>,
    pub points: Vec<PairPoint>,
    /// Polynomial exactness of the underlying one-dimensional Gauss rules.
    pub degree: usize,
}

impl QuadRule {
    /// ∬ d_i d_j |x−y|^{−1−2s} for all local basis pairs (row-major, n×n).
    pub fn local_matrix(&self, s: f64) -> Vec<f64> {
        let n = self.nodes.len();
        let mut out = vec![0.0; n * n];
        for p in &self.points {
            let wk = p.weight * super::kernel_at_distance(p.dist, s);
            for i in 0..n {
                let wi = wk * p.jumps[i];
                for j in i..n {
                    out[i * n + j] += wi * p.jumps[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out[i * n + j] = out[j * n + i];
            }
        }
        out
    }
}

/// Graded cells [σ^{k+1}, σ^k] (k < levels) and [0, σ^levels] on [0, 1],
/// each with an `order`-point Gauss rule. Returns (t, weight) pairs.
fn graded_points(cfg: &QuadConfig) -> Vec<(f64, f64)> {
    let g = gauss_legendre(cfg.order);
    let mut out = Vec::with_capacity((cfg.levels + 1) * cfg.order);
    let mut hi = 1.0;
    for k in 0..=cfg.levels {
        let lo = if k == cfg.levels {
            0.0
        } else {
            hi * cfg.grading_ratio
        };
        let len = hi - lo;
        for (&t, &w) in g.nodes.iter().zip(&g.weights) {
            out.push((lo + len * t, len * w));
        }
        hi = lo;
    }
    out
}

/// Classifies the pair and builds its rule.
///
/// Identical and vertex-touching pairs use geometric grading toward the
/// singular set; disjoint pairs use a tensor Gauss rule whose order grows
/// with the inverse logarithm of the Bernstein ellipse parameter of the
/// separation, splitting the larger element when the order would exceed 30.
pub fn pair_quadrature(a: &Element, b: &Element, cfg: &QuadConfig) -> QuadRule {
    assert!(cfg.order >= 1 && cfg.grading_ratio > 0.0 && cfg.grading_ratio < 1.0);
    if a.nodes == b.nodes {
        identical(a, cfg)
    } else if a.nodes[1] == b.nodes[0] || a.nodes[0] == b.nodes[1] {
        touching(a, b, cfg)
    } else {
        disjoint(a, b, cfg)
    }
}

fn identical(a: &Element, cfg: &QuadConfig) -> QuadRule {
    let h = a.len();
    let g = gauss_legendre(cfg.order);
    let radial = graded_points(cfg);
    let mut points = Vec::with_capacity(2 * radial.len() * g.nodes.len());
    // Triangle x > y with r = x − y = h t, y = x0 + (h − r) v; the mirrored
    // triangle only flips the jump signs.
    for &(t, wt) in &radial {
        let r = h * t;
        let jac = h * (h - r) * wt;
        for &wv in &g.weights {
            let weight = jac * wv;
            points.push(PairPoint {
                weight,
                dist: r,
                jumps: [-t, t, 0.0, 0.0],
            });
            points.push(PairPoint {
                weight,
                dist: r,
                jumps: [t, -t, 0.0, 0.0],
            });
        }
    }
    QuadRule {
        class: PairClass::Identical,
        nodes: a.nodes.to_vec(),
        points,
        degree: 2 * cfg.order - 1,
    }
}

fn touching(a: &Element, b: &Element, cfg: &QuadConfig) -> QuadRule {
    // x lies at distance ξ from the shared vertex inside a, y at distance η
    // inside b; the orientation of the pair does not change the jumps.
    let (ha, hb) = (a.len(), b.len());
    let (a_other, shared, b_other) = if a.nodes[1] == b.nodes[0] {
        (a.nodes[0], a.nodes[1], b.nodes[1])
    } else {
        (a.nodes[1], a.nodes[0], b.nodes[0])
    };
    let g = gauss_legendre(cfg.order);
    let radial = graded_points(cfg);
    let mut points = Vec::with_capacity(2 * radial.len() * g.nodes.len());
    for &(t, wt) in &radial {
        for (&u, &wu) in g.nodes.iter().zip(&g.weights) {
            let weight = ha * hb * t * wt * wu;
            // p = ξ/ha, q = η/hb over the unit square, split along p = q.
            for (p, q) in [(t, t * u), (t * u, t)] {
                points.push(PairPoint {
                    weight,
                    dist: ha * p + hb * q,
                    jumps: [p, q - p, -q, 0.0],
                });
            }
        }
    }
    QuadRule {
        class: PairClass::Touching,
        nodes: vec![a_other, shared, b_other],
        points,
        degree: 2 * cfg.order - 1,
    }
}

fn disjoint_order(gap: f64, hmax: f64, cfg: &QuadConfig) -> usize {
    let delta = 2.0 * gap / hmax;
    let rho = 1.0 + delta + ((1.0 + delta).powi(2) - 1.0).sqrt();
    let q = ((1.0 / cfg.disjoint_tol).ln() / (2.0 * rho.ln())).ceil();
    (q.max(cfg.min_order as f64) as usize).max(1)
}

fn disjoint(a: &Element, b: &Element, cfg: &QuadConfig) -> QuadRule {
    let mut points = Vec::new();
    let mut degree = usize::MAX;
    disjoint_cells(
        a,
        b,
        (a.x[0], a.x[1]),
        (b.x[0], b.x[1]),
        cfg,
        &mut points,
        &mut degree,
    );
    QuadRule {
        class: PairClass::Disjoint,
        nodes: vec![a.nodes[0], a.nodes[1], b.nodes[0], b.nodes[1]],
        points,
        degree,
    }
}

fn disjoint_cells(
    a: &Element,
    b: &Element,
    ca: (f64, f64),
    cb: (f64, f64),
    cfg: &QuadConfig,
    points: &mut Vec<PairPoint>,
    degree: &mut usize,
) {
    let (la, lb) = (ca.1 - ca.0, cb.1 - cb.0);
    let gap = (cb.0 - ca.1).max(ca.0 - cb.1);
    assert!(gap > 0.0, "disjoint elements must be separated");
    let q = disjoint_order(gap, la.max(lb), cfg);
    if q > MAX_DISJOINT_ORDER {
        if la >= lb {
            let mid = 0.5 * (ca.0 + ca.1);
            disjoint_cells(a, b, (ca.0, mid), cb, cfg, points, degree);
            disjoint_cells(a, b, (mid, ca.1), cb, cfg, points, degree);
        } else {
            let mid = 0.5 * (cb.0 + cb.1);
            disjoint_cells(a, b, ca, (cb.0, mid), cfg, points, degree);
            disjoint_cells(a, b, ca, (mid, cb.1), cfg, points, degree);
        }
        return;
    }
    *degree = (*degree).min(2 * q - 1);
    let g = gauss_legendre(q);
    let (ha, hb) = (a.len(), b.len());
    for (&tx, &wx) in g.nodes.iter().zip(&g.weights) {
        let x = ca.0 + la * tx;
        let (xa, xb) = ((x - a.x[0]) / ha, (a.x[1] - x) / ha);
        for (&ty, &wy) in g.nodes.iter().zip(&g.weights) {
            let y = cb.0 + lb * ty;
            let (ya, yb) = ((y - b.x[0]) / hb, (b.x[1] - y) / hb);
            points.push(PairPoint {
                weight: la * lb * wx * wy,
                dist: (x - y).abs(),
                jumps: [xb, xa, -yb, -ya],
            });
        }
    }
}
