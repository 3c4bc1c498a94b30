//! Brute-force reference values, independent of the production quadrature.
#![allow(dead_code)]

use fvi_core::geometry::{Element, Mesh1D, Region};

/// Adaptive tanh-sinh quadrature on [a, b].
///
/// `f(x, x − a, b − x)` receives both endpoint offsets computed without
/// cancellation, so integrands may depend on the exact distance to an
/// endpoint singularity.
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    tanh_sinh_vec(|x, da, db, out| out[0] = f(x, da, db), a, b, tol, 1)[0]
}

/// Vector-valued [`tanh_sinh`]; `f` writes `n` integrand values into its
/// last argument. Converged when the largest change is below `tol` times
/// the largest component.
pub fn tanh_sinh_vec<F: FnMut(f64, f64, f64, &mut [f64])>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    n: usize,
) -> Vec<f64> {
    let len = b - a;
    let mut sum = vec![0.0; n];
    if len <= 0.0 {
        return sum;
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let t_max = 4.5;
    let mut buf = vec![0.0; n];
    let mut add = |t: f64, sum: &mut [f64]| {
        let q = half_pi * t.sinh();
        let w = half_pi * t.cosh() / q.cosh().powi(2);
        // Offset from the nearer endpoint: len / (1 + e^{2|q|}).
        let near = len / (1.0 + (2.0 * q.abs()).exp());
        let far = len - near;
        let (da, db) = if t < 0.0 { (near, far) } else { (far, near) };
        if da <= 0.0 || db <= 0.0 || w == 0.0 {
            return;
        }
        f(a + da, da, db, &mut buf);
        for (s, v) in sum.iter_mut().zip(&buf) {
            *s += 0.5 * len * w * v;
        }
    };
    let mut h = 0.5;
    let n0 = (t_max / h) as i64;
    for k in -n0..=n0 {
        add(k as f64 * h, &mut sum);
    }
    let mut prev: Vec<f64> = sum.iter().map(|v| v * h).collect();
    for _ in 0..12 {
        h *= 0.5;
        let m = (t_max / h) as i64;
        let mut k = -m + if m % 2 == 0 { 1 } else { 0 };
        while k <= m {
            add(k as f64 * h, &mut sum);
            k += 2;
        }
        let est: Vec<f64> = sum.iter().map(|v| v * h).collect();
        let scale = est.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let change = est
            .iter()
            .zip(&prev)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        prev = est;
        if change <= tol * scale.max(1e-300) {
            break;
        }
    }
    prev
}

/// ln Γ(x) for x > 0 by upward recurrence to x ≥ 15 and the Stirling series.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0);
    let mut prod = 1.0;
    let mut z = x;
    while z < 15.0 {
        prod *= z;
        z += 1.0;
    }
    let r = 1.0 / z;
    let r2 = r * r;
    let series = r
        * (1.0 / 12.0
            + r2 * (-1.0 / 360.0 + r2 * (1.0 / 1260.0 + r2 * (-1.0 / 1680.0 + r2 / 1188.0))));
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - prod.ln()
}

pub fn normalization_constant(s: f64) -> f64 {
    (s.ln() + 2.0 * s * 2f64.ln() + ln_gamma(0.5 + s)
        - 0.5 * std::f64::consts::PI.ln()
        - ln_gamma(1.0 - s))
    .exp()
}

/// ∫_{|y|>R} |x − y|^{−1−2s} dy by quadrature in u = R/|y|.
pub fn tail_integral(x: f64, r: f64, s: f64) -> f64 {
    let right = tanh_sinh(
        |u, _, _| (r / u - x).powf(-1.0 - 2.0 * s) * r / (u * u),
        0.0,
        1.0,
        1e-13,
    );
    let left = tanh_sinh(
        |u, _, _| (r / u + x).powf(-1.0 - 2.0 * s) * r / (u * u),
        0.0,
        1.0,
        1e-13,
    );
    right + left
}

/// Hat of `node` at x inside element `e` (zero unless `node` is a vertex of `e`).
fn local_hat(e: &Element, node: usize, x: f64) -> f64 {
    if node == e.nodes[0] {
        (e.x[1] - x) / e.len()
    } else if node == e.nodes[1] {
        (x - e.x[0]) / e.len()
    } else {
        0.0
    }
}

const INNER_TOL: f64 = 1e-12;
const OUTER_TOL: f64 = 1e-11;

/// ∫_A ∫_B (φ_i(x) − φ_i(y)) (φ_j(x) − φ_j(y)) |x − y|^{−1−2s} dy dx for
/// elements A (x) and B (y), as (i, j, value) for i ≤ j.
pub fn pair_oracle(ea: &Element, eb: &Element, s: f64) -> Vec<(usize, usize, f64)> {
    let mut nodes: Vec<usize> = ea.nodes.iter().chain(eb.nodes.iter()).copied().collect();
    nodes.sort();
    nodes.dedup();
    let pairs: Vec<(usize, usize)> = nodes
        .iter()
        .enumerate()
        .flat_map(|(k, &i)| nodes[k..].iter().map(move |&j| (i, j)))
        .collect();
    let m = pairs.len();
    let p = -1.0 - 2.0 * s;
    let jumps = |x: f64, y: f64, out: &mut [f64], kern: f64| {
        for (o, &(i, j)) in out.iter_mut().zip(&pairs) {
            let di = local_hat(ea, i, x) - local_hat(eb, i, y);
            let dj = local_hat(ea, j, x) - local_hat(eb, j, y);
            *o = di * dj * kern;
        }
    };

    let vals = if ea.nodes == eb.nodes {
        // Same element: φ(x) − φ(y) = slope · (x − y); split at y = x.
        let h = ea.len();
        let slope = |n: usize| if n == ea.nodes[0] { -1.0 / h } else { 1.0 / h };
        let c: Vec<f64> = pairs.iter().map(|&(i, j)| slope(i) * slope(j)).collect();
        let inner = |len: f64| tanh_sinh(|_, t, _| t.powf(2.0 + p), 0.0, len, INNER_TOL);
        tanh_sinh_vec(
            |_, da, db, out| {
                let v = inner(da) + inner(db);
                for (o, ck) in out.iter_mut().zip(&c) {
                    *o = ck * v;
                }
            },
            ea.x[0],
            ea.x[1],
            OUTER_TOL,
            m,
        )
    } else if ea.nodes[1] == eb.nodes[0] || ea.nodes[0] == eb.nodes[1] {
        // Shared vertex: the offsets from it give |x − y| exactly.
        let a_left = ea.nodes[1] == eb.nodes[0];
        tanh_sinh_vec(
            |x, da, db, out| {
                let xi = if a_left { db } else { da };
                let v = tanh_sinh_vec(
                    |y, ya, yb, o| {
                        let eta = if a_left { ya } else { yb };
                        // Below this distance the kernel overflows; the
                        // integrable region it cuts off is far below tolerance.
                        let kern = if xi + eta < 1e-60 {
                            0.0
                        } else {
                            (xi + eta).powf(p)
                        };
                        jumps(x, y, o, kern);
                    },
                    eb.x[0],
                    eb.x[1],
                    INNER_TOL,
                    m,
                );
                out.copy_from_slice(&v);
            },
            ea.x[0],
            ea.x[1],
            OUTER_TOL,
            m,
        )
    } else {
        tanh_sinh_vec(
            |x, _, _, out| {
                let v = tanh_sinh_vec(
                    |y, _, _, o| jumps(x, y, o, (x - y).abs().powf(p)),
                    eb.x[0],
                    eb.x[1],
                    INNER_TOL,
                    m,
                );
                out.copy_from_slice(&v);
            },
            ea.x[0],
            ea.x[1],
            OUTER_TOL,
            m,
        )
    };
    pairs
        .into_iter()
        .zip(vals)
        .map(|((i, j), v)| (i, j, v))
        .collect()
}

fn dense_pairs<F: Fn(Region, Region) -> bool>(mesh: &Mesh1D, s: f64, keep: F) -> Vec<Vec<f64>> {
    let n = mesh.num_nodes();
    let mut g = vec![vec![0.0; n]; n];
    for ka in 0..mesh.num_elements() {
        for kb in 0..mesh.num_elements() {
            if !keep(mesh.element_tags[ka], mesh.element_tags[kb]) {
                continue;
            }
            for (i, j, v) in pair_oracle(&mesh.element(ka), &mesh.element(kb), s) {
                g[i][j] += v;
                if i != j {
                    g[j][i] += v;
                }
            }
        }
    }
    g
}

/// Gagliardo matrix over all nodes: ordered element pairs with at least one
/// element in Ω, plus the numerically integrated tail beyond R.
pub fn gagliardo_oracle(mesh: &Mesh1D, s: f64) -> Vec<Vec<f64>> {
    let mut g = dense_pairs(mesh, s, |a, b| a == Region::Omega || b == Region::Omega);
    let r = mesh.spec.radius;
    for k in mesh.elements_in(Region::Omega) {
        let e = mesh.element(k);
        for &i in &e.nodes {
            for &j in &e.nodes {
                g[i][j] += tanh_sinh(
                    |x, _, _| {
                        2.0 * local_hat(&e, i, x) * local_hat(&e, j, x) * tail_integral(x, r, s)
                    },
                    e.x[0],
                    e.x[1],
                    1e-12,
                );
            }
        }
    }
    g
}

/// Σ₂ × Σ₂ double integral over all nodes.
pub fn sigma2_oracle(mesh: &Mesh1D, s: f64) -> Vec<Vec<f64>> {
    dense_pairs(mesh, s, |a, b| a == Region::Sigma2 && b == Region::Sigma2)
}

/// P1 mass matrix over Σ₂ by quadrature of hat products.
pub fn sigma2_mass_oracle(mesh: &Mesh1D) -> Vec<Vec<f64>> {
    let n = mesh.num_nodes();
    let mut m = vec![vec![0.0; n]; n];
    for k in mesh.elements_in(Region::Sigma2) {
        let e = mesh.element(k);
        for &i in &e.nodes {
            for &j in &e.nodes {
                m[i][j] += tanh_sinh(
                    |x, _, _| local_hat(&e, i, x) * local_hat(&e, j, x),
                    e.x[0],
                    e.x[1],
                    1e-14,
                );
            }
        }
    }
    m
}

/// Relative error with a floor for entries that vanish in the oracle.
pub fn rel_err(got: f64, want: f64, floor: f64) -> f64 {
    (got - want).abs() / want.abs().max(floor)
}
