use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{Mesh1D, Region};
use crate::kernel::{gauss_legendre, kernel_at_distance, FracParams};

const ORDER: usize = 10;

/// Value of the P1 interpolant of nodal `u` at x; zero beyond the mesh.
pub fn interpolate(mesh: &Mesh1D, u: &DVector<f64>, x: f64) -> f64 {
    let nodes = &mesh.nodes;
    if x < nodes[0] || x > nodes[nodes.len() - 1] {
        return 0.0;
    }
    let k = nodes.partition_point(|&n| n <= x).clamp(1, nodes.len() - 1) - 1;
    let t = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
    (1.0 - t) * u[k] + t * u[k + 1]
}

/// 𝒩ₛu(x) = C ∫_Ω (u(x) − u(y)) |x − y|^{−1−2s} dy for exterior points x.
///
/// Each Ω element is cut into pieces no longer than their distance to x,
/// so the rule stays accurate as x approaches ∂Ω.
pub fn interaction_apply(
    mesh: &Mesh1D,
    u: &DVector<f64>,
    pts: &[f64],
    p: &FracParams,
) -> Result<Vec<f64>> {
    let om = mesh.spec.omega;
    if let Some(&x) = pts.iter().find(|&&x| om.contains_closed(x)) {
        return Err(Error::Domain(x));
    }
    let omega_elements = mesh.elements_in(Region::Omega);
    let g = gauss_legendre(ORDER);
    let out = pts
        .iter()
        .map(|&x| {
            let ux = interpolate(mesh, u, x);
            let mut acc = 0.0;
            for &k in &omega_elements {
                let e = mesh.element(k);
                let (u0, u1) = (u[e.nodes[0]], u[e.nodes[1]]);
                let h = e.len();
                let mut piece = |lo: f64, hi: f64| {
                    let len = hi - lo;
                    let mut sum = 0.0;
                    for (&t, &w) in g.nodes.iter().zip(&g.weights) {
                        let y = lo + len * t;
                        let s = (y - e.x[0]) / h;
                        let uy = (1.0 - s) * u0 + s * u1;
                        sum += w * (ux - uy) * kernel_at_distance((x - y).abs(), p.s);
                    }
                    acc += sum * len;
                };
                if x > e.x[1] {
                    let mut hi = e.x[1];
                    loop {
                        let d = x - hi;
                        let lo = (hi - d).max(e.x[0]);
                        piece(lo, hi);
                        if lo == e.x[0] {
                            break;
                        }
                        hi = lo;
                    }
                } else {
                    let mut lo = e.x[0];
                    loop {
                        let d = lo - x;
                        let hi = (lo + d).min(e.x[1]);
                        piece(lo, hi);
                        if hi == e.x[1] {
                            break;
                        }
                        lo = hi;
                    }
                }
            }
            p.c_ns * acc
        })
        .collect();
    Ok(out)
}
