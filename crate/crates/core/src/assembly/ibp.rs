//! Integration-by-parts diagnostic: for v vanishing on Σ₁,
//! ℰ(u, v) = ∫_Ω v (−Δ)ˢu + ∫_{Σ₂} v 𝒩ₛu.
//! The energy and interaction terms use the P1 interpolant of a smooth
//! profile; (−Δ)ˢu is evaluated from the profile itself.

use nalgebra::{DMatrix, DVector};

use super::interaction::interaction_apply;
use crate::error::{Error, Result, Warning};
use crate::geometry::{Mesh1D, Region};
use crate::kernel::{gauss_legendre, FracParams};

/// A C² function with compact support, given with its second derivative.
pub trait SmoothProfile: Sync {
    fn value(&self, x: f64) -> f64;
    fn second_derivative(&self, x: f64) -> f64;
    fn support(&self) -> (f64, f64);
}

/// (1 − ((x − c)/r)²)⁴ on |x − c| < r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
}

impl SmoothProfile for Bump {
    fn value(&self, x: f64) -> f64 {
        let q = (x - self.center) / self.radius;
        if q.abs() >= 1.0 {
            return 0.0;
        }
        (1.0 - q * q).powi(4)
    }

    fn second_derivative(&self, x: f64) -> f64 {
        let q = (x - self.center) / self.radius;
        if q.abs() >= 1.0 {
            return 0.0;
        }
        let g = 1.0 - q * q;
        (48.0 * q * q * g * g - 8.0 * g * g * g) / (self.radius * self.radius)
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

const VOLUME_ORDER: usize = 6;
const SURFACE_ORDER: usize = 6;
const GRADING: f64 = 0.15;
// Below t_min the second difference is replaced by its Taylor term.
const TAYLOR_FRACTION: f64 = 1e-4;

/// (−Δ)ˢu(x) = C ∫_0^∞ (2u(x) − u(x+t) − u(x−t)) t^{−1−2s} dt.
pub fn fractional_laplacian(u: &dyn SmoothProfile, x: f64, p: &FracParams, order: usize) -> f64 {
    let s = p.s;
    let (lo, hi) = u.support();
    let ux = u.value(x);
    let t_min = TAYLOR_FRACTION * (hi - lo);
    let mut acc = -u.second_derivative(x) * t_min.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);

    let mut breaks: Vec<f64> = [(x - lo).abs(), (hi - x).abs()]
        .into_iter()
        .filter(|&b| b > t_min)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let t_far = breaks.last().copied().unwrap_or(t_min);
    let g = gauss_legendre(order);
    let mut cell = |a: f64, b: f64| {
        let len = b - a;
        let mut sum = 0.0;
        for (&t, &w) in g.nodes.iter().zip(&g.weights) {
            let tt = a + len * t;
            let d2 = 2.0 * ux - u.value(x + tt) - u.value(x - tt);
            sum += w * d2 * tt.powf(-1.0 - 2.0 * s);
        }
        acc += sum * len;
    };
    // Geometric cells from the first breakpoint down to t_min.
    if let Some(&first) = breaks.first() {
        let mut b = first;
        while b > t_min {
            let a = (b * GRADING).max(t_min);
            cell(a, b);
            b = a;
        }
        for w in breaks.windows(2) {
            let n = 8;
            for k in 0..n {
                let a = w[0] + (w[1] - w[0]) * k as f64 / n as f64;
                let b = w[0] + (w[1] - w[0]) * (k + 1) as f64 / n as f64;
                cell(a, b);
            }
        }
    }
    acc += 2.0 * ux * t_far.powf(-2.0 * s) / (2.0 * s);
    p.c_ns * acc
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct IbpReport {
    pub h: f64,
    /// ℰ(u_h, v_h).
    pub energy_term: f64,
    /// ∫_Ω v_h (−Δ)ˢu.
    pub volume_term: f64,
    /// ∫_{Σ₂} v_h 𝒩ₛu_h.
    pub interaction_term: f64,
    pub residual: f64,
    /// ℰ(u_h, u_h), the scale of the residual tolerance.
    pub energy_uu: f64,
    pub warnings: Vec<Warning>,
}

/// Test vector: a half-period sine on Ω and on each Σ₂ interval, zero elsewhere.
pub fn sine_test_vector(mesh: &Mesh1D) -> DVector<f64> {
    let spec = &mesh.spec;
    let intervals: Vec<_> = std::iter::once(spec.omega)
        .chain(spec.sigma2.iter().copied())
        .collect();
    DVector::from_iterator(
        mesh.num_nodes(),
        mesh.nodes.iter().map(|&x| {
            intervals
                .iter()
                .find(|iv| iv.contains(x))
                .map_or(0.0, |iv| {
                    (std::f64::consts::PI * (x - iv.left) / iv.len()).sin()
                })
        }),
    )
}

/// |ℰ(u_h, v_h) − ∫_Ω v_h (−Δ)ˢu − ∫_{Σ₂} v_h 𝒩ₛu_h| for the nodal
/// interpolant u_h of `u`.
///
/// `e_full` is the energy matrix (C/2)·G over all nodes and `v` a nodal
/// vector vanishing at Dirichlet nodes.
pub fn ibp_residual(
    mesh: &Mesh1D,
    p: &FracParams,
    e_full: &DMatrix<f64>,
    u: &dyn SmoothProfile,
    v: &DVector<f64>,
) -> Result<IbpReport> {
    if let Some(&i) = mesh.dirichlet.iter().find(|&&i| v[i] != 0.0) {
        return Err(Error::Precondition(format!(
            "test vector is nonzero at Dirichlet node x = {}",
            mesh.nodes[i]
        )));
    }
    let uh = DVector::from_iterator(mesh.num_nodes(), mesh.nodes.iter().map(|&x| u.value(x)));
    let e_uv = (e_full * v).dot(&uh);
    let energy_uu = (e_full * &uh).dot(&uh);

    let volume = |order: usize| {
        let g = gauss_legendre(VOLUME_ORDER);
        let mut acc = 0.0;
        for k in mesh.elements_in(Region::Omega) {
            let e = mesh.element(k);
            let len = e.len();
            for (&t, &w) in g.nodes.iter().zip(&g.weights) {
                let vx = (1.0 - t) * v[e.nodes[0]] + t * v[e.nodes[1]];
                if vx != 0.0 {
                    acc += w * len * vx * fractional_laplacian(u, e.x[0] + len * t, p, order);
                }
            }
        }
        acc
    };
    let volume_term = volume(12);
    let check = volume(20);
    let mut warnings = Vec::new();
    let discrepancy = (volume_term - check).abs();
    if discrepancy > 1e-9 * (1.0 + volume_term.abs()) {
        warnings.push(
            Warning::Accuracy {
                quantity: "fractional Laplacian of the profile".into(),
                discrepancy,
            }
            .emit(),
        );
    }

    let g = gauss_legendre(SURFACE_ORDER);
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for k in mesh.elements_in(Region::Sigma2) {
        let e = mesh.element(k);
        let len = e.len();
        for (&t, &w) in g.nodes.iter().zip(&g.weights) {
            let vx = (1.0 - t) * v[e.nodes[0]] + t * v[e.nodes[1]];
            pts.push(e.x[0] + len * t);
            wts.push(w * len * vx);
        }
    }
    let n_u = interaction_apply(mesh, &uh, &pts, p)?;
    let interaction_term: f64 = n_u.iter().zip(&wts).map(|(a, b)| a * b).sum();

    Ok(IbpReport {
        h: mesh.h,
        energy_term: e_uv,
        volume_term,
        interaction_term,
        residual: (e_uv - volume_term - interaction_term).abs(),
        energy_uu,
        warnings,
    })
}
