use nalgebra::DVector;

use crate::assembly::{interaction_apply, interpolate, DiscreteProblem};
use crate::error::Result;
use crate::geometry::Region;
use crate::kernel::gauss_legendre;

const SAMPLE_ORDER: usize = 4;
const NORM_ORDER: usize = 6;
/// Samples with w < φ − INACTIVE_GAP count as inactive.
pub const INACTIVE_GAP: f64 = 1e-6;

/// Discrete KKT residuals and sampled interaction-operator signs.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct KKTReport {
    /// max (w − φ)⁺ over obstacle entries.
    pub feasibility_violation: f64,
    /// Most negative multiplier entry (≤ 0).
    pub multiplier_min: f64,
    /// |λᵀ(w − φ)|.
    pub complementarity: f64,
    /// Σ |λ_k| max(1, |φ_k|), the magnitude against which complementarity is judged.
    pub complementarity_scale: f64,
    /// max of 𝒩ₛu over the samples.
    pub interaction_sign: f64,
    /// max |𝒩ₛu| over samples where w < φ − 1e−6 (0 if there are none).
    pub interaction_inactive: f64,
    /// max |𝒩ₛu| over all samples.
    pub interaction_max_abs: f64,
    pub samples: usize,
    pub inactive_samples: usize,
}

impl KKTReport {
    /// interaction_sign relative to the largest sampled |𝒩ₛu|.
    pub fn relative_sign_violation(&self) -> f64 {
        relative(self.interaction_sign.max(0.0), self.interaction_max_abs)
    }

    pub fn relative_inactive_violation(&self) -> f64 {
        relative(self.interaction_inactive, self.interaction_max_abs)
    }
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Gauss points of the Σ₂ elements whose two nodes are both obstacle nodes.
///
/// Elements touching a Σ₂ endpoint are left out: the endpoints carry the
/// exterior datum, so the discrete solution has a boundary layer there.
pub fn sigma2_samples(problem: &DiscreteProblem) -> Vec<f64> {
    let mesh = &problem.mesh;
    let g = gauss_legendre(SAMPLE_ORDER);
    let mut pts = Vec::new();
    for k in mesh.elements_in(Region::Sigma2) {
        let e = mesh.element(k);
        if e.nodes.iter().all(|&n| mesh.node_tags[n] == Region::Sigma2) {
            pts.extend(g.nodes.iter().map(|&t| e.x[0] + e.len() * t));
        }
    }
    pts
}

/// ‖𝒩ₛu‖²_{L²(Σ₂)} for nodal u, by Gauss quadrature on every Σ₂ element.
pub fn interaction_l2_norm_sq(problem: &DiscreteProblem, u: &DVector<f64>) -> Result<f64> {
    let mesh = &problem.mesh;
    let g = gauss_legendre(NORM_ORDER);
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for k in mesh.elements_in(Region::Sigma2) {
        let e = mesh.element(k);
        for (&t, &w) in g.nodes.iter().zip(&g.weights) {
            pts.push(e.x[0] + e.len() * t);
            wts.push(w * e.len());
        }
    }
    let vals = interaction_apply(mesh, u, &pts, &problem.params)?;
    Ok(vals.iter().zip(&wts).map(|(v, w)| w * v * v).sum())
}

/// Fills a [`KKTReport`] for the dof vector `w` and obstacle multiplier `lambda`.
pub fn kkt_report(
    problem: &DiscreteProblem,
    w: &DVector<f64>,
    lambda: &DVector<f64>,
) -> Result<KKTReport> {
    let obs = problem.obstacle();
    let mut complementarity = 0.0;
    let mut scale = 0.0;
    for k in 0..obs.len() {
        if obs.is_active(k) {
            complementarity += lambda[k] * (w[obs.dofs[k]] - obs.phi[k]);
            scale += lambda[k].abs() * obs.phi[k].abs().max(1.0);
        }
    }

    let mesh = &problem.mesh;
    let u = problem.nodal(w);
    let mut phi_nodal = DVector::from_element(mesh.num_nodes(), f64::INFINITY);
    for (k, &n) in mesh.obstacle.iter().enumerate() {
        phi_nodal[n] = obs.phi[k];
    }
    let pts = sigma2_samples(problem);
    let vals = interaction_apply(mesh, &u, &pts, &problem.params)?;
    let (mut sign, mut inactive, mut max_abs, mut n_inactive) =
        (f64::NEG_INFINITY, 0.0f64, 0.0f64, 0);
    for (&x, &v) in pts.iter().zip(&vals) {
        sign = sign.max(v);
        max_abs = max_abs.max(v.abs());
        if interpolate(mesh, &u, x) < interpolate(mesh, &phi_nodal, x) - INACTIVE_GAP {
            inactive = inactive.max(v.abs());
            n_inactive += 1;
        }
    }
    Ok(KKTReport {
        feasibility_violation: if obs.is_empty() {
            0.0
        } else {
            obs.excess(w).amax()
        },
        multiplier_min: lambda.iter().copied().fold(0.0, f64::min),
        complementarity: complementarity.abs(),
        complementarity_scale: scale.max(1.0),
        interaction_sign: if pts.is_empty() { 0.0 } else { sign },
        interaction_inactive: inactive,
        interaction_max_abs: max_abs,
        samples: pts.len(),
        inactive_samples: n_inactive,
    })
}
