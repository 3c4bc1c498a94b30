use nalgebra::{DMatrix, DVector};

use super::{spd_solve, Obstacle, SolverOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PenaltyKind {
    /// (ε⁻²/2) pᵀ M p with the Σ₂ mass matrix M.
    L2,
    /// (ξ⁻¹/2) ‖p‖²_S with the Σ₂ Gram matrix S.
    Sobolev,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySolution {
    pub kind: PenaltyKind,
    pub w: DVector<f64>,
    /// ε or ξ.
    pub parameter: f64,
    /// ε⁻² D M p (L²) or ξ⁻¹ S p (Sobolev), p = (w − φ)⁺ on obstacle entries.
    pub multiplier: DVector<f64>,
    /// Obstacle entries with w > φ.
    pub positive_set: Vec<usize>,
    pub newton_iterations: usize,
    /// Optimality residual relative to max(1, ‖ℓ‖).
    pub residual: f64,
}

impl PenaltySolution {
    pub fn excess(&self, obs: &Obstacle) -> DVector<f64> {
        obs.excess(&self.w)
    }
}

struct Penalized<'a> {
    e: &'a DMatrix<f64>,
    l: &'a DVector<f64>,
    obs: &'a Obstacle,
    /// Penalty matrix on obstacle entries, already scaled by ε⁻² or ξ⁻¹.
    p_mat: DMatrix<f64>,
    kind: PenaltyKind,
}

impl Penalized<'_> {
    fn positive_set(&self, w: &DVector<f64>) -> Vec<usize> {
        (0..self.obs.len())
            .filter(|&k| self.obs.is_active(k) && w[self.obs.dofs[k]] > self.obs.phi[k])
            .collect()
    }

    /// Multiplier on obstacle entries at w.
    fn multiplier(&self, w: &DVector<f64>) -> DVector<f64> {
        let p = self.obs.excess(w);
        let mut m = &self.p_mat * p;
        if self.kind == PenaltyKind::L2 {
            // Gradient of the penalty: only positive entries receive a force.
            for k in 0..self.obs.len() {
                if !(self.obs.is_active(k) && w[self.obs.dofs[k]] > self.obs.phi[k]) {
                    m[k] = 0.0;
                }
            }
        }
        m
    }

    fn residual(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut r = self.e * w - self.l;
        let m = self.multiplier(w);
        for (k, &d) in self.obs.dofs.iter().enumerate() {
            r[d] += m[k];
        }
        r
    }

    fn jacobian(&self, pos: &[usize]) -> DMatrix<f64> {
        let mut j = self.e.clone();
        let rows: Vec<usize> = match self.kind {
            PenaltyKind::L2 => pos.to_vec(),
            PenaltyKind::Sobolev => (0..self.obs.len()).collect(),
        };
        for &a in &rows {
            for &b in pos {
                j[(self.obs.dofs[a], self.obs.dofs[b])] += self.p_mat[(a, b)];
            }
        }
        j
    }
}

/// Semismooth Newton with step halving on residual increase, started from
/// the unconstrained solution. Stops when the positive set repeats and the
/// residual is at most `newton_tol · max(1, ‖ℓ‖)`.
fn newton(sys: &Penalized<'_>, parameter: f64, opts: &SolverOptions) -> Result<PenaltySolution> {
    let scale = sys.l.norm().max(1.0);
    let mut w = spd_solve(sys.e, sys.l, opts.linear_tol)?;
    let mut r = sys.residual(&w);
    let mut pos = sys.positive_set(&w);
    let mut prev_pos = pos.clone();
    let mut steps = 0;
    loop {
        let res = r.norm();
        if prev_pos == pos && res <= opts.newton_tol * scale {
            let multiplier = sys.multiplier(&w);
            return Ok(PenaltySolution {
                kind: sys.kind,
                w,
                parameter,
                multiplier,
                positive_set: pos,
                newton_iterations: steps,
                residual: res / scale,
            });
        }
        if steps == opts.newton_max_iter {
            return Err(Error::NoConvergence {
                steps,
                residual: res / scale,
            });
        }
        let jac = sys.jacobian(&pos);
        let delta = match sys.kind {
            PenaltyKind::L2 => spd_solve(&jac, &(-&r), opts.linear_tol)?,
            PenaltyKind::Sobolev => jac
                .lu()
                .solve(&(-&r))
                .ok_or_else(|| Error::SingularSystem("penalty Jacobian is singular".into()))?,
        };
        let mut t = 1.0;
        let (mut w_new, mut r_new);
        loop {
            w_new = &w + &delta * t;
            r_new = sys.residual(&w_new);
            if r_new.norm() <= res || t < 1e-6 {
                break;
            }
            t *= 0.5;
        }
        if r_new.norm() > res {
            // No decrease along the direction; take the full semismooth step.
            w_new = &w + &delta;
            r_new = sys.residual(&w_new);
        }
        steps += 1;
        prev_pos = pos;
        pos = sys.positive_set(&w_new);
        w = w_new;
        r = r_new;
    }
}

/// Minimizes ½wᵀEw − ℓᵀw + (ε⁻²/2) pᵀ M p, p = (w − φ)⁺ nodal.
///
/// The optimality system is Ew + ε⁻² B D M p = ℓ, D = diag(w > φ), and the
/// multiplier estimate ε⁻² D M p equals (ℓ − Ew) on obstacle entries.
pub fn solve_penalty_l2(
    e: &DMatrix<f64>,
    l: &DVector<f64>,
    obs: &Obstacle,
    mass: &DMatrix<f64>,
    eps: f64,
    opts: &SolverOptions,
) -> Result<PenaltySolution> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!(
            "penalty parameter eps = {eps} must be positive"
        )));
    }
    let sys = Penalized {
        e,
        l,
        obs,
        p_mat: mass / (eps * eps),
        kind: PenaltyKind::L2,
    };
    newton(&sys, eps, opts)
}

/// Solves Ew + ξ⁻¹ B S (w − φ)⁺ = ℓ; the multiplier estimate is ξ⁻¹ S (w − φ)⁺.
pub fn solve_penalty_sobolev(
    e: &DMatrix<f64>,
    l: &DVector<f64>,
    obs: &Obstacle,
    gram: &DMatrix<f64>,
    xi: f64,
    opts: &SolverOptions,
) -> Result<PenaltySolution> {
    if !(xi > 0.0) {
        return Err(Error::Parameter(format!(
            "penalty parameter xi = {xi} must be positive"
        )));
    }
    let sys = Penalized {
        e,
        l,
        obs,
        p_mat: gram / xi,
        kind: PenaltyKind::Sobolev,
    };
    newton(&sys, xi, opts)
}
