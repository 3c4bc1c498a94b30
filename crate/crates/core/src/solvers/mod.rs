//! Solvers for the discrete obstacle problem
//!
//!   min ½ wᵀEw − ℓᵀw   subject to   w_i ≤ φ_i on obstacle dofs,
//!
//! and for its two penalized relaxations. Multipliers live on obstacle dofs
//! and satisfy Ew + Bλ = ℓ, where B injects obstacle entries into dof space.

mod penalty;
mod vi;

pub use penalty::{solve_penalty_l2, solve_penalty_sobolev, PenaltyKind, PenaltySolution};
pub use vi::{solve_vi_pdas, solve_vi_pgs_oracle, VIMethod, VISolution};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Obstacle values at or above this are treated as absent.
pub const UNCONSTRAINED: f64 = 1e29;

/// Upper bound φ on a subset of the dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub dofs: Vec<usize>,
    pub phi: DVector<f64>,
}

impl Obstacle {
    pub fn new(dofs: Vec<usize>, phi: DVector<f64>) -> Self {
        assert_eq!(dofs.len(), phi.len());
        Self { dofs, phi }
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.phi[k] < UNCONSTRAINED
    }

    /// Obstacle entries of a dof vector.
    pub fn gather(&self, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.dofs.iter().map(|&d| w[d]))
    }

    /// Nodal positive part (w − φ)⁺ on constrained entries.
    pub fn excess(&self, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            (0..self.len()).map(|k| {
                if self.is_active(k) {
                    (w[self.dofs[k]] - self.phi[k]).max(0.0)
                } else {
                    0.0
                }
            }),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub linear_tol: f64,
    pub pgs_tol: f64,
    pub pgs_max_sweeps: usize,
    pub pdas_c: f64,
    pub pdas_max_iter: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            linear_tol: 1e-12,
            pgs_tol: 1e-12,
            pgs_max_sweeps: 1_000_000,
            pdas_c: 1.0,
            pdas_max_iter: 200,
            newton_tol: 1e-11,
            newton_max_iter: 100,
        }
    }
}

fn rel_residual(e: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (e * x - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Cholesky solve with iterative refinement down to `tol` relative residual.
pub(crate) fn spd_solve(e: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    if b.iter().all(|&v| v == 0.0) {
        return Ok(DVector::zeros(b.len()));
    }
    let chol = e
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("matrix is not positive definite".into()))?;
    let mut x = chol.solve(b);
    for _ in 0..3 {
        if rel_residual(e, &x, b) <= tol {
            return Ok(x);
        }
        x += chol.solve(&(b - e * &x));
    }
    let r = rel_residual(e, &x, b);
    if r <= tol {
        Ok(x)
    } else {
        Err(Error::SingularSystem(format!(
            "relative residual {r:.3e} above {tol:.1e}"
        )))
    }
}

/// Solves Ew = ℓ on the free dofs (Dirichlet values are already eliminated).
pub fn solve_unconstrained(e: &DMatrix<f64>, l: &DVector<f64>) -> Result<DVector<f64>> {
    spd_solve(e, l, SolverOptions::default().linear_tol)
}

/// (ℓ − Ew) restricted to obstacle dofs.
pub fn extract_multiplier(
    e: &DMatrix<f64>,
    l: &DVector<f64>,
    w: &DVector<f64>,
    obstacle_dofs: &[usize],
) -> DVector<f64> {
    let r = l - e * w;
    DVector::from_iterator(obstacle_dofs.len(), obstacle_dofs.iter().map(|&d| r[d]))
}
