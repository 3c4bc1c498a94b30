use nalgebra::{DMatrix, DVector};

use super::{extract_multiplier, spd_solve, Obstacle, SolverOptions};
use crate::error::{Error, Result, Warning};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum VIMethod {
    ProjectedGaussSeidel,
    ActiveSet,
}

/// Solution of the discrete variational inequality with its multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct VISolution {
    pub w: DVector<f64>,
    /// Multiplier on obstacle entries: (ℓ − Ew) there.
    pub lambda: DVector<f64>,
    /// Obstacle entries (indices into the obstacle list) where w = φ.
    pub active_set: Vec<usize>,
    pub iterations: usize,
    /// ‖Ew + Bλ − ℓ‖ on the inactive dofs relative to max(1, ‖ℓ‖).
    pub residual: f64,
    pub method: VIMethod,
    pub fallback: bool,
    pub warnings: Vec<Warning>,
}

impl VISolution {
    fn assemble(
        e: &DMatrix<f64>,
        l: &DVector<f64>,
        obs: &Obstacle,
        w: DVector<f64>,
        active_set: Vec<usize>,
        iterations: usize,
        method: VIMethod,
    ) -> Self {
        let lambda = extract_multiplier(e, l, &w, &obs.dofs);
        let mut r = l - e * &w;
        for &k in &active_set {
            r[obs.dofs[k]] = 0.0;
        }
        let residual = r.norm() / l.norm().max(1.0);
        Self {
            w,
            lambda,
            active_set,
            iterations,
            residual,
            method,
            fallback: false,
            warnings: Vec::new(),
        }
    }

    /// max over obstacle entries of (w − φ)⁺.
    pub fn feasibility_violation(&self, obs: &Obstacle) -> f64 {
        obs.excess(&self.w).amax()
    }

    /// Most negative multiplier entry (0 if none is negative).
    pub fn multiplier_min(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::min)
    }

    /// |λᵀ(w − φ)| over constrained entries.
    pub fn complementarity(&self, obs: &Obstacle) -> f64 {
        (0..obs.len())
            .filter(|&k| obs.is_active(k))
            .map(|k| self.lambda[k] * (self.w[obs.dofs[k]] - obs.phi[k]))
            .sum::<f64>()
            .abs()
    }
}

/// Projected Gauss-Seidel on min ½wᵀEw − ℓᵀw subject to w ≤ φ on obstacle
/// entries, until the largest update is at most `pgs_tol`.
pub fn solve_vi_pgs_oracle(
    e: &DMatrix<f64>,
    l: &DVector<f64>,
    obs: &Obstacle,
    opts: &SolverOptions,
) -> Result<VISolution> {
    let n = l.len();
    let mut upper = vec![f64::INFINITY; n];
    for k in 0..obs.len() {
        if obs.is_active(k) {
            upper[obs.dofs[k]] = obs.phi[k];
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| e[(i, i)]).collect();
    if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
        return Err(Error::SingularSystem(format!(
            "nonpositive diagonal entry at dof {i}"
        )));
    }
    let mut w = DVector::from_iterator(n, (0..n).map(|i| 0.0f64.min(upper[i])));
    for sweep in 1..=opts.pgs_max_sweeps {
        let mut change = 0.0f64;
        for i in 0..n {
            // E is symmetric, so column i (contiguous) equals row i.
            let r = l[i] - e.column(i).dot(&w) + diag[i] * w[i];
            let wi = (r / diag[i]).min(upper[i]);
            change = change.max((wi - w[i]).abs());
            w[i] = wi;
        }
        if change <= opts.pgs_tol {
            let active = (0..obs.len())
                .filter(|&k| obs.is_active(k) && w[obs.dofs[k]] == obs.phi[k])
                .collect();
            return Ok(VISolution::assemble(
                e,
                l,
                obs,
                w,
                active,
                sweep,
                VIMethod::ProjectedGaussSeidel,
            ));
        }
    }
    Err(Error::MaxIterations(opts.pgs_max_sweeps))
}

/// Primal-dual active-set method with parameter c = `opts.pdas_c`.
///
/// Starts from the unconstrained solution. Each step fixes w = φ on
/// A = {λ + c(w − φ) > 0} and λ = 0 elsewhere, and stops when A repeats.
/// If A keeps changing for `pdas_max_iter` steps the projected Gauss-Seidel
/// result is returned with `fallback` set.
pub fn solve_vi_pdas(
    e: &DMatrix<f64>,
    l: &DVector<f64>,
    obs: &Obstacle,
    opts: &SolverOptions,
) -> Result<VISolution> {
    if opts.pdas_c <= 0.0 {
        return Err(Error::Parameter(format!(
            "active-set parameter c = {} must be positive",
            opts.pdas_c
        )));
    }
    let n = l.len();
    let mut w = spd_solve(e, l, opts.linear_tol)?;
    let mut lambda = DVector::zeros(obs.len());
    let mut active: Vec<usize> = Vec::new();
    let mut seen: Vec<Vec<usize>> = Vec::new();
    for it in 1..=opts.pdas_max_iter {
        let next: Vec<usize> = (0..obs.len())
            .filter(|&k| {
                obs.is_active(k) && lambda[k] + opts.pdas_c * (w[obs.dofs[k]] - obs.phi[k]) > 0.0
            })
            .collect();
        if it > 1 && next == active {
            let mut sol = VISolution::assemble(e, l, obs, w, active, it - 1, VIMethod::ActiveSet);
            sol.lambda = lambda;
            return Ok(sol);
        }
        if seen.contains(&next) {
            break;
        }
        seen.push(next.clone());
        active = next;

        let mut fixed = vec![false; n];
        let mut w_new = DVector::zeros(n);
        for &k in &active {
            fixed[obs.dofs[k]] = true;
            w_new[obs.dofs[k]] = obs.phi[k];
        }
        let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
        let rhs = l - e * &w_new;
        let rhs_free = rhs.select_rows(&free);
        let e_free = e.select_rows(&free).select_columns(&free);
        let w_free = spd_solve(&e_free, &rhs_free, opts.linear_tol)?;
        for (k, &i) in free.iter().enumerate() {
            w_new[i] = w_free[k];
        }
        w = w_new;
        lambda = DVector::zeros(obs.len());
        let full = extract_multiplier(e, l, &w, &obs.dofs);
        for &k in &active {
            lambda[k] = full[k];
        }
    }
    let iterations = seen.len();
    let mut sol = solve_vi_pgs_oracle(e, l, obs, opts)?;
    sol.fallback = true;
    sol.warnings
        .push(Warning::PdasFallback { iterations }.emit());
    Ok(sol)
}
