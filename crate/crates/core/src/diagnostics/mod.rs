//! Checks of the discrete solutions against the optimality conditions and
//! the penalty convergence rates.

mod kkt;
mod study;

pub use kkt::{interaction_l2_norm_sq, kkt_report, sigma2_samples, KKTReport};
pub use study::{
    mosco_check, rate_study_epsilon, rate_study_xi, ErrorColumn, MoscoRow, MoscoTable, StudyMode,
    StudyReport,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// J(w) = ½ wᵀEw − ℓᵀw.
pub fn evaluate_j(e: &DMatrix<f64>, l: &DVector<f64>, w: &DVector<f64>) -> f64 {
    0.5 * (e * w).dot(w) - l.dot(w)
}

/// Estimated order between two consecutive grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eoc {
    Value(f64),
    /// The error vanished at the finer parameter.
    Exact,
}

impl Eoc {
    pub fn between(e0: f64, e1: f64, p0: f64, p1: f64) -> Self {
        if e1 == 0.0 {
            Eoc::Exact
        } else {
            Eoc::Value((e0 / e1).ln() / (p0 / p1).ln())
        }
    }

    pub fn to_cell(self) -> String {
        match self {
            Eoc::Value(v) => format!("{v:.16e}"),
            Eoc::Exact => "exact".into(),
        }
    }
}

impl serde::Serialize for Eoc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Eoc::Value(v) => s.serialize_f64(*v),
            Eoc::Exact => s.serialize_str("exact"),
        }
    }
}

/// EOCs between consecutive entries of `errors` over the parameter grid.
pub fn eoc_sequence(errors: &[f64], grid: &[f64]) -> Vec<Eoc> {
    errors
        .windows(2)
        .zip(grid.windows(2))
        .map(|(e, p)| Eoc::between(e[0], e[1], p[0], p[1]))
        .collect()
}

/// Median of the EOCs, skipping the first interval when at least two
/// remain. `None` for an empty sequence; `Exact` if every counted entry is.
pub fn median_eoc(eocs: &[Eoc]) -> Option<Eoc> {
    let used = if eocs.len() >= 3 { &eocs[1..] } else { eocs };
    if used.is_empty() {
        return None;
    }
    if used.iter().all(|e| *e == Eoc::Exact) {
        return Some(Eoc::Exact);
    }
    let mut v: Vec<f64> = used
        .iter()
        .map(|e| {
            if let Eoc::Value(x) = e {
                *x
            } else {
                f64::INFINITY
            }
        })
        .collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(Eoc::Value(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }))
}

/// min vᵀGv / vᵀMv over nonzero v: the smallest generalized eigenvalue of
/// the pencil (G, M) with M symmetric positive definite.
pub fn min_generalized_eigenvalue(g: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("singular Cholesky factor".into()))?;
    let mut a = &l_inv * g * l_inv.transpose();
    a = (&a + a.transpose()) * 0.5;
    Ok(a.symmetric_eigenvalues().min())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(g: &DMatrix<f64>) -> f64 {
    g.clone().symmetric_eigenvalues().min()
}
