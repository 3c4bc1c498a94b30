use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::kkt::interaction_l2_norm_sq;
use super::{eoc_sequence, evaluate_j, median_eoc, Eoc};
use crate::assembly::DiscreteProblem;
use crate::error::{Error, Result};
use crate::solvers::{
    solve_penalty_l2, solve_penalty_sobolev, solve_vi_pdas, SolverOptions, VISolution,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyMode {
    L2,
    Sobolev,
}

impl StudyMode {
    pub fn parameter_name(&self) -> &'static str {
        match self {
            StudyMode::L2 => "eps",
            StudyMode::Sobolev => "xi",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorColumn {
    pub name: String,
    pub values: Vec<f64>,
    /// Entry k is the order between grid points k and k + 1.
    pub eoc: Vec<Eoc>,
    pub median_eoc: Option<Eoc>,
}

impl ErrorColumn {
    fn new(name: &str, values: Vec<f64>, grid: &[f64]) -> Self {
        let eoc = eoc_sequence(&values, grid);
        let median_eoc = median_eoc(&eoc);
        Self {
            name: name.into(),
            values,
            eoc,
            median_eoc,
        }
    }

    /// True when the median order reaches `min` (an exact column always does).
    pub fn meets(&self, min: f64) -> Option<bool> {
        self.median_eoc.map(|m| match m {
            Eoc::Exact => true,
            Eoc::Value(v) => v >= min,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedColumn {
    pub name: String,
    pub values: Vec<f64>,
}

/// Reference VI solution data shared by all rows of a study.
#[derive(Debug, Clone, Serialize)]
pub struct Reference {
    pub energy: f64,
    pub active_set_size: usize,
    pub iterations: usize,
    /// ‖𝒩ₛu‖²_{L²(Σ₂)} of the reference solution.
    pub interaction_norm_sq: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub mode: StudyMode,
    pub grid: Vec<f64>,
    pub errors: Vec<ErrorColumn>,
    pub extras: Vec<NamedColumn>,
    /// error / parameter for each error column.
    pub constants: Vec<NamedColumn>,
    pub runtimes_s: Vec<f64>,
    pub newton_iterations: Vec<usize>,
    pub reference: Reference,
}

impl StudyReport {
    pub fn error(&self, name: &str) -> &ErrorColumn {
        self.errors
            .iter()
            .find(|c| c.name == name)
            .unwrap_or_else(|| panic!("no error column {name}"))
    }

    pub fn extra(&self, name: &str) -> &NamedColumn {
        self.extras
            .iter()
            .find(|c| c.name == name)
            .unwrap_or_else(|| panic!("no column {name}"))
    }

    /// CSV with one row per grid point: parameter, errors, EOCs, extras.
    /// EOC cells are empty on the first row and read "exact" when the
    /// error vanished.
    pub fn to_csv(&self, comment: &str) -> String {
        let mut out = String::new();
        for line in comment.lines() {
            out.push_str(&format!("# {line}\n"));
        }
        let mut header = vec![self.mode.parameter_name().to_string()];
        header.extend(self.errors.iter().map(|c| c.name.clone()));
        header.extend(
            self.errors
                .iter()
                .map(|c| c.name.replacen("err_", "eoc_", 1)),
        );
        header.extend(self.extras.iter().map(|c| c.name.clone()));
        out.push_str(&header.join(","));
        out.push('\n');
        for (k, p) in self.grid.iter().enumerate() {
            let mut row = vec![format!("{p:.16e}")];
            row.extend(self.errors.iter().map(|c| format!("{:.16e}", c.values[k])));
            row.extend(self.errors.iter().map(|c| {
                if k == 0 {
                    String::new()
                } else {
                    c.eoc[k - 1].to_cell()
                }
            }));
            row.extend(self.extras.iter().map(|c| format!("{:.16e}", c.values[k])));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::Parameter(
            "parameter grid must be nonempty and positive".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter(
            "parameter grid must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

fn reference(problem: &DiscreteProblem, opts: &SolverOptions) -> Result<(VISolution, Reference)> {
    let vi = solve_vi_pdas(&problem.e, &problem.load, &problem.obstacle(), opts)?;
    let reference = Reference {
        energy: evaluate_j(&problem.e, &problem.load, &vi.w),
        active_set_size: vi.active_set.len(),
        iterations: vi.iterations,
        interaction_norm_sq: interaction_l2_norm_sq(problem, &problem.nodal(&vi.w))?,
    };
    Ok((vi, reference))
}

fn g_norm_sq(problem: &DiscreteProblem, v: &DVector<f64>) -> f64 {
    (&problem.energy.g * v).dot(v)
}

fn gram(problem: &DiscreteProblem) -> Result<&crate::assembly::Sigma2Gram> {
    problem
        .gram
        .as_ref()
        .ok_or_else(|| Error::EmptyRegion("sigma2".into()))
}

struct L2Row {
    err_energy: f64,
    err_violation: f64,
    bound_ratio: f64,
    penalized_energy: f64,
    energy: f64,
    iterations: usize,
    runtime: f64,
}

fn l2_rows(
    problem: &DiscreteProblem,
    grid: &[f64],
    vi: &VISolution,
    rf: &Reference,
    opts: &SolverOptions,
) -> Result<Vec<L2Row>> {
    let obs = problem.obstacle();
    let mass = &gram(problem)?.mass;
    let c = problem.params.c_ns;
    grid.par_iter()
        .map(|&eps| {
            let t0 = Instant::now();
            let sol = solve_penalty_l2(&problem.e, &problem.load, &obs, mass, eps, opts)?;
            let runtime = t0.elapsed().as_secs_f64();
            let diff = &vi.w - &sol.w;
            let g2 = g_norm_sq(problem, &diff);
            let p = obs.excess(&sol.w);
            let m2 = (mass * &p).dot(&p);
            let lhs = c * g2 + 0.5 * m2 / (eps * eps);
            let rhs = eps * eps * rf.interaction_norm_sq;
            let bound_ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
            let energy = evaluate_j(&problem.e, &problem.load, &sol.w);
            Ok(L2Row {
                err_energy: g2.sqrt(),
                err_violation: m2.sqrt(),
                bound_ratio,
                penalized_energy: energy + 0.5 * m2 / (eps * eps),
                energy,
                iterations: sol.newton_iterations,
                runtime,
            })
        })
        .collect()
}

fn constants(errors: &[ErrorColumn], grid: &[f64]) -> Vec<NamedColumn> {
    errors
        .iter()
        .map(|c| NamedColumn {
            name: c.name.replacen("err_", "const_", 1),
            values: c.values.iter().zip(grid).map(|(e, p)| e / p).collect(),
        })
        .collect()
}

/// L² penalty sweep: ‖w_VI − w_ε‖_G, ‖(w_ε − φ)⁺‖_M and the ratio of
/// C‖w_VI − w_ε‖²_G + (ε⁻²/2)‖(w_ε − φ)⁺‖²_M to ε²‖𝒩ₛw_VI‖²_{L²(Σ₂)}.
pub fn rate_study_epsilon(
    problem: &DiscreteProblem,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<StudyReport> {
    check_grid(grid)?;
    let (vi, rf) = reference(problem, opts)?;
    let rows = l2_rows(problem, grid, &vi, &rf, opts)?;
    let errors = vec![
        ErrorColumn::new(
            "err_energy",
            rows.iter().map(|r| r.err_energy).collect(),
            grid,
        ),
        ErrorColumn::new(
            "err_violation",
            rows.iter().map(|r| r.err_violation).collect(),
            grid,
        ),
    ];
    let extras = vec![
        NamedColumn {
            name: "bound_ratio".into(),
            values: rows.iter().map(|r| r.bound_ratio).collect(),
        },
        NamedColumn {
            name: "penalized_energy".into(),
            values: rows.iter().map(|r| r.penalized_energy).collect(),
        },
        NamedColumn {
            name: "energy_gap".into(),
            values: rows
                .iter()
                .map(|r| rf.energy - r.penalized_energy)
                .collect(),
        },
    ];
    Ok(StudyReport {
        mode: StudyMode::L2,
        grid: grid.to_vec(),
        constants: constants(&errors, grid),
        errors,
        extras,
        runtimes_s: rows.iter().map(|r| r.runtime).collect(),
        newton_iterations: rows.iter().map(|r| r.iterations).collect(),
        reference: rf,
    })
}

/// Sobolev penalty sweep: ‖w_ξ − w_VI‖_G, ‖λ_ξ − λ_VI‖_{S⁻¹}, ‖(w_ξ − φ)⁺‖_S.
pub fn rate_study_xi(
    problem: &DiscreteProblem,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<StudyReport> {
    check_grid(grid)?;
    let (vi, rf) = reference(problem, opts)?;
    let obs = problem.obstacle();
    let s = &gram(problem)?.s;
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("Gram matrix is not positive definite".into()))?;
    let rows: Vec<(f64, f64, f64, usize, f64)> = grid
        .par_iter()
        .map(|&xi| {
            let t0 = Instant::now();
            let sol = solve_penalty_sobolev(&problem.e, &problem.load, &obs, s, xi, opts)?;
            let runtime = t0.elapsed().as_secs_f64();
            let diff = &vi.w - &sol.w;
            let dl = &sol.multiplier - &vi.lambda;
            let p = obs.excess(&sol.w);
            Ok((
                g_norm_sq(problem, &diff).sqrt(),
                chol.solve(&dl).dot(&dl).max(0.0).sqrt(),
                (s * &p).dot(&p).max(0.0).sqrt(),
                sol.newton_iterations,
                runtime,
            ))
        })
        .collect::<Result<_>>()?;
    let errors = vec![
        ErrorColumn::new("err_energy", rows.iter().map(|r| r.0).collect(), grid),
        ErrorColumn::new("err_multiplier", rows.iter().map(|r| r.1).collect(), grid),
        ErrorColumn::new("err_violation", rows.iter().map(|r| r.2).collect(), grid),
    ];
    Ok(StudyReport {
        mode: StudyMode::Sobolev,
        grid: grid.to_vec(),
        constants: constants(&errors, grid),
        errors,
        extras: Vec::new(),
        runtimes_s: rows.iter().map(|r| r.4).collect(),
        newton_iterations: rows.iter().map(|r| r.3).collect(),
        reference: rf,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MoscoRow {
    pub eps: f64,
    /// J_ε(w_ε) = J(w_ε) + (ε⁻²/2)‖(w_ε − φ)⁺‖²_M.
    pub penalized_energy: f64,
    /// J(w_ε).
    pub energy: f64,
    /// ‖(w_ε − φ)⁺‖_M.
    pub violation: f64,
    /// J(w_VI) − J_ε(w_ε).
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MoscoTable {
    pub vi_energy: f64,
    /// λ_VIᵀ M⁻¹ λ_VI, the constant in ‖(w_ε − φ)⁺‖²_M ≤ ε⁴ λᵀM⁻¹λ.
    pub violation_constant: f64,
    pub rows: Vec<MoscoRow>,
}

/// Checks J_ε(w_ε) ≤ J(w_VI) at every ε, monotone growth of J_ε(w_ε) as ε
/// decreases, and ‖(w_ε − φ)⁺‖²_M ≤ 2 ε⁴ λᵀM⁻¹λ (hence ≤ C ε²).
/// Tolerance for the energy comparisons: 1e−10 (|J(w_VI)| + 1).
pub fn mosco_check(
    problem: &DiscreteProblem,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<MoscoTable> {
    check_grid(grid)?;
    let (vi, rf) = reference(problem, opts)?;
    let rows = l2_rows(problem, grid, &vi, &rf, opts)?;
    let mass: &DMatrix<f64> = &gram(problem)?.mass;
    let minv_l = mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("mass matrix".into()))?
        .solve(&vi.lambda);
    let violation_constant = vi.lambda.dot(&minv_l);
    let tol = 1e-10 * (rf.energy.abs() + 1.0);
    let table = MoscoTable {
        vi_energy: rf.energy,
        violation_constant,
        rows: grid
            .iter()
            .zip(&rows)
            .map(|(&eps, r)| MoscoRow {
                eps,
                penalized_energy: r.penalized_energy,
                energy: r.energy,
                violation: r.err_violation,
                gap: rf.energy - r.penalized_energy,
            })
            .collect(),
    };
    for (k, row) in table.rows.iter().enumerate() {
        if row.penalized_energy > rf.energy + tol {
            return Err(Error::Assertion(format!(
                "eps = {}: penalized energy {} exceeds constrained energy {}",
                row.eps, row.penalized_energy, rf.energy
            )));
        }
        if k > 0 && row.penalized_energy < table.rows[k - 1].penalized_energy - tol {
            return Err(Error::Assertion(format!(
                "eps = {}: penalized energy decreased",
                row.eps
            )));
        }
        let bound = 2.0 * row.eps.powi(4) * violation_constant;
        if row.violation * row.violation > bound + 1e-14 * (1.0 + bound) {
            return Err(Error::Assertion(format!(
                "eps = {}: squared violation {:.3e} above {:.3e}",
                row.eps,
                row.violation * row.violation,
                bound
            )));
        }
    }
    Ok(table)
}
