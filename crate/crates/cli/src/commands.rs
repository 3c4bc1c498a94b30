use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use fvi_core::assembly::{
    assemble_energy, full_mass, ibp_residual, sine_test_vector, Bump, DiscreteProblem, IbpReport,
};
use fvi_core::diagnostics::{
    evaluate_j, kkt_report, min_generalized_eigenvalue, mosco_check, rate_study_epsilon,
    rate_study_xi, KKTReport, MoscoTable, StudyReport,
};
use fvi_core::export::{fmt_f64, matrix_to_csv, write_binary};
use fvi_core::geometry::{build_mesh, Interval, Mesh1D};
use fvi_core::kernel::FracParams;
use fvi_core::solvers::{solve_vi_pdas, solve_vi_pgs_oracle, VISolution};

use crate::config::Loaded;
use crate::output::{cell, csv_header, write_json, write_text};
use crate::{CliError, Format, Method, Mode, Status};

pub struct Context {
    pub loaded: Loaded,
    pub out: PathBuf,
    pub seed: u64,
}

/// One pass/fail line of a JSON report.
#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    value: f64,
    /// `value` must not exceed `limit`, or reach it when `at_least`.
    limit: f64,
    at_least: bool,
    pass: bool,
    #[serde(skip)]
    status: Status,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64, status: Status) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            at_least: false,
            pass: value <= limit,
            status,
        }
    }

    fn at_least(name: &str, value: f64, limit: f64, status: Status) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            at_least: true,
            pass: value >= limit,
            status,
        }
    }
}

/// Exit status for a set of checks: the first failing class in
/// invariant, rate order.
fn verdict(checks: &[Check]) -> Status {
    checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.status)
        .min()
        .unwrap_or(Status::Ok)
}

fn log_failures(checks: &[Check]) {
    for c in checks.iter().filter(|c| !c.pass) {
        let rel = if c.at_least { ">=" } else { "<=" };
        log::error!(
            "check {} failed: {:.6e} not {rel} {:.6e}",
            c.name,
            c.value,
            c.limit
        );
    }
}

fn warn(warnings: &mut Vec<String>, msg: String) {
    log::warn!("{msg}");
    warnings.push(msg);
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

impl Context {
    fn hash(&self) -> &str {
        &self.loaded.hash
    }

    fn problem(&self, h: f64) -> Result<DiscreteProblem, CliError> {
        let spec = &self.loaded.spec;
        let mesh = build_mesh(spec, h)?;
        let params = FracParams::new(spec.s)?;
        Ok(DiscreteProblem::assemble(
            mesh,
            params,
            &self.loaded.data,
            &self.loaded.config.quadrature,
        )?)
    }

    fn grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.loaded.config.sweep {
            Some(s) => Ok(s.grid()),
            None => Err(CliError::config(
                "this command needs a [sweep] table in the configuration".into(),
            )),
        }
    }
}

fn mesh_warnings(mesh: &Mesh1D, params: &FracParams, warnings: &mut Vec<String>) {
    warnings.extend(mesh.warnings.iter().map(|w| w.to_string()));
    warnings.extend(params.accuracy_warning().map(|w| w.to_string()));
}

struct Solved {
    vi: VISolution,
    kkt: KKTReport,
    checks: Vec<Check>,
    energy: f64,
    solve_s: f64,
    kkt_s: f64,
}

fn solve_checked(ctx: &Context, p: &DiscreteProblem, method: Method) -> Result<Solved, CliError> {
    let opts = &ctx.loaded.config.solver;
    let tol = &ctx.loaded.config.checks;
    let obs = p.obstacle();
    let t = Instant::now();
    let vi = match method {
        Method::Pdas => solve_vi_pdas(&p.e, &p.load, &obs, opts)?,
        Method::Pgs => solve_vi_pgs_oracle(&p.e, &p.load, &obs, opts)?,
    };
    let solve_s = secs(t);
    let t = Instant::now();
    let kkt = kkt_report(p, &vi.w, &vi.lambda)?;
    let kkt_s = secs(t);
    let inv = Status::Invariant;
    let checks = vec![
        Check::at_most(
            "feasibility",
            kkt.feasibility_violation,
            tol.feasibility,
            inv,
        ),
        Check::at_most(
            "multiplier_sign",
            0.0 - kkt.multiplier_min,
            tol.multiplier,
            inv,
        ),
        Check::at_most(
            "complementarity",
            kkt.complementarity,
            tol.complementarity * kkt.complementarity_scale,
            inv,
        ),
    ];
    let energy = evaluate_j(&p.e, &p.load, &vi.w);
    Ok(Solved {
        vi,
        kkt,
        checks,
        energy,
        solve_s,
        kkt_s,
    })
}

/// Sampled 𝒩ₛu on Σ₂. Reported, not enforced: on the discrete solution it
/// vanishes on the inactive set only as h → 0.
fn interaction_json(ctx: &Context, k: &KKTReport) -> Value {
    let tol = ctx.loaded.config.checks.interaction_sign;
    json!({
        "relative_sign_violation": k.relative_sign_violation(),
        "relative_inactive_violation": k.relative_inactive_violation(),
        "tolerance": tol,
        "within_tolerance": k.relative_sign_violation() <= tol && k.relative_inactive_violation() <= tol,
    })
}

const SOLUTION_UNITS: &str =
    "x in length units of the domain; u, phi nodal values; lambda nodal multiplier (load units)";

fn solution_csv(ctx: &Context, p: &DiscreteProblem, vi: &VISolution) -> String {
    let u = p.nodal(&vi.w);
    let mut lambda = vec![None; p.mesh.num_nodes()];
    let mut phi = vec![None; p.mesh.num_nodes()];
    for (k, &n) in p.mesh.obstacle.iter().enumerate() {
        lambda[n] = Some(vi.lambda[k]);
        phi[n] = Some(p.phi[k]);
    }
    let mut out = csv_header(ctx.hash(), SOLUTION_UNITS);
    out.push_str("node,x,region,u,phi,lambda\n");
    for (i, &x) in p.mesh.nodes.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{},{},{},{}\n",
            fmt_f64(x),
            p.mesh.node_tags[i].as_str(),
            fmt_f64(u[i]),
            cell(phi[i]),
            cell(lambda[i])
        ));
    }
    out
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Pdas => "pdas",
        Method::Pgs => "pgs",
    }
}

pub fn solve(ctx: &Context, method: Method) -> Result<Status, CliError> {
    let t = Instant::now();
    let p = ctx.problem(ctx.loaded.config.mesh.h)?;
    let assembly_s = secs(t);
    let mut warnings = Vec::new();
    mesh_warnings(&p.mesh, &p.params, &mut warnings);
    let s = solve_checked(ctx, &p, method)?;
    warnings.extend(s.vi.warnings.iter().map(|w| w.to_string()));
    log_failures(&s.checks);

    write_text(&ctx.out, "solution.csv", &solution_csv(ctx, &p, &s.vi))?;
    let report = json!({
        "config_hash": ctx.hash(),
        "units": "energies in load x length units; interaction values in load units",
        "method": method_name(method),
        "nodes": p.mesh.num_nodes(),
        "dofs": p.dofs.num_dofs(),
        "obstacle_nodes": p.mesh.obstacle.len(),
        "active_set_size": s.vi.active_set.len(),
        "iterations": s.vi.iterations,
        "fallback": s.vi.fallback,
        "stationarity_residual": s.vi.residual,
        "energy": s.energy,
        "kkt": s.kkt,
        "interaction": interaction_json(ctx, &s.kkt),
        "checks": s.checks,
        "pass": s.checks.iter().all(|c| c.pass),
        "warnings": warnings,
        "timings_s": { "assembly": assembly_s, "solve": s.solve_s, "kkt": s.kkt_s },
    });
    write_json(&ctx.out, "kkt.json", &report)?;
    Ok(verdict(&s.checks))
}

fn sweep_checks(ctx: &Context, r: &StudyReport, warnings: &mut Vec<String>) -> Vec<Check> {
    let tol = &ctx.loaded.config.checks;
    let targets: Vec<(&str, f64)> = match r.mode {
        fvi_core::diagnostics::StudyMode::L2 => {
            vec![
                ("err_energy", tol.eoc_l2_energy),
                ("err_violation", tol.eoc_l2_violation),
            ]
        }
        fvi_core::diagnostics::StudyMode::Sobolev => r
            .errors
            .iter()
            .map(|c| (c.name.as_str(), tol.eoc_sobolev))
            .collect(),
    };
    let mut checks = Vec::new();
    let prefix = r.mode.parameter_name();
    for (name, min) in targets {
        let col = r.error(name);
        match col.median_eoc {
            None => warn(
                warnings,
                format!("{name}: fewer than two grid points, no convergence order"),
            ),
            Some(fvi_core::diagnostics::Eoc::Exact) => checks.push(Check::at_least(
                &format!("{prefix}_median_eoc_{name}"),
                f64::INFINITY,
                min,
                Status::Rate,
            )),
            Some(fvi_core::diagnostics::Eoc::Value(v)) => checks.push(Check::at_least(
                &format!("{prefix}_median_eoc_{name}"),
                v,
                min,
                Status::Rate,
            )),
        }
    }
    if r.mode == fvi_core::diagnostics::StudyMode::L2 {
        let worst = r
            .extra("bound_ratio")
            .values
            .iter()
            .copied()
            .fold(0.0, f64::max);
        checks.push(Check::at_most(
            "eps_bound_ratio",
            worst,
            tol.bound_ratio,
            Status::Rate,
        ));
    }
    checks
}

const SWEEP_UNITS: &str =
    "penalty parameter dimensionless; err_energy in the energy norm; err_violation and \
err_multiplier in the penalty norm; eoc columns are orders in the penalty parameter";

fn run_sweep(
    ctx: &Context,
    p: &DiscreteProblem,
    mode: Mode,
    grid: &[f64],
) -> Result<StudyReport, CliError> {
    let opts = &ctx.loaded.config.solver;
    Ok(match mode {
        Mode::L2 => rate_study_epsilon(p, grid, opts)?,
        Mode::Sobolev => rate_study_xi(p, grid, opts)?,
    })
}

fn sweep_json(
    ctx: &Context,
    r: &StudyReport,
    checks: &[Check],
    warnings: &[String],
    timings: Value,
) -> Value {
    json!({
        "config_hash": ctx.hash(),
        "units": SWEEP_UNITS,
        "mode": r.mode,
        "grid": r.grid,
        "errors": r.errors,
        "extras": r.extras,
        "constants": r.constants,
        "reference": r.reference,
        "newton_iterations": r.newton_iterations,
        "checks": checks,
        "pass": checks.iter().all(|c| c.pass),
        "warnings": warnings,
        "timings_s": timings,
    })
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::L2 => "l2",
        Mode::Sobolev => "sobolev",
    }
}

pub fn sweep(ctx: &Context, mode: Mode) -> Result<Status, CliError> {
    let grid = ctx.grid()?;
    let t = Instant::now();
    let p = ctx.problem(ctx.loaded.config.mesh.h)?;
    let assembly_s = secs(t);
    let mut warnings = Vec::new();
    mesh_warnings(&p.mesh, &p.params, &mut warnings);
    let t = Instant::now();
    let r = run_sweep(ctx, &p, mode, &grid)?;
    let sweep_s = secs(t);
    let checks = sweep_checks(ctx, &r, &mut warnings);
    log_failures(&checks);

    let name = mode_name(mode);
    let comment = crate::output::comment(ctx.hash(), SWEEP_UNITS);
    write_text(&ctx.out, &format!("sweep_{name}.csv"), &r.to_csv(&comment))?;
    let timings = json!({ "assembly": assembly_s, "sweep": sweep_s, "per_point": r.runtimes_s });
    write_json(
        &ctx.out,
        &format!("sweep_{name}.json"),
        &sweep_json(ctx, &r, &checks, &warnings, timings),
    )?;
    Ok(verdict(&checks))
}

/// Sum of a_k sin(kπ(x − a)/L), k = 1..=4, on Ω and each Σ₂ interval, with
/// coefficients drawn uniformly from (−1, 1) and damped by 1/k².
fn random_smooth_vector(mesh: &Mesh1D, coeffs: &[[f64; 4]]) -> DVector<f64> {
    let spec = &mesh.spec;
    let intervals: Vec<Interval> = std::iter::once(spec.omega)
        .chain(spec.sigma2.iter().copied())
        .collect();
    DVector::from_iterator(
        mesh.num_nodes(),
        mesh.nodes.iter().map(|&x| {
            intervals
                .iter()
                .zip(coeffs)
                .find(|(iv, _)| iv.contains(x))
                .map_or(0.0, |(iv, a)| {
                    let t = std::f64::consts::PI * (x - iv.left) / iv.len();
                    a.iter()
                        .enumerate()
                        .map(|(k, c)| c * ((k + 1) as f64 * t).sin())
                        .sum()
                })
        }),
    )
}

struct IbpRun {
    rows: Vec<(String, IbpReport, f64)>,
    checks: Vec<Check>,
    bump: Bump,
    warnings: Vec<String>,
}

fn run_ibp(ctx: &Context) -> Result<IbpRun, CliError> {
    let cfg = &ctx.loaded.config;
    let spec = &ctx.loaded.spec;
    let omega = spec.omega;
    let bump = Bump {
        center: cfg.ibp.center.unwrap_or(0.5 * (omega.left + omega.right)),
        radius: cfg.ibp.radius.unwrap_or(0.4 * omega.len()),
    };
    if bump.center - bump.radius <= -spec.radius || bump.center + bump.radius >= spec.radius {
        return Err(CliError::config(format!(
            "ibp: bump support ({}, {}) must lie inside (-R, R)",
            bump.center - bump.radius,
            bump.center + bump.radius
        )));
    }
    let params = FracParams::new(spec.s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let draws: Vec<Vec<[f64; 4]>> = (0..cfg.ibp.random_vectors)
        .map(|_| {
            (0..=spec.sigma2.len())
                .map(|_| {
                    std::array::from_fn(|k| {
                        rng.random_range(-1.0..1.0) / ((k + 1) * (k + 1)) as f64
                    })
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for level in 0..cfg.ibp.levels {
        let h = cfg.mesh.h / 2f64.powi(level as i32);
        let mesh = build_mesh(spec, h)?;
        mesh_warnings(&mesh, &params, &mut warnings);
        let en = assemble_energy(&mesh, &params, &cfg.quadrature);
        let e_full: DMatrix<f64> = &en.full * en.scale;
        let mut vectors = vec![("sine".to_string(), sine_test_vector(&mesh))];
        for (k, c) in draws.iter().enumerate() {
            vectors.push((format!("random{k}"), random_smooth_vector(&mesh, c)));
        }
        for (name, v) in vectors {
            let r = ibp_residual(&mesh, &params, &e_full, &bump, &v)?;
            warnings.extend(r.warnings.iter().map(|w| w.to_string()));
            let bound = cfg.checks.ibp * (r.energy_uu.abs() + 1.0);
            rows.push((name, r, bound));
        }
    }
    let mut checks = Vec::new();
    let per_level = 1 + draws.len();
    for (k, (name, r, bound)) in rows.iter().enumerate() {
        checks.push(Check::at_most(
            &format!("residual_{name}_h{}", fmt_f64(r.h)),
            r.residual,
            *bound,
            Status::Rate,
        ));
        if k >= per_level {
            let (_, prev, _) = &rows[k - per_level];
            checks.push(Check::at_most(
                &format!("decrease_{name}_h{}", fmt_f64(r.h)),
                r.residual,
                prev.residual,
                Status::Rate,
            ));
        }
    }
    Ok(IbpRun {
        rows,
        checks,
        bump,
        warnings,
    })
}

const IBP_UNITS: &str =
    "h in length units; energy, volume and interaction terms and the residual in energy units";

pub fn verify_ibp(ctx: &Context) -> Result<Status, CliError> {
    let t = Instant::now();
    let run = run_ibp(ctx)?;
    let total_s = secs(t);
    log_failures(&run.checks);
    let mut csv = csv_header(ctx.hash(), IBP_UNITS);
    csv.push_str("h,vector,energy_term,volume_term,interaction_term,residual,bound\n");
    for (name, r, bound) in &run.rows {
        csv.push_str(&format!(
            "{},{name},{},{},{},{},{}\n",
            fmt_f64(r.h),
            fmt_f64(r.energy_term),
            fmt_f64(r.volume_term),
            fmt_f64(r.interaction_term),
            fmt_f64(r.residual),
            fmt_f64(*bound)
        ));
    }
    write_text(&ctx.out, "ibp.csv", &csv)?;
    write_json(
        &ctx.out,
        "ibp.json",
        &ibp_json(ctx, &run, json!({ "total": total_s })),
    )?;
    Ok(verdict(&run.checks))
}

fn ibp_json(ctx: &Context, run: &IbpRun, timings: Value) -> Value {
    json!({
        "config_hash": ctx.hash(),
        "units": IBP_UNITS,
        "seed": ctx.seed,
        "bump": { "center": run.bump.center, "radius": run.bump.radius },
        "rows": run.rows.iter().map(|(name, r, bound)| json!({ "vector": name, "report": r, "bound": bound })).collect::<Vec<_>>(),
        "checks": run.checks,
        "pass": run.checks.iter().all(|c| c.pass),
        "warnings": run.warnings,
        "timings_s": timings,
    })
}

const MOSCO_UNITS: &str =
    "eps dimensionless; energies in energy units; violation in the L2(Sigma2) norm";

fn mosco_csv(ctx: &Context, t: &MoscoTable) -> String {
    let mut out = csv_header(ctx.hash(), MOSCO_UNITS);
    out.push_str(&format!("# vi_energy={}\n", fmt_f64(t.vi_energy)));
    out.push_str("eps,penalized_energy,energy,violation,gap\n");
    for r in &t.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(r.eps),
            fmt_f64(r.penalized_energy),
            fmt_f64(r.energy),
            fmt_f64(r.violation),
            fmt_f64(r.gap)
        ));
    }
    out
}

pub fn report(ctx: &Context) -> Result<Status, CliError> {
    let grid = ctx.grid()?;
    let mut timings = serde_json::Map::new();
    let mut warnings = Vec::new();
    let mut checks = Vec::new();

    let t = Instant::now();
    let p = ctx.problem(ctx.loaded.config.mesh.h)?;
    timings.insert("assembly".into(), json!(secs(t)));
    mesh_warnings(&p.mesh, &p.params, &mut warnings);

    let s = solve_checked(ctx, &p, Method::Pdas)?;
    timings.insert("solve".into(), json!(s.solve_s));
    checks.extend(s.checks.iter().cloned());
    warnings.extend(s.vi.warnings.iter().map(|w| w.to_string()));

    let t = Instant::now();
    let pgs = solve_vi_pgs_oracle(&p.e, &p.load, &p.obstacle(), &ctx.loaded.config.solver)?;
    timings.insert("pgs".into(), json!(secs(t)));
    let diff = (&pgs.w - &s.vi.w).amax() / s.vi.w.amax().max(1.0);
    checks.push(Check::at_most("pdas_vs_pgs", diff, 1e-8, Status::Invariant));

    let t = Instant::now();
    let m = full_mass(&p.mesh, &p.dofs.dof_to_node);
    let coercivity = min_generalized_eigenvalue(&p.energy.g, &m)?;
    timings.insert("coercivity".into(), json!(secs(t)));
    checks.push(Check::at_least(
        "coercivity",
        coercivity,
        f64::MIN_POSITIVE,
        Status::Invariant,
    ));

    let mut sweeps = serde_json::Map::new();
    for mode in [Mode::L2, Mode::Sobolev] {
        let t = Instant::now();
        let r = run_sweep(ctx, &p, mode, &grid)?;
        timings.insert(format!("sweep_{}", mode_name(mode)), json!(secs(t)));
        let mut sw = Vec::new();
        let c = sweep_checks(ctx, &r, &mut sw);
        warnings.extend(sw.iter().cloned());
        checks.extend(c.iter().cloned());
        sweeps.insert(
            mode_name(mode).into(),
            sweep_json(ctx, &r, &c, &sw, Value::Null),
        );
    }

    let t = Instant::now();
    let mosco = match mosco_check(&p, &grid, &ctx.loaded.config.solver) {
        Ok(table) => {
            write_text(&ctx.out, "mosco.csv", &mosco_csv(ctx, &table))?;
            checks.push(Check::at_most("mosco", 0.0, 0.0, Status::Rate));
            serde_json::to_value(&table).expect("table serializes")
        }
        Err(fvi_core::Error::Assertion(msg)) => {
            log::error!("mosco: {msg}");
            checks.push(Check::at_most("mosco", 1.0, 0.0, Status::Rate));
            json!({ "failure": msg })
        }
        Err(e) => return Err(e.into()),
    };
    timings.insert("mosco".into(), json!(secs(t)));

    let t = Instant::now();
    let ibp = run_ibp(ctx)?;
    timings.insert("ibp".into(), json!(secs(t)));
    checks.extend(ibp.checks.iter().cloned());
    warnings.extend(ibp.warnings.iter().cloned());
    log_failures(&checks);

    let doc = json!({
        "config_hash": ctx.hash(),
        "units": "see the per-section units fields; energies in energy units, lengths in domain units",
        "nodes": p.mesh.num_nodes(),
        "dofs": p.dofs.num_dofs(),
        "solve": {
            "energy": s.energy,
            "iterations": s.vi.iterations,
            "active_set_size": s.vi.active_set.len(),
            "fallback": s.vi.fallback,
            "kkt": s.kkt,
            "interaction": interaction_json(ctx, &s.kkt),
            "pgs_iterations": pgs.iterations,
            "pdas_pgs_max_rel_diff": diff,
        },
        "coercivity_min_generalized_eigenvalue": coercivity,
        "sweeps": sweeps,
        "mosco": mosco,
        "ibp": ibp_json(ctx, &ibp, Value::Null),
        "checks": checks,
        "pass": checks.iter().all(|c| c.pass),
        "warnings": warnings,
        "timings_s": timings,
    });
    write_json(&ctx.out, "report.json", &doc)?;
    Ok(verdict(&checks))
}

pub fn assemble(ctx: &Context, format: Format) -> Result<Status, CliError> {
    let t = Instant::now();
    let p = ctx.problem(ctx.loaded.config.mesh.h)?;
    let assembly_s = secs(t);
    let hash = ctx.hash();
    let mesh_units = "x in length units; region tags omega, sigma1, sigma2";
    write_text(
        &ctx.out,
        "mesh.csv",
        &(csv_header(hash, mesh_units) + &p.mesh.to_csv()),
    )?;

    let mut mats: Vec<(&str, DMatrix<f64>)> = vec![("G", p.energy.g.clone()), ("E", p.e.clone())];
    if let Some(g) = &p.gram {
        mats.push(("M", g.mass.clone()));
        mats.push(("S", g.s.clone()));
    }
    mats.push((
        "load",
        DMatrix::from_column_slice(p.load.len(), 1, p.load.as_slice()),
    ));
    let matrix_units = "G unscaled fractional stiffness on free dofs; E = (C/2) G; M and S mass and Gram matrices \
on obstacle nodes; load on free dofs";
    let mut files = Vec::new();
    for (name, m) in &mats {
        let file = match format {
            Format::Csv => {
                let f = format!("{name}.csv");
                write_text(
                    &ctx.out,
                    &f,
                    &(csv_header(hash, matrix_units) + &matrix_to_csv(m)),
                )?;
                f
            }
            Format::Binary => {
                let f = format!("{name}.fvi");
                let mut buf = Vec::new();
                write_binary(&mut buf, m)?;
                let path = ctx.out.join(&f);
                std::fs::write(&path, buf).map_err(|e| CliError::io(&path, e))?;
                f
            }
        };
        files.push(json!({ "file": file, "rows": m.nrows(), "cols": m.ncols() }));
    }
    let doc = json!({
        "config_hash": hash,
        "units": matrix_units,
        "scale": p.energy.scale,
        "free_nodes": p.dofs.dof_to_node,
        "obstacle_nodes": p.mesh.obstacle,
        "files": files,
        "timings_s": { "assembly": assembly_s },
    });
    write_json(&ctx.out, "assemble.json", &doc)?;
    Ok(Status::Ok)
}
