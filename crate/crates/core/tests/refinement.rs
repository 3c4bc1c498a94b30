mod common;

use nalgebra::DVector;

use fvi_core::assembly::{
    assemble_energy, full_mass, ibp_residual, interaction_apply, Bump, DofMap, ProblemData,
    SmoothProfile,
};
use fvi_core::diagnostics::{
    interaction_l2_norm_sq, min_generalized_eigenvalue, mosco_check, rate_study_epsilon,
    rate_study_xi, Eoc,
};
use fvi_core::fixture::{canonical_problem, canonical_spec};
use fvi_core::geometry::{build_mesh, DomainSpec, Element, Region};
use fvi_core::kernel::{gauss_legendre, pair_quadrature, FracParams, QuadConfig};
use fvi_core::solvers::{solve_unconstrained, SolverOptions};
use fvi_core::{assembly::DiscreteProblem, Error};

fn grid() -> Vec<f64> {
    (2..=9).map(|k| 2f64.powi(-k)).collect()
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::MIN, f64::max);
    let min = v.iter().copied().fold(f64::MAX, f64::min);
    max / min
}

#[test]
fn fixture_violates_obstacle_without_constraint() {
    let p = canonical_problem(0.05).unwrap();
    let u = solve_unconstrained(&p.e, &p.load).unwrap();
    let obs = p.obstacle();
    assert!(obs.excess(&u).iter().all(|&v| v > 0.0));
}

#[test]
fn coercivity_is_stable_under_refinement() {
    for s in [0.3, 0.5, 0.7] {
        let spec = DomainSpec {
            s,
            ..canonical_spec()
        };
        let p = FracParams::new(s).unwrap();
        let vals: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let mesh = build_mesh(&spec, h).unwrap();
                let en = assemble_energy(&mesh, &p, &QuadConfig::default());
                let free = DofMap::new(&mesh).dof_to_node;
                min_generalized_eigenvalue(&en.g, &full_mass(&mesh, &free)).unwrap()
            })
            .collect();
        assert!(vals.iter().all(|&v| v > 0.0));
        let finest = vals[2];
        assert!(
            vals.iter().all(|&v| (v - finest).abs() <= 0.2 * finest),
            "s = {s}: {vals:?}"
        );
    }
}

#[test]
fn interaction_bound_constant_is_stable() {
    let spec = canonical_spec();
    let bump = Bump {
        center: 0.0,
        radius: 0.8,
    };
    let ratios: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let p = canonical_problem(h).unwrap();
            let u = DVector::from_iterator(
                p.mesh.num_nodes(),
                p.mesh.nodes.iter().map(|&x| bump.value(x)),
            );
            let w = p.dofs.restrict(&u);
            let g_norm = (&p.energy.g * &w).dot(&w).sqrt();
            interaction_l2_norm_sq(&p, &u).unwrap().sqrt() / g_norm
        })
        .collect();
    assert!(spread(&ratios) <= 1.1, "{ratios:?}");
    assert!(spec.omega.contains(bump.center));
}

#[test]
fn energy_pairing_with_exterior_hat_is_interaction_integral() {
    let p = canonical_problem(0.05).unwrap();
    let mesh = &p.mesh;
    let e_full = &p.energy.full * p.energy.scale;
    let w = DVector::from_iterator(
        mesh.num_nodes(),
        mesh.nodes.iter().enumerate().map(|(i, &x)| {
            if mesh.is_dirichlet(i) {
                0.0
            } else {
                1.0 + x.sin() + 0.3 * x * x
            }
        }),
    );
    let g = gauss_legendre(10);
    for &i in &mesh.obstacle {
        if mesh.node_tags[i - 1] != Region::Sigma2 || mesh.node_tags[i + 1] != Region::Sigma2 {
            continue;
        }
        let lhs = (&e_full * &w)[i];
        let mut rhs = 0.0;
        for e in [mesh.element(i - 1), mesh.element(i)] {
            let pts: Vec<f64> = g.nodes.iter().map(|&t| e.x[0] + e.len() * t).collect();
            let n = interaction_apply(mesh, &w, &pts, &p.params).unwrap();
            for ((&x, &wt), nv) in pts.iter().zip(&g.weights).zip(n) {
                let psi = 1.0 - (x - mesh.nodes[i]).abs() / e.len();
                rhs += wt * e.len() * psi * nv;
            }
        }
        assert!(
            (lhs - rhs).abs() <= 1e-5 * lhs.abs().max(1e-8),
            "node {i}: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn assembly_is_identical_across_thread_counts() {
    let spec = canonical_spec();
    let mesh = build_mesh(&spec, 0.05).unwrap();
    let p = FracParams::new(0.5).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| assemble_energy(&mesh, &p, &QuadConfig::default()).full)
    };
    let one = run(1);
    let four = run(4);
    assert!(one
        .iter()
        .zip(four.iter())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn grading_refinement_reduces_singular_pair_error() {
    let a = Element {
        nodes: [0, 1],
        x: [0.0, 0.4],
    };
    let b = Element {
        nodes: [1, 2],
        x: [0.4, 0.65],
    };
    for s in [0.25, 0.5, 0.75] {
        for (x, y) in [(&a, &a), (&a, &b)] {
            let oracle = common::pair_oracle(x, y, s);
            let scale = oracle.iter().fold(0.0f64, |m, t| m.max(t.2.abs()));
            let errs: Vec<f64> = [3, 6, 12, 24]
                .iter()
                .map(|&levels| {
                    let cfg = QuadConfig {
                        levels,
                        ..QuadConfig::default()
                    };
                    let rule = pair_quadrature(x, y, &cfg);
                    let local = rule.local_matrix(s);
                    let n = rule.nodes.len();
                    oracle
                        .iter()
                        .map(|&(i, j, v)| {
                            let r = rule.nodes.iter().position(|&q| q == i).unwrap();
                            let c = rule.nodes.iter().position(|&q| q == j).unwrap();
                            (local[r * n + c] - v).abs()
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            for k in 1..errs.len() {
                assert!(errs[k] <= errs[k - 1] + 1e-11 * scale, "s = {s}: {errs:?}");
            }
            assert!(errs[3] <= 1e-8 * scale, "s = {s}: {errs:?} scale {scale}");
        }
    }
}

#[test]
fn l2_sweep_violation_is_nonincreasing() {
    let p = canonical_problem(0.05).unwrap();
    let r = rate_study_epsilon(&p, &grid(), &SolverOptions::default()).unwrap();
    let v = &r.error("err_violation").values;
    assert!(v.windows(2).all(|w| w[1] <= w[0]), "{v:?}");
    let gap = &r.extra("energy_gap").values;
    assert!(gap.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn sobolev_violation_is_linear_in_xi() {
    let p = canonical_problem(0.05).unwrap();
    let r = rate_study_xi(&p, &grid(), &SolverOptions::default()).unwrap();
    let consts = r
        .constants
        .iter()
        .find(|c| c.name == "const_violation")
        .unwrap();
    assert!(spread(&consts.values[2..]) <= 3.0, "{:?}", consts.values);
    for c in &r.constants {
        assert!(spread(&c.values[2..]) <= 3.0, "{}: {:?}", c.name, c.values);
    }
}

#[test]
fn mosco_gap_at_smallest_eps() {
    let p = canonical_problem(0.02).unwrap();
    let t = mosco_check(&p, &grid(), &SolverOptions::default()).unwrap();
    let last = t.rows.last().unwrap();
    assert!(
        last.gap >= 0.0 && last.gap <= 1e-6 * t.vi_energy.abs(),
        "{}",
        last.gap
    );
}

fn inactive_problem() -> DiscreteProblem {
    let mesh = build_mesh(&canonical_spec(), 0.1).unwrap();
    let data = ProblemData::constant(5.0, 100.0);
    DiscreteProblem::assemble(
        mesh,
        FracParams::new(0.5).unwrap(),
        &data,
        &QuadConfig::default(),
    )
    .unwrap()
}

#[test]
fn inactive_constraint_gives_exact_columns() {
    let p = inactive_problem();
    let opts = SolverOptions::default();
    let r = rate_study_xi(&p, &grid(), &opts).unwrap();
    for c in &r.errors {
        assert!(c.values.iter().all(|&v| v == 0.0));
        assert!(c.eoc.iter().all(|&e| e == Eoc::Exact));
        assert_eq!(c.median_eoc, Some(Eoc::Exact));
    }
    let t = mosco_check(&p, &grid(), &opts).unwrap();
    assert!(t
        .rows
        .iter()
        .all(|row| row.gap == 0.0 && row.violation == 0.0));
}

struct Zero;

impl SmoothProfile for Zero {
    fn value(&self, _: f64) -> f64 {
        0.0
    }
    fn second_derivative(&self, _: f64) -> f64 {
        0.0
    }
    fn support(&self) -> (f64, f64) {
        (0.0, 0.0)
    }
}

#[test]
fn ibp_diagnostic_examples() {
    let spec = canonical_spec();
    let p = FracParams::new(spec.s).unwrap();
    let mesh = build_mesh(&spec, 0.1).unwrap();
    let en = assemble_energy(&mesh, &p, &QuadConfig::default());
    let e_full = &en.full * en.scale;
    let zero = DVector::zeros(mesh.num_nodes());
    assert_eq!(
        ibp_residual(&mesh, &p, &e_full, &Zero, &zero)
            .unwrap()
            .residual,
        0.0
    );

    let mut bad = zero.clone();
    bad[mesh.dirichlet[1]] = 1.0;
    let bump = Bump {
        center: 0.0,
        radius: 0.8,
    };
    assert!(matches!(
        ibp_residual(&mesh, &p, &e_full, &bump, &bad),
        Err(Error::Precondition(_))
    ));

    // A Σ₂ hat pairs only with the interaction term.
    let mut residuals = Vec::new();
    for h in [0.05, 0.025] {
        let mesh = build_mesh(&spec, h).unwrap();
        let en = assemble_energy(&mesh, &p, &QuadConfig::default());
        let e_full = &en.full * en.scale;
        let mut v = DVector::zeros(mesh.num_nodes());
        v[mesh.obstacle[mesh.obstacle.len() / 2]] = 1.0;
        let r = ibp_residual(&mesh, &p, &e_full, &bump, &v).unwrap();
        assert!(r.residual <= 1e-3 * (r.energy_uu.abs() + 1.0));
        residuals.push(r.residual);
    }
    assert!(residuals[1] <= residuals[0], "{residuals:?}");
}

#[test]
fn interior_points_are_rejected() {
    let mesh = build_mesh(&canonical_spec(), 0.25).unwrap();
    let u = DVector::zeros(mesh.num_nodes());
    let p = FracParams::new(0.5).unwrap();
    assert!(matches!(
        interaction_apply(&mesh, &u, &[1.0], &p),
        Err(Error::Domain(_))
    ));
    assert!(interaction_apply(&mesh, &u, &[1.0 + 1e-3], &p).is_ok());
}
