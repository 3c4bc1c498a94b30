use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fvi_core::assembly::{DiscreteProblem, ProblemData};
use fvi_core::diagnostics::{eoc_sequence, evaluate_j, Eoc};
use fvi_core::geometry::{build_mesh, DomainSpec, Interval, Region};
use fvi_core::kernel::{
    kernel_eval, normalization_constant, pair_quadrature, tail_weight, FracParams, QuadConfig,
};
use fvi_core::solvers::{
    extract_multiplier, solve_penalty_sobolev, solve_vi_pdas, solve_vi_pgs_oracle, Obstacle,
    SolverOptions,
};

/// Ω = (a, b) with up to two Σ₂ intervals on either side.
fn spec_strategy() -> impl Strategy<Value = DomainSpec> {
    (
        -1.0..0.0f64,
        0.2..1.5f64,
        proptest::collection::vec((0.0..0.6f64, 0.05..0.8f64, any::<bool>()), 0..3),
        0.05..1.0f64,
        0.05..0.95f64,
    )
        .prop_map(|(a, width, pieces, margin, s)| {
            let b = a + width;
            let (mut right, mut left) = (b, a);
            let mut sigma2 = Vec::new();
            for (gap, len, on_right) in pieces {
                if on_right {
                    sigma2.push(Interval::new(right + gap, right + gap + len));
                    right += gap + len;
                } else {
                    sigma2.push(Interval::new(left - gap - len, left - gap));
                    left -= gap + len;
                }
            }
            DomainSpec {
                omega: Interval::new(a, b),
                sigma2,
                radius: right.max(-left) + margin,
                s,
            }
        })
}

fn z_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut e = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            if rng.random_bool(0.5) {
                let v = -rng.random_range(0.0..1.0);
                e[(i, j)] = v;
                e[(j, i)] = v;
            }
        }
    }
    for i in 0..n {
        let off: f64 = e.row(i).iter().map(|v| v.abs()).sum();
        e[(i, i)] = off + rng.random_range(0.1..1.0);
    }
    e
}

fn spd_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(n, n) * 0.5
}

fn random_system(seed: u64, z: bool) -> (DMatrix<f64>, DVector<f64>, Obstacle) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=30);
    let e = if z {
        z_matrix(&mut rng, n)
    } else {
        spd_matrix(&mut rng, n)
    };
    let l = DVector::from_fn(n, |_, _| rng.random_range(-1.0..3.0));
    let mut dofs: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
    if dofs.is_empty() {
        dofs.push(n - 1);
    }
    let phi = DVector::from_fn(dofs.len(), |_, _| rng.random_range(-0.5..1.0));
    (e, l, Obstacle::new(dofs, phi))
}

fn small_problem(seed: u64) -> DiscreteProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = DomainSpec {
        omega: Interval::new(-0.75, 0.75),
        sigma2: vec![Interval::new(1.0, 1.75)],
        radius: 2.25,
        s: rng.random_range(0.2..0.8),
    };
    let mesh = build_mesh(&spec, 0.125).unwrap();
    let f0 = rng.random_range(2.0..8.0);
    let phi0 = rng.random_range(-0.1..0.3);
    let data = ProblemData {
        f: Arc::new(move |_| f0),
        z: Arc::new(|_| 0.0),
        phi: Arc::new(move |x: f64| phi0 + 0.1 * x),
    };
    DiscreteProblem::assemble(
        mesh,
        FracParams::new(spec.s).unwrap(),
        &data,
        &QuadConfig::default(),
    )
    .unwrap()
}

fn assert_vi_invariants(
    e: &DMatrix<f64>,
    l: &DVector<f64>,
    obs: &Obstacle,
    w: &DVector<f64>,
    lambda: &DVector<f64>,
    tol: f64,
) {
    let mut comp = 0.0;
    let mut scale = 0.0;
    for k in 0..obs.len() {
        assert!(w[obs.dofs[k]] <= obs.phi[k] + tol, "infeasible at {k}");
        assert!(
            lambda[k] >= -tol,
            "negative multiplier {} at {k}",
            lambda[k]
        );
        comp += lambda[k] * (w[obs.dofs[k]] - obs.phi[k]);
        scale += lambda[k].abs() * obs.phi[k].abs().max(1.0);
    }
    assert!(comp.abs() <= tol * scale.max(1.0), "complementarity {comp}");
    let r = extract_multiplier(e, l, w, &obs.dofs);
    assert!((r - lambda).amax() <= tol * (1.0 + lambda.amax()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mesh_invariants(spec in spec_strategy(), h in 0.05..0.4f64) {
        let mesh = build_mesh(&spec, h).unwrap();
        prop_assert_eq!(&mesh, &build_mesh(&spec, h).unwrap());
        prop_assert!(mesh.nodes.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(mesh.node_tags.len(), mesh.num_nodes());
        prop_assert_eq!(mesh.element_tags.len(), mesh.num_elements());

        let mut breaks = vec![-spec.radius, spec.radius, spec.omega.left, spec.omega.right];
        for iv in &spec.sigma2 {
            breaks.extend([iv.left, iv.right]);
        }
        for b in breaks {
            prop_assert!(mesh.nodes.contains(&b), "breakpoint {} is not a node", b);
        }
        for (k, e) in mesh.elements().enumerate() {
            let mid = 0.5 * (e.x[0] + e.x[1]);
            let region = if spec.omega.contains(mid) {
                Region::Omega
            } else if spec.sigma2.iter().any(|iv| iv.contains(mid)) {
                Region::Sigma2
            } else {
                Region::Sigma1
            };
            prop_assert_eq!(mesh.element_tags[k], region);
            let inside = e.x.iter().all(|&x| match region {
                Region::Omega => spec.omega.contains_closed(x),
                Region::Sigma2 => spec.sigma2.iter().any(|iv| iv.contains_closed(x)),
                Region::Sigma1 => true,
            });
            prop_assert!(inside);
            prop_assert!(e.len() <= h * (1.0 + 1e-9));
            prop_assert!(e.len() >= 0.5 * h * (1.0 - 1e-9) || !mesh.warnings.is_empty());
        }
        prop_assert!(mesh.dirichlet.iter().all(|d| !mesh.obstacle.contains(d)));
        let last = mesh.num_nodes() - 1;
        for i in 1..last {
            let (l, r) = (mesh.element_tags[i - 1], mesh.element_tags[i]);
            let pair = [l, r];
            if pair.contains(&Region::Omega) && pair.contains(&Region::Sigma1) {
                prop_assert!(mesh.is_dirichlet(i));
            }
            if pair.contains(&Region::Omega) && pair.contains(&Region::Sigma2) {
                prop_assert!(!mesh.is_dirichlet(i) && !mesh.obstacle.contains(&i));
            }
        }
        prop_assert!(mesh.is_dirichlet(0) && mesh.is_dirichlet(last));
    }

    #[test]
    fn kernel_is_symmetric(x in -5.0..5.0f64, y in -5.0..5.0f64, s in 0.01..0.99f64) {
        prop_assume!(x != y);
        let p = FracParams::new(s).unwrap();
        prop_assert_eq!(kernel_eval(x, y, &p).unwrap(), kernel_eval(y, x, &p).unwrap());
        prop_assert!(kernel_eval(x, y, &p).unwrap() > 0.0);
    }

    #[test]
    fn tail_weight_is_even(x in 0.0..3.9f64, s in 0.01..0.99f64) {
        let p = FracParams::new(s).unwrap();
        prop_assert_eq!(tail_weight(x, 4.0, &p), tail_weight(-x, 4.0, &p));
    }

    #[test]
    fn normalization_constant_positive_and_continuous(s in 0.01..0.99f64) {
        let c = normalization_constant(s).unwrap();
        prop_assert!(c > 0.0 && c.is_finite());
        let d = normalization_constant(s + 1e-9).unwrap();
        prop_assert!((d - c).abs() <= 1e-7 * c);
    }

    #[test]
    fn quadrature_weights_positive(x0 in -2.0..2.0f64, ha in 0.01..1.0f64, hb in 0.01..1.0f64, gap in 0.0..2.0f64) {
        let cfg = QuadConfig::default();
        let a = fvi_core::geometry::Element { nodes: [0, 1], x: [x0, x0 + ha] };
        let b = if gap == 0.0 {
            fvi_core::geometry::Element { nodes: [1, 2], x: [x0 + ha, x0 + ha + hb] }
        } else {
            fvi_core::geometry::Element { nodes: [2, 3], x: [x0 + ha + gap, x0 + ha + gap + hb] }
        };
        for (p, q) in [(&a, &a), (&a, &b), (&b, &a)] {
            let rule = pair_quadrature(p, q, &cfg);
            prop_assert!(rule.points.iter().all(|pt| pt.weight > 0.0 && pt.dist > 0.0));
            prop_assert!(rule.degree >= 2 * cfg.min_order - 1);
        }
    }

    #[test]
    fn eoc_is_scale_invariant(
        errors in proptest::collection::vec(1e-8..1.0f64, 2..8),
        factor in 1e-3..1e3f64,
    ) {
        let grid: Vec<f64> = (0..errors.len()).map(|k| 0.5f64.powi(k as i32 + 1)).collect();
        let scaled: Vec<f64> = errors.iter().map(|e| e * factor).collect();
        for (a, b) in eoc_sequence(&errors, &grid).into_iter().zip(eoc_sequence(&scaled, &grid)) {
            match (a, b) {
                (Eoc::Value(x), Eoc::Value(y)) => prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs())),
                (x, y) => prop_assert_eq!(x, y),
            }
        }
    }

    #[test]
    fn vi_invariants_on_random_systems(seed in any::<u64>(), z in any::<bool>()) {
        let (e, l, obs) = random_system(seed, z);
        let opts = SolverOptions::default();
        let pgs = solve_vi_pgs_oracle(&e, &l, &obs, &opts).unwrap();
        assert_vi_invariants(&e, &l, &obs, &pgs.w, &pgs.lambda, 1e-9);
        let pdas = solve_vi_pdas(&e, &l, &obs, &opts).unwrap();
        assert_vi_invariants(&e, &l, &obs, &pdas.w, &pdas.lambda, 1e-9);
        prop_assert!((&pdas.w - &pgs.w).amax() <= 1e-8 * (1.0 + pgs.w.amax()));
    }

    #[test]
    fn pdas_is_independent_of_c(seed in any::<u64>()) {
        let (e, l, obs) = random_system(seed, true);
        let mut sols = Vec::new();
        for c in [0.1, 1.0, 10.0] {
            let opts = SolverOptions { pdas_c: c, ..SolverOptions::default() };
            let sol = solve_vi_pdas(&e, &l, &obs, &opts).unwrap();
            prop_assert!(!sol.fallback);
            sols.push(sol);
        }
        for s in &sols[1..] {
            prop_assert_eq!(&s.active_set, &sols[0].active_set);
            prop_assert!((&s.w - &sols[0].w).amax() <= 1e-12 * (1.0 + sols[0].w.amax()));
        }
    }

    #[test]
    fn vi_minimizes_over_feasible_set(seed in any::<u64>()) {
        let (e, l, obs) = random_system(seed, false);
        let sol = solve_vi_pdas(&e, &l, &obs, &SolverOptions::default()).unwrap();
        let j = evaluate_j(&e, &l, &sol.w);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..100 {
            let scale = rng.random_range(1e-4..1.0);
            let mut v = &sol.w + DVector::from_fn(l.len(), |_, _| scale * rng.random_range(-1.0..1.0));
            for k in 0..obs.len() {
                v[obs.dofs[k]] = v[obs.dofs[k]].min(obs.phi[k]);
            }
            prop_assert!(j <= evaluate_j(&e, &l, &v) + 1e-12 * (1.0 + j.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn energy_matrix_symmetric_positive(seed in any::<u64>()) {
        let p = small_problem(seed);
        prop_assert_eq!(&p.energy.full, &p.energy.full.transpose());
        prop_assert!(p.energy.g.diagonal().iter().all(|&d| d > 0.0));
        prop_assert!(p.energy.g.clone().cholesky().is_some());
        let gram = p.gram.as_ref().unwrap();
        prop_assert!(gram.s.clone().cholesky().is_some());
        prop_assert!(gram.mass.clone().cholesky().is_some());
    }

    #[test]
    fn argmin_is_invariant_under_scaling(seed in any::<u64>()) {
        let p = small_problem(seed);
        let opts = SolverOptions::default();
        let obs = p.obstacle();
        let scaled_load = &p.load / p.energy.scale;
        let a = solve_vi_pdas(&p.e, &p.load, &obs, &opts).unwrap();
        let b = solve_vi_pdas(&p.energy.g, &scaled_load, &obs, &opts).unwrap();
        prop_assert_eq!(&a.active_set, &b.active_set);
        prop_assert!((&a.w - &b.w).amax() <= 1e-12 * (1.0 + a.w.amax()));
    }

    #[test]
    fn sobolev_multiplier_two_ways(seed in any::<u64>(), xi in 1e-3..0.5f64) {
        let p = small_problem(seed);
        let obs = p.obstacle();
        let gram = p.gram.as_ref().unwrap();
        let sol = solve_penalty_sobolev(&p.e, &p.load, &obs, &gram.s, xi, &SolverOptions::default()).unwrap();
        let by_definition = &gram.s * obs.excess(&sol.w) / xi;
        let by_residual = extract_multiplier(&p.e, &p.load, &sol.w, &obs.dofs);
        prop_assert!((&by_definition - &sol.multiplier).amax() <= 1e-12 * (1.0 + by_definition.amax()));
        prop_assert!((by_residual - by_definition).amax() <= 1e-9);
    }
}
