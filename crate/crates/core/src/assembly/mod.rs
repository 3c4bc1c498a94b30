//! Discrete operators on P1 hats.
//!
//! The energy matrix integrates over all element pairs with at least one
//! element in Ω; pairs with both elements outside Ω never enter. The part of
//! Σ₁ beyond the truncation radius contributes the closed-form tail weight.

mod ibp;
mod interaction;

pub use ibp::{
    fractional_laplacian, ibp_residual, sine_test_vector, Bump, IbpReport, SmoothProfile,
};
pub use interaction::{interaction_apply, interpolate};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Element, Mesh1D, Region};
use crate::kernel::{gauss_legendre, pair_quadrature, unscaled_tail, FracParams, QuadConfig};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const TAIL_ORDER: usize = 16;
const LOAD_ORDER: usize = 8;
// Rows of the pair loop processed per parallel batch; bounds the buffered
// contributions without affecting the reduction order.
const ROW_BATCH: usize = 32;

/// Numbering of the non-Dirichlet nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub node_to_dof: Vec<Option<usize>>,
    pub dof_to_node: Vec<usize>,
    /// Dof index of each obstacle node, in mesh order.
    pub obstacle: Vec<usize>,
    pub dirichlet: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh1D) -> Self {
        let mut node_to_dof = vec![None; mesh.num_nodes()];
        let mut dof_to_node = Vec::new();
        for (i, slot) in node_to_dof.iter_mut().enumerate() {
            if !mesh.is_dirichlet(i) {
                *slot = Some(dof_to_node.len());
                dof_to_node.push(i);
            }
        }
        let obstacle = mesh
            .obstacle
            .iter()
            .map(|&i| node_to_dof[i].expect("obstacle node is free"))
            .collect();
        Self {
            node_to_dof,
            dof_to_node,
            obstacle,
            dirichlet: mesh.dirichlet.clone(),
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.dof_to_node.len()
    }

    /// Nodal vector with zeros at Dirichlet nodes.
    pub fn expand(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.node_to_dof.len());
        for (d, &n) in self.dof_to_node.iter().enumerate() {
            out[n] = w[d];
        }
        out
    }

    pub fn restrict(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.num_dofs(), self.dof_to_node.iter().map(|&n| u[n]))
    }

    /// Obstacle entries of a dof vector.
    pub fn obstacle_part(&self, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.obstacle.len(), self.obstacle.iter().map(|&d| w[d]))
    }
}

/// Gagliardo matrix G over all mesh nodes, its free-dof blocks and the scale
/// C_{1,s}/2 that turns it into the energy matrix E.
#[derive(Debug, Clone)]
pub struct EnergyMatrix {
    pub full: DMatrix<f64>,
    /// Free × free block.
    pub g: DMatrix<f64>,
    /// Free × Dirichlet block, used to move the lift to the right-hand side.
    pub g_lift: DMatrix<f64>,
    pub scale: f64,
}

impl EnergyMatrix {
    pub fn energy(&self) -> DMatrix<f64> {
        &self.g * self.scale
    }
}

struct PairContribution {
    nodes: [usize; 4],
    n: usize,
    vals: [f64; 16],
}

fn pair_contribution(
    a: &Element,
    b: &Element,
    s: f64,
    cfg: &QuadConfig,
    factor: f64,
) -> PairContribution {
    let rule = pair_quadrature(a, b, cfg);
    let n = rule.nodes.len();
    let local = rule.local_matrix(s);
    let mut nodes = [0; 4];
    nodes[..n].copy_from_slice(&rule.nodes);
    let mut vals = [0.0; 16];
    for (v, l) in vals.iter_mut().zip(&local) {
        *v = factor * l;
    }
    PairContribution { nodes, n, vals }
}

/// Sums pair contributions over the unordered pairs (i, j ≥ i) selected by
/// `keep`, counting off-diagonal pairs twice. Parallel over rows, reduced
/// sequentially in (i, j) order so the result does not depend on the
/// thread count.
fn assemble_pairs<F>(mesh: &Mesh1D, s: f64, cfg: &QuadConfig, keep: F) -> DMatrix<f64>
where
    F: Fn(usize, usize) -> bool + Sync,
{
    let n_el = mesh.num_elements();
    let mut g = DMatrix::zeros(mesh.num_nodes(), mesh.num_nodes());
    let rows: Vec<usize> = (0..n_el).collect();
    for batch in rows.chunks(ROW_BATCH) {
        let contributions: Vec<Vec<PairContribution>> = batch
            .par_iter()
            .map(|&i| {
                let a = mesh.element(i);
                (i..n_el)
                    .filter(|&j| keep(i, j))
                    .map(|j| {
                        pair_contribution(
                            &a,
                            &mesh.element(j),
                            s,
                            cfg,
                            if i == j { 1.0 } else { 2.0 },
                        )
                    })
                    .collect()
            })
            .collect();
        for c in contributions.iter().flatten() {
            for r in 0..c.n {
                for q in 0..c.n {
                    g[(c.nodes[r], c.nodes[q])] += c.vals[r * c.n + q];
                }
            }
        }
    }
    // Exact symmetry regardless of summation order.
    for i in 0..g.nrows() {
        for j in 0..i {
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Assembles G over all nodes with the truncation tail, then splits off the
/// free blocks.
pub fn assemble_energy(mesh: &Mesh1D, p: &FracParams, cfg: &QuadConfig) -> EnergyMatrix {
    let tags = &mesh.element_tags;
    let mut full = assemble_pairs(mesh, p.s, cfg, |i, j| {
        tags[i] == Region::Omega || tags[j] == Region::Omega
    });

    // Ω × {|y| > R} and its mirror: 2 ∫_Ω φ_a φ_b ∫_{|y|>R} k dy dx.
    let g = gauss_legendre(TAIL_ORDER);
    let r = mesh.spec.radius;
    for k in mesh.elements_in(Region::Omega) {
        let e = mesh.element(k);
        let len = e.len();
        let mut loc = [[0.0; 2]; 2];
        for (&t, &w) in g.nodes.iter().zip(&g.weights) {
            let x = e.x[0] + len * t;
            let wt = 2.0 * len * w * unscaled_tail(x, r, p.s);
            let phi = [1.0 - t, t];
            loc[0][0] += wt * phi[0] * phi[0];
            loc[0][1] += wt * phi[0] * phi[1];
            loc[1][1] += wt * phi[1] * phi[1];
        }
        loc[1][0] = loc[0][1];
        for a in 0..2 {
            for b in 0..2 {
                full[(e.nodes[a], e.nodes[b])] += loc[a][b];
            }
        }
    }

    let dofs = DofMap::new(mesh);
    let free = &dofs.dof_to_node;
    let g_free = full.select_rows(free).select_columns(free);
    let g_lift = full.select_rows(free).select_columns(&dofs.dirichlet);
    EnergyMatrix {
        full,
        g: g_free,
        g_lift,
        scale: 0.5 * p.c_ns,
    }
}

/// Σ₂ Gram matrix S = M + H over obstacle nodes.
#[derive(Debug, Clone)]
pub struct Sigma2Gram {
    pub s: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

/// P1 mass matrix over the elements of `region`, restricted to `nodes`.
pub fn region_mass(mesh: &Mesh1D, region: Region, nodes: &[usize]) -> DMatrix<f64> {
    let mut full = DMatrix::zeros(mesh.num_nodes(), mesh.num_nodes());
    for k in mesh.elements_in(region) {
        let e = mesh.element(k);
        let h = e.len();
        let [a, b] = e.nodes;
        full[(a, a)] += h / 3.0;
        full[(b, b)] += h / 3.0;
        full[(a, b)] += h / 6.0;
        full[(b, a)] += h / 6.0;
    }
    full.select_rows(nodes).select_columns(nodes)
}

/// P1 mass matrix over the whole truncated line, restricted to `nodes`.
pub fn full_mass(mesh: &Mesh1D, nodes: &[usize]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(nodes.len(), nodes.len());
    for reg in [Region::Omega, Region::Sigma1, Region::Sigma2] {
        m += region_mass(mesh, reg, nodes);
    }
    m
}

pub fn assemble_sigma2_gram(mesh: &Mesh1D, p: &FracParams, cfg: &QuadConfig) -> Result<Sigma2Gram> {
    if mesh.obstacle.is_empty() {
        return Err(Error::EmptyRegion("sigma2".into()));
    }
    let tags = &mesh.element_tags;
    let h_full = assemble_pairs(mesh, p.s, cfg, |i, j| {
        tags[i] == Region::Sigma2 && tags[j] == Region::Sigma2
    });
    let h = h_full
        .select_rows(&mesh.obstacle)
        .select_columns(&mesh.obstacle);
    let mass = region_mass(mesh, Region::Sigma2, &mesh.obstacle);
    Ok(Sigma2Gram {
        s: &mass + &h,
        mass,
        h,
    })
}

/// ∫_Ω f φ_i for every node, by per-element Gauss quadrature.
pub fn assemble_load(mesh: &Mesh1D, f: &dyn Fn(f64) -> f64) -> DVector<f64> {
    let g = gauss_legendre(LOAD_ORDER);
    let mut out = DVector::zeros(mesh.num_nodes());
    for k in mesh.elements_in(Region::Omega) {
        let e = mesh.element(k);
        let len = e.len();
        for (&t, &w) in g.nodes.iter().zip(&g.weights) {
            let fx = f(e.x[0] + len * t) * w * len;
            out[e.nodes[0]] += fx * (1.0 - t);
            out[e.nodes[1]] += fx * t;
        }
    }
    out
}

/// Right-hand side density f on Ω, exterior datum z on Σ₁ and obstacle φ on Σ₂.
#[derive(Clone)]
pub struct ProblemData {
    pub f: ScalarFn,
    pub z: ScalarFn,
    pub phi: ScalarFn,
}

impl ProblemData {
    pub fn constant(f: f64, phi: f64) -> Self {
        Self {
            f: Arc::new(move |_| f),
            z: Arc::new(|_| 0.0),
            phi: Arc::new(move |_| phi),
        }
    }
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ProblemData { .. }")
    }
}

/// Everything the solvers need, in the shifted unknown w = u − 𝒵.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub mesh: Mesh1D,
    pub params: FracParams,
    pub dofs: DofMap,
    pub energy: EnergyMatrix,
    /// E = (C/2) G on free dofs.
    pub e: DMatrix<f64>,
    /// Load with the lift coupling removed.
    pub load: DVector<f64>,
    /// Obstacle values at obstacle nodes.
    pub phi: DVector<f64>,
    /// Nodal lift 𝒵: z at Dirichlet nodes, zero elsewhere.
    pub lift: DVector<f64>,
    /// Gram matrix of Σ₂, when Σ₂ has interior nodes.
    pub gram: Option<Sigma2Gram>,
}

impl DiscreteProblem {
    pub fn assemble(
        mesh: Mesh1D,
        params: FracParams,
        data: &ProblemData,
        cfg: &QuadConfig,
    ) -> Result<Self> {
        let dofs = DofMap::new(&mesh);
        let r = mesh.spec.radius;
        let mut lift = DVector::zeros(mesh.num_nodes());
        for &i in &mesh.dirichlet {
            let x = mesh.nodes[i];
            let z = if x.abs() >= r { 0.0 } else { (data.z)(x) };
            if !z.is_finite() {
                return Err(Error::Precondition(format!(
                    "exterior datum is not finite at x = {x}"
                )));
            }
            lift[i] = z;
        }
        let phi = DVector::from_iterator(
            mesh.obstacle.len(),
            mesh.obstacle.iter().map(|&i| (data.phi)(mesh.nodes[i])),
        );
        if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "obstacle is not finite at x = {}",
                mesh.nodes[mesh.obstacle[i]]
            )));
        }

        let energy = assemble_energy(&mesh, &params, cfg);
        let e = energy.energy();
        let nodal_load = assemble_load(&mesh, data.f.as_ref());
        let z_d = DVector::from_iterator(
            dofs.dirichlet.len(),
            dofs.dirichlet.iter().map(|&i| lift[i]),
        );
        let load = dofs.restrict(&nodal_load) - &energy.g_lift * z_d * energy.scale;
        let gram = if mesh.obstacle.is_empty() {
            None
        } else {
            Some(assemble_sigma2_gram(&mesh, &params, cfg)?)
        };
        Ok(Self {
            mesh,
            params,
            dofs,
            energy,
            e,
            load,
            phi,
            lift,
            gram,
        })
    }

    /// Σ₂ mass matrix over obstacle nodes.
    pub fn sigma2_mass(&self) -> DMatrix<f64> {
        match &self.gram {
            Some(g) => g.mass.clone(),
            None => DMatrix::zeros(0, 0),
        }
    }

    pub fn obstacle(&self) -> crate::solvers::Obstacle {
        crate::solvers::Obstacle::new(self.dofs.obstacle.clone(), self.phi.clone())
    }

    /// Nodal u = w + 𝒵.
    pub fn nodal(&self, w: &DVector<f64>) -> DVector<f64> {
        self.dofs.expand(w) + &self.lift
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec, Interval};

    fn mesh(h: f64) -> Mesh1D {
        let spec = DomainSpec {
            omega: Interval::new(-1.0, 1.0),
            sigma2: vec![Interval::new(1.5, 2.5)],
            radius: 4.0,
            s: 0.5,
        };
        build_mesh(&spec, h).unwrap()
    }

    #[test]
    fn load_constant_and_odd() {
        let m = mesh(0.25);
        let l = assemble_load(&m, &|_| 1.0);
        let i = m.nodes.iter().position(|&x| x == 0.0).unwrap();
        assert!((l[i] - 0.25).abs() < 1e-15);
        assert!(assemble_load(&m, &|_| 0.0).iter().all(|&v| v == 0.0));
        for (k, &x) in m.nodes.iter().enumerate() {
            if x.abs() > 1.0 {
                assert_eq!(l[k], 0.0);
            }
        }
        let l = assemble_load(&m, &|x| x);
        let n = m.num_nodes();
        for k in 0..n {
            assert!((l[k] + l[n - 1 - k]).abs() < 1e-15);
        }
        assert!(l[i].abs() < 1e-15 && l[i + 1] > 0.0);
    }

    #[test]
    fn sigma2_mass_entries() {
        let m = mesh(0.25);
        let gram = assemble_sigma2_gram(&m, &FracParams::new(0.5).unwrap(), &QuadConfig::default())
            .unwrap();
        assert_eq!(gram.mass.nrows(), 3);
        for i in 0..3 {
            assert!((gram.mass[(i, i)] - 0.5 / 3.0).abs() < 1e-15);
        }
        assert!((gram.mass[(0, 1)] - 0.25 / 6.0).abs() < 1e-15);
        assert_eq!(gram.mass[(0, 2)], 0.0);
        assert!(gram.s.clone().cholesky().is_some());
    }

    #[test]
    fn energy_is_symmetric_with_positive_diagonal() {
        let m = mesh(0.5);
        let en = assemble_energy(&m, &FracParams::new(0.3).unwrap(), &QuadConfig::default());
        assert_eq!(en.full, en.full.transpose());
        assert!(en.g.diagonal().iter().all(|&d| d > 0.0));
        assert!(en.g.clone().cholesky().is_some());
    }

    #[test]
    fn empty_sigma2_is_rejected() {
        let spec = DomainSpec {
            omega: Interval::new(-1.0, 1.0),
            sigma2: vec![],
            radius: 2.0,
            s: 0.5,
        };
        let m = build_mesh(&spec, 0.5).unwrap();
        let p = FracParams::new(0.5).unwrap();
        assert!(matches!(
            assemble_sigma2_gram(&m, &p, &QuadConfig::default()),
            Err(Error::EmptyRegion(_))
        ));
    }
}
