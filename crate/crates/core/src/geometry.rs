//! Truncated 1D geometry and tagged P1 meshes.
//!
//! The real line is split into the interior domain Ω = (a, b), a finite union
//! of bounded obstacle intervals Σ₂, and everything else (Σ₁), where the
//! solution is prescribed. The mesh covers [−R, R]; the tail |x| > R belongs
//! to Σ₁ and only enters the energy through a closed-form weight.

use serde::Serialize;

use crate::error::{Error, Result, Warning};

/// Open interval (left, right).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub left: f64,
    pub right: f64,
}

impl Interval {
    pub fn new(left: f64, right: f64) -> Self {
        Self { left, right }
    }

    pub fn len(&self) -> f64 {
        self.right - self.left
    }

    pub fn contains(&self, x: f64) -> bool {
        self.left < x && x < self.right
    }

    pub fn contains_closed(&self, x: f64) -> bool {
        self.left <= x && x <= self.right
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainSpec {
    pub omega: Interval,
    pub sigma2: Vec<Interval>,
    pub radius: f64,
    pub s: f64,
}

/// Checks the invariants of `spec` and returns it unchanged when they hold.
pub fn validate_spec(spec: DomainSpec) -> Result<DomainSpec> {
    if !(spec.s > 0.0 && spec.s < 1.0) {
        return Err(Error::Parameter(format!(
            "s = {} must lie in (0, 1)",
            spec.s
        )));
    }
    let om = spec.omega;
    if !(om.left.is_finite() && om.right.is_finite() && om.left < om.right) {
        return Err(Error::Parameter(format!(
            "omega ({}, {}) is not a bounded interval",
            om.left, om.right
        )));
    }
    for iv in &spec.sigma2 {
        if !(iv.left.is_finite() && iv.right.is_finite() && iv.left < iv.right) {
            return Err(Error::Parameter(format!(
                "sigma2 ({}, {}) is not a bounded interval",
                iv.left, iv.right
            )));
        }
        // Open interval against the closed set [a, b].
        if iv.left < om.right && iv.right > om.left {
            return Err(Error::Overlap(format!(
                "sigma2 ({}, {}) meets the closure of omega [{}, {}]",
                iv.left, iv.right, om.left, om.right
            )));
        }
    }
    for (i, p) in spec.sigma2.iter().enumerate() {
        for q in &spec.sigma2[i + 1..] {
            if p.left < q.right && q.left < p.right {
                return Err(Error::Overlap(format!(
                    "sigma2 intervals ({}, {}) and ({}, {}) intersect",
                    p.left, p.right, q.left, q.right
                )));
            }
        }
    }
    let r = spec.radius;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Truncation(format!("radius {r} must be positive")));
    }
    if r <= om.left.abs().max(om.right.abs()) {
        return Err(Error::Truncation(format!(
            "closure of omega is not inside (-{r}, {r})"
        )));
    }
    if let Some(iv) = spec.sigma2.iter().find(|iv| iv.left < -r || iv.right > r) {
        return Err(Error::Truncation(format!(
            "sigma2 ({}, {}) is not inside (-{r}, {r})",
            iv.left, iv.right
        )));
    }
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    Omega,
    Sigma1,
    Sigma2,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Omega => "Omega",
            Region::Sigma1 => "Sigma1",
            Region::Sigma2 => "Sigma2",
        }
    }
}

/// A mesh element: global node indices and their coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub nodes: [usize; 2],
    pub x: [f64; 2],
}

impl Element {
    pub fn len(&self) -> f64 {
        self.x[1] - self.x[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub spec: DomainSpec,
    pub h: f64,
    pub nodes: Vec<f64>,
    pub node_tags: Vec<Region>,
    pub element_tags: Vec<Region>,
    pub dirichlet: Vec<usize>,
    pub obstacle: Vec<usize>,
    pub warnings: Vec<Warning>,
}

impl Mesh1D {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn element(&self, k: usize) -> Element {
        Element {
            nodes: [k, k + 1],
            x: [self.nodes[k], self.nodes[k + 1]],
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.num_elements()).map(|k| self.element(k))
    }

    /// Indices of elements carrying `region`.
    pub fn elements_in(&self, region: Region) -> Vec<usize> {
        (0..self.num_elements())
            .filter(|&k| self.element_tags[k] == region)
            .collect()
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        self.node_tags[node] == Region::Sigma1
    }

    /// Node, coordinate and tag as CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,coordinate,tag\n");
        for (i, (x, t)) in self.nodes.iter().zip(&self.node_tags).enumerate() {
            out.push_str(&format!("{i},{x:.16e},{}\n", t.as_str()));
        }
        out
    }
}

fn region_of(spec: &DomainSpec, x: f64) -> Region {
    if spec.omega.contains(x) {
        Region::Omega
    } else if spec.sigma2.iter().any(|iv| iv.contains(x)) {
        Region::Sigma2
    } else {
        Region::Sigma1
    }
}

// Number of uniform elements of size at most h; the slack absorbs
// representation error in len/h for lengths that are exact multiples.
fn element_count(len: f64, h: f64) -> usize {
    ((len / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Builds the tagged mesh of [−R, R] with target element size `h`.
///
/// Every region boundary is a node. Each region segment is split into
/// `ceil(len / h)` uniform elements; segments shorter than h/2 get a single
/// element and a [`Warning::DegenerateRegion`].
pub fn build_mesh(spec: &DomainSpec, h: f64) -> Result<Mesh1D> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Parameter(format!(
            "mesh size h = {h} must be positive"
        )));
    }
    let spec = validate_spec(spec.clone())?;
    let r = spec.radius;
    let mut breaks = vec![-r, r, spec.omega.left, spec.omega.right];
    for iv in &spec.sigma2 {
        breaks.push(iv.left);
        breaks.push(iv.right);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut nodes = vec![breaks[0]];
    let mut element_tags = Vec::new();
    let mut warnings = Vec::new();
    for seg in breaks.windows(2) {
        let (left, right) = (seg[0], seg[1]);
        let len = right - left;
        let region = region_of(&spec, 0.5 * (left + right));
        let n = if len < 0.5 * h {
            warnings.push(Warning::DegenerateRegion { left, right }.emit());
            1
        } else {
            element_count(len, h)
        };
        for k in 1..n {
            nodes.push(left + len * (k as f64) / (n as f64));
        }
        nodes.push(right);
        element_tags.extend(std::iter::repeat_n(region, n));
    }

    let n_nodes = nodes.len();
    let mut node_tags = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let tag = if i == 0 || i == n_nodes - 1 {
            Region::Sigma1
        } else {
            let (l, r) = (element_tags[i - 1], element_tags[i]);
            if l == r {
                l
            } else if l == Region::Sigma1 || r == Region::Sigma1 {
                Region::Sigma1
            } else {
                // Ω/Σ₂ interfaces stay free.
                Region::Omega
            }
        };
        node_tags.push(tag);
    }
    let dirichlet = (0..n_nodes)
        .filter(|&i| node_tags[i] == Region::Sigma1)
        .collect();
    let obstacle = (0..n_nodes)
        .filter(|&i| node_tags[i] == Region::Sigma2)
        .collect();
    Ok(Mesh1D {
        spec,
        h,
        nodes,
        node_tags,
        element_tags,
        dirichlet,
        obstacle,
        warnings,
    })
}
