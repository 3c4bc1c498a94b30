//! TOML run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fvi_core::assembly::{ProblemData, ScalarFn};
use fvi_core::geometry::{validate_spec, DomainSpec, Interval};
use fvi_core::kernel::QuadConfig;
use fvi_core::solvers::SolverOptions;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub mesh: MeshSection,
    pub data: DataSection,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub ibp: IbpSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub omega: [f64; 2],
    #[serde(default)]
    pub sigma2: Vec<[f64; 2]>,
    pub radius: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub h: f64,
}

/// A scalar datum on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataFn {
    Zero,
    Constant(f64),
    /// Coefficients c₀, c₁, … of c₀ + c₁x + ….
    Polynomial(Vec<f64>),
    /// Two-column CSV of coordinate, value; linear in between.
    NodalFile(PathBuf),
}

fn zero() -> DataFn {
    DataFn::Zero
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub f: DataFn,
    #[serde(default = "zero")]
    pub z: DataFn,
    pub phi: DataFn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepSection {
    /// base^{−k} for k = start, …, start + count − 1.
    Geometric {
        base: f64,
        start: i32,
        count: usize,
    },
    List {
        values: Vec<f64>,
    },
}

impl SweepSection {
    pub fn grid(&self) -> Vec<f64> {
        match self {
            SweepSection::Geometric { base, start, count } => (0..*count)
                .map(|k| base.powi(-(start + k as i32)))
                .collect(),
            SweepSection::List { values } => values.clone(),
        }
    }
}

/// Tolerances of the pass/fail checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    pub feasibility: f64,
    pub multiplier: f64,
    /// Relative to Σ |λ_k| max(1, |φ_k|).
    pub complementarity: f64,
    pub eoc_l2_energy: f64,
    pub eoc_l2_violation: f64,
    pub eoc_sobolev: f64,
    pub bound_ratio: f64,
    /// Relative to |ℰ(u, u)| + 1.
    pub ibp: f64,
    /// Relative to the largest sampled |𝒩ₛu|.
    pub interaction_sign: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            feasibility: 1e-10,
            multiplier: 1e-10,
            complementarity: 1e-9,
            eoc_l2_energy: 0.9,
            eoc_l2_violation: 1.8,
            eoc_sobolev: 0.9,
            bound_ratio: 2.0,
            ibp: 1e-3,
            interaction_sign: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IbpSection {
    /// Bump center; defaults to the midpoint of Ω.
    pub center: Option<f64>,
    /// Bump radius; defaults to 0.8 times the half-width of Ω.
    pub radius: Option<f64>,
    /// Number of meshes h, h/2, h/4, ….
    pub levels: usize,
    /// Seeded random test vectors in addition to the sine vector.
    pub random_vectors: usize,
}

impl Default for IbpSection {
    fn default() -> Self {
        Self {
            center: None,
            radius: None,
            levels: 2,
            random_vectors: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Piecewise-linear table; NaN outside its range.
#[derive(Debug, Clone)]
struct Table {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Table {
    fn read(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(bytes.as_slice());
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (k, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            let parse = |i: usize| rec.get(i).and_then(|v| v.parse::<f64>().ok());
            match (parse(0), parse(1), rec.len()) {
                (Some(a), Some(b), 2) => {
                    x.push(a);
                    y.push(b);
                }
                // A non-numeric first row is a header.
                _ if k == 0 => continue,
                _ => {
                    return Err(CliError::config(format!(
                        "{}: row {} is not 'coordinate,value'",
                        path.display(),
                        k + 1
                    )))
                }
            }
        }
        if x.len() < 2 || x.windows(2).any(|w| w[1] <= w[0]) || y.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config(format!(
                "{}: need at least two rows with strictly increasing coordinates and finite values",
                path.display()
            )));
        }
        Ok((Self { x, y }, bytes))
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t < self.x[0] || t > self.x[n - 1] {
            return f64::NAN;
        }
        let k = self.x.partition_point(|&v| v <= t).clamp(1, n - 1);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let w = (t - x0) / (x1 - x0);
        (1.0 - w) * self.y[k - 1] + w * self.y[k]
    }

    fn covers(&self, a: f64, b: f64) -> bool {
        self.x[0] <= a && b <= self.x[self.x.len() - 1]
    }
}

/// A validated configuration with its data functions and hash.
pub struct Loaded {
    pub config: RunConfig,
    pub spec: DomainSpec,
    pub data: ProblemData,
    pub hash: String,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn build_fn(
    name: &str,
    d: &DataFn,
    base: &Path,
    cover: &[(f64, f64)],
    hasher: &mut Sha256,
) -> Result<ScalarFn, CliError> {
    Ok(match d.clone() {
        DataFn::Zero => Arc::new(|_| 0.0),
        DataFn::Constant(c) => {
            if !c.is_finite() {
                return Err(CliError::config(format!(
                    "data.{name}: constant must be finite"
                )));
            }
            Arc::new(move |_| c)
        }
        DataFn::Polynomial(c) => {
            if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                return Err(CliError::config(format!(
                    "data.{name}: polynomial needs finite coefficients"
                )));
            }
            Arc::new(move |x| c.iter().rev().fold(0.0, |acc, &a| acc * x + a))
        }
        DataFn::NodalFile(p) => {
            let (table, bytes) = Table::read(&resolve(base, &p))?;
            if let Some((a, b)) = cover.iter().find(|(a, b)| !table.covers(*a, *b)) {
                return Err(CliError::config(format!(
                    "data.{name}: table does not cover [{a}, {b}]"
                )));
            }
            hasher.update(name.as_bytes());
            hasher.update(&bytes);
            Arc::new(move |x| table.eval(x))
        }
    })
}

fn validate(cfg: &RunConfig) -> Result<DomainSpec, CliError> {
    let d = &cfg.domain;
    let spec = DomainSpec {
        omega: Interval::new(d.omega[0], d.omega[1]),
        sigma2: d
            .sigma2
            .iter()
            .map(|iv| Interval::new(iv[0], iv[1]))
            .collect(),
        radius: d.radius,
        s: d.s,
    };
    let spec = validate_spec(spec).map_err(|e| CliError::config(e.to_string()))?;
    if !(cfg.mesh.h > 0.0 && cfg.mesh.h.is_finite()) {
        return Err(CliError::config(format!(
            "mesh.h = {} must be positive",
            cfg.mesh.h
        )));
    }
    let o = &cfg.solver;
    let positive = [
        ("solver.linear_tol", o.linear_tol),
        ("solver.pgs_tol", o.pgs_tol),
        ("solver.pdas_c", o.pdas_c),
        ("solver.newton_tol", o.newton_tol),
        ("checks.feasibility", cfg.checks.feasibility),
        ("checks.multiplier", cfg.checks.multiplier),
        ("checks.complementarity", cfg.checks.complementarity),
        ("checks.bound_ratio", cfg.checks.bound_ratio),
        ("checks.ibp", cfg.checks.ibp),
        ("checks.interaction_sign", cfg.checks.interaction_sign),
        ("quadrature.grading_ratio", cfg.quadrature.grading_ratio),
        ("quadrature.disjoint_tol", cfg.quadrature.disjoint_tol),
    ];
    if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(CliError::config(format!("{name} = {v} must be positive")));
    }
    if cfg.quadrature.grading_ratio >= 1.0 {
        return Err(CliError::config(
            "quadrature.grading_ratio must be below 1".into(),
        ));
    }
    let q = &cfg.quadrature;
    if q.levels == 0 || q.order == 0 || q.order > 64 || q.min_order == 0 || q.min_order > 30 {
        return Err(CliError::config(
            "quadrature: levels >= 1, 1 <= order <= 64, 1 <= min_order <= 30".into(),
        ));
    }
    if o.pgs_max_sweeps == 0 || o.pdas_max_iter == 0 || o.newton_max_iter == 0 {
        return Err(CliError::config(
            "solver iteration caps must be positive".into(),
        ));
    }
    if cfg.ibp.levels == 0 {
        return Err(CliError::config("ibp.levels must be at least 1".into()));
    }
    if let Some(r) = cfg.ibp.radius {
        if !(r > 0.0) {
            return Err(CliError::config("ibp.radius must be positive".into()));
        }
    }
    if let Some(sweep) = &cfg.sweep {
        if let SweepSection::Geometric { base, count, .. } = sweep {
            if !(*base > 1.0) || *count == 0 {
                return Err(CliError::config(
                    "sweep: geometric grids need base > 1 and count >= 1".into(),
                ));
            }
        }
        let g = sweep.grid();
        if g.is_empty()
            || g.iter().any(|v| !(*v > 0.0 && v.is_finite()))
            || g.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(CliError::config(
                "sweep: grid must be nonempty, positive and strictly decreasing".into(),
            ));
        }
    }
    Ok(spec)
}

/// Reads, validates and hashes the configuration at `path`.
///
/// The hash covers the parsed configuration (so comments and formatting do
/// not matter) and the contents of every referenced data file.
pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let config: RunConfig =
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let spec = validate(&config)?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(&config).expect("configuration serializes"));
    let r = spec.radius;
    let omega = [(spec.omega.left, spec.omega.right)];
    let sigma2: Vec<(f64, f64)> = spec.sigma2.iter().map(|iv| (iv.left, iv.right)).collect();
    let data = ProblemData {
        f: build_fn("f", &config.data.f, base, &omega, &mut hasher)?,
        z: build_fn("z", &config.data.z, base, &[(-r, r)], &mut hasher)?,
        phi: build_fn("phi", &config.data.phi, base, &sigma2, &mut hasher)?,
    };
    let hash = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(Loaded {
        config,
        spec,
        data,
        hash,
    })
}
