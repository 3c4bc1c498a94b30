//! The canonical active test problem: Ω = (−1, 1), Σ₂ = (1.5, 2.5), R = 4,
//! s = 1/2, f ≡ 5 on Ω, z ≡ 0 and φ ≡ 0.1 on Σ₂.

use crate::assembly::{DiscreteProblem, ProblemData};
use crate::error::Result;
use crate::geometry::{build_mesh, DomainSpec, Interval};
use crate::kernel::{FracParams, QuadConfig};

pub fn canonical_spec() -> DomainSpec {
    DomainSpec {
        omega: Interval::new(-1.0, 1.0),
        sigma2: vec![Interval::new(1.5, 2.5)],
        radius: 4.0,
        s: 0.5,
    }
}

pub fn canonical_data() -> ProblemData {
    ProblemData::constant(5.0, 0.1)
}

pub fn canonical_problem(h: f64) -> Result<DiscreteProblem> {
    let spec = canonical_spec();
    let mesh = build_mesh(&spec, h)?;
    DiscreteProblem::assemble(
        mesh,
        FracParams::new(spec.s)?,
        &canonical_data(),
        &QuadConfig::default(),
    )
}
