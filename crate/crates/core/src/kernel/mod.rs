//! The fractional kernel |x − y|^{−1−2s}, its normalization constant, the
//! closed-form truncation tail, and quadrature for element pairs.

mod gauss;
mod pair;

pub use gauss::{gauss_legendre, integrate, GaussRule};
pub use pair::{pair_quadrature, PairClass, PairPoint, QuadConfig, QuadRule};

use crate::error::{Error, Result, Warning};

/// Order s, dimension and the normalization constant C_{1,s}.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FracParams {
    pub s: f64,
    pub dim: usize,
    pub c_ns: f64,
}

impl FracParams {
    pub fn new(s: f64) -> Result<Self> {
        let c_ns = normalization_constant(s)?;
        Ok(Self { s, dim: 1, c_ns })
    }

    /// Returns the warning raised for s > 0.9, if any.
    pub fn accuracy_warning(&self) -> Option<Warning> {
        (self.s > 0.9).then(|| Warning::NearUnitOrder { s: self.s }.emit())
    }
}

/// C_{1,s} = s 2^{2s} Γ((1+2s)/2) / (√π Γ(1−s)), evaluated through ln Γ.
pub fn normalization_constant(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Parameter(format!("s = {s} must lie in (0, 1)")));
    }
    let ln_pi = std::f64::consts::PI.ln();
    let ln_c = s.ln() + 2.0 * s * std::f64::consts::LN_2 + libm::lgamma(0.5 + s)
        - 0.5 * ln_pi
        - libm::lgamma(1.0 - s);
    Ok(ln_c.exp())
}

/// |x − y|^{−1−2s}.
pub fn kernel_eval(x: f64, y: f64, p: &FracParams) -> Result<f64> {
    if x == y {
        return Err(Error::Singularity(x));
    }
    Ok(kernel_at_distance((x - y).abs(), p.s))
}

#[inline]
pub(crate) fn kernel_at_distance(d: f64, s: f64) -> f64 {
    if s == 0.5 {
        1.0 / (d * d)
    } else {
        d.powf(-1.0 - 2.0 * s)
    }
}

/// τ_R(x) = C_{1,s} [(R − x)^{−2s} + (R + x)^{−2s}] / (2s): the normalized kernel
/// integrated over |y| > R.
///
/// # Panics
/// If |x| ≥ R.
pub fn tail_weight(x: f64, radius: f64, p: &FracParams) -> f64 {
    assert!(
        x.abs() < radius,
        "tail_weight needs |x| < R (x = {x}, R = {radius})"
    );
    p.c_ns * unscaled_tail(x, radius, p.s)
}

/// Kernel integral over |y| > R without the normalization constant.
pub(crate) fn unscaled_tail(x: f64, radius: f64, s: f64) -> f64 {
    let e = -2.0 * s;
    ((radius - x).powf(e) + (radius + x).powf(e)) / (2.0 * s)
}
