//! Trace metrics and evaluators for the convergence-rate expressions.
//!
//! Rate evaluators set every hidden constant to 1. They are for comparing
//! shapes of curves, not for absolute predictions.

use nalgebra::DMatrix;

use crate::algorithms::RunTrace;
use crate::error::{Error, Result};
use crate::tuning::BoundInputs;

/// `(1/k) Σ_m ‖z_m − x★‖²` over the columns of `z`.
pub fn error_to_optimum(z: &DMatrix<f64>, x_star: &[f64]) -> Result<f64> {
    if z.nrows() != x_star.len() {
        return Err(Error::InvalidShape(format!(
            "parameter dimension {} does not match optimum dimension {}",
            z.nrows(),
            x_star.len()
        )));
    }
    if z.ncols() == 0 {
        return Err(Error::InvalidShape("no columns".into()));
    }
    Ok(column_error(z.as_slice(), x_star))
}

/// `(1/k) Σ_m ‖z_m − z̄‖²` where `z̄` is the column mean.
pub fn consensus_error(z: &DMatrix<f64>) -> f64 {
    if z.ncols() == 0 {
        return 0.0;
    }
    let mean = column_mean(z.as_slice(), z.nrows());
    column_error(z.as_slice(), &mean)
}

/// First iteration whose error is at or below `target`.
pub fn iterations_to_target(trace: &RunTrace, target: f64) -> Option<usize> {
    trace
        .records()
        .iter()
        .find(|r| r.error <= target)
        .map(|r| r.iteration)
}

// Column-major d × k data.
pub(crate) fn column_mean(data: &[f64], d: usize) -> Vec<f64> {
    let k = data.len() / d;
    let mut mean = vec![0.0; d];
    for col in data.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(col) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    mean
}

pub(crate) fn column_error(data: &[f64], center: &[f64]) -> f64 {
    let d = center.len();
    let k = data.len() / d;
    let total: f64 = data
        .chunks_exact(d)
        .map(|col| crate::problem::dist_sq(col, center))
        .sum();
    total / k as f64
}

/// The three additive terms of a convergence-rate bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    pub total: f64,
}

impl RateEstimate {
    fn new(term1: f64, term2: f64, term3: f64) -> Self {
        RateEstimate {
            term1,
            term2,
            term3,
            total: term1 + term2 + term3,
        }
    }
}

fn check_gap(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "spectral gap must lie in (0, 1], got {p}"
        )));
    }
    Ok(())
}

/// Decentralized SGD on an `n`-node topology with spectral gap `p`.
pub fn rate_dsgd(inputs: &BoundInputs, p: f64) -> Result<RateEstimate> {
    inputs.validate()?;
    check_gap(p)?;
    let BoundInputs {
        t,
        sigma2,
        zeta2,
        l,
        r0,
        n,
    } = *inputs;
    let t = t as f64;
    let term1 = (l * r0 * sigma2 / (n as f64 * t)).sqrt();
    let term2 = (l * l * r0 * r0 * (p * sigma2 + zeta2) * (1.0 - p) / (t * t * p * p)).cbrt();
    let term3 = l * r0 / (t * p);
    Ok(RateEstimate::new(term1, term2, term3))
}

/// Teleportation with `k` active nodes gossiping over a graph with gap `p_k`.
pub fn rate_teleportation(inputs: &BoundInputs, k: usize, p_k: f64) -> Result<RateEstimate> {
    inputs.validate()?;
    check_gap(p_k)?;
    let n = inputs.n;
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={n}, got {k}"
        )));
    }
    let BoundInputs {
        t,
        sigma2,
        zeta2,
        l,
        r0,
        ..
    } = *inputs;
    let t = t as f64;
    let participation = if n == 1 {
        0.0
    } else {
        1.0 - (k - 1) as f64 / (n - 1) as f64
    };
    let term1 = (l * r0 * (sigma2 + participation * zeta2) / (k as f64 * t)).sqrt();
    let term2 = (l * l * r0 * r0 * (sigma2 + zeta2) * (1.0 - p_k) / (t * t * p_k)).cbrt();
    let term3 = l * r0 / (t * p_k);
    Ok(RateEstimate::new(term1, term2, term3))
}
