//! Doubly stochastic mixing matrices and their spectral gap.
//!
//! Every family uses uniform weights over the closed neighbourhood of a node
//! (self-loop included), so a node with `deg` distinct neighbours puts
//! `1 / (deg + 1)` on each. Circulant offsets that collide accumulate weight.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for the doubly-stochastic check.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Spectral gaps at or below this value are treated as zero.
const GAP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ring,
    Torus,
    Complete,
    Exponential,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Ring,
        Family::Torus,
        Family::Complete,
        Family::Exponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Ring => "ring",
            Family::Torus => "torus",
            Family::Complete => "complete",
            Family::Exponential => "exponential",
        }
    }

    /// Whether the family produces symmetric weight matrices.
    pub fn is_symmetric(self) -> bool {
        !matches!(self, Family::Exponential)
    }

    /// Whether a `k`-node instance of this family can be built.
    pub fn supports(self, k: usize) -> bool {
        match self {
            Family::Torus => k >= 1 && exact_sqrt(k).is_some(),
            _ => k >= 1,
        }
    }

    pub fn build(self, k: usize) -> Result<MixingMatrix> {
        match self {
            Family::Ring => build_ring(k),
            Family::Torus => build_torus(k),
            Family::Complete => build_complete(k),
            Family::Exponential => build_exponential(k),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ring" => Ok(Family::Ring),
            "torus" => Ok(Family::Torus),
            "complete" => Ok(Family::Complete),
            "exponential" | "exp" => Ok(Family::Exponential),
            other => Err(Error::Config(format!("unknown topology `{other}`"))),
        }
    }
}

/// A `k × k` doubly stochastic gossip matrix together with its spectral gap.
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    family: Family,
    weights: DMatrix<f64>,
    gap: f64,
    // Nonzero entries of each row, ascending column order.
    rows: Vec<Vec<(usize, f64)>>,
}

impl MixingMatrix {
    fn from_weights(family: Family, weights: DMatrix<f64>) -> Result<Self> {
        let gap = spectral_gap(&weights)?;
        let rows = sparse_rows(&weights);
        Ok(MixingMatrix {
            family,
            weights,
            gap,
            rows,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.nrows()
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Spectral gap `p = 1 - ‖W - J‖₂²`, in `(0, 1]`.
    pub fn spectral_gap(&self) -> f64 {
        self.gap
    }

    /// Nonzero `(column, weight)` pairs of row `m`, in ascending column order.
    pub fn row(&self, m: usize) -> &[(usize, f64)] {
        &self.rows[m]
    }
}

pub(crate) fn sparse_rows(weights: &DMatrix<f64>) -> Vec<Vec<(usize, f64)>> {
    (0..weights.nrows())
        .map(|i| {
            (0..weights.ncols())
                .filter_map(|j| {
                    let w = weights[(i, j)];
                    (w != 0.0).then_some((j, w))
                })
                .collect()
        })
        .collect()
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidDimension("mixing matrix needs k >= 1".into()));
    }
    Ok(())
}

/// Circulant matrix whose row `i` puts `weight` on column `(i + offset) mod k`
/// for every listed offset.
fn circulant(k: usize, offsets: &[usize], weight: f64) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(k, k);
    for i in 0..k {
        for &off in offsets {
            w[(i, (i + off) % k)] += weight;
        }
    }
    w
}

/// Ring with self-loops: weight 1/3 on offsets −1, 0, +1.
pub fn build_ring(k: usize) -> Result<MixingMatrix> {
    check_k(k)?;
    let weights = match k {
        1 | 2 => DMatrix::from_element(k, k, 1.0 / k as f64),
        _ => circulant(k, &[k - 1, 0, 1], 1.0 / 3.0),
    };
    MixingMatrix::from_weights(Family::Ring, weights)
}

pub fn build_complete(k: usize) -> Result<MixingMatrix> {
    check_k(k)?;
    MixingMatrix::from_weights(
        Family::Complete,
        DMatrix::from_element(k, k, 1.0 / k as f64),
    )
}

/// Static exponential graph: node `i` listens to `i + 2^j (mod k)` for
/// `j < ⌈log₂ k⌉`, plus itself.
pub fn build_exponential(k: usize) -> Result<MixingMatrix> {
    check_k(k)?;
    let hops = ceil_log2(k);
    let mut offsets = vec![0];
    offsets.extend((0..hops).map(|j| (1usize << j) % k));
    let weights = circulant(k, &offsets, 1.0 / (hops as f64 + 1.0));
    MixingMatrix::from_weights(Family::Exponential, weights)
}

/// √k × √k wrap-around grid; every node averages itself and its four grid
/// neighbours with weight 1/5 each (coinciding neighbours merge).
pub fn build_torus(k: usize) -> Result<MixingMatrix> {
    check_k(k)?;
    let side = exact_sqrt(k).ok_or(Error::UnsupportedDimension {
        family: "torus",
        k,
        reason: "k must be a perfect square",
    })?;
    let mut w = DMatrix::zeros(k, k);
    let idx = |r: usize, c: usize| (r % side) * side + (c % side);
    for r in 0..side {
        for c in 0..side {
            let me = idx(r, c);
            for other in [
                me,
                idx(r + 1, c),
                idx(r + side - 1, c),
                idx(r, c + 1),
                idx(r, c + side - 1),
            ] {
                w[(me, other)] += 0.2;
            }
        }
    }
    MixingMatrix::from_weights(Family::Torus, w)
}

pub(crate) fn ceil_log2(k: usize) -> u32 {
    if k <= 1 {
        0
    } else {
        usize::BITS - (k - 1).leading_zeros()
    }
}

fn exact_sqrt(k: usize) -> Option<usize> {
    let r = (k as f64).sqrt().round() as usize;
    (r * r == k).then_some(r)
}

/// Checks row and column sums against 1 and nonnegativity.
pub fn is_doubly_stochastic(w: &DMatrix<f64>, tol: f64) -> bool {
    if !w.is_square() || w.iter().any(|&x| x.is_nan() || x < 0.0) {
        return false;
    }
    let rows_ok = w.row_iter().all(|r| (r.sum() - 1.0).abs() <= tol);
    let cols_ok = w.column_iter().all(|c| (c.sum() - 1.0).abs() <= tol);
    rows_ok && cols_ok
}

/// Spectral gap `1 − s²` where `s` is the largest singular value of
/// `W − (1/k)·𝟙𝟙ᵀ`. Equals `1 − max{|λ₂|, |λ_k|}²` for symmetric `W`.
pub fn spectral_gap(weights: &DMatrix<f64>) -> Result<f64> {
    let k = weights.nrows();
    if k == 0 || !weights.is_square() {
        return Err(Error::InvalidDimension(format!(
            "expected a nonempty square matrix, got {}x{}",
            weights.nrows(),
            weights.ncols()
        )));
    }
    if !is_doubly_stochastic(weights, STOCHASTIC_TOL) {
        return Err(Error::ViolatesAssumption(
            "matrix is not doubly stochastic".into(),
        ));
    }
    if k == 1 {
        return Ok(1.0);
    }
    let centered = weights.map(|x| x - 1.0 / k as f64);
    let gram = centered.transpose() * &centered;
    let s2 = gram
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v));
    let gap = 1.0 - s2;
    if gap.is_nan() || gap <= GAP_FLOOR {
        return Err(Error::ViolatesAssumption(format!(
            "spectral gap {gap:e} is not positive (disconnected or periodic topology)"
        )));
    }
    Ok(gap.min(1.0))
}

/// Ring spectral gap from the circulant eigenvalues `(1 + 2cos(2πj/k)) / 3`.
/// Usable for `k` far beyond what dense decomposition handles.
pub fn ring_spectral_gap_closed_form(k: usize) -> Result<f64> {
    check_k(k)?;
    if k <= 3 {
        return Ok(1.0);
    }
    let lam = (1..k)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            ((1.0 + 2.0 * theta.cos()) / 3.0).abs()
        })
        .fold(0.0_f64, f64::max);
    Ok(1.0 - lam * lam)
}
