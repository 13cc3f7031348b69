//! Choosing the number of active nodes: closed-form rules for ring and
//! exponential active topologies, and the doubling search that runs
//! `k ∈ {1, 2, 4, …}` side by side with the full `k = n` run.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run_teleportation, RunSetup, RunTrace};
use crate::error::{Error, Result};
use crate::topology::Family;

/// Problem constants entering the convergence bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub t: usize,
    pub sigma2: f64,
    pub zeta2: f64,
    /// Smoothness constant.
    pub l: f64,
    /// Initial suboptimality `f(x̄⁽⁰⁾) − f★`.
    pub r0: f64,
    pub n: usize,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.sigma2, self.zeta2, self.l, self.r0]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.sigma2 < 0.0 || self.zeta2 < 0.0 || self.r0 < 0.0 || self.l <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "invalid bound inputs {self:?}"
            )));
        }
        if self.t == 0 || self.n == 0 {
            return Err(Error::InvalidParameter("T and n must be positive".into()));
        }
        Ok(())
    }

    /// `T(σ² + ζ²) / (L r₀)`, taken as 0 when the noise vanishes or `r₀ = 0`.
    pub fn noise_ratio(&self) -> f64 {
        let noise = self.sigma2 + self.zeta2;
        if noise == 0.0 || self.r0 == 0.0 {
            return 0.0;
        }
        self.t as f64 * noise / (self.l * self.r0)
    }
}

/// Smallest integer `m ≥ 0` with `m^power ≥ x`, robust to `powf` rounding.
fn ceil_root(x: f64, power: i32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return f64::INFINITY;
    }
    let mut m = x.powf(1.0 / power as f64).ceil();
    while m > 1.0 && (m - 1.0).powi(power) >= x {
        m -= 1.0;
    }
    while m.powi(power) < x {
        m += 1.0;
    }
    m
}

fn clamp_k(candidate: f64, n: usize) -> usize {
    candidate.min(n as f64).max(1.0) as usize
}

/// `k = max{1, min{⌈ratio^{1/7}⌉, n}}` for a ring among the active nodes.
pub fn theoretical_k_ring(inputs: &BoundInputs) -> usize {
    clamp_k(ceil_root(inputs.noise_ratio(), 7), inputs.n)
}

/// `k = max{1, min{⌈ratio^{1/3}⌉, ⌈ratio⌉, n}}` for an exponential graph.
pub fn theoretical_k_exp(inputs: &BoundInputs) -> usize {
    let ratio = inputs.noise_ratio();
    clamp_k(ceil_root(ratio, 3).min(ratio.ceil()), inputs.n)
}

/// `{2⁰, 2¹, …, 2^{⌊log₂(n+1)⌋−1}}`; these sum to at most `n`.
pub fn power_of_two_candidates(n: usize) -> Vec<usize> {
    let exponents = (n + 1).ilog2();
    (0..exponents).map(|e| 1usize << e).collect()
}

/// Power-of-two candidates plus `n`, ascending and deduplicated.
pub fn candidate_ks(n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let mut ks = power_of_two_candidates(n);
    if ks.last() != Some(&n) {
        ks.push(n);
    }
    Ok(ks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Smallest `(1/(T+1)) Σ_t ‖∇f(x̄_active)‖²`.
    #[default]
    MinMeanGradNorm,
    /// Smallest error at the last iteration.
    MinFinalError,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::MinMeanGradNorm => "min-mean-grad-norm",
            Criterion::MinFinalError => "min-final-error",
        }
    }

    /// Score of a finished run; diverged runs score `+∞`.
    pub fn score(self, trace: &RunTrace) -> f64 {
        if trace.diverged() {
            return f64::INFINITY;
        }
        let v = match self {
            Criterion::MinMeanGradNorm => trace.mean_grad_norm_sq(),
            Criterion::MinFinalError => trace.final_error(),
        };
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "min-mean-grad-norm" | "theory" => Ok(Criterion::MinMeanGradNorm),
            "min-final-error" | "practice" => Ok(Criterion::MinFinalError),
            other => Err(Error::Config(format!("unknown criterion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchBranch {
    pub k: usize,
    pub trace: RunTrace,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub candidates: Vec<usize>,
    pub branches: Vec<SearchBranch>,
    pub selected_k: usize,
    pub criterion: Criterion,
    pub criterion_value: f64,
}

impl SearchOutcome {
    pub fn selected(&self) -> &SearchBranch {
        self.branches
            .iter()
            .find(|b| b.k == self.selected_k)
            .expect("selected k is a branch")
    }

    /// Gradient evaluations per iteration spent by the power-of-two branches
    /// when they run side by side.
    pub fn parallel_gradients_per_iteration(&self) -> f64 {
        let n = self.candidates.last().copied().unwrap_or(0);
        let powers = power_of_two_candidates(n);
        self.branches
            .iter()
            .filter(|b| powers.contains(&b.k))
            .map(|b| {
                let steps = b.trace.records().len().saturating_sub(1).max(1);
                b.trace.gradient_evaluations() as f64 / steps as f64
            })
            .sum()
    }
}

/// Runs teleportation for every candidate `k` with the active nodes connected
/// by `family`, then keeps the best branch under `criterion`. Ties go to the
/// smaller `k`. Every branch shares `setup` (step size, horizon, seed) and runs
/// the full horizon regardless of `setup.stop_at`.
pub fn search_k(
    setup: &RunSetup<'_>,
    family: Family,
    criterion: Criterion,
) -> Result<SearchOutcome> {
    let candidates = candidate_ks(setup.problem.n())?;
    let branch_setup = setup.clone().stop_at(None);
    let branches: Vec<SearchBranch> = candidates
        .par_iter()
        .map(|&k| {
            let w = family.build(k)?;
            let trace = run_teleportation(&branch_setup, k, &w)?;
            let score = criterion.score(&trace);
            Ok(SearchBranch { k, trace, score })
        })
        .collect::<Result<_>>()?;

    let mut best = &branches[0];
    for b in &branches[1..] {
        if b.score < best.score {
            best = b;
        }
    }
    let (selected_k, criterion_value) = (best.k, best.score);
    Ok(SearchOutcome {
        candidates,
        branches,
        selected_k,
        criterion,
        criterion_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_ratio(ratio: f64, n: usize) -> BoundInputs {
        // T = 1, L = 1, σ² = ratio·r0 with r0 = 1.
        BoundInputs {
            t: 1,
            sigma2: ratio,
            zeta2: 0.0,
            l: 1.0,
            r0: 1.0,
            n,
        }
    }

    #[test]
    fn candidates_examples() {
        assert_eq!(candidate_ks(100).unwrap(), vec![1, 2, 4, 8, 16, 32, 100]);
        assert_eq!(power_of_two_candidates(100).iter().sum::<usize>(), 63);
        assert_eq!(candidate_ks(1).unwrap(), vec![1]);
        assert_eq!(candidate_ks(7).unwrap(), vec![1, 2, 4, 7]);
        assert_eq!(candidate_ks(3).unwrap(), vec![1, 2, 3]);
        assert!(candidate_ks(0).is_err());
    }

    #[test]
    fn ring_rule() {
        assert_eq!(theoretical_k_ring(&with_ratio(128.0, 100)), 2);
        assert_eq!(theoretical_k_ring(&with_ratio(129.0, 100)), 3);
        assert_eq!(theoretical_k_ring(&with_ratio(0.0, 100)), 1);
        assert_eq!(theoretical_k_ring(&with_ratio(1e14, 10)), 10);
    }

    #[test]
    fn exp_rule() {
        assert_eq!(theoretical_k_exp(&with_ratio(8.0, 100)), 2);
        assert_eq!(theoretical_k_exp(&with_ratio(0.5, 100)), 1);
        assert_eq!(theoretical_k_exp(&with_ratio(0.0, 100)), 1);
        assert_eq!(theoretical_k_exp(&with_ratio(1e14, 10)), 10);
    }

    #[test]
    fn zero_r0_maps_to_one() {
        let inputs = BoundInputs {
            t: 1000,
            sigma2: 5.0,
            zeta2: 1.0,
            l: 2.0,
            r0: 0.0,
            n: 50,
        };
        assert_eq!(theoretical_k_ring(&inputs), 1);
        assert_eq!(theoretical_k_exp(&inputs), 1);
    }

    #[test]
    fn ceil_root_exact_powers() {
        for m in 1..60i32 {
            let x = (m as f64).powi(7);
            assert_eq!(ceil_root(x, 7), m as f64);
            assert_eq!(ceil_root(x + 1.0, 7), m as f64 + 1.0);
            assert_eq!(ceil_root((m as f64).powi(3), 3), m as f64);
        }
    }

    #[test]
    fn criterion_parsing() {
        assert_eq!(
            "theory".parse::<Criterion>().unwrap(),
            Criterion::MinMeanGradNorm
        );
        assert_eq!(
            "min-final-error".parse::<Criterion>().unwrap(),
            Criterion::MinFinalError
        );
        assert!("best".parse::<Criterion>().is_err());
    }
}
