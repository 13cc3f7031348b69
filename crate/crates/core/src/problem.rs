//! Synthetic heterogeneous quadratic: node `i ∈ 1..=n` holds
//! `f_i(x) = ½‖(i/√n)(x − b_i)‖²` with `b_i ~ N(0, (ζ²/i²) I_d)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    n: usize,
    d: usize,
    zeta2: f64,
    // Row-major n × d; row i-1 is b_i.
    targets: Vec<f64>,
    optimum: Vec<f64>,
    mean_curvature: f64,
}

/// Additive Gaussian gradient noise with `E‖ε‖² = σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma2: f64,
}

impl NoiseModel {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !sigma2.is_finite() || sigma2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma2 must be finite and >= 0, got {sigma2}"
            )));
        }
        Ok(NoiseModel { sigma2 })
    }

    pub fn noiseless() -> Self {
        NoiseModel { sigma2: 0.0 }
    }

    /// Adds one noise vector to `out`, consuming `out.len()` normal draws.
    /// Zero variance consumes nothing.
    pub fn perturb<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        if self.sigma2 == 0.0 {
            return;
        }
        let std = (self.sigma2 / out.len() as f64).sqrt();
        for v in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += std * z;
        }
    }
}

impl QuadraticProblem {
    /// Samples the targets `b_1, …, b_n` from `rng`, node by node and
    /// coordinate by coordinate.
    pub fn generate<R: Rng + ?Sized>(n: usize, d: usize, zeta2: f64, rng: &mut R) -> Result<Self> {
        if !zeta2.is_finite() || zeta2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "zeta2 must be finite and >= 0, got {zeta2}"
            )));
        }
        let mut targets = vec![0.0; n * d];
        if zeta2 > 0.0 {
            for i in 1..=n {
                let std = zeta2.sqrt() / i as f64;
                for v in &mut targets[(i - 1) * d..i * d] {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = std * z;
                }
            }
        }
        Self::from_targets(n, d, zeta2, targets)
    }

    /// Builds a problem from explicit targets (row-major, `n × d`).
    pub fn from_targets(n: usize, d: usize, zeta2: f64, targets: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter(format!(
                "need n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        if targets.len() != n * d {
            return Err(Error::InvalidShape(format!(
                "expected {} target entries, got {}",
                n * d,
                targets.len()
            )));
        }
        // x★ = Σ i² b_i / Σ i²
        let weight_sum: f64 = (1..=n).map(|i| (i * i) as f64).sum();
        let mut optimum = vec![0.0; d];
        for i in 1..=n {
            let w = (i * i) as f64;
            for (o, b) in optimum.iter_mut().zip(&targets[(i - 1) * d..i * d]) {
                *o += w * b;
            }
        }
        optimum.iter_mut().for_each(|o| *o /= weight_sum);
        let mean_curvature = weight_sum / (n * n) as f64;
        Ok(QuadraticProblem {
            n,
            d,
            zeta2,
            targets,
            optimum,
            mean_curvature,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn zeta2(&self) -> f64 {
        self.zeta2
    }

    /// Smoothness constant `L = max_i i²/n = n`.
    pub fn smoothness(&self) -> f64 {
        self.n as f64
    }

    /// Curvature `i²/n` of node `i`.
    pub fn curvature(&self, i: usize) -> f64 {
        (i * i) as f64 / self.n as f64
    }

    /// Curvature of the global objective, `(1/n) Σ i²/n`.
    pub fn mean_curvature(&self) -> f64 {
        self.mean_curvature
    }

    pub fn target(&self, i: usize) -> Result<&[f64]> {
        self.check_node(i)?;
        Ok(&self.targets[(i - 1) * self.d..i * self.d])
    }

    /// Closed-form minimiser `x★ = Σ i² b_i / Σ i²`.
    pub fn optimum(&self) -> &[f64] {
        &self.optimum
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            return Err(Error::InvalidNode {
                index: i,
                n: self.n,
            });
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::InvalidShape(format!(
                "expected dimension {}, got {}",
                self.d,
                x.len()
            )));
        }
        Ok(())
    }

    pub fn local_loss(&self, i: usize, x: &[f64]) -> Result<f64> {
        let b = self.target(i)?;
        self.check_dim(x)?;
        let sq: f64 = x.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(0.5 * self.curvature(i) * sq)
    }

    pub fn loss(&self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for i in 1..=self.n {
            total += self.local_loss(i, x)?;
        }
        Ok(total / self.n as f64)
    }

    /// `f(x) − f★`; exactly `½ H̄ ‖x − x★‖²` for this family.
    pub fn suboptimality(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(0.5 * self.mean_curvature * dist_sq(x, &self.optimum))
    }

    /// `∇f_i(x) = (i²/n)(x − b_i)`.
    pub fn local_gradient(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; self.d];
        self.gradient_into(i, x, &mut out)?;
        Ok(out)
    }

    pub(crate) fn gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]) -> Result<()> {
        let b = self.target(i)?;
        let h = self.curvature(i);
        for ((o, xv), bv) in out.iter_mut().zip(x).zip(b) {
            *o = h * (xv - bv);
        }
        Ok(())
    }

    /// `∇f_i(x) + ε` with `ε` drawn from `rng`.
    pub fn stochastic_gradient<R: Rng + ?Sized>(
        &self,
        noise: &NoiseModel,
        i: usize,
        x: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; self.d];
        self.stochastic_gradient_into(noise, i, x, rng, &mut out)?;
        Ok(out)
    }

    pub(crate) fn stochastic_gradient_into<R: Rng + ?Sized>(
        &self,
        noise: &NoiseModel,
        i: usize,
        x: &[f64],
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<()> {
        self.gradient_into(i, x, out)?;
        noise.perturb(rng, out);
        Ok(())
    }

    /// `∇f(x) = H̄ (x − x★)`.
    pub fn full_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(x.iter()
            .zip(&self.optimum)
            .map(|(a, s)| self.mean_curvature * (a - s))
            .collect())
    }

    pub(crate) fn full_gradient_norm_sq(&self, x: &[f64]) -> f64 {
        self.mean_curvature * self.mean_curvature * dist_sq(x, &self.optimum)
    }

    /// `(1/n) Σ ‖∇f_i(x) − ∇f(x)‖²`.
    pub fn heterogeneity_at(&self, x: &[f64]) -> Result<f64> {
        let full = self.full_gradient(x)?;
        let mut local = vec![0.0; self.d];
        let mut total = 0.0;
        for i in 1..=self.n {
            self.gradient_into(i, x, &mut local)?;
            total += dist_sq(&local, &full);
        }
        Ok(total / self.n as f64)
    }
}

/// Samples a problem instance; see [`QuadraticProblem::generate`].
pub fn make_quadratic<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    zeta2: f64,
    rng: &mut R,
) -> Result<QuadraticProblem> {
    QuadraticProblem::generate(n, d, zeta2, rng)
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::StreamPlan;

    fn central_diff(p: &QuadraticProblem, i: usize, x: &[f64]) -> Vec<f64> {
        let h = 1e-5;
        (0..x.len())
            .map(|c| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[c] += h;
                xm[c] -= h;
                (p.local_loss(i, &xp).unwrap() - p.local_loss(i, &xm).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn zero_heterogeneity_gives_zero_targets() {
        let p = QuadraticProblem::generate(10, 4, 0.0, &mut StreamPlan::new(1).problem()).unwrap();
        assert!(p.targets.iter().all(|&b| b == 0.0));
        assert!(p.optimum().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = QuadraticProblem::generate(20, 5, 3.0, &mut StreamPlan::new(9).problem()).unwrap();
        let b = QuadraticProblem::generate(20, 5, 3.0, &mut StreamPlan::new(9).problem()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_zeta_rejected() {
        let r = QuadraticProblem::generate(2, 2, -1.0, &mut StreamPlan::new(1).problem());
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
        assert!(NoiseModel::new(-0.5).is_err());
    }

    #[test]
    fn target_variance_scales_with_index() {
        // E[i²‖b_i‖²/d] = ζ²
        let (n, d, zeta2) = (100, 50, 100.0);
        let p =
            QuadraticProblem::generate(n, d, zeta2, &mut StreamPlan::new(2024).problem()).unwrap();
        let mean: f64 = (1..=n)
            .map(|i| {
                let b = p.target(i).unwrap();
                (i * i) as f64 * b.iter().map(|v| v * v).sum::<f64>() / d as f64
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - zeta2).abs() < 0.2 * zeta2, "mean {mean}");
    }

    #[test]
    fn local_gradient_cases() {
        let p = QuadraticProblem::from_targets(4, 1, 0.0, vec![0.0, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(p.local_gradient(2, &[1.5]).unwrap(), vec![1.0]);
        assert_eq!(p.local_gradient(2, &[0.5]).unwrap(), vec![0.0]);
        assert!(matches!(
            p.local_gradient(0, &[0.0]),
            Err(Error::InvalidNode { .. })
        ));
        assert!(matches!(
            p.local_gradient(5, &[0.0]),
            Err(Error::InvalidNode { .. })
        ));
        assert!(matches!(
            p.local_gradient(1, &[0.0, 1.0]),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = QuadraticProblem::generate(7, 3, 5.0, &mut StreamPlan::new(5).problem()).unwrap();
        let x = [0.3, -1.2, 2.5];
        for i in 1..=7 {
            let g = p.local_gradient(i, &x).unwrap();
            let fd = central_diff(&p, i, &x);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn optimum_closed_forms() {
        let c = [1.5, -2.0];
        let p = QuadraticProblem::from_targets(3, 2, 1.0, c.repeat(3)).unwrap();
        for (a, b) in p.optimum().iter().zip(&c) {
            assert!((a - b).abs() < 1e-15);
        }
        let p = QuadraticProblem::from_targets(2, 1, 1.0, vec![0.7, -0.4]).unwrap();
        assert!((p.optimum()[0] - (0.7 + 4.0 * -0.4) / 5.0).abs() < 1e-15);
    }

    #[test]
    fn heterogeneity_small_case() {
        // n=2: ∇f₁(0) = ½(0 − 0) = 0, ∇f₂(0) = 2(0 − 1) = −2, ∇f = −1.
        let p = QuadraticProblem::from_targets(2, 1, 1.0, vec![0.0, 1.0]).unwrap();
        let direct = {
            let g1 = 0.5 * (0.0 - 0.0);
            let g2 = 2.0 * (0.0 - 1.0);
            let mean = (g1 + g2) / 2.0;
            ((g1 - mean) * (g1 - mean) + (g2 - mean) * (g2 - mean)) / 2.0
        };
        assert!((p.heterogeneity_at(&[0.0]).unwrap() - direct).abs() < 1e-15);
        assert_eq!(direct, 1.0);

        let same = QuadraticProblem::from_targets(3, 2, 0.0, [0.4, 0.1].repeat(3)).unwrap();
        assert!(same.heterogeneity_at(&[0.4, 0.1]).unwrap().abs() < 1e-24);
    }

    #[test]
    fn noise_free_gradient_is_exact() {
        let p = QuadraticProblem::generate(5, 3, 2.0, &mut StreamPlan::new(3).problem()).unwrap();
        let x = [1.0, 2.0, 3.0];
        let mut rng = StreamPlan::new(3).node_noise(2);
        let g = p
            .stochastic_gradient(&NoiseModel::noiseless(), 2, &x, &mut rng)
            .unwrap();
        assert_eq!(g, p.local_gradient(2, &x).unwrap());
    }

    #[test]
    fn noise_second_moment() {
        let d = 10;
        let noise = NoiseModel::new(4.0).unwrap();
        let mut rng = StreamPlan::new(11).node_noise(1);
        let draws = 100_000;
        let mut buf = vec![0.0; d];
        let mut total = 0.0;
        for _ in 0..draws {
            buf.iter_mut().for_each(|v| *v = 0.0);
            noise.perturb(&mut rng, &mut buf);
            total += buf.iter().map(|v| v * v).sum::<f64>();
        }
        let mean = total / draws as f64;
        assert!((mean - 4.0).abs() < 0.03 * 4.0, "mean {mean}");
    }

    #[test]
    fn stochastic_gradient_replays() {
        let p = QuadraticProblem::generate(5, 3, 2.0, &mut StreamPlan::new(3).problem()).unwrap();
        let noise = NoiseModel::new(1.0).unwrap();
        let x = [0.1, 0.2, 0.3];
        let a = p
            .stochastic_gradient(&noise, 4, &x, &mut StreamPlan::new(8).node_noise(4))
            .unwrap();
        let b = p
            .stochastic_gradient(&noise, 4, &x, &mut StreamPlan::new(8).node_noise(4))
            .unwrap();
        assert_eq!(a, b);
    }
}
