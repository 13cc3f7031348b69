//! Full-topology baselines: every node keeps its own parameter.

use nalgebra::DMatrix;

use super::assignment::sample_active_set;
use super::gossip::mix_into;
use super::{
    check_k, local_step, node_noise_streams, Algorithm, Recorder, RunMeta, RunSetup, RunTrace,
};
use crate::error::{Error, Result};
use crate::topology::MixingMatrix;

fn validate(setup: &RunSetup<'_>, w: &MixingMatrix) -> Result<()> {
    setup.validate()?;
    if w.k() != setup.problem.n() {
        return Err(Error::InvalidShape(format!(
            "mixing matrix is {0}x{0}, but the problem has {1} nodes",
            w.k(),
            setup.problem.n()
        )));
    }
    Ok(())
}

/// Decentralized SGD: `x_i ← Σ_j W_ij (x_j − η ∇F_j(x_j))` on all `n` nodes.
/// Column `i − 1` of the parameter matrix belongs to node `i`.
pub fn run_dsgd(setup: &RunSetup<'_>, w: &MixingMatrix) -> Result<RunTrace> {
    validate(setup, w)?;
    let problem = setup.problem;
    let (n, d) = (problem.n(), problem.d());
    let mut streams = node_noise_streams(&setup.plan, n);

    let mut x: Vec<f64> = setup.init.repeat(n);
    let mut y = vec![0.0; d * n];
    let mut grad = vec![0.0; d];
    let mut rec = Recorder::new(setup);

    if rec.record(0, &x) {
        for t in 0..setup.iterations {
            for node in 1..=n {
                let range = (node - 1) * d..node * d;
                local_step(
                    problem,
                    &setup.noise,
                    setup.eta,
                    node,
                    &x[range.clone()],
                    &mut streams[node - 1],
                    &mut grad,
                    &mut y[range],
                )?;
            }
            rec.gradient_evaluations += n as u64;
            mix_into(&y, d, |i| w.row(i), &mut x);
            if !rec.record(t + 1, &x) {
                break;
            }
        }
    }
    let meta = RunMeta {
        algorithm: Algorithm::Dsgd,
        topology: w.family(),
        n,
        k: n,
        eta: setup.eta,
        seed: setup.plan.seed(),
    };
    Ok(rec.finish(meta, DMatrix::from_vec(d, n, x)))
}

/// Effective mixing rows for one client-sampling round.
///
/// A sampled node keeps `W_ij` only for sampled neighbours `j` and moves the
/// weight of unsampled neighbours onto its self-loop; an unsampled node keeps
/// its parameter. `sampled` is indexed by node id − 1. For symmetric `W` the
/// result is doubly stochastic.
pub fn client_sampling_mixing(w: &MixingMatrix, sampled: &[bool]) -> Vec<Vec<(usize, f64)>> {
    (0..w.k())
        .map(|i| {
            if !sampled[i] {
                return vec![(i, 1.0)];
            }
            let lost: f64 = w
                .row(i)
                .iter()
                .filter(|&&(j, _)| !sampled[j])
                .map(|&(_, v)| v)
                .sum();
            let self_weight = w.weights()[(i, i)] + lost;
            let mut row: Vec<(usize, f64)> = w
                .row(i)
                .iter()
                .copied()
                .filter(|&(j, _)| j != i && sampled[j])
                .collect();
            let pos = row.partition_point(|&(j, _)| j < i);
            row.insert(pos, (i, self_weight));
            row
        })
        .collect()
}

/// Decentralized SGD with client sampling: each round `k` nodes are sampled,
/// take an SGD step, and gossip over the induced subgraph of the `n`-node
/// topology (see [`client_sampling_mixing`]).
///
/// Requires a symmetric mixing matrix so that the compensated matrix stays
/// doubly stochastic.
pub fn run_client_sampling(setup: &RunSetup<'_>, w: &MixingMatrix, k: usize) -> Result<RunTrace> {
    validate(setup, w)?;
    let problem = setup.problem;
    let (n, d) = (problem.n(), problem.d());
    check_k(k, n)?;
    if !w.family().is_symmetric() {
        return Err(Error::InvalidParameter(format!(
            "client sampling needs a symmetric mixing matrix, got {}",
            w.family()
        )));
    }
    let mut streams = node_noise_streams(&setup.plan, n);

    let mut x: Vec<f64> = setup.init.repeat(n);
    let mut y = vec![0.0; d * n];
    let mut grad = vec![0.0; d];
    let mut sampled = vec![false; n];
    let mut rec = Recorder::new(setup);

    if rec.record(0, &x) {
        for t in 0..setup.iterations {
            let active = sample_active_set(n, k, t as u64, &setup.plan)?;
            sampled.iter_mut().for_each(|s| *s = false);
            for &node in active.nodes() {
                sampled[node - 1] = true;
            }
            for node in 1..=n {
                let range = (node - 1) * d..node * d;
                if sampled[node - 1] {
                    local_step(
                        problem,
                        &setup.noise,
                        setup.eta,
                        node,
                        &x[range.clone()],
                        &mut streams[node - 1],
                        &mut grad,
                        &mut y[range],
                    )?;
                } else {
                    y[range.clone()].copy_from_slice(&x[range]);
                }
            }
            rec.gradient_evaluations += k as u64;
            let rows = client_sampling_mixing(w, &sampled);
            mix_into(&y, d, |i| &rows[i], &mut x);
            if !rec.record(t + 1, &x) {
                break;
            }
        }
    }
    let meta = RunMeta {
        algorithm: Algorithm::ClientSampling,
        topology: w.family(),
        n,
        k,
        eta: setup.eta,
        seed: setup.plan.seed(),
    };
    Ok(rec.finish(meta, DMatrix::from_vec(d, n, x)))
}
