//! Teleportation: `k` tokens hop between uniformly sampled hosts, take one
//! SGD step on their host's objective and gossip over a `k`-node topology.

use nalgebra::DMatrix;

use super::assignment::{sample_active_set, ActiveAssignment};
use super::gossip::mix_into;
use super::{
    check_k, local_step, node_noise_streams, Algorithm, Recorder, RunMeta, RunSetup, RunTrace,
};
use crate::error::{Error, Result};
use crate::topology::MixingMatrix;

fn validate(setup: &RunSetup<'_>, k: usize, w: &MixingMatrix) -> Result<()> {
    setup.validate()?;
    check_k(k, setup.problem.n())?;
    if w.k() != k {
        return Err(Error::InvalidShape(format!(
            "mixing matrix is {0}x{0}, expected {k}x{k}",
            w.k()
        )));
    }
    Ok(())
}

fn meta(setup: &RunSetup<'_>, algorithm: Algorithm, k: usize, w: &MixingMatrix) -> RunMeta {
    RunMeta {
        algorithm,
        topology: w.family(),
        n: setup.problem.n(),
        k,
        eta: setup.eta,
        seed: setup.plan.seed(),
    }
}

/// Token-indexed form: the `d × k` matrix `Z` evolves as
/// `Z ← (Z − η G) Wᵀ`, where column `m` of `G` is the stochastic gradient of
/// the node currently hosting token `m`. Handing a token to its next host is
/// implicit in keeping the column.
pub fn run_teleportation(setup: &RunSetup<'_>, k: usize, w: &MixingMatrix) -> Result<RunTrace> {
    validate(setup, k, w)?;
    let problem = setup.problem;
    let (n, d) = (problem.n(), problem.d());
    let mut streams = node_noise_streams(&setup.plan, n);

    let mut z: Vec<f64> = setup.init.repeat(k);
    let mut y = vec![0.0; d * k];
    let mut grad = vec![0.0; d];
    let mut rec = Recorder::new(setup);

    if rec.record(0, &z) {
        for t in 0..setup.iterations {
            let active = sample_active_set(n, k, t as u64, &setup.plan)?;
            for m in 0..k {
                let host = active.node_of_token(m);
                let range = m * d..(m + 1) * d;
                local_step(
                    problem,
                    &setup.noise,
                    setup.eta,
                    host,
                    &z[range.clone()],
                    &mut streams[host - 1],
                    &mut grad,
                    &mut y[range],
                )?;
            }
            rec.gradient_evaluations += k as u64;
            mix_into(&y, d, |m| w.row(m), &mut z);
            if !rec.record(t + 1, &z) {
                break;
            }
        }
    }
    let params = DMatrix::from_vec(d, k, z);
    Ok(rec.finish(meta(setup, Algorithm::Teleport, k, w), params))
}

/// Node-indexed form with communication overlap. The next round's active set
/// is drawn before gossip, and each next host assembles its parameter
/// directly from the current hosts' SGD outputs:
/// `x_i ← Σ_j W[token⁺(i), token(j)] y_j`. Inactive nodes hold nothing.
///
/// Produces exactly the same trace as [`run_teleportation`] for the same
/// inputs.
pub fn run_teleportation_overlap(
    setup: &RunSetup<'_>,
    k: usize,
    w: &MixingMatrix,
) -> Result<RunTrace> {
    validate(setup, k, w)?;
    let problem = setup.problem;
    let (n, d) = (problem.n(), problem.d());
    let mut streams = node_noise_streams(&setup.plan, n);

    // params[i] is Some only while node i is active.
    let mut params: Vec<Option<Vec<f64>>> = vec![None; n + 1];
    let mut outbox: Vec<Option<Vec<f64>>> = vec![None; n + 1];
    let mut current = sample_active_set(n, k, 0, &setup.plan)?;
    for &node in current.nodes() {
        params[node] = Some(setup.init.clone());
    }

    let mut grad = vec![0.0; d];
    let mut view = vec![0.0; d * k];
    let mut rec = Recorder::new(setup);

    gather(&current, &params, d, &mut view);
    if rec.record(0, &view) {
        for t in 0..setup.iterations {
            let next = sample_active_set(n, k, t as u64 + 1, &setup.plan)?;

            // Current hosts: local SGD step, result goes to the outbox.
            for node in 1..=n {
                let Some(x) = params[node].take() else {
                    continue;
                };
                let mut y = vec![0.0; d];
                local_step(
                    problem,
                    &setup.noise,
                    setup.eta,
                    node,
                    &x,
                    &mut streams[node - 1],
                    &mut grad,
                    &mut y,
                )?;
                outbox[node] = Some(y);
            }
            rec.gradient_evaluations += k as u64;

            // Next hosts: receive from the current hosts adjacent to their new token.
            let next_tokens = next.token_table(n);
            for node in 1..=n {
                let Some(m) = next_tokens[node] else { continue };
                let mut x = vec![0.0; d];
                for &(l, weight) in w.row(m) {
                    let sender = current.node_of_token(l);
                    let y = outbox[sender]
                        .as_ref()
                        .expect("sender is active this round");
                    for (o, s) in x.iter_mut().zip(y) {
                        *o += weight * s;
                    }
                }
                params[node] = Some(x);
            }
            outbox.iter_mut().for_each(|slot| *slot = None);
            current = next;

            gather(&current, &params, d, &mut view);
            if !rec.record(t + 1, &view) {
                break;
            }
        }
    }
    let params = DMatrix::from_vec(d, k, view);
    Ok(rec.finish(meta(setup, Algorithm::TeleportOverlap, k, w), params))
}

/// Lays the active parameters out in token order.
fn gather(active: &ActiveAssignment, params: &[Option<Vec<f64>>], d: usize, out: &mut [f64]) {
    for (m, col) in out.chunks_exact_mut(d).enumerate() {
        let x = params[active.node_of_token(m)]
            .as_ref()
            .expect("active node holds a parameter");
        col.copy_from_slice(x);
    }
}
