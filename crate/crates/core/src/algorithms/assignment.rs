use rand::Rng;

use crate::error::{Error, Result};
use crate::streams::StreamPlan;

/// One round's bijection between tokens `0..k` and the hosting nodes.
/// Node ids are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveAssignment {
    pub round: u64,
    node_of_token: Vec<usize>,
}

impl ActiveAssignment {
    pub fn k(&self) -> usize {
        self.node_of_token.len()
    }

    pub fn node_of_token(&self, token: usize) -> usize {
        self.node_of_token[token]
    }

    pub fn nodes(&self) -> &[usize] {
        &self.node_of_token
    }

    /// Token held by `node` this round, if the node is active.
    pub fn token_of_node(&self, node: usize) -> Option<usize> {
        self.node_of_token.iter().position(|&v| v == node)
    }

    /// Dense inverse map indexed by node id (index 0 unused).
    pub fn token_table(&self, n: usize) -> Vec<Option<usize>> {
        let mut table = vec![None; n + 1];
        for (m, &node) in self.node_of_token.iter().enumerate() {
            table[node] = Some(m);
        }
        table
    }
}

/// Samples round `round`'s `k` active nodes uniformly without replacement and
/// hands them tokens in uniformly random order.
///
/// The node set comes from a partial Fisher–Yates pass over `1..=n` on the
/// round's shared active-set stream; the token order is a full Fisher–Yates
/// shuffle of that set on the token-permutation stream.
pub fn sample_active_set(
    n: usize,
    k: usize,
    round: u64,
    plan: &StreamPlan,
) -> Result<ActiveAssignment> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={n}, got {k}"
        )));
    }
    let mut pool: Vec<usize> = (1..=n).collect();
    let mut rng = plan.active_set(round);
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);

    let mut rng = plan.token_permutation(round);
    for i in (1..k).rev() {
        let j = rng.random_range(0..=i);
        pool.swap(i, j);
    }
    Ok(ActiveAssignment {
        round,
        node_of_token: pool,
    })
}
