//! Deterministic simulator for consensus-based decentralized SGD in which only
//! `k` of the `n` nodes are active per round and the active parameters
//! "teleport" between uniformly sampled hosts.
//!
//! The crate is organised bottom-up:
//!
//! - [`topology`] builds doubly stochastic mixing matrices and their spectral gap.
//! - [`problem`] holds the synthetic heterogeneous quadratic and its gradient oracles.
//! - [`streams`] derives every random stream from one master seed.
//! - [`algorithms`] runs DSGD, teleportation (two schedules) and client sampling.
//! - [`tuning`] picks the number of active nodes.
//! - [`metrics`] computes trace metrics and convergence-rate evaluators.
//! - [`harness`] drives experiments and writes CSV.
//!
//! ```
//! use teleportation::prelude::*;
//!
//! let plan = StreamPlan::new(7);
//! let problem = QuadraticProblem::generate(16, 4, 1.0, &mut plan.problem()).unwrap();
//! let setup = RunSetup::new(&problem, NoiseModel::new(1.0).unwrap(), 0.01, 200, plan)
//!     .with_init(vec![1.0; 4]);
//! let trace = run_teleportation(&setup, 4, &build_ring(4).unwrap()).unwrap();
//! assert_eq!(trace.records().len(), 201);
//! assert!(trace.final_error() < trace.records()[0].error);
//! ```

pub mod algorithms;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod problem;
pub mod streams;
pub mod topology;
pub mod tuning;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::algorithms::{
        gossip_step, run_client_sampling, run_dsgd, run_teleportation, run_teleportation_overlap,
        sample_active_set, Algorithm, RunSetup, RunTrace,
    };
    pub use crate::metrics::{consensus_error, error_to_optimum, iterations_to_target};
    pub use crate::problem::{NoiseModel, QuadraticProblem};
    pub use crate::streams::StreamPlan;
    pub use crate::topology::{
        build_complete, build_exponential, build_ring, build_torus, spectral_gap, Family,
        MixingMatrix,
    };
    pub use crate::tuning::{candidate_ks, search_k, Criterion};
}
