use super::runner::{grid_search_eta_pruned, run_algorithm, EtaRun};
use crate::algorithms::{Algorithm, RunSetup};
use crate::error::Result;
use crate::problem::{NoiseModel, QuadraticProblem};
use crate::streams::StreamPlan;
use crate::topology::Family;
use crate::tuning::{Criterion, SearchOutcome};

/// One (σ², ζ²) cell of the time-to-target comparison.
#[derive(Debug, Clone)]
pub struct CellSpec {
    pub n: usize,
    pub d: usize,
    pub sigma2: f64,
    pub zeta2: f64,
    pub seed: u64,
    pub init: f64,
    pub topology: Family,
    pub target: f64,
    /// Largest number of updates any run may take.
    pub max_iterations: usize,
    /// Horizon of the k-search branches.
    pub search_t: usize,
    pub criterion: Criterion,
    pub etas: Vec<f64>,
    /// DSGD runs stop after `dsgd_factor` times the teleportation count, which
    /// is enough to decide any comparison up to that ratio.
    pub dsgd_factor: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideOutcome {
    pub eta: f64,
    pub k: usize,
    pub iters_to_target: Option<usize>,
    pub final_error: f64,
    /// Updates the runs of this side were allowed.
    pub budget: usize,
}

impl SideOutcome {
    fn from_run(r: &EtaRun, budget: usize) -> Self {
        SideOutcome {
            eta: r.eta,
            k: r.k,
            iters_to_target: r.iters_to_target,
            final_error: r.trace.final_error(),
            budget,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub teleport: SideOutcome,
    pub dsgd: SideOutcome,
    /// The k-search at the teleportation step size.
    pub search: SearchOutcome,
    /// Selected k for every step size tried, in increasing step-size order.
    pub k_by_eta: Vec<(f64, usize)>,
}

/// Tunes the step size of teleportation (with k chosen by the search at each
/// step size) and of DSGD on the full topology, both by iterations to target.
pub fn time_to_target_cell(spec: &CellSpec) -> Result<CellOutcome> {
    let plan = StreamPlan::new(spec.seed);
    let problem = QuadraticProblem::generate(spec.n, spec.d, spec.zeta2, &mut plan.problem())?;
    let noise = NoiseModel::new(spec.sigma2)?;
    let init = vec![spec.init; spec.d];
    let setup = |eta: f64, cap: usize| {
        RunSetup::new(&problem, noise, eta, cap, plan)
            .with_init(init.clone())
            .stop_at(Some(spec.target))
    };

    let tele = grid_search_eta_pruned(&spec.etas, spec.max_iterations, |eta, cap| {
        run_algorithm(
            Algorithm::SearchK,
            spec.topology,
            None,
            &setup(eta, cap),
            spec.criterion,
            spec.search_t,
        )
    })?;
    let best = tele.best();
    let teleport = SideOutcome::from_run(best, spec.max_iterations);
    let k_by_eta = tele.runs.iter().map(|r| (r.eta, r.k)).collect();
    let search = best
        .search
        .clone()
        .expect("search-k runs carry their search");

    let dsgd_cap = match teleport.iters_to_target {
        Some(it) => spec
            .max_iterations
            .min(it.max(1).saturating_mul(spec.dsgd_factor)),
        None => spec.max_iterations,
    };
    let dsgd = grid_search_eta_pruned(&spec.etas, dsgd_cap, |eta, cap| {
        run_algorithm(
            Algorithm::Dsgd,
            spec.topology,
            None,
            &setup(eta, cap),
            spec.criterion,
            0,
        )
    })?;
    let dsgd = SideOutcome::from_run(dsgd.best(), dsgd_cap);
    Ok(CellOutcome {
        teleport,
        dsgd,
        search,
        k_by_eta,
    })
}
