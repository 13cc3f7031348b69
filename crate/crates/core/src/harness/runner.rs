use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{write_summary, write_trace, SummaryRow};
use crate::algorithms::{
    run_client_sampling, run_dsgd, run_teleportation, run_teleportation_overlap, Algorithm,
    RunSetup, RunStatus, RunTrace,
};
use crate::error::{Error, Result};
use crate::metrics::iterations_to_target;
use crate::problem::{NoiseModel, QuadraticProblem};
use crate::streams::StreamPlan;
use crate::topology::Family;
use crate::tuning::{search_k, Criterion, SearchOutcome};

/// One finished run at a fixed step size.
#[derive(Debug, Clone)]
pub struct EtaRun {
    pub eta: f64,
    pub k: usize,
    pub trace: RunTrace,
    pub iters_to_target: Option<usize>,
    /// Present for `search-k` runs.
    pub search: Option<SearchOutcome>,
}

impl EtaRun {
    pub fn new(trace: RunTrace, target: Option<f64>, search: Option<SearchOutcome>) -> Self {
        let iters_to_target = target.and_then(|t| iterations_to_target(&trace, t));
        EtaRun {
            eta: trace.meta.eta,
            k: trace.meta.k,
            trace,
            iters_to_target,
            search,
        }
    }

    fn usable(&self) -> bool {
        !self.trace.diverged() && self.trace.final_error().is_finite()
    }
}

/// Runs one algorithm. `k` is ignored by DSGD; `search-k` selects it with
/// branches of `search_t` iterations, then runs the winner for the full
/// horizon of `setup`.
pub fn run_algorithm(
    algorithm: Algorithm,
    topology: Family,
    k: Option<usize>,
    setup: &RunSetup<'_>,
    criterion: Criterion,
    search_t: usize,
) -> Result<EtaRun> {
    let n = setup.problem.n();
    let need_k = || k.ok_or_else(|| Error::Config(format!("algorithm {algorithm} requires k")));
    let (trace, search) = match algorithm {
        Algorithm::Dsgd => (run_dsgd(setup, &topology.build(n)?)?, None),
        Algorithm::ClientSampling => (
            run_client_sampling(setup, &topology.build(n)?, need_k()?)?,
            None,
        ),
        Algorithm::Teleport => {
            let k = need_k()?;
            (run_teleportation(setup, k, &topology.build(k)?)?, None)
        }
        Algorithm::TeleportOverlap => {
            let k = need_k()?;
            (
                run_teleportation_overlap(setup, k, &topology.build(k)?)?,
                None,
            )
        }
        Algorithm::SearchK => {
            let mut search_setup = setup.clone();
            search_setup.iterations = search_t;
            let outcome = search_k(&search_setup, topology, criterion)?;
            let k = outcome.selected_k;
            let trace = if search_t == setup.iterations && setup.stop_at.is_none() {
                outcome.selected().trace.clone()
            } else {
                run_teleportation(setup, k, &topology.build(k)?)?
            };
            (trace, Some(outcome))
        }
    };
    let mut trace = trace;
    trace.meta.algorithm = algorithm;
    Ok(EtaRun::new(trace, setup.stop_at, search))
}

/// Index of the best run: fewest iterations to target (ties to the smaller
/// step size), then the smallest final error among runs that never reached
/// it. Diverged runs are never selected.
pub fn rank_runs(runs: &[EtaRun]) -> Option<usize> {
    let key = |r: &EtaRun| -> (u8, f64, f64) {
        match r.iters_to_target {
            Some(it) => (0, it as f64, r.eta),
            None => (1, r.trace.final_error(), r.eta),
        }
    };
    runs.iter()
        .enumerate()
        .filter(|(_, r)| r.usable())
        .min_by(|(_, a), (_, b)| key(a).partial_cmp(&key(b)).expect("finite keys"))
        .map(|(i, _)| i)
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub runs: Vec<EtaRun>,
    pub best: usize,
}

impl GridOutcome {
    pub fn best(&self) -> &EtaRun {
        &self.runs[self.best]
    }
}

/// Evaluates every step size in parallel and keeps the best under
/// [`rank_runs`]. Fails with [`Error::NoFeasibleStepSize`] when all diverge.
pub fn grid_search_eta<F>(etas: &[f64], run: F) -> Result<GridOutcome>
where
    F: Fn(f64) -> Result<EtaRun> + Sync,
{
    let runs: Vec<EtaRun> = etas
        .par_iter()
        .map(|&eta| run(eta))
        .collect::<Result<_>>()?;
    let best = rank_runs(&runs).ok_or(Error::NoFeasibleStepSize)?;
    Ok(GridOutcome { runs, best })
}

/// Same selection as [`grid_search_eta`] for runs that stop at the target.
/// Step sizes are tried in increasing order and each run is capped at the
/// best iteration count found so far, which cannot change the winner.
/// `run(eta, cap)` must stop at the target and perform at most `cap` updates.
pub fn grid_search_eta_pruned<F>(
    etas: &[f64],
    max_iterations: usize,
    mut run: F,
) -> Result<GridOutcome>
where
    F: FnMut(f64, usize) -> Result<EtaRun>,
{
    let mut sorted = etas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut cap = max_iterations;
    let mut runs = Vec::with_capacity(sorted.len());
    for eta in sorted {
        let r = run(eta, cap)?;
        if let Some(it) = r.iters_to_target {
            cap = cap.min(it);
        }
        runs.push(r);
    }
    let best = rank_runs(&runs).ok_or(Error::NoFeasibleStepSize)?;
    Ok(GridOutcome { runs, best })
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<SummaryRow>,
    /// Best step size per seed, in seed order.
    pub best: Vec<(u64, f64, usize)>,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    config: &'a ExperimentConfig,
    etas: Vec<f64>,
    runs: Vec<MetaRun>,
    best: Vec<MetaBest>,
}

#[derive(Serialize)]
struct MetaRun {
    seed: u64,
    eta: f64,
    k: usize,
    status: String,
    records: usize,
    gradient_evaluations: u64,
}

#[derive(Serialize)]
struct MetaBest {
    seed: u64,
    eta: f64,
    k: usize,
}

fn fmt_status(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Completed => "completed",
        RunStatus::ReachedTarget => "reached-target",
        RunStatus::Diverged => "diverged",
    }
}

fn summary_row(run: &EtaRun, seed: String) -> SummaryRow {
    let m = &run.trace.meta;
    SummaryRow {
        algorithm: m.algorithm.to_string(),
        topology: m.topology.to_string(),
        n: m.n,
        k: run.k,
        eta: run.eta,
        seed,
        iters_to_target: run.iters_to_target.map(|v| v as f64),
        final_error: run.trace.final_error(),
    }
}

fn write_search(path: &Path, outcome: &SearchOutcome, target: Option<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "score", "iters_to_target", "final_error", "selected"])?;
    for b in &outcome.branches {
        let iters = target.and_then(|t| iterations_to_target(&b.trace, t));
        w.write_record([
            b.k.to_string(),
            b.score.to_string(),
            iters.map(|v| v.to_string()).unwrap_or_default(),
            b.trace.final_error().to_string(),
            (b.k == outcome.selected_k).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `config` for every seed and step size, writing one trace CSV per run,
/// `summary.csv`, `metadata.toml` and, for several seeds, `summary_mean.csv`.
/// Output is a pure function of the configuration.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    config.validate()?;
    if config.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        return pool.install(|| run_experiment_inner(config, out_dir));
    }
    run_experiment_inner(config, out_dir)
}

fn run_experiment_inner(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    fs::create_dir_all(out_dir)?;
    let etas = config.etas()?;
    let noise = NoiseModel::new(config.sigma2)?;
    let mut rows = Vec::new();
    let mut files = Vec::new();
    let mut best = Vec::new();
    let mut meta_runs = Vec::new();
    let mut per_seed: Vec<Vec<EtaRun>> = Vec::new();
    let mut infeasible = false;

    for offset in 0..config.seeds as u64 {
        let seed = config.seed.wrapping_add(offset);
        let plan = StreamPlan::new(seed);
        let problem =
            QuadraticProblem::generate(config.n, config.d, config.zeta2, &mut plan.problem())?;
        let runs: Vec<EtaRun> = etas
            .par_iter()
            .map(|&eta| {
                let setup = RunSetup::new(&problem, noise, eta, config.t, plan)
                    .with_init(vec![config.init; config.d]);
                let mut r = run_algorithm(
                    config.algorithm,
                    config.topology,
                    config.k,
                    &setup,
                    config.criterion,
                    config.search_horizon(),
                )?;
                r.iters_to_target = config
                    .target_error
                    .and_then(|t| iterations_to_target(&r.trace, t));
                Ok(r)
            })
            .collect::<Result<_>>()?;

        for r in &runs {
            let stem = format!(
                "{}_{}_n{}_k{}_eta{}_seed{}",
                config.algorithm, config.topology, config.n, r.k, r.eta, seed
            );
            let path = out_dir.join(format!("trace_{stem}.csv"));
            write_trace(&path, &r.trace)?;
            files.push(path);
            if let Some(outcome) = &r.search {
                let path = out_dir.join(format!(
                    "search_{}_n{}_eta{}_seed{}.csv",
                    config.topology, config.n, r.eta, seed
                ));
                write_search(&path, outcome, config.target_error)?;
                files.push(path);
            }
            rows.push(summary_row(r, seed.to_string()));
            meta_runs.push(MetaRun {
                seed,
                eta: r.eta,
                k: r.k,
                status: fmt_status(r.trace.status()).into(),
                records: r.trace.records().len(),
                gradient_evaluations: r.trace.gradient_evaluations(),
            });
        }
        match rank_runs(&runs) {
            Some(i) => best.push((seed, runs[i].eta, runs[i].k)),
            None => infeasible = true,
        }
        per_seed.push(runs);
    }

    let summary = out_dir.join("summary.csv");
    write_summary(&summary, &rows)?;
    files.push(summary);

    if config.seeds > 1 {
        let mean_rows: Vec<SummaryRow> = (0..etas.len())
            .map(|j| {
                let group: Vec<&EtaRun> = per_seed.iter().map(|runs| &runs[j]).collect();
                let count = group.len() as f64;
                let iters: Option<Vec<usize>> = group.iter().map(|r| r.iters_to_target).collect();
                let mut row = summary_row(group[0], "mean".into());
                row.iters_to_target = iters.map(|v| v.iter().sum::<usize>() as f64 / count);
                row.final_error = group.iter().map(|r| r.trace.final_error()).sum::<f64>() / count;
                row
            })
            .collect();
        let path = out_dir.join("summary_mean.csv");
        write_summary(&path, &mean_rows)?;
        files.push(path);
    }

    let metadata = Metadata {
        config,
        etas: etas.clone(),
        runs: meta_runs,
        best: best
            .iter()
            .map(|&(seed, eta, k)| MetaBest { seed, eta, k })
            .collect(),
    };
    let path = out_dir.join("metadata.toml");
    fs::write(
        &path,
        toml::to_string(&metadata).map_err(|e| Error::Io(e.to_string()))?,
    )?;
    files.push(path);

    if infeasible {
        return Err(Error::NoFeasibleStepSize);
    }
    Ok(ExperimentReport { rows, best, files })
}
