use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use teleportation::algorithms::Algorithm;
use teleportation::harness::{rate_table, run_experiment, write_rates, EtaSpec, ExperimentConfig};
use teleportation::topology::Family;
use teleportation::tuning::{BoundInputs, Criterion};
use teleportation::Error;

#[derive(Parser)]
#[command(
    name = "teleport",
    version,
    about = "Decentralized SGD with teleportation: simulations and rate tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trace and summary CSVs.
    Run(ExperimentArgs),
    /// Tune the step size over the grid (default) or the given values.
    Grid(ExperimentArgs),
    /// Select the number of active nodes, then run teleportation with it.
    SearchK(ExperimentArgs),
    /// Write convergence-rate bounds for a range of network sizes.
    Rates(RatesArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    topology: Option<Family>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    zeta2: Option<f64>,
    /// A positive step size or `grid`.
    #[arg(long)]
    eta: Option<EtaSpec>,
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    target_error: Option<f64>,
    #[arg(long)]
    criterion: Option<Criterion>,
    /// Value of every coordinate of the initial parameter.
    #[arg(long, allow_hyphen_values = true)]
    init: Option<f64>,
    /// Horizon of the k-search branches (defaults to T).
    #[arg(long)]
    search_t: Option<usize>,
    /// Repeat with this many consecutive seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RatesArgs {
    /// Largest network size; sizes are powers of two from 4 up to it, plus it.
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 1.0)]
    zeta2: f64,
    #[arg(long = "T", default_value_t = 10_000)]
    t: usize,
    #[arg(long = "L", default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value_t = 1.0)]
    r0: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

impl ExperimentArgs {
    fn into_config(self) -> Result<(ExperimentConfig, PathBuf, bool), Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let eta_given = self.eta.is_some();
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(algorithm => algorithm, n => n, d => d, topology => topology, sigma2 => sigma2, zeta2 => zeta2,
             eta => eta, t => t, seed => seed, criterion => criterion, init => init, seeds => seeds, jobs => jobs);
        if self.k.is_some() {
            cfg.k = self.k;
        }
        if self.target_error.is_some() {
            cfg.target_error = self.target_error;
        }
        if self.search_t.is_some() {
            cfg.search_t = self.search_t;
        }
        Ok((cfg, self.out_dir, eta_given || self.config.is_some()))
    }
}

fn experiment(args: ExperimentArgs, mode: &str) -> Result<(), Error> {
    let (mut cfg, out_dir, eta_fixed) = args.into_config()?;
    match mode {
        "grid" if !eta_fixed => cfg.eta = EtaSpec::grid(),
        "search-k" => cfg.algorithm = Algorithm::SearchK,
        _ => {}
    }
    let report = run_experiment(&cfg, &out_dir)?;
    for &(seed, eta, k) in &report.best {
        println!("seed {seed}: best eta {eta} (k = {k})");
    }
    println!(
        "wrote {} files to {}",
        report.files.len(),
        out_dir.display()
    );
    Ok(())
}

fn rates(args: RatesArgs) -> Result<(), Error> {
    if args.n < 1 {
        return Err(Error::Config("n must be positive".into()));
    }
    let mut ns: Vec<usize> = (2..usize::BITS)
        .map(|e| 1usize << e)
        .take_while(|&v| v < args.n)
        .collect();
    ns.push(args.n);
    let template = BoundInputs {
        t: args.t,
        sigma2: args.sigma2,
        zeta2: args.zeta2,
        l: args.l,
        r0: args.r0,
        n: args.n,
    };
    let rows = rate_table(&ns, &template)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let path = Path::new(&args.out_dir).join("rates.csv");
    write_rates(&path, &rows)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => experiment(a, "run"),
        Command::Grid(a) => experiment(a, "grid"),
        Command::SearchK(a) => experiment(a, "search-k"),
        Command::Rates(a) => rates(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::NoFeasibleStepSize) => {
            eprintln!("error: no feasible step size: every run diverged");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
