use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use subspace_bench::config::{Algorithm, ExperimentConfig, ExperimentKind, ParamRow};
use subspace_bench::error::{BenchError, Result};
use subspace_bench::experiments::{self, theory_record};
use subspace_bench::records::write_csv;
use subspace_bench::scene_io::{read_points, read_truth, write_scene, POINTS_FILE};
use subspace_ransac::{
    hardt_moitra_recover, hm_cluster, make_scene, rand_index, ransac_cluster, ransac_recover, recovery_angle,
    scc_cluster, RansacConfig, RngStream, Subspace,
};

#[derive(Parser)]
#[command(name = "subspace-bench", version, about = "Run subspace recovery and clustering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one synthetic scene to a directory.
    Gen {
        #[command(flatten)]
        row: RowArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stream id of the scene.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Single-subspace recovery trials, or one run on a scene directory.
    Recover(RunArgs),
    /// Subspace clustering trials, or one run on a scene directory.
    Cluster(RunArgs),
    /// Empirical against closed-form iteration counts over a grid.
    Sweep(RunArgs),
    /// Closed-form iteration quantities for parameter rows.
    Theory {
        #[command(flatten)]
        row: OptionalRow,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// CSV file to write; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RowArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    m0: usize,
}

#[derive(Args)]
struct OptionalRow {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    m0: Option<usize>,
}

impl OptionalRow {
    fn row(&self) -> Result<Option<ParamRow>> {
        match (self.d, self.p, self.m) {
            (None, None, None) if self.k.is_none() && self.m0.is_none() => Ok(None),
            (Some(d), Some(p), Some(m)) => Ok(Some(ParamRow::new(d, p, self.k.unwrap_or(1), m, self.m0.unwrap_or(0)))),
            _ => Err(BenchError::Config("a parameter row needs --d, --p and --m".into())),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in configuration: table1, table2 or figure2.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<Algorithm>,
    #[arg(long)]
    max_iterations: Option<u64>,
    /// Run once on the scene stored in this directory.
    #[arg(long, conflicts_with_all = ["config", "preset"])]
    scene: Option<PathBuf>,
    /// Algorithm for --scene.
    #[arg(long, requires = "scene")]
    algorithm: Option<Algorithm>,
    /// Subspace dimension for --scene.
    #[arg(long = "dim", requires = "scene")]
    dim: Option<usize>,
    /// Number of subspaces for --scene.
    #[arg(long = "subspaces", requires = "scene")]
    subspaces: Option<usize>,
}

impl RunArgs {
    fn config(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => ExperimentConfig::new(kind),
        };
        if cfg.kind != kind {
            return Err(BenchError::Config(format!("this command runs {kind} experiments, the configuration is {}", cfg.kind)));
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        if let Some(workers) = self.workers {
            cfg.workers = workers;
        }
        if !self.algorithms.is_empty() {
            cfg.algorithms = self.algorithms.clone();
        }
        if let Some(cap) = self.max_iterations {
            cfg.max_iterations = cap;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_subspace(label: &str, s: &Subspace) {
    println!("{label} dim {}", s.dim());
    for col in s.basis().column_iter() {
        let v: Vec<String> = col.iter().map(|x| format!("{x:.12e}")).collect();
        println!("  {}", v.join(" "));
    }
}

fn run_on_scene(kind: ExperimentKind, args: &RunArgs) -> Result<()> {
    let dir = args.scene.as_ref().expect("checked by caller");
    let points = read_points(&dir.join(POINTS_FILE))?;
    let truth = read_truth(dir)?;
    let seed = args.seed.unwrap_or(0);
    let mut rng = RngStream::new(seed, 0).generator();
    let mut cfg = RansacConfig::default();
    if let Some(cap) = args.max_iterations {
        cfg = cfg.with_max_iterations(cap);
    }
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| BenchError::Config(format!("--scene needs {flag}")));
    match kind {
        ExperimentKind::Recover => {
            let r = match args.algorithm.unwrap_or(Algorithm::Ransac) {
                Algorithm::Ransac => ransac_recover(&points, need(args.dim, "--dim")?, &cfg, &mut rng)?,
                Algorithm::Hm => hardt_moitra_recover(&points, &cfg, &mut rng)?,
                other => return Err(BenchError::Config(format!("{other} is not a recovery algorithm"))),
            };
            println!("iterations {}", r.iterations);
            println!("inliers {:?}", r.inlier_indices);
            print_subspace("subspace", &r.subspace);
            if let Some(t) = truth.subspaces.first() {
                println!("angle {:.3e}", recovery_angle(&r.subspace, t)?);
            }
        }
        ExperimentKind::Cluster => {
            let k = need(args.subspaces, "--subspaces")?;
            let r = match args.algorithm.unwrap_or(Algorithm::RansacCluster) {
                Algorithm::RansacCluster => ransac_cluster(&points, need(args.dim, "--dim")?, k, &cfg, &mut rng)?,
                Algorithm::HmCluster => {
                    hm_cluster(&points, k, &cfg, subspace_ransac::clustering::DEFAULT_SEARCH_BUDGET, &mut rng)?
                }
                Algorithm::Scc => {
                    let d = need(args.dim, "--dim")?;
                    scc_cluster(&points, d, k, ExperimentConfig::new(kind).scc_tuples, cfg.rel_tol, &mut rng)?.0
                }
                other => return Err(BenchError::Config(format!("{other} is not a clustering algorithm"))),
            };
            println!("iterations {}", r.iterations);
            let labels: Vec<String> = r.labels.as_slice().iter().map(u32::to_string).collect();
            println!("labels {}", labels.join(" "));
            for (i, s) in r.subspaces.iter().enumerate() {
                print_subspace(&format!("subspace {}", i + 1), s);
            }
            if let Some(t) = &truth.labels {
                println!("rand_index {:.6}", rand_index(&r.labels, t)?);
            }
        }
        _ => return Err(BenchError::Config("--scene applies to recover and cluster".into())),
    }
    Ok(())
}

fn theory(row: &OptionalRow, config: Option<&PathBuf>, preset: Option<&str>, out: Option<&PathBuf>) -> Result<()> {
    let rows = match (row.row()?, config, preset) {
        (Some(r), None, None) => vec![r],
        (None, Some(path), None) => ExperimentConfig::load(path)?.params,
        (None, None, Some(name)) => ExperimentConfig::preset(name)?.params,
        (None, None, None) => return Err(BenchError::Config("give a row, --config or --preset".into())),
        _ => return Err(BenchError::Config("give only one of a row, --config or --preset".into())),
    };
    let records = rows.iter().map(theory_record).collect::<Result<Vec<_>>>()?;
    match out {
        Some(path) => write_csv(path, &records),
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in &records {
                w.serialize(r).map_err(|e| BenchError::csv("<stdout>", e))?;
            }
            w.flush().map_err(|e| BenchError::io("<stdout>", e))
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { row, seed, trial, out } => {
            let row = ParamRow::new(row.d, row.p, row.k, row.m, row.m0);
            let scene = make_scene(&row.theory()?, RngStream::new(seed, trial))?;
            write_scene(&out, &scene)
        }
        Command::Recover(args) if args.scene.is_some() => run_on_scene(ExperimentKind::Recover, &args),
        Command::Cluster(args) if args.scene.is_some() => run_on_scene(ExperimentKind::Cluster, &args),
        Command::Sweep(args) if args.scene.is_some() => run_on_scene(ExperimentKind::Sweep, &args),
        Command::Recover(args) => experiments::run(&args.config(ExperimentKind::Recover)?),
        Command::Cluster(args) => experiments::run(&args.config(ExperimentKind::Cluster)?),
        Command::Sweep(args) => experiments::run(&args.config(ExperimentKind::Sweep)?),
        Command::Theory { row, config, preset, out } => theory(&row, config.as_ref(), preset.as_deref(), out.as_ref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
