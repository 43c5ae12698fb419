//! Command-line front end. [`run`] parses arguments, executes one command
//! and maps the outcome to an exit status: 0 on success, 2 for usage and
//! validation errors, 1 for runtime failures.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::benchmark::{Method, SeedingBenchmark};
use crate::continuous::{integrate_forward, optimize_continuous};
use crate::dmp::{run_forward, write_edge_csv, write_node_csv, ControlSchedule};
use crate::error::{Error, Result};
use crate::heuristics::{kshell_order, rank_ci, rank_hda, rank_kshell, write_rankings_csv};
use crate::io::{
    data_dir, fetch_dataset, read_schedule_csv, verify_dataset, write_continuous_schedule_csv,
    write_continuous_trajectory_csv, write_schedule_csv, ContinuousFile, ContinuousReportJson, DatasetEntry,
    InitialJson, ProblemFile, ReportJson, RunManifest,
};
use crate::mitigation::{run_policy, write_policy_csv, MitigationConfig, Policy};
use crate::network::{
    from_passenger_records, read_passenger_csv, synthetic_flight_records, EdgeListDialect, SpreadingNetwork,
};
use crate::optim::forward_backward_iterate;
use crate::sim::{mc_estimate_marginals, NodeState};

#[derive(Debug, Parser, Serialize)]
#[command(name = "dmpopt", version, about = "Message-passing marginals and budget allocation for spreading processes")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Forward marginals, optionally against a Monte-Carlo estimate.
    Dmp(DmpArgs),
    /// Forward-backward optimization of a JSON problem.
    Optimize(OptimizeArgs),
    /// Seeding benchmark of heuristics against the optimizer.
    Benchmark(BenchmarkArgs),
    /// Closed-loop vaccination policies on sampled epidemics.
    Mitigate(MitigateArgs),
    /// Node rankings by HDA, k-shell or collective influence.
    Rank(RankArgs),
    /// Continuous-time optimization of a JSON problem.
    Continuous(ContinuousArgs),
    /// Public benchmark datasets.
    #[command(subcommand)]
    Datasets(DatasetsCommand),
}

/// Exactly one network source.
#[derive(Debug, Args, Serialize)]
#[group(id = "source", required = true, multiple = false)]
pub struct GraphSource {
    /// Edge list (`src dst alpha`) or network JSON.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Cached public dataset by manifest name.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Route passenger CSV (`src,dst,passengers`).
    #[arg(long)]
    pub passengers: Option<PathBuf>,
    /// Synthetic flight-style network with this many airports.
    #[arg(long)]
    pub synthetic_flights: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct GraphArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Edge-list lines yield both directions.
    #[arg(long)]
    pub undirected: bool,
    /// Alpha for two-column edge-list lines.
    #[arg(long)]
    pub default_alpha: Option<f64>,
    /// Skip self-loops and repeated pairs in edge lists.
    #[arg(long)]
    pub lenient: bool,
    /// Lightest route's alpha when building from passenger counts.
    #[arg(long, default_value_t = 0.05)]
    pub alpha_min: f64,
    /// Routes below this fraction of the busiest are dropped.
    #[arg(long, default_value_t = 0.1)]
    pub keep_fraction: f64,
    /// Seed of the synthetic route table.
    #[arg(long, default_value_t = 1)]
    pub graph_seed: u64,
}

impl GraphArgs {
    /// Loads the network; `alpha` overrides every transmission probability.
    pub fn load(&self, alpha: Option<f64>) -> Result<SpreadingNetwork> {
        let s = &self.source;
        let net = if let Some(path) = &s.graph {
            let dialect = EdgeListDialect {
                undirected: self.undirected,
                default_alpha: self.default_alpha.or(alpha),
                lenient: self.lenient,
            };
            SpreadingNetwork::load_path(path, &dialect)?
        } else if let Some(name) = &s.dataset {
            let a = alpha.ok_or_else(|| Error::Invalid("--dataset needs --alpha".into()))?;
            DatasetEntry::find(name)?.load(&data_dir(), a)?
        } else if let Some(path) = &s.passengers {
            let records = read_passenger_csv(File::open(path)?)?;
            from_passenger_records(&records, self.alpha_min, self.keep_fraction)?
        } else if let Some(n) = s.synthetic_flights {
            from_passenger_records(&synthetic_flight_records(n, self.graph_seed), self.alpha_min, self.keep_fraction)?
        } else {
            return Err(Error::Invalid("no network source given".into()));
        };
        match alpha {
            Some(a) => net.with_uniform_alpha(a),
            None => Ok(net),
        }
    }

    fn name(&self) -> String {
        let s = &self.source;
        if let Some(p) = &s.graph {
            p.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_default()
        } else if let Some(d) = &s.dataset {
            d.clone()
        } else if let Some(p) = &s.passengers {
            p.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_default()
        } else {
            format!("synthetic-flights-{}", s.synthetic_flights.unwrap_or(0))
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DmpArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Uniform alpha override.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Initial-state JSON (`{"infected": [...], ...}`).
    #[arg(long)]
    pub init: PathBuf,
    #[arg(long)]
    pub horizon: usize,
    /// Control schedule CSV (`node,t,nu,mu`); zero controls otherwise.
    #[arg(long)]
    pub controls: Option<PathBuf>,
    /// Node marginal CSV (`node,t,P_S,P_I,P_R`).
    #[arg(long)]
    pub out: PathBuf,
    /// Edge message CSV (`edge_id,t,theta,phi`).
    #[arg(long)]
    pub edges_out: Option<PathBuf>,
    /// Monte-Carlo replicas for a comparison scatter.
    #[arg(long)]
    pub mc: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scatter CSV path (default: `<out>` with extension `scatter.csv`).
    #[arg(long)]
    pub scatter: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub out_report: PathBuf,
    #[arg(long)]
    pub out_schedule: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Comma-separated subset of random, uniform, hda, kshell, ci:L, dmp.
    #[arg(long, default_value = "random,hda,kshell,ci:2,ci:4,uniform,dmp")]
    pub methods: String,
    #[arg(long, default_value_t = 0.05)]
    pub budget_frac: f64,
    #[arg(long, default_value_t = 0.99)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3)]
    pub horizon: usize,
    /// Seed of the random baseline.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    /// One row per method (`network,N,M,method,spread`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MitigateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Label of the initially infected node.
    #[arg(long)]
    pub seed_node: String,
    /// Comma-separated subset of planned, greedy, dmp-greedy, dmp-optimal.
    #[arg(long, default_value = "planned,greedy,dmp-greedy,dmp-optimal")]
    pub policy: String,
    /// Vaccinations per step as a fraction of N.
    #[arg(long, default_value_t = 0.5)]
    pub budget_frac: f64,
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,
    #[arg(long, default_value_t = 100)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock cap in seconds per optimizer decision.
    #[arg(long)]
    pub decision_timeout: Option<f64>,
    /// Receives `<policy>.csv` files and `comparison.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RankArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// hda, kshell or ci:L.
    #[arg(long)]
    pub method: String,
    /// Number of nodes to rank (default: all).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ContinuousArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub out_report: PathBuf,
    #[arg(long)]
    pub out_schedule: PathBuf,
    #[arg(long)]
    pub out_trajectory: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum DatasetsCommand {
    /// Manifest entries and whether a cached copy exists.
    List {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Check node and edge counts of a cached copy.
    Verify {
        name: String,
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Download with curl, unpack and verify.
    Fetch {
        name: String,
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let argv: Vec<String> = argv.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    match execute(&cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: &Cli, argv: Vec<String>) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Invalid("--threads must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let name = match &cli.command {
        Command::Dmp(_) => "dmp",
        Command::Optimize(_) => "optimize",
        Command::Benchmark(_) => "benchmark",
        Command::Mitigate(_) => "mitigate",
        Command::Rank(_) => "rank",
        Command::Continuous(_) => "continuous",
        Command::Datasets(_) => "datasets",
    };
    let mut manifest = RunManifest::new(name, argv, serde_json::to_value(cli)?);
    manifest.threads = Some(pool.current_num_threads());
    pool.install(|| match &cli.command {
        Command::Dmp(a) => cmd_dmp(a, &mut manifest),
        Command::Optimize(a) => cmd_optimize(a, &mut manifest),
        Command::Benchmark(a) => cmd_benchmark(a, &mut manifest),
        Command::Mitigate(a) => cmd_mitigate(a, &mut manifest),
        Command::Rank(a) => cmd_rank(a, &mut manifest),
        Command::Continuous(a) => cmd_continuous(a, &mut manifest),
        Command::Datasets(c) => cmd_datasets(c),
    })?;
    manifest.write_sidecars()
}

fn create(path: &Path, manifest: &mut RunManifest) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    manifest.outputs.push(path.to_path_buf());
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T, manifest: &mut RunManifest) -> Result<()> {
    let mut w = create(path, manifest)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn parent_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

pub fn cmd_dmp(a: &DmpArgs, manifest: &mut RunManifest) -> Result<()> {
    let net = a.graph.load(a.alpha)?;
    let ic = InitialJson::from_path(&a.init)?.resolve(&net)?;
    let controls = match &a.controls {
        Some(p) => read_schedule_csv(&net, a.horizon, File::open(p)?)?,
        None => ControlSchedule::zeros(net.node_count(), a.horizon),
    };
    let traj = run_forward(&net, &ic, &controls, a.horizon)?;
    if let Some(r) = a.mc {
        // Validate before writing anything.
        if r == 0 {
            return Err(Error::Invalid("--mc needs at least one replica".into()));
        }
    }
    write_node_csv(&net, &traj, create(&a.out, manifest)?)?;
    if let Some(p) = &a.edges_out {
        write_edge_csv(&traj, create(p, manifest)?)?;
    }
    if let Some(replicas) = a.mc {
        manifest.seeds.push(a.seed);
        let est = mc_estimate_marginals(&net, &ic, &controls, a.horizon, replicas, a.seed)?;
        let path = a.scatter.clone().unwrap_or_else(|| a.out.with_extension("scatter.csv"));
        let mut w = csv::Writer::from_writer(create(&path, manifest)?);
        w.write_record(["node", "t", "dmp_value", "mc_value", "stderr"])?;
        for t in 0..=a.horizon {
            for i in 0..net.node_count() {
                w.write_record([
                    net.label(i).to_string(),
                    t.to_string(),
                    traj.pi(i, t).to_string(),
                    est.marginals.pi(i, t).to_string(),
                    est.stderr(i, t, NodeState::I).to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

pub fn cmd_optimize(a: &OptimizeArgs, manifest: &mut RunManifest) -> Result<()> {
    let file = ProblemFile::from_path(&a.problem)?;
    let lp = file.load(parent_dir(&a.problem))?;
    manifest.seeds.push(lp.config.seed);
    let spec = lp.spec();
    let report = forward_backward_iterate(&spec, &lp.config)?;
    let json = ReportJson::new(&lp.network, &lp.initial, lp.horizon, lp.mode, &lp.target, &report)?;
    write_json(&a.out_report, &json, manifest)?;
    let mut w = create(&a.out_schedule, manifest)?;
    write_schedule_csv(&lp.network, &report.schedule, &mut w)?;
    w.flush()?;
    println!("objective {}", report.objective);
    println!("max budget residual {:.3e}", json.max_abs_residual);
    Ok(())
}

pub fn cmd_benchmark(a: &BenchmarkArgs, manifest: &mut RunManifest) -> Result<()> {
    let methods = Method::parse_list(&a.methods)?;
    if methods.is_empty() {
        return Err(Error::Invalid("no methods given".into()));
    }
    let net = a.graph.load(Some(a.alpha))?;
    let mut bench = SeedingBenchmark::new(&net, a.budget_frac, a.horizon, a.seed);
    bench.optimizer.max_iters = a.max_iters;
    manifest.seeds.push(a.seed);
    let name = a.graph.name();
    let mut rows = Vec::with_capacity(methods.len());
    for m in methods {
        let spread = bench.evaluate(m)?;
        println!("{m:<8} {spread:.3}");
        rows.push((m, spread));
    }
    let mut w = csv::Writer::from_writer(create(&a.out, manifest)?);
    w.write_record(["network", "N", "M", "method", "spread"])?;
    for (m, s) in rows {
        w.write_record([
            name.clone(),
            net.node_count().to_string(),
            net.undirected_edge_count().to_string(),
            m.to_string(),
            s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_mitigate(a: &MitigateArgs, manifest: &mut RunManifest) -> Result<()> {
    let policies = a
        .policy
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse::<Policy>)
        .collect::<Result<Vec<_>>>()?;
    if policies.is_empty() {
        return Err(Error::Invalid("no policies given".into()));
    }
    let net = a.graph.load(None)?;
    let seed_node = net.node_by_label(&a.seed_node)?;
    let mut cfg = MitigationConfig::new(a.horizon, a.budget_frac * net.node_count() as f64, a.replicas, a.seed);
    if let Some(s) = a.decision_timeout {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Invalid(format!("decision timeout {s} must be positive")));
        }
        cfg.decision_timeout = Some(Duration::from_secs_f64(s));
    }
    manifest.seeds.push(a.seed);
    let mut runs = Vec::with_capacity(policies.len());
    for p in policies {
        let run = run_policy(&net, &[seed_node], p, &cfg)?;
        println!("{p:<12} mean infected at T: {:.3} (se {:.3})", run.mean_infected[a.horizon], run.stderr[a.horizon]);
        runs.push(run);
    }
    for run in &runs {
        let path = a.out_dir.join(format!("{}.csv", run.policy));
        let mut w = create(&path, manifest)?;
        write_policy_csv(std::slice::from_ref(run), &mut w)?;
        w.flush()?;
    }
    let mut w = create(&a.out_dir.join("comparison.csv"), manifest)?;
    write_policy_csv(&runs, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_rank(a: &RankArgs, manifest: &mut RunManifest) -> Result<()> {
    let method: Method = a.method.parse()?;
    let net = a.graph.load(None)?;
    let k = a.k.unwrap_or(net.node_count());
    let ranking = match method {
        Method::Hda => rank_hda(&net, k),
        Method::Kshell => {
            let mut r = kshell_order(&rank_kshell(&net));
            r.truncate(k);
            r
        }
        Method::Ci(l) => rank_ci(&net, l, k)?,
        other => return Err(Error::Invalid(format!("{other} does not produce a ranking"))),
    };
    let mut w = create(&a.out, manifest)?;
    write_rankings_csv(&net, &ranking, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_continuous(a: &ContinuousArgs, manifest: &mut RunManifest) -> Result<()> {
    let lc = ContinuousFile::from_path(&a.problem)?.load(parent_dir(&a.problem))?;
    let p = &lc.problem;
    let report = optimize_continuous(p, &lc.config)?;
    let traj = integrate_forward(&p.network, &p.initial, &report.control, p.horizon, lc.config.scheme)?;
    write_json(&a.out_report, &ContinuousReportJson::new(&p.network, &p.target, &traj, &report), manifest)?;
    let mut w = create(&a.out_schedule, manifest)?;
    write_continuous_schedule_csv(&p.network, &report.control, &mut w)?;
    w.flush()?;
    if let Some(path) = &a.out_trajectory {
        let mut w = create(path, manifest)?;
        write_continuous_trajectory_csv(&p.network, &traj, &mut w)?;
        w.flush()?;
    }
    println!("objective {}", report.objective);
    println!("iterations {} converged {}", report.iterations, report.converged);
    Ok(())
}

fn cmd_datasets(c: &DatasetsCommand) -> Result<()> {
    let dir_or = |d: &Option<PathBuf>| d.clone().unwrap_or_else(data_dir);
    match c {
        DatasetsCommand::List { dir } => {
            let dir = dir_or(dir);
            for e in DatasetEntry::builtin() {
                let cached = e.local_path(&dir).exists();
                println!(
                    "{:<20} N={:<7} M={:<7} cached={:<5} {}",
                    e.name,
                    e.nodes,
                    e.edges,
                    cached,
                    e.url.as_deref().unwrap_or("(manual download)")
                );
            }
            Ok(())
        }
        DatasetsCommand::Verify { name, dir } => report_check(verify_dataset(&DatasetEntry::find(name)?, &dir_or(dir))?),
        DatasetsCommand::Fetch { name, dir } => report_check(fetch_dataset(&DatasetEntry::find(name)?, &dir_or(dir))?),
    }
}

fn report_check(check: crate::io::DatasetCheck) -> Result<()> {
    println!(
        "{}: N={} (expected {}), M={} (expected {})",
        check.name, check.nodes, check.expected_nodes, check.edges, check.expected_edges
    );
    if check.ok {
        Ok(())
    } else {
        Err(Error::Invalid(format!("dataset {} does not match the manifest counts", check.name)))
    }
}
