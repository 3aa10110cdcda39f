//! Command-line front end: `cluster`, `validate` and `bench`.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::agreement::Params;
use crate::components::Clustering;
use crate::error::{Error, Result};
use crate::eval::{cluster_stats, gen_gnp, gen_planted, gen_tight_instance, pivot_baseline, ClusterStats};
use crate::graph::SignedGraph;
use crate::io::{read_edge_list_file, write_clustering, IdMap};
use crate::mpc::{plan_machines, run_mpc_pipeline_with_rule, Enforcement, MpcConfig, MpcTrace};
use crate::pipeline::{run_in_memory_with_rule, OracleMode};
use crate::sketch::ThresholdRule;
use crate::streaming::{run_streaming_pipeline_with_rule, FileEdgeStream, StreamReport, VecStream};
use crate::validate::{validate_sparsified, Check, ValidationReport};

/// Machine-count headroom when `--machines` is not given.
const PLAN_SLACK: f64 = 4.0;

#[derive(Parser, Debug)]
#[command(name = "corrclust", version, about = "Agreement-based correlation clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Cluster one graph and write clusters.txt, stats.json and (for mpc) trace.json.
    Cluster(ClusterArgs),
    /// Run the structural checks on one graph.
    Validate(ClusterArgs),
    /// Sweep parameters, drivers and datasets into bench.csv.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Driver {
    Inmem,
    Mpc,
    Stream,
    /// Sequential Pivot baseline.
    Pivot,
}

impl fmt::Display for Driver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Driver::Inmem => "inmem",
            Driver::Mpc => "mpc",
            Driver::Stream => "stream",
            Driver::Pivot => "pivot",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Sketch,
}

impl From<ModeArg> for OracleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => OracleMode::Exact,
            ModeArg::Sketch => OracleMode::Sketch,
        }
    }
}

/// Inline instance generator: `gnp:n:p`, `planted:k:size:pin:pout` or
/// `tight:d:beta:xmult`.
#[derive(Clone, Debug, PartialEq)]
pub enum GenSpec {
    Gnp { n: usize, p: f64 },
    Planted { k: usize, size: usize, p_in: f64, p_out: f64 },
    Tight { d: usize, beta: f64, x_mult: f64 },
}

impl FromStr for GenSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        fn num<T: FromStr>(s: &str, what: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("invalid {what} `{s}`"))
        }
        let prob = |s: &str, what: &str| -> std::result::Result<f64, String> {
            let p: f64 = num(s, what)?;
            if (0.0..=1.0).contains(&p) {
                Ok(p)
            } else {
                Err(format!("{what} must lie in [0, 1], got {p}"))
            }
        };
        match parts.as_slice() {
            ["gnp", n, p] => Ok(GenSpec::Gnp { n: num(n, "n")?, p: prob(p, "p")? }),
            ["planted", k, size, pin, pout] => Ok(GenSpec::Planted {
                k: num(k, "k")?,
                size: num(size, "size")?,
                p_in: prob(pin, "pin")?,
                p_out: prob(pout, "pout")?,
            }),
            ["tight", d, beta, x] => Ok(GenSpec::Tight {
                d: num(d, "d")?,
                beta: num(beta, "beta")?,
                x_mult: num(x, "xmult")?,
            }),
            _ => Err(format!(
                "unknown generator `{s}`; expected gnp:n:p, planted:k:size:pin:pout or tight:d:beta:xmult"
            )),
        }
    }
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenSpec::Gnp { n, p } => write!(f, "gnp:{n}:{p}"),
            GenSpec::Planted { k, size, p_in, p_out } => write!(f, "planted:{k}:{size}:{p_in}:{p_out}"),
            GenSpec::Tight { d, beta, x_mult } => write!(f, "tight:{d}:{beta}:{x_mult}"),
        }
    }
}

impl GenSpec {
    pub fn generate(&self, seed: u64) -> Result<SignedGraph> {
        match *self {
            GenSpec::Gnp { n, p } => Ok(gen_gnp(n, p, seed)),
            GenSpec::Planted { k, size, p_in, p_out } => Ok(gen_planted(k, size, p_in, p_out, seed)),
            GenSpec::Tight { d, beta, x_mult } => gen_tight_instance(d, beta, x_mult),
        }
    }
}

#[derive(Args, Debug, Clone)]
#[group(id = "source", required = true, multiple = false)]
pub struct SourceArgs {
    /// Edge-list file.
    #[arg(long, group = "source")]
    pub input: Option<PathBuf>,
    /// Generator spec.
    #[arg(long, group = "source")]
    pub gen: Option<GenSpec>,
}

#[derive(Args, Debug, Clone)]
pub struct ParamArgs {
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub lambda: f64,
    /// Sampling constant of the sketches.
    #[arg(long, default_value_t = 600.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Always threshold sampled counts against 0.9·τ, even where sampling is complete.
    #[arg(long)]
    pub literal_threshold: bool,
}

impl ParamArgs {
    pub fn params(&self) -> Params {
        Params::new(self.beta, self.lambda).with_a(self.a).with_seed(self.seed)
    }

    fn rule(&self) -> ThresholdRule {
        if self.literal_threshold {
            ThresholdRule::Literal
        } else {
            ThresholdRule::ExactWhenComplete
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct MpcArgs {
    /// Machine count; planned from a dry run when omitted.
    #[arg(long)]
    pub machines: Option<usize>,
    /// Memory exponent: each machine holds ceil(n^delta) words.
    #[arg(long, default_value_t = 0.9)]
    pub delta: f64,
    /// Record cap violations and continue (default).
    #[arg(long, conflicts_with = "mpc_strict")]
    pub mpc_audit: bool,
    /// Abort on the first cap violation.
    #[arg(long)]
    pub mpc_strict: bool,
}

impl MpcArgs {
    fn enforcement(&self) -> Enforcement {
        if self.mpc_strict {
            Enforcement::Strict
        } else {
            Enforcement::Audit
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value_t = Driver::Inmem)]
    pub driver: Driver,
    #[command(flatten)]
    pub mpc: MpcArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    /// Edge-list files to include.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Generator specs to include.
    #[arg(long)]
    pub gen: Vec<GenSpec>,
    /// Values used for both β and λ.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    pub beta_lambda: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "inmem")]
    pub drivers: Vec<Driver>,
    #[arg(long, default_value_t = 600.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub mpc: MpcArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// A graph ready to run, with the ids to print and where it came from.
pub struct Dataset {
    pub name: String,
    pub graph: SignedGraph,
    pub ids: IdMap,
    pub path: Option<PathBuf>,
}

impl Dataset {
    pub fn load(input: Option<&Path>, gen: Option<&GenSpec>, seed: u64) -> Result<Self> {
        match (input, gen) {
            (Some(path), _) => {
                let (graph, ids) = read_edge_list_file(path)?.into_graph()?;
                Ok(Dataset { name: path.display().to_string(), graph, ids, path: Some(path.to_path_buf()) })
            }
            (None, Some(spec)) => {
                let graph = spec.generate(seed)?;
                let ids = IdMap::identity(graph.n());
                Ok(Dataset { name: spec.to_string(), graph, ids, path: None })
            }
            (None, None) => Err(Error::InvalidParams("one of --input or --gen is required".into())),
        }
    }
}

/// Full settings of one run, echoed into its outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub dataset: String,
    pub n: usize,
    pub m_plus: usize,
    pub params: Params,
    pub driver: Driver,
    pub mode: OracleMode,
    pub literal_threshold: bool,
    pub machines: Option<usize>,
    pub delta: Option<f64>,
    pub enforcement: Option<Enforcement>,
}

pub struct RunOutcome {
    pub config: RunConfig,
    pub clustering: Clustering,
    pub stats: ClusterStats,
    pub rounds: Option<usize>,
    pub passes: Option<usize>,
    pub trace: Option<MpcTrace>,
    pub stream: Option<StreamReport>,
    pub wall_ms: f64,
}

#[derive(Serialize)]
struct StatsFile<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    stats: &'a ClusterStats,
    rounds: Option<usize>,
    passes: Option<usize>,
    mpc_total_words: Option<usize>,
    mpc_violations: Option<usize>,
    stream: Option<&'a StreamReport>,
    wall_time_ms: f64,
}

/// Runs one driver on a loaded dataset. Wall time covers the driver only.
pub fn execute(
    data: &Dataset,
    params: &Params,
    driver: Driver,
    mode: OracleMode,
    rule: ThresholdRule,
    mpc: &MpcArgs,
) -> Result<RunOutcome> {
    let g = &data.graph;
    let mut config = RunConfig {
        dataset: data.name.clone(),
        n: g.n(),
        m_plus: g.m_plus(),
        params: *params,
        driver,
        mode,
        literal_threshold: rule == ThresholdRule::Literal,
        machines: None,
        delta: None,
        enforcement: None,
    };
    let mut rounds = None;
    let mut passes = None;
    let mut trace = None;
    let mut stream = None;
    let clustering;
    let wall_ms;
    match driver {
        Driver::Inmem => {
            let start = Instant::now();
            clustering = run_in_memory_with_rule(g, params, mode, rule)?.clustering;
            wall_ms = elapsed_ms(start);
        }
        Driver::Pivot => {
            let start = Instant::now();
            clustering = pivot_baseline(g, params.seed);
            wall_ms = elapsed_ms(start);
        }
        Driver::Mpc => {
            let machines = match mpc.machines {
                Some(m) => m,
                None => plan_machines(g, params, mode, mpc.delta, PLAN_SLACK)?,
            };
            let cfg = MpcConfig::for_graph(g, machines, mpc.delta, mpc.enforcement())?;
            config.machines = Some(machines);
            config.delta = Some(mpc.delta);
            config.enforcement = Some(cfg.enforcement);
            let start = Instant::now();
            let (c, t) = run_mpc_pipeline_with_rule(g, params, mode, rule, cfg)?;
            wall_ms = elapsed_ms(start);
            clustering = c;
            rounds = Some(t.rounds);
            trace = Some(t);
        }
        Driver::Stream => {
            let start = Instant::now();
            let (c, report) = match &data.path {
                Some(path) => {
                    let mut provider = FileEdgeStream::open(path)?;
                    run_streaming_pipeline_with_rule(&mut provider, params, mode, rule)?
                }
                None => run_streaming_pipeline_with_rule(&mut VecStream::from_graph(g), params, mode, rule)?,
            };
            wall_ms = elapsed_ms(start);
            clustering = c;
            passes = Some(report.passes);
            stream = Some(report);
        }
    }
    let stats = cluster_stats(g, &clustering)?;
    Ok(RunOutcome { config, clustering, stats, rounds, passes, trace, stream, wall_ms })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn cmd_cluster(args: &ClusterArgs) -> Result<RunOutcome> {
    let data = Dataset::load(args.source.input.as_deref(), args.source.gen.as_ref(), args.params.seed)?;
    let params = args.params.params();
    params.validate()?;
    let run = execute(&data, &params, args.driver, args.params.mode.into(), args.params.rule(), &args.mpc)?;
    fs::create_dir_all(&args.out)?;
    write_clustering(BufWriter::new(fs::File::create(args.out.join("clusters.txt"))?), &run.clustering, &data.ids)?;
    let stats = StatsFile {
        config: &run.config,
        stats: &run.stats,
        rounds: run.rounds,
        passes: run.passes,
        mpc_total_words: run.trace.as_ref().map(|t| t.total_words),
        mpc_violations: run.trace.as_ref().map(|t| t.violations.len()),
        stream: run.stream.as_ref(),
        wall_time_ms: run.wall_ms,
    };
    fs::write(args.out.join("stats.json"), serde_json::to_string_pretty(&stats)?)?;
    if let Some(trace) = &run.trace {
        fs::write(args.out.join("trace.json"), trace.to_json()?)?;
    }
    Ok(run)
}

/// Structural checks on G̃ plus agreement between the three drivers.
pub fn cmd_validate(args: &ClusterArgs) -> Result<ValidationReport> {
    let data = Dataset::load(args.source.input.as_deref(), args.source.gen.as_ref(), args.params.seed)?;
    let params = args.params.params();
    params.validate()?;
    let mode: OracleMode = args.params.mode.into();
    let rule = args.params.rule();
    let inmem = run_in_memory_with_rule(&data.graph, &params, mode, rule)?;
    let mut report = validate_sparsified(&inmem.sparsified, &params);

    let mut drivers = Check {
        name: "driver-equivalence".to_string(),
        ..Check::default()
    };
    for driver in [Driver::Mpc, Driver::Stream] {
        let run = execute(&data, &params, driver, mode, rule, &args.mpc)?;
        let same = run.clustering.same_partition(&inmem.clustering);
        drivers.checked += 1;
        if !same {
            drivers.violations += 1;
            drivers.witnesses.push(format!("{driver} partition differs from inmem"));
        }
    }
    report.checks.push(drivers);
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("validate.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[derive(Serialize)]
struct BenchRow {
    dataset: String,
    n: usize,
    m_plus: usize,
    beta: f64,
    lambda: f64,
    a: f64,
    seed: u64,
    mode: String,
    algorithm: String,
    cost: Option<u64>,
    num_clusters: Option<usize>,
    in_edge_fraction: Option<f64>,
    rounds: Option<usize>,
    passes: Option<usize>,
    wall_ms: Option<f64>,
    error: String,
}

pub fn bench_header() -> &'static str {
    "dataset,n,m_plus,beta,lambda,a,seed,mode,algorithm,cost,num_clusters,in_edge_fraction,rounds,passes,wall_ms,error"
}

/// Runs the sweep and writes the CSV to `out`. Returns the number of rows.
pub fn cmd_bench<W: Write>(args: &BenchArgs, out: W) -> Result<usize> {
    let mut writer = csv::Writer::from_writer(out);
    let mut datasets = Vec::new();
    for path in &args.input {
        datasets.push(Dataset::load(Some(path), None, args.seed));
    }
    for spec in &args.gen {
        datasets.push(Dataset::load(None, Some(spec), args.seed));
    }
    let mode: OracleMode = args.mode.into();
    let mut rows = 0;
    if datasets.is_empty() {
        writer.write_record(bench_header().split(',')).map_err(csv_error)?;
    }
    for data in &datasets {
        for &bl in &args.beta_lambda {
            let params = Params::new(bl, bl).with_a(args.a).with_seed(args.seed);
            for &driver in &args.drivers {
                let mut row = BenchRow {
                    dataset: String::new(),
                    n: 0,
                    m_plus: 0,
                    beta: bl,
                    lambda: bl,
                    a: args.a,
                    seed: args.seed,
                    mode: mode.to_string(),
                    algorithm: driver.to_string(),
                    cost: None,
                    num_clusters: None,
                    in_edge_fraction: None,
                    rounds: None,
                    passes: None,
                    wall_ms: None,
                    error: String::new(),
                };
                let result = match data {
                    Ok(d) => {
                        row.dataset = d.name.clone();
                        row.n = d.graph.n();
                        row.m_plus = d.graph.m_plus();
                        params
                            .validate()
                            .and_then(|_| execute(d, &params, driver, mode, ThresholdRule::ExactWhenComplete, &args.mpc))
                    }
                    Err(e) => Err(Error::InvalidParams(e.to_string())),
                };
                match result {
                    Ok(run) => {
                        row.cost = Some(run.stats.objective);
                        row.num_clusters = Some(run.stats.num_clusters);
                        row.in_edge_fraction = Some(run.stats.intra_cluster_edge_fraction);
                        row.rounds = run.rounds;
                        row.passes = run.passes;
                        row.wall_ms = Some(run.wall_ms);
                    }
                    Err(e) => row.error = e.to_string(),
                }
                writer.serialize(&row).map_err(csv_error)?;
                rows += 1;
            }
        }
    }
    writer.flush()?;
    Ok(rows)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Parses `args` and runs the chosen command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Cluster(args) => {
            let run = cmd_cluster(&args)?;
            println!(
                "{} clusters, cost {}, in-edge fraction {:.4}{}{} ({:.1} ms); outputs in {}",
                run.stats.num_clusters,
                run.stats.objective,
                run.stats.intra_cluster_edge_fraction,
                run.rounds.map(|r| format!(", {r} rounds")).unwrap_or_default(),
                run.passes.map(|p| format!(", {p} passes")).unwrap_or_default(),
                run.wall_ms,
                args.out.display()
            );
            Ok(0)
        }
        Command::Validate(args) => {
            let report = cmd_validate(&args)?;
            print!("{}", report.summary());
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Bench(args) => {
            fs::create_dir_all(&args.out)?;
            let path = args.out.join("bench.csv");
            let rows = cmd_bench(&args, BufWriter::new(fs::File::create(&path)?))?;
            println!("{rows} rows written to {}", path.display());
            Ok(0)
        }
    }
}
