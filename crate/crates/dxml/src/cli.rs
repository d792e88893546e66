//! Command-line surface: `train`, `predict`, `eval`, `bench`, `worker`,
//! `master`. Exit codes: 0 success, 1 usage, 2 data error, 3 runtime error.
//!
//! Every training option can also come from a `key=value` config file
//! (`--config`); explicit flags override file values, which override the
//! built-in defaults.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::data::read_xmlc_file;
use crate::distributed::{
    comm_report, parse_roster, run_master, run_worker, ClusterConfig, Role, TcpTransport,
};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::forest::{load_model, model_bytes, predict_forest, save_model, train_forest};
use crate::tree::TrainConfig;

#[derive(Parser)]
#[command(
    name = "dxml",
    version,
    about = "Extreme multilabel classification with forests of k-ary instance trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a forest and write the model file.
    Train(TrainArgs),
    /// Print the top-k labels for every instance in a data file.
    Predict(PredictArgs),
    /// Evaluate precision@k of a model on a test file.
    Eval(EvalArgs),
    /// Train and evaluate, reporting train time, test time, and model size.
    Bench(BenchArgs),
    /// Train a slice of the forest and send it to the master.
    Worker(WorkerArgs),
    /// Gather worker models, assemble the forest, and write the model file.
    Master(MasterArgs),
}

#[derive(Args, Clone)]
struct TrainOpts {
    /// key=value configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of trees in the forest.
    #[arg(long)]
    trees: Option<usize>,
    /// Branching factor of internal nodes.
    #[arg(long)]
    k: Option<usize>,
    /// Leaf threshold: nodes with fewer instances stop splitting.
    #[arg(long)]
    nleaf: Option<usize>,
    /// Per-node sample cap for classifier training.
    #[arg(long)]
    ns: Option<usize>,
    /// Projected feature dimension (default min(d_x, 10000)).
    #[arg(long = "proj-dx")]
    proj_dx: Option<usize>,
    /// Projected label dimension (default min(d_y, 10000)).
    #[arg(long = "proj-dy")]
    proj_dy: Option<usize>,
    /// Iteration cap for the per-node spherical k-means.
    #[arg(long = "kmeans-iters")]
    kmeans_iters: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl TrainOpts {
    fn resolve(&self) -> Result<(TrainConfig, usize)> {
        let file = match &self.config {
            Some(path) => parse_config_file(path)?,
            None => HashMap::new(),
        };
        let defaults = TrainConfig::default();
        let cfg = TrainConfig {
            n_trees: pick(self.trees, &file, "trees")?.unwrap_or(defaults.n_trees),
            k: pick(self.k, &file, "k")?.unwrap_or(defaults.k),
            n_leaf: pick(self.nleaf, &file, "nleaf")?.unwrap_or(defaults.n_leaf),
            n_s: pick(self.ns, &file, "ns")?.unwrap_or(defaults.n_s),
            proj_dim_x: pick(self.proj_dx, &file, "proj-dx")?,
            proj_dim_y: pick(self.proj_dy, &file, "proj-dy")?,
            kmeans_iters: pick(self.kmeans_iters, &file, "kmeans-iters")?
                .unwrap_or(defaults.kmeans_iters),
            master_seed: pick(self.seed, &file, "seed")?.unwrap_or(defaults.master_seed),
        };
        cfg.validate()?;
        let threads = pick(self.threads, &file, "threads")?.unwrap_or(0);
        Ok((cfg, threads))
    }
}

const CONFIG_KEYS: &[&str] = &[
    "trees",
    "k",
    "nleaf",
    "ns",
    "proj-dx",
    "proj-dy",
    "kmeans-iters",
    "seed",
    "threads",
];

fn parse_config_file(path: &PathBuf) -> Result<HashMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|source| Error::File {
        path: path.clone(),
        source,
    })?;
    let mut values = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("config line must be key=value, got `{}`", line),
        })?;
        let key = key.trim().to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!(
                    "unknown config key `{}` (known: {})",
                    key,
                    CONFIG_KEYS.join(", ")
                ),
            });
        }
        values.insert(key, value.trim().to_string());
    }
    Ok(values)
}

fn pick<T: std::str::FromStr>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
            Error::InvalidConfig(format!("config value `{}` is invalid for `{}`", raw, key))
        }),
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training data in the XMLC text format.
    #[arg(long)]
    data: PathBuf,
    /// Output model path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file written by `train` or `master`.
    #[arg(long)]
    model: PathBuf,
    /// Data file; labels in it are ignored.
    #[arg(long)]
    data: PathBuf,
    /// Ranked labels to print per instance.
    #[arg(long, default_value_t = 5)]
    topk: usize,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Test data in the XMLC text format.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated precision cutoffs.
    #[arg(long, default_value = "1,3,5")]
    at: String,
    /// Also print a machine-readable JSON line.
    #[arg(long)]
    json: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Training data in the XMLC text format.
    #[arg(long)]
    data: PathBuf,
    /// Held-out test data.
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "1,3,5")]
    at: String,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Args)]
struct WorkerArgs {
    /// This worker's rank (1..=workers).
    #[arg(long)]
    rank: usize,
    /// Roster file: one `rank host:port` line per peer.
    #[arg(long)]
    roster: PathBuf,
    /// Number of workers in the cluster.
    #[arg(long)]
    workers: usize,
    /// Training data (every worker reads the full dataset).
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Args)]
struct MasterArgs {
    #[arg(long)]
    roster: PathBuf,
    #[arg(long)]
    workers: usize,
    /// Output model path for the assembled forest.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: TrainOpts,
}

/// Run the CLI and return the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Worker(args) => cmd_worker(args),
        Command::Master(args) => cmd_master(args),
    };
    match outcome {
        Ok(()) => 0,
        // A closed stdout (predict | head) is normal termination.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    }
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {}", e)))
}

fn parse_cutoffs(raw: &str) -> Result<Vec<usize>> {
    let mut ks = Vec::new();
    for part in raw.split(',') {
        let k: usize = part
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("invalid precision cutoff `{}`", part)))?;
        if k == 0 {
            return Err(Error::InvalidConfig(
                "precision cutoffs must be >= 1".into(),
            ));
        }
        ks.push(k);
    }
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let (cfg, threads) = args.opts.resolve()?;
    let dataset = read_xmlc_file(&args.data)?;
    let pool = thread_pool(threads)?;

    let started = Instant::now();
    let (model, stats, _) = pool.install(|| train_forest(&dataset, &cfg))?;
    let train_seconds = started.elapsed().as_secs_f64();

    save_model(&model, &args.out)?;
    let nodes: usize = stats.iter().map(|s| s.records.len()).sum();
    println!(
        "trained {} trees ({} nodes) on {} instances in {:.3}s",
        model.trees.len(),
        nodes,
        dataset.n(),
        train_seconds
    );
    println!(
        "model: {} ({} bytes)",
        args.out.display(),
        model_bytes(&model)
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    if args.topk == 0 {
        return Err(Error::InvalidConfig("--topk must be >= 1".into()));
    }
    let model = load_model(&args.model)?;
    let dataset = read_xmlc_file(&args.data)?;
    if model.d_x != dataset.d_x() {
        return Err(Error::DimensionMismatch {
            expected: model.d_x,
            found: dataset.d_x(),
            context: "model feature dimension vs data",
        });
    }
    let pool = thread_pool(args.threads)?;
    let predictions: Vec<Vec<(usize, f64)>> = pool.install(|| {
        use rayon::prelude::*;
        (0..dataset.n())
            .into_par_iter()
            .map(|i| predict_forest(&model, dataset.features.row(i), args.topk))
            .collect()
    });
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    use std::io::Write;
    for ranked in predictions {
        let line: Vec<String> = ranked
            .iter()
            .map(|(label, score)| format!("{}:{:.6}", label, score))
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let ks = parse_cutoffs(&args.at)?;
    let model = load_model(&args.model)?;
    let dataset = read_xmlc_file(&args.data)?;
    let pool = thread_pool(args.threads)?;
    let mut report = pool.install(|| evaluate(&model, &dataset, &ks))?;
    report.model_bytes = Some(model_bytes(&model));
    // stdout carries only the deterministic metrics; timing goes to stderr.
    print!("{}", report.metrics_table());
    if args.json {
        println!("{}", report.to_metrics_json_line());
    }
    eprintln!(
        "predict {:.3}s total, {:.4} ms/sample",
        report.predict_seconds, report.predict_ms_per_sample
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let ks = parse_cutoffs(&args.at)?;
    let (cfg, threads) = args.opts.resolve()?;
    let train_data = read_xmlc_file(&args.data)?;
    let test_data = read_xmlc_file(&args.test)?;
    let pool = thread_pool(threads)?;

    let started = Instant::now();
    let (model, _, _) = pool.install(|| train_forest(&train_data, &cfg))?;
    let train_seconds = started.elapsed().as_secs_f64();

    let mut report = pool.install(|| evaluate(&model, &test_data, &ks))?;
    report.train_seconds = Some(train_seconds);
    report.model_bytes = Some(model_bytes(&model));

    print!("{}", report);
    println!(
        "bench row: train {:.2}s  test {:.4} ms/sample ({:.3}s total)  model {} bytes",
        train_seconds,
        report.predict_ms_per_sample,
        report.predict_seconds,
        report.model_bytes.unwrap()
    );
    if args.json {
        println!("{}", report.to_json_line());
    }
    Ok(())
}

fn cmd_worker(args: WorkerArgs) -> Result<()> {
    let (cfg, threads) = args.opts.resolve()?;
    let roster = parse_roster(&args.roster)?;
    let cluster = ClusterConfig {
        workers: args.workers,
        role: Role::Worker,
        rank: args.rank,
        roster: roster.clone(),
    };
    cluster.validate()?;
    let dataset = read_xmlc_file(&args.data)?;
    let mut transport = TcpTransport::connect_only(args.rank, roster);
    let pool = thread_pool(threads)?;
    let stats = pool.install(|| run_worker(&dataset, &cfg, &cluster, &mut transport))?;
    println!(
        "worker {} sent {} payload bytes to master",
        args.rank,
        stats.total_payload_bytes()
    );
    for (name, seconds) in &stats.phases {
        println!("phase {:<8} {:.3}s", format!("{}:", name), seconds);
    }
    Ok(())
}

fn cmd_master(args: MasterArgs) -> Result<()> {
    let (cfg, _) = args.opts.resolve()?;
    let roster = parse_roster(&args.roster)?;
    let cluster = ClusterConfig {
        workers: args.workers,
        role: Role::Master,
        rank: 0,
        roster: roster.clone(),
    };
    cluster.validate()?;
    let mut transport = TcpTransport::bind(0, roster)?;
    let (model, stats) = run_master(&cfg, &cluster, &mut transport)?;
    save_model(&model, &args.out)?;

    let report = comm_report(&stats, &cluster, &model);
    print!("{}", report);
    let gather = stats.phase_seconds("gather").unwrap_or(0.0);
    let assemble = stats.phase_seconds("assemble").unwrap_or(0.0);
    println!("gather excluding reduction: {:.3}s", gather);
    println!("gather including reduction: {:.3}s", gather + assemble);
    report
        .validate()
        .map_err(|msg| Error::Corrupt(format!("communication accounting: {}", msg)))?;
    println!("assembled model written to {}", args.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoffs_parse_sorted_and_deduplicated() {
        assert_eq!(parse_cutoffs("5,1,3,3").unwrap(), vec![1, 3, 5]);
        assert!(parse_cutoffs("1,0").is_err());
        assert!(parse_cutoffs("a").is_err());
    }

    #[test]
    fn config_file_feeds_defaults_and_flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dxml.conf");
        std::fs::write(&path, "# comment\ntrees = 7\nseed = 11\nnleaf=3\n").unwrap();
        let opts = TrainOpts {
            config: Some(path),
            trees: Some(9),
            k: None,
            nleaf: None,
            ns: None,
            proj_dx: None,
            proj_dy: None,
            kmeans_iters: None,
            seed: None,
            threads: None,
        };
        let (cfg, threads) = opts.resolve().unwrap();
        assert_eq!(cfg.n_trees, 9, "flag beats file");
        assert_eq!(cfg.master_seed, 11, "file beats default");
        assert_eq!(cfg.n_leaf, 3);
        assert_eq!(cfg.k, TrainConfig::default().k);
        assert_eq!(threads, 0);
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dxml.conf");
        std::fs::write(&path, "tres = 7\n").unwrap();
        let opts = TrainOpts {
            config: Some(path),
            trees: None,
            k: None,
            nleaf: None,
            ns: None,
            proj_dx: None,
            proj_dy: None,
            kmeans_iters: None,
            seed: None,
            threads: None,
        };
        assert!(opts.resolve().is_err());
    }
}
