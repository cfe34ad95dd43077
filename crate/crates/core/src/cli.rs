//! The `tstar` command line.
//!
//! Exit codes: 0 on success, 1 on configuration or I/O errors (message on
//! standard error), 2 when some instances failed but the rest completed.
//! Every flag can also be set through an environment variable named after it
//! with a `TSTAR_` prefix, e.g. `TSTAR_SEED=3`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{validate_config, DEFAULT_GRID_SIDE, DEFAULT_K, DEFAULT_THETA};
use crate::frames::{EmbeddingMatrix, FrameStore};
use crate::haystack::{
    build_scorer, complexity_experiment, derive_seed, load_dataset, materialize, run_benchmark, synth_haystack,
    write_complexity_csv, write_dataset, BenchOptions, ComplexityParams, HaystackInstance, Strategy, SynthParams,
    TStarParams,
};
use crate::metrics::{aggregate, evaluate_instance, EvalContext, MetricReport, SimilarityKind, SimilaritySpec};
use crate::model::{Keyframe, KeyframeSet};
use crate::scoring::{protocol, FileScorer, OracleParams, ScorerSpec};
use crate::search::{run_search_with, SearchOptions, SearchOutcome, TerminalReason};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tstar", about = "Budgeted keyframe search over long videos", disable_version_flag = true)]
struct Cli {
    /// Print name and version as JSON and exit.
    #[arg(long)]
    version: bool,
    /// Parallel instance workers (0 = one per core).
    #[arg(long, global = true, default_value_t = 0, env = "TSTAR_JOBS")]
    jobs: usize,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search every instance of a dataset for its keyframes.
    Search(SearchArgs),
    /// Score predictions against a dataset's reference keyframes.
    Eval(EvalArgs),
    /// Generate a synthetic haystack dataset.
    Simulate(SimulateArgs),
    /// Compare strategies on a dataset.
    Bench(BenchArgs),
    /// Measure iterations against video length and scorer accuracy.
    Complexity(ComplexityArgs),
    /// Answer scorer-protocol requests on stdin from a scores file.
    #[command(hide = true)]
    ServeScores(ServeArgs),
}

#[derive(Debug, Args, Serialize)]
struct SearchSettings {
    /// Scorer: `oracle[:sigma=..,cue_sigma=..,noise=..,p=..,cost=..]`,
    /// `file:<path>[,cost=..]` or `external:<command>`.
    #[arg(long, default_value = "oracle", env = "TSTAR_SCORER")]
    scorer: String,
    /// Grid side g; each iteration scores g² frames.
    #[arg(long, default_value_t = DEFAULT_GRID_SIDE, env = "TSTAR_GRID")]
    grid: usize,
    /// Frame budget; defaults to min(L, 1024).
    #[arg(long, env = "TSTAR_BUDGET")]
    budget: Option<usize>,
    /// Verification threshold.
    #[arg(long, default_value_t = DEFAULT_THETA, env = "TSTAR_THETA")]
    theta: f64,
    /// Propagation half-width in frames; defaults to 2.5 s of video.
    #[arg(long, env = "TSTAR_WINDOW")]
    window: Option<usize>,
    #[arg(long, default_value_t = 0, env = "TSTAR_SEED")]
    seed: u64,
}

impl SearchSettings {
    fn scorer_spec(&self) -> Result<ScorerSpec> {
        Ok(self.scorer.parse()?)
    }

    fn tstar(&self, k: usize) -> TStarParams {
        TStarParams {
            k,
            grid_side: self.grid,
            budget: self.budget,
            theta: self.theta,
            window: self.window,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct SearchArgs {
    #[arg(long, env = "TSTAR_DATASET")]
    dataset: PathBuf,
    #[command(flatten)]
    settings: SearchSettings,
    /// Keyframes returned per instance.
    #[arg(long, default_value_t = DEFAULT_K, env = "TSTAR_K")]
    k: usize,
    /// Write the distribution after every iteration as CSV.
    #[arg(long, env = "TSTAR_TRACE")]
    trace: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, env = "TSTAR_OUT")]
    out: Option<PathBuf>,
    /// Report wall-clock time (makes output differ between runs).
    #[arg(long, env = "TSTAR_TIMINGS")]
    timings: bool,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    /// Predictions: one `{"instance_id", "keyframes"}` record per line.
    #[arg(long, env = "TSTAR_PRED")]
    pred: PathBuf,
    #[arg(long, env = "TSTAR_DATASET")]
    dataset: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "temporal", env = "TSTAR_METRIC")]
    metric: Vec<MetricName>,
    /// Temporal tolerance in seconds.
    #[arg(long, default_value_t = crate::metrics::DEFAULT_TEMPORAL_THRESHOLD_S, env = "TSTAR_THRESHOLD")]
    threshold: f64,
    #[arg(long, env = "TSTAR_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MetricName {
    Temporal,
    Visual,
    Embedding,
}

impl MetricName {
    fn spec(self, threshold: f64) -> SimilaritySpec {
        let base = SimilaritySpec::temporal(threshold);
        let kind = match self {
            MetricName::Temporal => SimilarityKind::Temporal,
            MetricName::Visual => SimilarityKind::VisualSsim,
            MetricName::Embedding => SimilarityKind::EmbeddingCosine,
        };
        SimilaritySpec { kind, ..base }
    }
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long, default_value_t = 100, env = "TSTAR_N")]
    n: usize,
    #[arg(long, default_value_t = 18_000, env = "TSTAR_FRAMES")]
    frames: usize,
    #[arg(long, default_value_t = 30.0, env = "TSTAR_FPS")]
    fps: f64,
    /// Reference keyframes per instance.
    #[arg(long, default_value_t = 2, env = "TSTAR_KEYFRAMES")]
    keyframes: usize,
    /// Half of the minimum keyframe spacing, in frames.
    #[arg(long, env = "TSTAR_WINDOW")]
    window: Option<usize>,
    /// Leave the cue object out of the queries.
    #[arg(long, env = "TSTAR_NO_CUE")]
    no_cue: bool,
    /// Render PGM frames of this size, e.g. `32x32`.
    #[arg(long, value_parser = parse_size, env = "TSTAR_IMAGE_SIZE")]
    image_size: Option<(u32, u32)>,
    /// Write per-frame embeddings with this many dimensions.
    #[arg(long, env = "TSTAR_EMBEDDING_DIMS")]
    embedding_dims: Option<usize>,
    #[arg(long, default_value_t = 0, env = "TSTAR_SEED")]
    seed: u64,
    /// Directory receiving `dataset.jsonl` and `manifest.json`.
    #[arg(long, env = "TSTAR_OUT")]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BenchArgs {
    #[arg(long, env = "TSTAR_DATASET")]
    dataset: PathBuf,
    /// Comma-separated `uniform<n>`, `retrieval<n>` and `tstar[<k>]`.
    #[arg(long, value_delimiter = ',', default_value = "uniform8,uniform32,tstar", env = "TSTAR_STRATEGIES")]
    strategies: Vec<String>,
    #[command(flatten)]
    settings: SearchSettings,
    /// Visual and embedding metrics apply to instances that have the data.
    #[arg(long, value_delimiter = ',', default_value = "temporal,visual", env = "TSTAR_METRIC")]
    metric: Vec<MetricName>,
    #[arg(long, default_value_t = crate::metrics::DEFAULT_TEMPORAL_THRESHOLD_S, env = "TSTAR_THRESHOLD")]
    threshold: f64,
    #[arg(long, env = "TSTAR_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ComplexityArgs {
    #[arg(long, value_delimiter = ',', default_value = "4096,65536", env = "TSTAR_LENGTHS")]
    lengths: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1.0", env = "TSTAR_ACCURACIES")]
    accuracies: Vec<f64>,
    #[arg(long, default_value_t = 20, env = "TSTAR_TRIALS")]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_SIDE, env = "TSTAR_GRID")]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_THETA, env = "TSTAR_THETA")]
    theta: f64,
    /// Oracle locality scale of the needle, in frames.
    #[arg(long, env = "TSTAR_SIGMA")]
    sigma: Option<f64>,
    /// Oracle locality scale of the cue, in frames.
    #[arg(long, env = "TSTAR_CUE_SIGMA")]
    cue_sigma: Option<f64>,
    #[arg(long, env = "TSTAR_NO_CUE")]
    no_cue: bool,
    #[arg(long, default_value_t = 0, env = "TSTAR_SEED")]
    seed: u64,
    /// CSV output; a `.json` sidecar with the flags and full rows is written
    /// next to it.
    #[arg(long, env = "TSTAR_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    cost: f64,
}

fn parse_size(s: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = s.split_once('x').ok_or("expected WIDTHxHEIGHT")?;
    let w = w.parse().map_err(|_| "width is not an integer")?;
    let h = h.parse().map_err(|_| "height is not an integer")?;
    Ok((w, h))
}

/// Runs the command line in `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if cli.version {
        println!("{}", json!({"name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION")}));
        return EXIT_OK;
    }
    let Some(command) = cli.command else {
        eprintln!("tstar: a subcommand is required; see --help");
        return EXIT_ERROR;
    };
    let result = match command {
        Command::Search(a) => cmd_search(&a, cli.jobs),
        Command::Eval(a) => cmd_eval(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Bench(a) => cmd_bench(&a, cli.jobs),
        Command::Complexity(a) => cmd_complexity(&a, cli.jobs),
        Command::ServeScores(a) => cmd_serve(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("tstar: {e:#}");
            EXIT_ERROR
        }
    }
}

fn header(command: &str, args: &impl Serialize) -> serde_json::Value {
    json!({
        "type": "header",
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "args": args,
    })
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json_line(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn with_pool<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(work))
}

/// One line of `search` output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchRecord {
    pub instance_id: String,
    pub keyframes: Vec<Keyframe>,
    pub terminal_reason: TerminalReason,
    pub iterations: usize,
    pub frames_processed: usize,
    /// Only filled with `--timings`.
    pub wall_time_s: Option<f64>,
}

fn cmd_search(args: &SearchArgs, jobs: usize) -> Result<i32> {
    let dataset = load_dataset(&args.dataset)?;
    let spec = args.settings.scorer_spec()?;
    let params = args.settings.tstar(args.k);
    for instance in &dataset {
        validate_config(&params.config_for(instance, 0), &instance.video)
            .with_context(|| format!("instance {}", instance.instance_id))?;
    }
    let options = SearchOptions {
        record_distributions: args.trace.is_some(),
    };
    let run_one = |instance: &HaystackInstance| -> Result<SearchOutcome> {
        let seed = derive_seed(args.settings.seed, &instance.instance_id);
        let mut scorer = build_scorer(&spec, instance, seed)?;
        let cfg = params.config_for(instance, seed);
        Ok(run_search_with(&instance.video, &instance.query, &mut scorer, &cfg, options)?)
    };
    let outcomes: Vec<Result<SearchOutcome>> = with_pool(jobs, || dataset.par_iter().map(run_one).collect())?;

    let mut out = open_out(args.out.as_deref())?;
    let mut trace = match &args.trace {
        Some(p) => {
            let mut w = csv::Writer::from_path(p).with_context(|| format!("creating {}", p.display()))?;
            w.write_record(["instance_id", "iteration", "frame_index", "prob"])?;
            Some(w)
        }
        None => None,
    };
    let mut failed = 0;
    for (instance, outcome) in dataset.iter().zip(outcomes) {
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                eprintln!("tstar: instance {}: {e:#}", instance.instance_id);
                failed += 1;
                continue;
            }
        };
        if let Some(w) = trace.as_mut() {
            write_trace(w, &instance.instance_id, &outcome)?;
        }
        let record = SearchRecord {
            instance_id: instance.instance_id.clone(),
            keyframes: outcome.keyframes.entries.clone(),
            terminal_reason: outcome.terminal_reason(),
            iterations: outcome.iterations(),
            frames_processed: outcome.efficiency.frames_processed,
            wall_time_s: args.timings.then_some(outcome.efficiency.wall_time_s),
        };
        write_json_line(&mut out, &record)?;
    }
    out.flush()?;
    if let Some(mut w) = trace {
        w.flush()?;
    }
    Ok(if failed > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

/// Row `t` holds the distribution after `t` updates; row 0 is the uniform
/// start.
fn write_trace<W: Write>(w: &mut csv::Writer<W>, id: &str, outcome: &SearchOutcome) -> Result<()> {
    let snapshots = outcome
        .trace
        .iterations
        .iter()
        .filter_map(|r| r.prob_snapshot.as_ref())
        .chain(outcome.trace.final_prob.as_ref());
    for (t, prob) in snapshots.enumerate() {
        for (f, p) in prob.iter().enumerate() {
            w.write_record([id, &t.to_string(), &f.to_string(), &p.to_string()])?;
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct Prediction {
    instance_id: String,
    keyframes: Vec<Keyframe>,
}

fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), n + 1))?;
        if value.get("type").is_some_and(|t| t != "record") {
            continue;
        }
        out.push(serde_json::from_value(value).with_context(|| format!("{} line {}", path.display(), n + 1))?);
    }
    Ok(out)
}

fn cmd_eval(args: &EvalArgs) -> Result<i32> {
    let dataset = load_dataset(&args.dataset)?;
    let by_id: HashMap<&str, &HaystackInstance> = dataset.iter().map(|i| (i.instance_id.as_str(), i)).collect();
    let predictions = read_predictions(&args.pred)?;
    let specs: Vec<SimilaritySpec> = args.metric.iter().map(|m| m.spec(args.threshold)).collect();
    for p in &predictions {
        if !by_id.contains_key(p.instance_id.as_str()) {
            bail!("prediction for unknown instance {:?}", p.instance_id);
        }
    }
    let mut out = open_out(args.out.as_deref())?;
    let mut all: Vec<MetricReport> = Vec::new();
    for p in &predictions {
        let instance = by_id[p.instance_id.as_str()];
        let pairs = p.keyframes.iter().map(|k| (k.index, k.score));
        let predicted = KeyframeSet::from_scored(pairs, instance.video.fps);
        let frames = instance.video.frame_store.as_ref().map(FrameStore::new);
        let embeddings = instance.embeddings.as_ref().map(EmbeddingMatrix::open).transpose()?;
        let ctx = EvalContext {
            frames: frames.as_ref(),
            embeddings: embeddings.as_ref(),
        };
        let reports = evaluate_instance(&predicted, &instance.reference_keyframes, &instance.video, &specs, &ctx)
            .with_context(|| format!("instance {}", p.instance_id))?;
        write_json_line(
            &mut out,
            &json!({"type": "instance", "instance_id": p.instance_id, "metrics": reports}),
        )?;
        all.extend(reports);
    }
    let rows: Vec<serde_json::Value> = aggregate(&all)
        .iter()
        .map(|a| {
            let (p, r, f) = a.percentages();
            json!({"kind": a.kind, "precision": p, "recall": r, "f1": f, "instances": a.instances})
        })
        .collect();
    write_json_line(&mut out, &json!({"type": "aggregate", "metrics": rows}))?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let params = SynthParams {
        frame_count: args.frames,
        fps: args.fps,
        keyframes_per_instance: args.keyframes,
        window: args.window,
        with_cue: !args.no_cue,
        oracle: OracleParams::default(),
        frame_image_size: args.image_size,
        embedding_dims: args.embedding_dims,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut data = synth_haystack(&params, args.n, &mut rng)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    materialize(&mut data, &params, &args.out, args.seed)?;
    let path = args.out.join("dataset.jsonl");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_dataset(BufWriter::new(file), &data)?;
    let mut manifest = header("simulate", args);
    manifest["params"] = serde_json::to_value(&params)?;
    let mut w = BufWriter::new(File::create(args.out.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(EXIT_OK)
}

fn cmd_bench(args: &BenchArgs, jobs: usize) -> Result<i32> {
    let dataset = load_dataset(&args.dataset)?;
    let strategies: Vec<Strategy> = args
        .strategies
        .iter()
        .map(|s| {
            let parsed: Strategy = s.parse().map_err(|e: String| anyhow!(e))?;
            Ok(match parsed {
                Strategy::Tstar(p) => Strategy::Tstar(args.settings.tstar(p.k)),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    for strategy in &strategies {
        if let Strategy::Tstar(p) = strategy {
            for instance in &dataset {
                validate_config(&p.config_for(instance, 0), &instance.video)
                    .with_context(|| format!("{strategy} on instance {}", instance.instance_id))?;
            }
        }
    }
    let options = BenchOptions {
        scorer: args.settings.scorer_spec()?,
        metrics: args.metric.iter().map(|m| m.spec(args.threshold)).collect(),
        seed: args.settings.seed,
        jobs,
    };
    let report = run_benchmark(&dataset, &strategies, &options);

    let mut out = open_out(args.out.as_deref())?;
    write_json_line(&mut out, &header("bench", args))?;
    for record in &report.records {
        let mut value = serde_json::to_value(record)?;
        value["type"] = json!("record");
        write_json_line(&mut out, &value)?;
    }
    for failure in &report.failures {
        let mut value = serde_json::to_value(failure)?;
        value["type"] = json!("failure");
        write_json_line(&mut out, &value)?;
    }
    for summary in &report.summaries {
        let mut value = serde_json::to_value(summary)?;
        value["type"] = json!("summary");
        value["percentages"] = summary
            .metrics
            .iter()
            .map(|a| {
                let (p, r, f) = a.percentages();
                json!({"kind": a.kind, "precision": p, "recall": r, "f1": f})
            })
            .collect();
        write_json_line(&mut out, &value)?;
    }
    out.flush()?;
    for failure in &report.failures {
        eprintln!("tstar: {} on {}: {}", failure.strategy, failure.instance_id, failure.error);
    }
    Ok(if report.failures.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

fn cmd_complexity(args: &ComplexityArgs, jobs: usize) -> Result<i32> {
    let mut params = ComplexityParams {
        lengths: args.lengths.clone(),
        accuracies: args.accuracies.clone(),
        trials: args.trials,
        grid_side: args.grid,
        theta: args.theta,
        with_cue: !args.no_cue,
        seed: args.seed,
        jobs,
        ..ComplexityParams::default()
    };
    if let Some(s) = args.sigma {
        params.oracle.locality_sigma = s;
    }
    if let Some(s) = args.cue_sigma {
        params.oracle.cue_sigma = s;
    }
    let rows = complexity_experiment(&params)?;
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_complexity_csv(BufWriter::new(file), &rows)?;
            let mut sidecar = header("complexity", args);
            sidecar["params"] = serde_json::to_value(&params)?;
            sidecar["rows"] = serde_json::to_value(&rows)?;
            let side = path.with_extension("json");
            let mut w = BufWriter::new(File::create(&side).with_context(|| format!("creating {}", side.display()))?);
            serde_json::to_writer_pretty(&mut w, &sidecar)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        None => write_complexity_csv(io::stdout().lock(), &rows)?,
    }
    Ok(EXIT_OK)
}

fn cmd_serve(args: &ServeArgs) -> Result<i32> {
    let mut scorer = FileScorer::open(&args.scores, args.cost)?;
    let stdin = io::stdin().lock();
    let stdout = io::stdout().lock();
    protocol::serve(stdin, stdout, &mut scorer)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("tstar").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_args(&[]), EXIT_ERROR);
        assert_eq!(run_args(&["frobnicate"]), EXIT_ERROR);
        assert_eq!(run_args(&["search"]), EXIT_ERROR);
        assert_eq!(run_args(&["--version"]), EXIT_OK);
    }

    #[test]
    fn size_parser() {
        assert_eq!(parse_size("32x24"), Ok((32, 24)));
        assert!(parse_size("32").is_err());
        assert!(parse_size("ax3").is_err());
    }

    #[test]
    fn simulate_search_eval_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        let data = d.join("data");
        let s = |p: &Path| p.to_str().unwrap().to_string();
        assert_eq!(
            run_args(&["simulate", "--n", "3", "--frames", "3000", "--seed", "4", "--out", &s(&data)]),
            EXIT_OK
        );
        let dataset = data.join("dataset.jsonl");
        assert_eq!(std::fs::read_to_string(&dataset).unwrap().lines().count(), 3);
        assert!(data.join("manifest.json").exists());

        let pred = d.join("pred.jsonl");
        assert_eq!(
            run_args(&["search", "--dataset", &s(&dataset), "--out", &s(&pred), "--budget", "256"]),
            EXIT_OK
        );
        let lines: Vec<SearchRecord> = std::fs::read_to_string(&pred)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|r| r.frames_processed <= 256 && r.wall_time_s.is_none()));

        let report = d.join("eval.jsonl");
        assert_eq!(
            run_args(&["eval", "--pred", &s(&pred), "--dataset", &s(&dataset), "--out", &s(&report)]),
            EXIT_OK
        );
        let text = std::fs::read_to_string(&report).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().last().unwrap().contains("\"aggregate\""));

        assert_eq!(
            run_args(&["search", "--dataset", &s(&dataset), "--budget", "10", "--grid", "8"]),
            EXIT_ERROR
        );
    }
}
