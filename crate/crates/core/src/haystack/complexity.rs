//! How the number of search iterations scales with video length and scorer
//! accuracy.
//!
//! Each trial plants one needle uniformly at random in a video of `L` frames
//! and searches for it with an oracle of heuristic accuracy `p`, with the
//! budget set to the whole video.
//!
//! The default oracle detects the needle only within about five frames
//! (`sigma = 10`, `theta = 0.6`) and spreads a cue over a few hundred. With an
//! honest scorer the cue funnels the search to the needle in a handful of
//! iterations; when most grids are scrambled the narrow detection band is
//! rarely hit and the search degrades to scanning the video.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, HaystackError, CUE_LABEL, TARGET_LABEL};
use crate::config::{default_max_iterations, SearchConfig};
use crate::model::{GroundedQuery, VideoSource, WeightedObject};
use crate::scoring::{OracleParams, OracleScorer};
use crate::search::{run_search, SearchError, TerminalReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityParams {
    pub lengths: Vec<usize>,
    pub accuracies: Vec<f64>,
    pub trials: usize,
    pub grid_side: usize,
    pub theta: f64,
    pub fps: f64,
    /// Oracle shape; `heuristic_accuracy` is replaced by each entry of
    /// `accuracies`.
    pub oracle: OracleParams,
    pub with_cue: bool,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide. Not serialized.
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for ComplexityParams {
    fn default() -> Self {
        Self {
            lengths: vec![4_096, 65_536],
            accuracies: vec![1.0],
            trials: 20,
            grid_side: 8,
            theta: crate::config::DEFAULT_THETA,
            fps: 30.0,
            oracle: OracleParams {
                locality_sigma: 10.0,
                cue_sigma: 300.0,
                ..OracleParams::default()
            },
            with_cue: true,
            seed: 0,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub frame_count: usize,
    pub accuracy: f64,
    pub trials: usize,
    pub mean_iterations: f64,
    pub sd_iterations: f64,
    pub mean_frames: f64,
    pub sd_frames: f64,
    /// Fraction of trials that verified the needle.
    pub found_rate: f64,
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    iterations: usize,
    frames: usize,
    found: bool,
}

/// One row per `(L, p)`, lengths outermost.
pub fn complexity_experiment(params: &ComplexityParams) -> Result<Vec<ComplexityRow>, HaystackError> {
    if params.trials == 0 {
        return Err(HaystackError::Params("trials must be at least 1".into()));
    }
    if params.grid_side == 0 || params.lengths.iter().any(|&l| l < params.grid_side * params.grid_side) {
        return Err(HaystackError::Params("every length must hold at least one full grid".into()));
    }
    if params.accuracies.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
        return Err(HaystackError::Params("accuracies must lie in (0, 1]".into()));
    }
    params.oracle.validate().map_err(HaystackError::Params)?;

    let cells: Vec<(usize, f64)> = params
        .lengths
        .iter()
        .flat_map(|&l| params.accuracies.iter().map(move |&p| (l, p)))
        .collect();
    let jobs: Vec<(usize, f64, usize)> = cells
        .iter()
        .flat_map(|&(l, p)| (0..params.trials).map(move |t| (l, p, t)))
        .collect();
    let work = || -> Result<Vec<Trial>, SearchError> {
        jobs.par_iter().map(|&(l, p, t)| run_trial(params, l, p, t)).collect()
    };
    let trials = match rayon::ThreadPoolBuilder::new().num_threads(params.jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
    .map_err(|e| HaystackError::Params(e.to_string()))?;

    Ok(cells
        .iter()
        .zip(trials.chunks(params.trials))
        .map(|(&(frame_count, accuracy), runs)| {
            let (mean_iterations, sd_iterations) = mean_sd(runs.iter().map(|r| r.iterations as f64));
            let (mean_frames, sd_frames) = mean_sd(runs.iter().map(|r| r.frames as f64));
            ComplexityRow {
                frame_count,
                accuracy,
                trials: runs.len(),
                mean_iterations,
                sd_iterations,
                mean_frames,
                sd_frames,
                found_rate: runs.iter().filter(|r| r.found).count() as f64 / runs.len() as f64,
            }
        })
        .collect())
}

/// Mean and sample standard deviation (0 for a single value).
fn mean_sd(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let values: Vec<f64> = values.collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_trial(params: &ComplexityParams, frame_count: usize, accuracy: f64, trial: usize) -> Result<Trial, SearchError> {
    let seed = derive_seed(params.seed, &format!("{frame_count}/{accuracy}/{trial}"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let needle = rng.random_range(0..frame_count);
    let video = VideoSource::new(format!("needle-{trial}"), frame_count, params.fps)?;
    let cues = if params.with_cue {
        vec![WeightedObject::cue(CUE_LABEL)]
    } else {
        Vec::new()
    };
    let query = GroundedQuery::new("Where is the needle?", vec![WeightedObject::target(TARGET_LABEL)], cues)?;
    let oracle = OracleParams {
        heuristic_accuracy: accuracy,
        ..params.oracle.clone()
    };
    let mut scorer = OracleScorer::for_references(oracle, &query, &[needle], rng.random());
    let mut cfg = SearchConfig::for_video(&video);
    cfg.grid_side = params.grid_side;
    cfg.theta = params.theta;
    cfg.budget = frame_count;
    cfg.k = 1;
    cfg.seed = rng.random();
    cfg.max_iterations = default_max_iterations(frame_count, params.grid_side);
    let outcome = run_search(&video, &query, &mut scorer, &cfg)?;
    Ok(Trial {
        iterations: outcome.iterations(),
        frames: outcome.efficiency.frames_processed,
        found: outcome.terminal_reason() == TerminalReason::AllTargetsFound,
    })
}

/// Writes the table with columns `L, p, mean_iterations, sd_iterations,
/// mean_frames`.
pub fn write_complexity_csv<W: Write>(out: W, rows: &[ComplexityRow]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["L", "p", "mean_iterations", "sd_iterations", "mean_frames"])?;
    for r in rows {
        writer.write_record([
            r.frame_count.to_string(),
            r.accuracy.to_string(),
            format!("{:.4}", r.mean_iterations),
            format!("{:.4}", r.sd_iterations),
            format!("{:.4}", r.mean_frames),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
