//! The iterative keyframe search.
//!
//! Each iteration draws up to `g²` unvisited frames from the current
//! distribution, scores them as one grid, verifies cells that claim a
//! still-missing target, spreads scores to temporal neighbours and rebuilds
//! the distribution. The run ends when every target is verified, the budget is
//! spent, every frame has been visited or the iteration cap is hit; the
//! highest-scoring frames are then returned.
//!
//! The budget counts every frame shown to the scorer: grid cells and
//! verification re-scores alike. A final grid smaller than `g²` is used when
//! the remaining budget or the unvisited frames run short, and only the frames
//! actually drawn are charged.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{validate_config, ConfigError, SearchConfig};
use crate::distribution::{apply_scores, propagate_window, rebuild_probability, DistributionError};
use crate::model::{GroundedQuery, KeyframeSet, ScoreState, VideoSource};
use crate::sampling::{build_grid, weighted_sample_without_replacement, GridError};
use crate::scoring::{cell_confidence, score_grid, verify, Scorer, ScorerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    AllTargetsFound,
    BudgetExhausted,
    AllFramesVisited,
    MaxIterations,
}

impl std::fmt::Display for TerminalReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TerminalReason::AllTargetsFound => "all_targets_found",
            TerminalReason::BudgetExhausted => "budget_exhausted",
            TerminalReason::AllFramesVisited => "all_frames_visited",
            TerminalReason::MaxIterations => "max_iterations",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration_no: usize,
    /// Frames in grid (ascending) order.
    pub sampled_indices: Vec<usize>,
    pub cell_confidences: Vec<f64>,
    /// Query labels each cell reported at or above the threshold.
    pub detected_labels_per_cell: Vec<Vec<String>>,
    /// Frames that passed verification this iteration.
    pub verified: Vec<usize>,
    /// The distribution this iteration's frames were drawn from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob_snapshot: Option<Vec<f64>>,
    pub remaining_targets: Vec<String>,
    pub budget_remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub iterations: Vec<IterationRecord>,
    pub terminal_reason: Option<TerminalReason>,
    /// Distribution after the last update, kept when snapshots are on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_prob: Option<Vec<f64>>,
}

impl SearchTrace {
    pub fn frames_sampled(&self) -> usize {
        self.iterations.iter().map(|r| r.sampled_indices.len()).sum()
    }
}

/// Frame cost and compute accounting for one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    /// Grid-sampled frames plus verification re-scores.
    pub frames_processed: usize,
    pub scorer_calls: usize,
    pub verify_calls: usize,
    pub grounding_calls: usize,
    pub cost_units: f64,
    /// Wall-clock time; left out of serialized output so that reruns are
    /// byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl EfficiencyReport {
    pub fn accumulate(&mut self, other: &EfficiencyReport) {
        self.frames_processed += other.frames_processed;
        self.scorer_calls += other.scorer_calls;
        self.verify_calls += other.verify_calls;
        self.grounding_calls += other.grounding_calls;
        self.cost_units += other.cost_units;
        self.wall_time_s += other.wall_time_s;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub keyframes: KeyframeSet,
    pub trace: SearchTrace,
    pub efficiency: EfficiencyReport,
}

impl SearchOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.iterations.len()
    }

    pub fn terminal_reason(&self) -> TerminalReason {
        self.trace.terminal_reason.expect("completed search has a terminal reason")
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scorer failed after {} iterations: {source}", partial.iterations.len())]
    Scorer {
        source: ScorerError,
        partial: Box<SearchTrace>,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// Knobs that do not change the search itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct SearchOptions {
    /// Keep the full distribution in every trace record (O(iterations × L)).
    pub record_distributions: bool,
}

/// Runs a search with default options.
pub fn run_search<S: Scorer + ?Sized>(
    video: &VideoSource,
    query: &GroundedQuery,
    scorer: &mut S,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    run_search_with(video, query, scorer, cfg, SearchOptions::default())
}

pub fn run_search_with<S: Scorer + ?Sized>(
    video: &VideoSource,
    query: &GroundedQuery,
    scorer: &mut S,
    cfg: &SearchConfig,
    options: SearchOptions,
) -> Result<SearchOutcome, SearchError> {
    validate_config(cfg, video)?;
    query.validate()?;
    let started = Instant::now();
    let frame_count = video.frame_count;
    let mut state = ScoreState::new(frame_count);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut remaining: BTreeSet<String> = query.targets.iter().map(|o| o.label.clone()).collect();
    let mut found: Vec<usize> = Vec::new();
    let mut budget = cfg.budget;
    let mut unvisited = frame_count;
    let mut trace = SearchTrace {
        iterations: Vec::new(),
        terminal_reason: None,
        final_prob: None,
    };
    let mut efficiency = EfficiencyReport::default();
    let cost_per_frame = scorer.cost_units_per_frame();

    let reason = loop {
        if remaining.is_empty() {
            break TerminalReason::AllTargetsFound;
        }
        if budget == 0 {
            break TerminalReason::BudgetExhausted;
        }
        if unvisited == 0 {
            break TerminalReason::AllFramesVisited;
        }
        if trace.iterations.len() >= cfg.max_iterations {
            break TerminalReason::MaxIterations;
        }

        let draw = cfg.cells_per_grid().min(budget).min(unvisited);
        let mut weights = state.sampling_weights();
        if !weights.iter().any(|w| *w > 0.0) {
            weights = state.visited.iter().map(|v| if *v { 0.0 } else { 1.0 }).collect();
        }
        let indices = weighted_sample_without_replacement(&weights, draw, &mut rng);
        let grid = build_grid(&indices, cfg.grid_side)?;
        budget -= indices.len();
        unvisited -= indices.len();
        efficiency.frames_processed += indices.len();
        efficiency.scorer_calls += 1;

        let snapshot = options.record_distributions.then(|| state.prob.clone());
        let detections = match score_grid(scorer, &grid, query) {
            Ok(d) => d,
            Err(source) => {
                trace.terminal_reason = None;
                return Err(SearchError::Scorer {
                    source,
                    partial: Box::new(trace),
                });
            }
        };

        let confidences: Vec<f64> = detections
            .cells
            .iter()
            .map(|c| cell_confidence(&c.detections, query))
            .collect();
        let detected: Vec<Vec<String>> = detections
            .cells
            .iter()
            .map(|c| {
                let mut labels: Vec<String> = c
                    .detections
                    .iter()
                    .filter(|d| query.weight_of(&d.label) > 0.0 && d.confidence >= cfg.theta)
                    .map(|d| d.label.clone())
                    .collect();
                labels.sort();
                labels.dedup();
                labels
            })
            .collect();
        let pairs: Vec<(usize, f64)> = detections
            .cells
            .iter()
            .zip(&confidences)
            .map(|(c, conf)| (c.frame, *conf))
            .collect();
        apply_scores(&mut state, &pairs)?;

        // Candidates in descending confidence; the best cell claims a target
        // first and later cells only verify if they still add something.
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by(|&a, &b| confidences[b].total_cmp(&confidences[a]).then(a.cmp(&b)));
        let mut verified = Vec::new();
        for cell in order {
            if budget == 0 || remaining.is_empty() {
                break;
            }
            let claimed: Vec<&String> = detected[cell]
                .iter()
                .filter(|l| remaining.contains(l.as_str()))
                .collect();
            if claimed.is_empty() {
                continue;
            }
            let frame = pairs[cell].0;
            budget -= 1;
            efficiency.frames_processed += 1;
            efficiency.verify_calls += 1;
            let confidence = match verify(scorer, frame, query) {
                Ok(c) => c,
                Err(source) => {
                    return Err(SearchError::Scorer {
                        source,
                        partial: Box::new(trace),
                    })
                }
            };
            if confidence > cfg.theta {
                for label in claimed.into_iter().cloned().collect::<Vec<_>>() {
                    remaining.remove(&label);
                }
                found.push(frame);
                verified.push(frame);
            }
        }

        for &(frame, _) in &pairs {
            propagate_window(&mut state, frame, cfg.window);
        }
        rebuild_probability(&mut state, cfg.prob_floor)?;

        trace.iterations.push(IterationRecord {
            iteration_no: trace.iterations.len() + 1,
            sampled_indices: pairs.iter().map(|p| p.0).collect(),
            cell_confidences: confidences,
            detected_labels_per_cell: detected,
            verified,
            prob_snapshot: snapshot,
            remaining_targets: remaining.iter().cloned().collect(),
            budget_remaining: budget,
        });
    };

    trace.terminal_reason = Some(reason);
    if options.record_distributions {
        trace.final_prob = Some(state.prob.clone());
    }
    efficiency.cost_units = cost_per_frame * efficiency.frames_processed as f64;
    efficiency.wall_time_s = started.elapsed().as_secs_f64();
    let keyframes = select_with_verified(&state, &found, cfg.k, video.fps);
    Ok(SearchOutcome {
        keyframes,
        trace,
        efficiency,
    })
}

/// The `k` best frames by score (ties to the lower index). When fewer than
/// `k` frames score above zero the rest are evenly spaced frames, preferring
/// unvisited ones.
pub fn select_topk(state: &ScoreState, k: usize, fps: f64) -> KeyframeSet {
    select_with_verified(state, &[], k, fps)
}

fn select_with_verified(state: &ScoreState, verified: &[usize], k: usize, fps: f64) -> KeyframeSet {
    let len = state.len();
    let k = k.min(len);
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut taken = vec![false; len];
    for &f in verified {
        if chosen.len() < k && !taken[f] {
            taken[f] = true;
            chosen.push(f);
        }
    }
    let mut ranked: Vec<usize> = (0..len).filter(|&i| state.scores[i] > 0.0 && !taken[i]).collect();
    ranked.sort_by(|&a, &b| state.scores[b].total_cmp(&state.scores[a]).then(a.cmp(&b)));
    for i in ranked {
        if chosen.len() == k {
            break;
        }
        taken[i] = true;
        chosen.push(i);
    }
    let missing = k - chosen.len();
    for slot in 0..missing {
        let target = slot * len / missing;
        let pick = nearest_free(&taken, &state.visited, target, true)
            .or_else(|| nearest_free(&taken, &state.visited, target, false));
        if let Some(i) = pick {
            taken[i] = true;
            chosen.push(i);
        }
    }
    KeyframeSet::from_scored(chosen.into_iter().map(|i| (i, state.scores[i])), fps)
}

fn nearest_free(taken: &[bool], visited: &[bool], target: usize, unvisited_only: bool) -> Option<usize> {
    let ok = |i: usize| !taken[i] && !(unvisited_only && visited[i]);
    (0..taken.len()).find_map(|step| {
        if target >= step && ok(target - step) {
            Some(target - step)
        } else if target + step < taken.len() && ok(target + step) {
            Some(target + step)
        } else {
            None
        }
    })
}
