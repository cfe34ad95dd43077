//! Keyframe selection strategies: uniform and retrieval baselines and the
//! iterative search.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HaystackInstance;
use crate::config::{default_max_iterations, SearchConfig, DEFAULT_GRID_SIDE, DEFAULT_K, DEFAULT_THETA};
use crate::model::KeyframeSet;
use crate::sampling::GridLayout;
use crate::scoring::{cell_confidence, score_grid, Scorer};
use crate::search::{run_search, EfficiencyReport, SearchError, SearchTrace, TerminalReason};

/// Search settings that override the per-video defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TStarParams {
    pub k: usize,
    pub grid_side: usize,
    /// `None` keeps the default `min(L, 1024)`.
    pub budget: Option<usize>,
    pub theta: f64,
    pub window: Option<usize>,
}

impl Default for TStarParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            grid_side: DEFAULT_GRID_SIDE,
            budget: None,
            theta: DEFAULT_THETA,
            window: None,
        }
    }
}

impl TStarParams {
    pub fn config_for(&self, instance: &HaystackInstance, seed: u64) -> SearchConfig {
        let mut cfg = SearchConfig::for_video(&instance.video);
        cfg.k = self.k;
        cfg.grid_side = self.grid_side;
        cfg.theta = self.theta;
        cfg.seed = seed;
        cfg.max_iterations = default_max_iterations(instance.video.frame_count, self.grid_side);
        if let Some(b) = self.budget {
            cfg.budget = b;
        }
        if let Some(w) = self.window {
            cfg.window = w;
        }
        cfg
    }
}

/// How keyframes are chosen. Written `uniform<n>`, `retrieval<n>` and
/// `tstar[<k>]`, e.g. `uniform8` or `tstar`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    Uniform { n: usize },
    Retrieval { n: usize },
    Tstar(TStarParams),
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Uniform { n } => write!(f, "uniform{n}"),
            Strategy::Retrieval { n } => write!(f, "retrieval{n}"),
            Strategy::Tstar(p) if p.k == DEFAULT_K => f.write_str("tstar"),
            Strategy::Tstar(p) => write!(f, "tstar{}", p.k),
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let count = |digits: &str| -> Result<usize, String> {
            match digits.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(format!("strategy {s:?} needs a positive frame count")),
            }
        };
        if let Some(rest) = s.strip_prefix("uniform") {
            Ok(Strategy::Uniform { n: count(rest)? })
        } else if let Some(rest) = s.strip_prefix("retrieval") {
            Ok(Strategy::Retrieval { n: count(rest)? })
        } else if let Some(rest) = s.strip_prefix("tstar") {
            let k = if rest.is_empty() { DEFAULT_K } else { count(rest)? };
            Ok(Strategy::Tstar(TStarParams {
                k,
                ..TStarParams::default()
            }))
        } else {
            Err(format!("unknown strategy {s:?}; expected uniform<n>, retrieval<n> or tstar[<k>]"))
        }
    }
}

/// What one strategy produced on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRun {
    pub keyframes: KeyframeSet,
    pub efficiency: EfficiencyReport,
    pub iterations: usize,
    pub terminal_reason: Option<TerminalReason>,
}

/// `n` evenly spaced indices with both endpoints included:
/// `round(i·(L−1)/(n−1))`. A single frame is the middle one.
pub fn uniform_indices(frame_count: usize, n: usize) -> Vec<usize> {
    if frame_count == 0 || n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![(frame_count - 1) / 2];
    }
    let last = (frame_count - 1) as f64;
    let mut out: Vec<usize> = (0..n)
        .map(|i| (i as f64 * last / (n - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

pub fn run_strategy<S: Scorer + ?Sized>(
    strategy: &Strategy,
    instance: &HaystackInstance,
    scorer: &mut S,
    seed: u64,
) -> Result<StrategyRun, SearchError> {
    let fps = instance.video.fps;
    match strategy {
        Strategy::Uniform { n } => Ok(StrategyRun {
            keyframes: KeyframeSet::from_scored(
                uniform_indices(instance.video.frame_count, *n).into_iter().map(|i| (i, 0.0)),
                fps,
            ),
            efficiency: EfficiencyReport::default(),
            iterations: 0,
            terminal_reason: None,
        }),
        Strategy::Retrieval { n } => {
            let len = instance.video.frame_count;
            let mut scored = Vec::with_capacity(len);
            for frame in 0..len {
                let detections = score_grid(scorer, &GridLayout::single(frame), &instance.query).map_err(|source| {
                    SearchError::Scorer {
                        source,
                        partial: Box::new(SearchTrace {
                            iterations: Vec::new(),
                            terminal_reason: None,
                            final_prob: None,
                        }),
                    }
                })?;
                scored.push((frame, cell_confidence(&detections.cells[0].detections, &instance.query)));
            }
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            scored.truncate(*n);
            Ok(StrategyRun {
                keyframes: KeyframeSet::from_scored(scored, fps),
                efficiency: EfficiencyReport {
                    frames_processed: len,
                    scorer_calls: len,
                    cost_units: len as f64 * scorer.cost_units_per_frame(),
                    ..EfficiencyReport::default()
                },
                iterations: 0,
                terminal_reason: None,
            })
        }
        Strategy::Tstar(params) => {
            let cfg = params.config_for(instance, seed);
            let outcome = run_search(&instance.video, &instance.query, scorer, &cfg)?;
            Ok(StrategyRun {
                iterations: outcome.iterations(),
                terminal_reason: outcome.trace.terminal_reason,
                keyframes: outcome.keyframes,
                efficiency: outcome.efficiency,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haystack::{synth_haystack, SynthParams};
    use crate::scoring::{OracleParams, OracleScorer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(frame_count: usize) -> HaystackInstance {
        let params = SynthParams {
            frame_count,
            keyframes_per_instance: 1,
            window: Some(1),
            ..SynthParams::default()
        };
        synth_haystack(&params, 1, &mut ChaCha8Rng::seed_from_u64(9)).unwrap().remove(0)
    }

    fn oracle(inst: &HaystackInstance) -> OracleScorer {
        OracleScorer::for_references(OracleParams::default(), &inst.query, &inst.reference_indices(), 0)
    }

    #[test]
    fn uniform_endpoint_formula() {
        assert_eq!(uniform_indices(100, 2), vec![0, 99]);
        assert_eq!(uniform_indices(8, 8), (0..8).collect::<Vec<_>>());
        assert_eq!(uniform_indices(10, 4), vec![0, 3, 6, 9]);
        assert_eq!(uniform_indices(5, 9), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn uniform_covers_tiny_video_at_no_cost() {
        let inst = instance(8);
        let run = run_strategy(&Strategy::Uniform { n: 8 }, &inst, &mut oracle(&inst), 0).unwrap();
        assert_eq!(run.keyframes.len(), 8);
        assert_eq!(run.efficiency.frames_processed, 0);
        assert!(run.keyframes.indices().contains(&inst.reference_indices()[0]));
    }

    #[test]
    fn retrieval_picks_frames_nearest_the_needle() {
        let inst = instance(2_000);
        let needle = inst.reference_indices()[0];
        let run = run_strategy(&Strategy::Retrieval { n: 8 }, &inst, &mut oracle(&inst), 0).unwrap();
        assert_eq!(run.efficiency.frames_processed, 2_000);
        let mut got = run.keyframes.indices();
        got.sort_unstable();
        let mut want: Vec<usize> = (0..2_000).collect();
        want.sort_by_key(|&f| (f.abs_diff(needle), f));
        want.truncate(8);
        want.sort_unstable();
        assert_eq!(got, want);
    }

    #[test]
    fn tstar_stays_within_budget() {
        let inst = instance(5_000);
        let strategy = Strategy::Tstar(TStarParams {
            budget: Some(256),
            ..TStarParams::default()
        });
        let run = run_strategy(&strategy, &inst, &mut oracle(&inst), 3).unwrap();
        assert!(run.efficiency.frames_processed <= 256);
        assert_eq!(run.keyframes.len(), 8);
        assert!(run.terminal_reason.is_some());
    }

    #[test]
    fn names_round_trip() {
        for name in ["uniform8", "uniform32", "retrieval16", "tstar", "tstar32"] {
            assert_eq!(name.parse::<Strategy>().unwrap().to_string(), name);
        }
        for bad in ["uniform", "uniform0", "tstarx", "random8"] {
            assert!(bad.parse::<Strategy>().is_err(), "{bad}");
        }
    }
}
