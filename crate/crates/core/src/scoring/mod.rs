//! Scorers turn a grid of frames into per-cell object detections.
//!
//! A scorer never sees pixels: it receives the cell → frame mapping and the
//! grounded query, and answers with `(label, confidence)` lists. Composing a
//! real image grid for a neural detector is the business of an external
//! plugin speaking the [`protocol`].

mod external;
mod file;
mod oracle;
pub mod protocol;

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::GroundedQuery;
use crate::sampling::GridLayout;

pub use external::ExternalScorer;
pub use file::{parse_scores, FileScorer};
pub use oracle::{OracleParams, OracleScorer};

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("scores file {path}: {reason}")]
    ScoresFile { path: PathBuf, reason: String },
    #[error("scores file line {line}: {reason}")]
    ScoresLine { line: usize, reason: String },
    #[error("external scorer: {0}")]
    External(String),
    #[error("external scorer i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid scorer spec {spec:?}: {reason}")]
    Spec { spec: String, reason: String },
    #[error("grid has no filled cells")]
    EmptyGrid,
}

/// One detected object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub confidence: f64,
}

impl Detection {
    pub fn new(label: impl Into<String>, confidence: f64) -> Self {
        Self {
            label: label.into(),
            confidence,
        }
    }
}

/// Detections for one filled grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: usize,
    pub frame: usize,
    pub detections: Vec<Detection>,
}

/// Exactly one entry per filled cell, in cell order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellDetections {
    pub cells: Vec<CellResult>,
}

pub trait Scorer {
    /// Detects query objects in every filled cell of `grid`.
    fn score_grid(&mut self, grid: &GridLayout, query: &GroundedQuery) -> Result<CellDetections, ScorerError>;

    /// Re-scores a single frame on its own. The default scores a 1×1 grid.
    fn score_frame(&mut self, frame: usize, query: &GroundedQuery) -> Result<Vec<Detection>, ScorerError> {
        let result = self.score_grid(&GridLayout::single(frame), query)?;
        Ok(result
            .cells
            .into_iter()
            .next()
            .map(|c| c.detections)
            .unwrap_or_default())
    }

    /// Abstract compute units charged per frame examined.
    fn cost_units_per_frame(&self) -> f64 {
        1.0
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn score_grid(&mut self, grid: &GridLayout, query: &GroundedQuery) -> Result<CellDetections, ScorerError> {
        (**self).score_grid(grid, query)
    }

    fn score_frame(&mut self, frame: usize, query: &GroundedQuery) -> Result<Vec<Detection>, ScorerError> {
        (**self).score_frame(frame, query)
    }

    fn cost_units_per_frame(&self) -> f64 {
        (**self).cost_units_per_frame()
    }
}

/// Scores `grid`, checking the scorer answered every filled cell exactly once.
pub fn score_grid<S: Scorer + ?Sized>(
    scorer: &mut S,
    grid: &GridLayout,
    query: &GroundedQuery,
) -> Result<CellDetections, ScorerError> {
    if grid.filled_count() == 0 {
        return Err(ScorerError::EmptyGrid);
    }
    let mut result = scorer.score_grid(grid, query)?;
    result.cells.sort_by_key(|c| c.cell);
    let expected: Vec<(usize, usize)> = grid.filled().collect();
    let got: Vec<(usize, usize)> = result.cells.iter().map(|c| (c.cell, c.frame)).collect();
    if expected != got {
        return Err(ScorerError::External(format!(
            "scorer answered cells {got:?}, expected {expected:?}"
        )));
    }
    Ok(result)
}

/// Cell confidence: the best `confidence × weight` over the cell's
/// detections. Labels outside the query weigh 0; an empty cell scores 0.
pub fn cell_confidence(detections: &[Detection], query: &GroundedQuery) -> f64 {
    detections
        .iter()
        .map(|d| d.confidence.clamp(0.0, 1.0) * query.weight_of(&d.label))
        .fold(0.0, f64::max)
}

/// Single-frame re-score, reduced to a cell confidence.
pub fn verify<S: Scorer + ?Sized>(scorer: &mut S, frame: usize, query: &GroundedQuery) -> Result<f64, ScorerError> {
    let detections = scorer.score_frame(frame, query)?;
    Ok(cell_confidence(&detections, query))
}

/// How to build a scorer, as written on the command line:
/// `oracle[:key=value,...]`, `file:<path>[,cost=<units>]` or
/// `external:<command line>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScorerSpec {
    Oracle(OracleParams),
    File {
        /// May contain `{video_id}` or `{instance_id}` placeholders.
        path: String,
        cost_units_per_frame: f64,
    },
    External {
        command: String,
        cost_units_per_frame: f64,
    },
}

impl ScorerSpec {
    pub fn cost_units_per_frame(&self) -> f64 {
        match self {
            ScorerSpec::Oracle(p) => p.cost_units_per_frame,
            ScorerSpec::File {
                cost_units_per_frame, ..
            }
            | ScorerSpec::External {
                cost_units_per_frame, ..
            } => *cost_units_per_frame,
        }
    }
}

impl Default for ScorerSpec {
    fn default() -> Self {
        ScorerSpec::Oracle(OracleParams::default())
    }
}

impl FromStr for ScorerSpec {
    type Err = ScorerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| ScorerError::Spec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "oracle" => {
                let mut params = OracleParams::default();
                for pair in rest.split(',').filter(|p| !p.is_empty()) {
                    let (key, value) = pair.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                    let value: f64 = value.parse().map_err(|_| bad("value is not a number"))?;
                    match key {
                        "sigma" => params.locality_sigma = value,
                        "cue_sigma" => params.cue_sigma = value,
                        "noise" => params.noise_sigma = value,
                        "p" => params.heuristic_accuracy = value,
                        "cost" => params.cost_units_per_frame = value,
                        _ => return Err(bad("unknown oracle parameter")),
                    }
                }
                params.validate().map_err(|e| bad(&e))?;
                Ok(ScorerSpec::Oracle(params))
            }
            "file" => {
                let (path, cost): (&str, f64) = match rest.rsplit_once(",cost=") {
                    Some((path, cost)) => (path, cost.parse().map_err(|_| bad("cost is not a number"))?),
                    None => (rest, 1.0),
                };
                if path.is_empty() {
                    return Err(bad("missing path"));
                }
                if cost.is_nan() || cost < 0.0 {
                    return Err(bad("cost must be non-negative"));
                }
                Ok(ScorerSpec::File {
                    path: path.to_string(),
                    cost_units_per_frame: cost,
                })
            }
            "external" => {
                if rest.trim().is_empty() {
                    return Err(bad("missing command"));
                }
                Ok(ScorerSpec::External {
                    command: rest.to_string(),
                    cost_units_per_frame: 1.0,
                })
            }
            _ => Err(bad("kind must be oracle, file or external")),
        }
    }
}
