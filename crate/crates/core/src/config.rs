//! Search configuration and its validation against a video.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::VideoSource;

/// Default grid side: 8×8 frames per scorer call.
pub const DEFAULT_GRID_SIDE: usize = 8;
/// Default verification threshold.
pub const DEFAULT_THETA: f64 = 0.6;
/// Default number of keyframes returned.
pub const DEFAULT_K: usize = 8;
/// Default upper bound on frames examined per search.
pub const DEFAULT_MAX_BUDGET: usize = 1024;
/// Half-width of the propagation window, in seconds.
pub const DEFAULT_WINDOW_S: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("g² exceeds budget ({cells} > {budget})")]
    GridExceedsBudget { cells: usize, budget: usize },
    #[error("g² exceeds frame_count ({cells} > {frame_count})")]
    GridExceedsFrameCount { cells: usize, frame_count: usize },
    #[error("k exceeds budget ({k} > {budget})")]
    KExceedsBudget { k: usize, budget: usize },
    #[error("grid side must be positive")]
    ZeroGrid,
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("k must be positive")]
    ZeroK,
    #[error("max_iterations must be positive")]
    ZeroIterations,
    #[error("theta must lie in (0, 1), got {0}")]
    ThetaOutOfRange(f64),
    #[error("prob_floor must be finite and non-negative, got {0}")]
    InvalidFloor(f64),
    #[error("frame_count must be at least 1")]
    EmptyVideo,
    #[error("fps must be positive, got {0}")]
    InvalidFps(f64),
    #[error("targets required")]
    NoTargets,
    #[error("object label must be nonempty")]
    EmptyLabel,
    #[error("weight for {label:?} must lie in (0, 1], got {weight}")]
    InvalidWeight { label: String, weight: f64 },
    #[error("label {0:?} appears more than once among targets and cues")]
    DuplicateLabel(String),
}

/// Parameters of one search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Cells per grid edge; each iteration scores `grid_side²` frames.
    pub grid_side: usize,
    /// Total frames the scorer may examine, verification included.
    pub budget: usize,
    /// Verification threshold.
    pub theta: f64,
    /// Half-width, in frames, of score propagation around a sampled frame.
    pub window: usize,
    /// Keyframes returned.
    pub k: usize,
    pub seed: u64,
    /// Minimum pre-normalization mass per frame.
    pub prob_floor: f64,
    pub max_iterations: usize,
}

impl SearchConfig {
    /// Defaults sized for `video`: 8×8 grid, θ = 0.6, K = 8, budget
    /// `min(L, 1024)`, window `ceil(2.5 s · fps)`, floor `0.1 / L` and
    /// `ceil(4L / g²)` iterations.
    pub fn for_video(video: &VideoSource) -> Self {
        let frame_count = video.frame_count.max(1);
        let grid_side = DEFAULT_GRID_SIDE;
        Self {
            grid_side,
            budget: frame_count.min(DEFAULT_MAX_BUDGET),
            theta: DEFAULT_THETA,
            window: default_window(video.fps),
            k: DEFAULT_K,
            seed: 0,
            prob_floor: default_prob_floor(frame_count),
            max_iterations: default_max_iterations(frame_count, grid_side),
        }
    }

    pub fn cells_per_grid(&self) -> usize {
        self.grid_side * self.grid_side
    }
}

pub fn default_window(fps: f64) -> usize {
    (DEFAULT_WINDOW_S * fps).ceil().max(0.0) as usize
}

pub fn default_prob_floor(frame_count: usize) -> f64 {
    0.1 / frame_count.max(1) as f64
}

pub fn default_max_iterations(frame_count: usize, grid_side: usize) -> usize {
    let cells = (grid_side * grid_side).max(1);
    (4 * frame_count).div_ceil(cells).max(1)
}

/// Checks `cfg` against its own invariants and against `video`.
pub fn validate_config(cfg: &SearchConfig, video: &VideoSource) -> Result<(), ConfigError> {
    video.validate()?;
    if cfg.grid_side == 0 {
        return Err(ConfigError::ZeroGrid);
    }
    if cfg.budget == 0 {
        return Err(ConfigError::ZeroBudget);
    }
    if cfg.k == 0 {
        return Err(ConfigError::ZeroK);
    }
    if cfg.max_iterations == 0 {
        return Err(ConfigError::ZeroIterations);
    }
    let cells = cfg.cells_per_grid();
    if cells > cfg.budget {
        return Err(ConfigError::GridExceedsBudget {
            cells,
            budget: cfg.budget,
        });
    }
    if cells > video.frame_count {
        return Err(ConfigError::GridExceedsFrameCount {
            cells,
            frame_count: video.frame_count,
        });
    }
    if cfg.k > cfg.budget {
        return Err(ConfigError::KExceedsBudget {
            k: cfg.k,
            budget: cfg.budget,
        });
    }
    if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
        return Err(ConfigError::ThetaOutOfRange(cfg.theta));
    }
    if !(cfg.prob_floor.is_finite() && cfg.prob_floor >= 0.0) {
        return Err(ConfigError::InvalidFloor(cfg.prob_floor));
    }
    Ok(())
}
