//! Domain types shared by every stage of the search: the video being searched,
//! the grounded query, the evolving score state and the selected keyframes.
//!
//! Frame indices are 0-based everywhere. Timestamps are always derived from an
//! index and the frame rate, never stored on their own.

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;

/// Default weight given to target objects.
pub const TARGET_WEIGHT: f64 = 1.0;
/// Default weight given to cue objects.
pub const CUE_WEIGHT: f64 = 0.5;

/// Seconds since the start of the video for a frame index.
pub fn timestamp_of(index: usize, fps: f64) -> f64 {
    index as f64 / fps
}

/// The haystack: a video of `frame_count` frames played at `fps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSource {
    pub video_id: String,
    pub frame_count: usize,
    pub fps: f64,
    /// Directory of pre-extracted grayscale frames named by zero-padded index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_store: Option<PathBuf>,
}

impl VideoSource {
    pub fn new(video_id: impl Into<String>, frame_count: usize, fps: f64) -> Result<Self, ConfigError> {
        let video = Self {
            video_id: video_id.into(),
            frame_count,
            fps,
            frame_store: None,
        };
        video.validate()?;
        Ok(video)
    }

    pub fn with_frame_store(mut self, dir: impl Into<PathBuf>) -> Self {
        self.frame_store = Some(dir.into());
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.frame_count == 0 {
            return Err(ConfigError::EmptyVideo);
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(ConfigError::InvalidFps(self.fps));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.frame_count as f64 / self.fps
    }

    pub fn timestamp_of(&self, index: usize) -> f64 {
        timestamp_of(index, self.fps)
    }

    /// Nearest frame index for a timestamp, clamped into the video.
    pub fn index_at(&self, timestamp_s: f64) -> usize {
        let raw = (timestamp_s * self.fps).round();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.frame_count - 1)
        }
    }
}

/// An object label with its search importance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedObject {
    pub label: String,
    pub weight: f64,
}

impl WeightedObject {
    pub fn new(label: impl Into<String>, weight: f64) -> Self {
        Self {
            label: label.into(),
            weight,
        }
    }

    pub fn target(label: impl Into<String>) -> Self {
        Self::new(label, TARGET_WEIGHT)
    }

    pub fn cue(label: impl Into<String>) -> Self {
        Self::new(label, CUE_WEIGHT)
    }
}

/// A question together with the objects grounding it: targets must be found,
/// cues only hint at where targets may be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedQuery {
    pub question: String,
    pub targets: Vec<WeightedObject>,
    #[serde(default)]
    pub cues: Vec<WeightedObject>,
}

impl GroundedQuery {
    pub fn new(
        question: impl Into<String>,
        targets: Vec<WeightedObject>,
        cues: Vec<WeightedObject>,
    ) -> Result<Self, ConfigError> {
        let query = Self {
            question: question.into(),
            targets,
            cues,
        };
        query.validate()?;
        Ok(query)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.targets.is_empty() {
            return Err(ConfigError::NoTargets);
        }
        let mut seen = HashSet::new();
        for object in self.targets.iter().chain(&self.cues) {
            if object.label.is_empty() {
                return Err(ConfigError::EmptyLabel);
            }
            if !(object.weight > 0.0 && object.weight <= 1.0) {
                return Err(ConfigError::InvalidWeight {
                    label: object.label.clone(),
                    weight: object.weight,
                });
            }
            if !seen.insert(object.label.as_str()) {
                return Err(ConfigError::DuplicateLabel(object.label.clone()));
            }
        }
        Ok(())
    }

    /// Weight of a label; unknown labels weigh nothing.
    pub fn weight_of(&self, label: &str) -> f64 {
        self.targets
            .iter()
            .chain(&self.cues)
            .find(|o| o.label == label)
            .map_or(0.0, |o| o.weight)
    }

    pub fn is_target(&self, label: &str) -> bool {
        self.targets.iter().any(|o| o.label == label)
    }
}

/// The search's evolving belief over frames.
///
/// `visited[i]` is true once frame `i` has been scored by a grid call; the
/// sampling distribution is `prob` masked by the unvisited frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreState {
    pub scores: Vec<f64>,
    pub visited: Vec<bool>,
    pub prob: Vec<f64>,
}

impl ScoreState {
    /// Zero scores, nothing visited, uniform distribution.
    pub fn new(frame_count: usize) -> Self {
        let uniform = 1.0 / frame_count as f64;
        Self {
            scores: vec![0.0; frame_count],
            visited: vec![false; frame_count],
            prob: vec![uniform; frame_count],
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn unvisited_count(&self) -> usize {
        self.visited.iter().filter(|v| !**v).count()
    }

    /// `prob` with visited frames zeroed, the weights frames are drawn from.
    pub fn sampling_weights(&self) -> Vec<f64> {
        self.prob
            .iter()
            .zip(&self.visited)
            .map(|(p, v)| if *v { 0.0 } else { *p })
            .collect()
    }

    /// Sum of `prob` over the frames within `radius` of any of `centers`.
    pub fn mass_near(&self, centers: &[usize], radius: usize) -> f64 {
        let mut covered = vec![false; self.len()];
        for &c in centers {
            let lo = c.saturating_sub(radius);
            let hi = (c + radius).min(self.len().saturating_sub(1));
            for flag in covered.iter_mut().take(hi + 1).skip(lo) {
                *flag = true;
            }
        }
        self.prob
            .iter()
            .zip(covered)
            .filter(|(_, c)| *c)
            .map(|(p, _)| p)
            .sum()
    }
}

/// An annotated keyframe: a timestamp, optionally pinned to a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceKeyframe {
    pub timestamp_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_index: Option<usize>,
}

impl ReferenceKeyframe {
    pub fn at(timestamp_s: f64) -> Self {
        Self {
            timestamp_s,
            frame_index: None,
        }
    }

    pub fn at_frame(index: usize, fps: f64) -> Self {
        Self {
            timestamp_s: timestamp_of(index, fps),
            frame_index: Some(index),
        }
    }

    /// The pinned frame, or the frame nearest the timestamp.
    pub fn frame_index(&self, video: &VideoSource) -> usize {
        self.frame_index.unwrap_or_else(|| video.index_at(self.timestamp_s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub index: usize,
    pub timestamp: f64,
    pub score: f64,
}

/// Selected frames, ordered by descending score with ties broken by index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeyframeSet {
    pub entries: Vec<Keyframe>,
}

impl KeyframeSet {
    /// Builds a set from `(index, score)` pairs, dropping repeated indices
    /// (first occurrence wins) and sorting into canonical order.
    pub fn from_scored(pairs: impl IntoIterator<Item = (usize, f64)>, fps: f64) -> Self {
        let mut seen = HashSet::new();
        let mut entries: Vec<Keyframe> = pairs
            .into_iter()
            .filter(|(index, _)| seen.insert(*index))
            .map(|(index, score)| Keyframe {
                index,
                timestamp: timestamp_of(index, fps),
                score,
            })
            .collect();
        sort_keyframes(&mut entries);
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.entries.iter().map(|k| k.index).collect()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.entries.iter().map(|k| k.timestamp).collect()
    }
}

/// Score descending, then index ascending.
pub fn sort_keyframes(entries: &mut [Keyframe]) {
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
}
