//! Synthetic scorer with known ground truth, used to exercise the search.
//!
//! The confidence for an object at frame `f` decays as `exp(-d / sigma)`
//! where `d` is the frame distance to the nearest frame holding that object.
//! Gaussian noise is then added and the result clamped into `[0, 1]`. With
//! probability `1 - heuristic_accuracy` a grid call shuffles its cells'
//! detection lists, so the scorer points at the wrong cells while keeping the
//! same set of confidences.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{CellDetections, CellResult, Detection, Scorer, ScorerError};
use crate::model::GroundedQuery;
use crate::sampling::GridLayout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    /// Decay length, in frames, of target confidence.
    pub locality_sigma: f64,
    /// Decay length, in frames, of cue confidence.
    pub cue_sigma: f64,
    pub noise_sigma: f64,
    /// Probability that a grid call reports confidences in the right cells.
    pub heuristic_accuracy: f64,
    pub cost_units_per_frame: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            locality_sigma: 60.0,
            cue_sigma: 600.0,
            noise_sigma: 0.0,
            heuristic_accuracy: 1.0,
            cost_units_per_frame: 1.0,
        }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.locality_sigma >= 0.0 && self.cue_sigma >= 0.0) {
            return Err("sigma must be non-negative".into());
        }
        if self.noise_sigma.is_nan() || self.noise_sigma < 0.0 {
            return Err("noise must be non-negative".into());
        }
        if !(self.heuristic_accuracy > 0.0 && self.heuristic_accuracy <= 1.0) {
            return Err("accuracy p must lie in (0, 1]".into());
        }
        if self.cost_units_per_frame.is_nan() || self.cost_units_per_frame < 0.0 {
            return Err("cost must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OracleScorer {
    params: OracleParams,
    /// Sorted frames holding each label.
    truth: BTreeMap<String, Vec<usize>>,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
}

impl OracleScorer {
    pub fn new(params: OracleParams, truth: BTreeMap<String, Vec<usize>>, seed: u64) -> Self {
        let truth = truth
            .into_iter()
            .map(|(label, mut frames)| {
                frames.sort_unstable();
                frames.dedup();
                (label, frames)
            })
            .collect();
        let noise = (params.noise_sigma > 0.0).then(|| Normal::new(0.0, params.noise_sigma).expect("finite sigma"));
        Self {
            params,
            truth,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Every target and cue of `query` is present at each of `references`.
    pub fn for_references(params: OracleParams, query: &GroundedQuery, references: &[usize], seed: u64) -> Self {
        let truth = query
            .targets
            .iter()
            .chain(&query.cues)
            .map(|o| (o.label.clone(), references.to_vec()))
            .collect();
        Self::new(params, truth, seed)
    }

    /// Noiseless confidence for `label` at `frame`.
    pub fn base_confidence(&self, label: &str, frame: usize, is_target: bool) -> Option<f64> {
        let frames = self.truth.get(label)?;
        let distance = nearest_distance(frames, frame)?;
        let sigma = if is_target {
            self.params.locality_sigma
        } else {
            self.params.cue_sigma
        };
        Some(decay(distance, sigma))
    }

    fn detect(&mut self, frame: usize, query: &GroundedQuery) -> Vec<Detection> {
        let mut out = Vec::new();
        for (object, is_target) in query
            .targets
            .iter()
            .map(|o| (o, true))
            .chain(query.cues.iter().map(|o| (o, false)))
        {
            let Some(base) = self.base_confidence(&object.label, frame, is_target) else {
                continue;
            };
            let noisy = match &self.noise {
                Some(normal) => base + normal.sample(&mut self.rng),
                None => base,
            };
            out.push(Detection::new(object.label.clone(), noisy.clamp(0.0, 1.0)));
        }
        out
    }
}

fn decay(distance: usize, sigma: f64) -> f64 {
    if sigma == 0.0 {
        if distance == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (-(distance as f64) / sigma).exp()
    }
}

fn nearest_distance(sorted: &[usize], frame: usize) -> Option<usize> {
    let pos = sorted.partition_point(|&f| f < frame);
    let right = sorted.get(pos).map(|&f| f - frame);
    let left = pos.checked_sub(1).map(|i| frame - sorted[i]);
    match (left, right) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

impl Scorer for OracleScorer {
    fn score_grid(&mut self, grid: &GridLayout, query: &GroundedQuery) -> Result<CellDetections, ScorerError> {
        let filled: Vec<(usize, usize)> = grid.filled().collect();
        let mut lists: Vec<Vec<Detection>> = filled.iter().map(|&(_, frame)| self.detect(frame, query)).collect();
        let honest = self.rng.random::<f64>() < self.params.heuristic_accuracy;
        if !honest {
            lists.shuffle(&mut self.rng);
        }
        Ok(CellDetections {
            cells: filled
                .into_iter()
                .zip(lists)
                .map(|((cell, frame), detections)| CellResult {
                    cell,
                    frame,
                    detections,
                })
                .collect(),
        })
    }

    fn cost_units_per_frame(&self) -> f64 {
        self.params.cost_units_per_frame
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WeightedObject;
    use crate::sampling::build_grid;
    use crate::scoring::{cell_confidence, verify};

    fn query() -> GroundedQuery {
        GroundedQuery::new("q", vec![WeightedObject::target("needle")], vec![]).unwrap()
    }

    fn oracle(sigma: f64, refs: &[usize]) -> OracleScorer {
        let params = OracleParams {
            locality_sigma: sigma,
            ..OracleParams::default()
        };
        OracleScorer::for_references(params, &query(), refs, 0)
    }

    #[test]
    fn noiseless_spike_marks_only_the_needle() {
        let mut scorer = oracle(0.0, &[17]);
        let grid = build_grid(&[3, 17, 40, 99], 2).unwrap();
        let out = scorer.score_grid(&grid, &query()).unwrap();
        let confs: Vec<f64> = out.cells.iter().map(|c| c.detections[0].confidence).collect();
        assert_eq!(confs, vec![0.0, 1.0, 0.0, 0.0]);
        assert!(out.cells.iter().all(|c| c.detections[0].label == "needle"));
    }

    #[test]
    fn decay_law_at_one_sigma() {
        let mut scorer = oracle(30.0, &[100]);
        let grid = build_grid(&[130], 1).unwrap();
        let out = scorer.score_grid(&grid, &query()).unwrap();
        let c = out.cells[0].detections[0].confidence;
        assert!((c - (-1.0f64).exp()).abs() < 1e-12);
        assert!((c - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn verify_against_threshold() {
        let mut scorer = oracle(30.0, &[500]);
        assert_eq!(verify(&mut scorer, 500, &query()).unwrap(), 1.0);
        let far = verify(&mut scorer, 800, &query()).unwrap();
        assert!((far - (-10.0f64).exp()).abs() < 1e-15);
        assert!(far < 0.6 && (far - 4.5e-5).abs() < 1e-6);
    }

    #[test]
    fn unknown_frames_have_no_detections() {
        let mut scorer = OracleScorer::new(OracleParams::default(), BTreeMap::new(), 0);
        let dets = scorer.score_frame(5, &query()).unwrap();
        assert!(dets.is_empty());
        assert_eq!(cell_confidence(&dets, &query()), 0.0);
    }

    #[test]
    fn shuffled_calls_keep_the_confidence_multiset() {
        let params = OracleParams {
            locality_sigma: 5.0,
            heuristic_accuracy: 0.01,
            ..OracleParams::default()
        };
        let mut scorer = OracleScorer::for_references(params, &query(), &[10], 3);
        let grid = build_grid(&(0..16).collect::<Vec<_>>(), 4).unwrap();
        let honest: Vec<f64> = (0..16).map(|f| decay((f as i64 - 10).unsigned_abs() as usize, 5.0)).collect();
        let mut moved = false;
        for _ in 0..5 {
            let out = scorer.score_grid(&grid, &query()).unwrap();
            let mut got: Vec<f64> = out.cells.iter().map(|c| c.detections[0].confidence).collect();
            moved |= got != honest;
            got.sort_by(f64::total_cmp);
            let mut want = honest.clone();
            want.sort_by(f64::total_cmp);
            assert_eq!(got, want);
        }
        assert!(moved);
    }

    #[test]
    fn nearest_distance_cases() {
        assert_eq!(nearest_distance(&[], 3), None);
        assert_eq!(nearest_distance(&[10, 20], 0), Some(10));
        assert_eq!(nearest_distance(&[10, 20], 14), Some(4));
        assert_eq!(nearest_distance(&[10, 20], 16), Some(4));
        assert_eq!(nearest_distance(&[10, 20], 25), Some(5));
    }
}
