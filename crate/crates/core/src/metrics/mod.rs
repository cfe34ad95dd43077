//! Search-utility metrics.
//!
//! A predicted keyframe set is compared to the reference set with a
//! frame-to-frame similarity lifted to sets: a frame's similarity to a set is
//! its best match in that set. Precision averages over predicted frames,
//! recall over reference frames, and F1 is their harmonic mean.
//!
//! Dataset-level numbers are macro averages: P, R and F1 are computed per
//! instance and each column is averaged on its own. The averaged F1 is
//! therefore *not* the harmonic mean of the averaged P and R.

mod similarity;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{EmbeddingMatrix, FrameStore};
use crate::model::{KeyframeSet, ReferenceKeyframe, VideoSource};

pub use similarity::{embedding_sim, ssim, temporal_sim, SsimParams};

/// Default temporal tolerance in seconds.
pub const DEFAULT_TEMPORAL_THRESHOLD_S: f64 = 5.0;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("embedding is the zero vector")]
    ZeroVector,
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error("invalid metric parameters: {0}")]
    InvalidParams(String),
    #[error("{0} similarity needs {1}")]
    MissingData(SimilarityKind, &'static str),
    #[error(transparent)]
    Frames(#[from] crate::frames::FrameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    Temporal,
    VisualSsim,
    EmbeddingCosine,
}

impl std::fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimilarityKind::Temporal => "temporal",
            SimilarityKind::VisualSsim => "visual_ssim",
            SimilarityKind::EmbeddingCosine => "embedding_cosine",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySpec {
    pub kind: SimilarityKind,
    pub temporal_threshold_s: f64,
    pub ssim: SsimParams,
}

impl SimilaritySpec {
    pub fn temporal(threshold_s: f64) -> Self {
        Self {
            kind: SimilarityKind::Temporal,
            temporal_threshold_s: threshold_s,
            ssim: SsimParams::default(),
        }
    }

    pub fn visual() -> Self {
        Self {
            kind: SimilarityKind::VisualSsim,
            ..Self::temporal(DEFAULT_TEMPORAL_THRESHOLD_S)
        }
    }

    pub fn embedding() -> Self {
        Self {
            kind: SimilarityKind::EmbeddingCosine,
            ..Self::temporal(DEFAULT_TEMPORAL_THRESHOLD_S)
        }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if self.temporal_threshold_s.is_nan() || self.temporal_threshold_s <= 0.0 {
            return Err(MetricError::InvalidParams("temporal threshold must be positive".into()));
        }
        self.ssim.validate()
    }
}

/// P/R/F1 for one instance under one similarity, as fractions in `[0, 1]`
/// (SSIM and cosine may push them below zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub kind: SimilarityKind,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// |F_pt|
    pub predicted: usize,
    /// |F_gt|
    pub reference: usize,
}

impl MetricReport {
    pub fn new(kind: SimilarityKind, precision: f64, recall: f64, predicted: usize, reference: usize) -> Self {
        Self {
            kind,
            precision,
            recall,
            f1: f1_score(precision, recall),
            predicted,
            reference,
        }
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Percentage rounded to one decimal.
pub fn percent_1dp(fraction: f64) -> f64 {
    (fraction * 1000.0).round() / 10.0
}

fn frame_to_set<T>(frame: &T, set: &[T], sim: &mut impl FnMut(&T, &T) -> Result<f64, MetricError>) -> Result<f64, MetricError> {
    let mut best = f64::NEG_INFINITY;
    for other in set {
        best = best.max(sim(frame, other)?);
    }
    Ok(best)
}

/// Mean over predicted frames of their best similarity to the references.
pub fn set_precision<T>(
    predicted: &[T],
    reference: &[T],
    mut sim: impl FnMut(&T, &T) -> Result<f64, MetricError>,
) -> Result<f64, MetricError> {
    if predicted.is_empty() {
        return Err(MetricError::EmptySet("predicted"));
    }
    if reference.is_empty() {
        return Err(MetricError::EmptySet("reference"));
    }
    let mut total = 0.0;
    for f in predicted {
        total += frame_to_set(f, reference, &mut sim)?;
    }
    Ok(total / predicted.len() as f64)
}

/// Mean over reference frames of their best similarity to the predictions.
pub fn set_recall<T>(
    predicted: &[T],
    reference: &[T],
    mut sim: impl FnMut(&T, &T) -> Result<f64, MetricError>,
) -> Result<f64, MetricError> {
    if predicted.is_empty() {
        return Err(MetricError::EmptySet("predicted"));
    }
    if reference.is_empty() {
        return Err(MetricError::EmptySet("reference"));
    }
    let mut total = 0.0;
    for f in reference {
        total += frame_to_set(f, predicted, &mut sim)?;
    }
    Ok(total / reference.len() as f64)
}

/// Where visual and embedding similarities find their frames.
#[derive(Debug, Default)]
pub struct EvalContext<'a> {
    pub frames: Option<&'a FrameStore>,
    pub embeddings: Option<&'a EmbeddingMatrix>,
}

/// Scores one prediction against its references under each spec.
pub fn evaluate_instance(
    predicted: &KeyframeSet,
    reference: &[ReferenceKeyframe],
    video: &VideoSource,
    specs: &[SimilaritySpec],
    ctx: &EvalContext<'_>,
) -> Result<Vec<MetricReport>, MetricError> {
    let pred_indices = predicted.indices();
    let ref_indices: Vec<usize> = reference.iter().map(|r| r.frame_index(video)).collect();
    let (m, n) = (pred_indices.len(), ref_indices.len());
    let mut reports = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate()?;
        let (p, r) = match spec.kind {
            SimilarityKind::Temporal => {
                let pred_t = predicted.timestamps();
                let ref_t: Vec<f64> = reference.iter().map(|r| r.timestamp_s).collect();
                let tau = spec.temporal_threshold_s;
                let sim = |a: &f64, b: &f64| Ok(temporal_sim(*a, *b, tau));
                (set_precision(&pred_t, &ref_t, sim)?, set_recall(&pred_t, &ref_t, sim)?)
            }
            SimilarityKind::VisualSsim => {
                let store = ctx
                    .frames
                    .ok_or(MetricError::MissingData(spec.kind, "a frame store"))?;
                let mut cache = std::collections::HashMap::new();
                let mut sim = |a: &usize, b: &usize| -> Result<f64, MetricError> {
                    for i in [*a, *b] {
                        if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(i) {
                            e.insert(store.load(i)?);
                        }
                    }
                    ssim(&cache[a], &cache[b], &spec.ssim)
                };
                let p = set_precision(&pred_indices, &ref_indices, &mut sim)?;
                let r = set_recall(&pred_indices, &ref_indices, &mut sim)?;
                (p, r)
            }
            SimilarityKind::EmbeddingCosine => {
                let emb = ctx
                    .embeddings
                    .ok_or(MetricError::MissingData(spec.kind, "an embedding file"))?;
                let sim = |a: &usize, b: &usize| embedding_sim(emb.row(*a)?, emb.row(*b)?);
                (
                    set_precision(&pred_indices, &ref_indices, sim)?,
                    set_recall(&pred_indices, &ref_indices, sim)?,
                )
            }
        };
        reports.push(MetricReport::new(spec.kind, p, r, m, n));
    }
    Ok(reports)
}

/// Column-wise means for one similarity kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub kind: SimilarityKind,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub instances: usize,
}

impl AggregateReport {
    /// `(precision, recall, f1)` as percentages with one decimal.
    pub fn percentages(&self) -> (f64, f64, f64) {
        (percent_1dp(self.precision), percent_1dp(self.recall), percent_1dp(self.f1))
    }
}

/// Macro-averages per-instance reports, one row per kind in order of first
/// appearance.
pub fn aggregate<'a>(reports: impl IntoIterator<Item = &'a MetricReport>) -> Vec<AggregateReport> {
    let mut rows: Vec<(SimilarityKind, [f64; 3], usize)> = Vec::new();
    for r in reports {
        let row = match rows.iter_mut().find(|row| row.0 == r.kind) {
            Some(row) => row,
            None => {
                rows.push((r.kind, [0.0; 3], 0));
                rows.last_mut().unwrap()
            }
        };
        row.1[0] += r.precision;
        row.1[1] += r.recall;
        row.1[2] += r.f1;
        row.2 += 1;
    }
    rows.into_iter()
        .map(|(kind, sums, count)| AggregateReport {
            kind,
            precision: sums[0] / count as f64,
            recall: sums[1] / count as f64,
            f1: sums[2] / count as f64,
            instances: count,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn temporal(tau: f64) -> impl Fn(&f64, &f64) -> Result<f64, MetricError> + Copy {
        move |a, b| Ok(temporal_sim(*a, *b, tau))
    }

    #[test]
    fn worked_example() {
        let gt = [10.0];
        let pt = [12.0, 100.0];
        let p = set_precision(&pt, &gt, temporal(5.0)).unwrap();
        let r = set_recall(&pt, &gt, temporal(5.0)).unwrap();
        assert_eq!((p, r), (0.5, 1.0));
        assert!((f1_score(p, r) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(percent_1dp(f1_score(p, r)), 66.7);
    }

    #[test]
    fn identical_and_disjoint_sets() {
        let set = [1.0, 40.0, 77.0];
        assert_eq!(set_precision(&set, &set, temporal(5.0)).unwrap(), 1.0);
        assert_eq!(set_recall(&set, &set, temporal(5.0)).unwrap(), 1.0);
        let far = [500.0, 600.0];
        let p = set_precision(&far, &set, temporal(5.0)).unwrap();
        let r = set_recall(&far, &set, temporal(5.0)).unwrap();
        assert_eq!((p, r, f1_score(p, r)), (0.0, 0.0, 0.0));
    }

    #[test]
    fn empty_sets_are_errors() {
        assert!(matches!(set_precision(&[], &[1.0], temporal(5.0)), Err(MetricError::EmptySet(_))));
        assert!(matches!(set_recall(&[1.0], &[], temporal(5.0)), Err(MetricError::EmptySet(_))));
    }

    #[test]
    fn macro_aggregation() {
        let r = |f1: f64| MetricReport {
            kind: SimilarityKind::Temporal,
            precision: f1,
            recall: f1,
            f1,
            predicted: 1,
            reference: 1,
        };
        let agg = aggregate(&[r(0.0), r(1.0)]);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].f1, 0.5);
        let single = aggregate(&[r(0.25)]);
        assert_eq!((single[0].precision, single[0].recall, single[0].f1), (0.25, 0.25, 0.25));
        assert!(aggregate(&[]).is_empty());
    }

    #[test]
    fn evaluate_instance_temporal() {
        let video = VideoSource::new("v", 3_000, 30.0).unwrap();
        let pred = KeyframeSet::from_scored([(360, 0.9), (3_000 - 1, 0.1)], 30.0);
        let refs = [ReferenceKeyframe::at(10.0)];
        let reports = evaluate_instance(
            &pred,
            &refs,
            &video,
            &[SimilaritySpec::temporal(5.0)],
            &EvalContext::default(),
        )
        .unwrap();
        assert_eq!(reports[0].precision, 0.5);
        assert_eq!(reports[0].recall, 1.0);
        assert_eq!((reports[0].predicted, reports[0].reference), (2, 1));
        assert!(matches!(
            evaluate_instance(&pred, &refs, &video, &[SimilaritySpec::visual()], &EvalContext::default()),
            Err(MetricError::MissingData(..))
        ));
    }

    proptest! {
        #[test]
        fn precision_recall_swap(a in proptest::collection::vec(0.0f64..100.0, 1..10), b in proptest::collection::vec(0.0f64..100.0, 1..10)) {
            let p = set_precision(&a, &b, temporal(5.0)).unwrap();
            let r = set_recall(&b, &a, temporal(5.0)).unwrap();
            prop_assert_eq!(p, r);
        }

        #[test]
        fn adding_predictions_never_lowers_recall(a in proptest::collection::vec(0.0f64..100.0, 1..10), b in proptest::collection::vec(0.0f64..100.0, 1..10), extra in 0.0f64..100.0) {
            let before = set_recall(&a, &b, temporal(5.0)).unwrap();
            let mut more = a.clone();
            more.push(extra);
            prop_assert!(set_recall(&more, &b, temporal(5.0)).unwrap() >= before);
            let before_p = set_precision(&a, &b, temporal(5.0)).unwrap();
            let mut refs = b.clone();
            refs.push(extra);
            prop_assert!(set_precision(&a, &refs, temporal(5.0)).unwrap() >= before_p);
        }

        #[test]
        fn harmonic_identity(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
            let f = MetricReport::new(SimilarityKind::Temporal, p, r, 1, 1).f1;
            if p + r > 0.0 {
                prop_assert!((f - 2.0 * p * r / (p + r)).abs() <= 1e-12);
            } else {
                prop_assert_eq!(f, 0.0);
            }
        }
    }
}
