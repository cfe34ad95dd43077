//! Runs strategies over a dataset and aggregates their metrics and costs.

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::{build_scorer, derive_seed, run_strategy, HaystackInstance, Strategy};
use crate::frames::{EmbeddingMatrix, FrameStore};
use crate::metrics::{aggregate, evaluate_instance, AggregateReport, EvalContext, MetricReport, SimilarityKind, SimilaritySpec};
use crate::model::KeyframeSet;
use crate::scoring::ScorerSpec;
use crate::search::{EfficiencyReport, TerminalReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub scorer: ScorerSpec,
    /// Similarities to report. Visual and embedding similarities are skipped
    /// on instances without frames or embeddings.
    pub metrics: Vec<SimilaritySpec>,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            scorer: ScorerSpec::default(),
            metrics: vec![SimilaritySpec::temporal(crate::metrics::DEFAULT_TEMPORAL_THRESHOLD_S)],
            seed: 0,
            jobs: 0,
        }
    }
}

/// One strategy on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub strategy: String,
    pub instance_id: String,
    pub keyframes: KeyframeSet,
    pub metrics: Vec<MetricReport>,
    pub efficiency: EfficiencyReport,
    pub iterations: usize,
    pub terminal_reason: Option<TerminalReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchFailure {
    pub strategy: String,
    pub instance_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    /// Instances the strategy completed.
    pub instances: usize,
    pub metrics: Vec<AggregateReport>,
    /// Summed over completed instances.
    pub efficiency: EfficiencyReport,
    pub mean_iterations: f64,
    pub mean_frames_processed: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Ordered by instance id, then by strategy as given.
    pub records: Vec<BenchRecord>,
    /// One per strategy, in the order given.
    pub summaries: Vec<StrategySummary>,
    pub failures: Vec<BenchFailure>,
}

impl BenchReport {
    pub fn summary(&self, strategy: &str) -> Option<&StrategySummary> {
        self.summaries.iter().find(|s| s.strategy == strategy)
    }
}

/// Evaluates every strategy on every instance.
///
/// Each instance gets one seed derived from `options.seed` and its id, shared
/// by all strategies, so runs are comparable and independent of `jobs`.
/// Failures are collected rather than aborting the run.
pub fn run_benchmark(dataset: &[HaystackInstance], strategies: &[Strategy], options: &BenchOptions) -> BenchReport {
    if dataset.is_empty() {
        return BenchReport::default();
    }
    let mut order: Vec<&HaystackInstance> = dataset.iter().collect();
    order.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));

    let work = || -> Vec<Vec<Result<BenchRecord, BenchFailure>>> {
        order
            .par_iter()
            .map(|instance| evaluate_strategies(instance, strategies, options))
            .collect()
    };
    let per_instance = match rayon::ThreadPoolBuilder::new().num_threads(options.jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };

    let mut report = BenchReport::default();
    for result in per_instance.into_iter().flatten() {
        match result {
            Ok(record) => report.records.push(record),
            Err(failure) => report.failures.push(failure),
        }
    }
    report.summaries = strategies
        .iter()
        .map(|s| summarize(&s.to_string(), &report.records))
        .collect();
    report
}

fn evaluate_strategies(
    instance: &HaystackInstance,
    strategies: &[Strategy],
    options: &BenchOptions,
) -> Vec<Result<BenchRecord, BenchFailure>> {
    let seed = derive_seed(options.seed, &instance.instance_id);
    let frames = instance.video.frame_store.as_ref().map(FrameStore::new);
    let embeddings = instance.embeddings.as_ref().map(EmbeddingMatrix::open);
    strategies
        .iter()
        .map(|strategy| {
            let fail = |error: String| BenchFailure {
                strategy: strategy.to_string(),
                instance_id: instance.instance_id.clone(),
                error,
            };
            let embeddings = match &embeddings {
                Some(Ok(m)) => Some(m),
                Some(Err(e)) => return Err(fail(e.to_string())),
                None => None,
            };
            let mut scorer = build_scorer(&options.scorer, instance, seed).map_err(|e| fail(e.to_string()))?;
            let run = run_strategy(strategy, instance, &mut scorer, seed).map_err(|e| fail(e.to_string()))?;
            let specs: Vec<SimilaritySpec> = options
                .metrics
                .iter()
                .filter(|m| match m.kind {
                    SimilarityKind::Temporal => true,
                    SimilarityKind::VisualSsim => frames.is_some(),
                    SimilarityKind::EmbeddingCosine => embeddings.is_some(),
                })
                .copied()
                .collect();
            let ctx = EvalContext {
                frames: frames.as_ref(),
                embeddings,
            };
            let metrics = evaluate_instance(&run.keyframes, &instance.reference_keyframes, &instance.video, &specs, &ctx)
                .map_err(|e| fail(e.to_string()))?;
            Ok(BenchRecord {
                strategy: strategy.to_string(),
                instance_id: instance.instance_id.clone(),
                keyframes: run.keyframes,
                metrics,
                efficiency: run.efficiency,
                iterations: run.iterations,
                terminal_reason: run.terminal_reason,
            })
        })
        .collect()
}

fn summarize(strategy: &str, records: &[BenchRecord]) -> StrategySummary {
    let mine: Vec<&BenchRecord> = records.iter().filter(|r| r.strategy == strategy).collect();
    let mut efficiency = EfficiencyReport::default();
    for r in &mine {
        efficiency.accumulate(&r.efficiency);
    }
    let n = mine.len();
    let mean = |total: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
    StrategySummary {
        strategy: strategy.to_string(),
        instances: n,
        metrics: aggregate(mine.iter().flat_map(|r| &r.metrics)),
        mean_iterations: mean(mine.iter().map(|r| r.iterations).sum()),
        mean_frames_processed: mean(efficiency.frames_processed),
        efficiency,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haystack::{synth_haystack, SynthParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset(n: usize) -> Vec<HaystackInstance> {
        let params = SynthParams {
            frame_count: 3_000,
            ..SynthParams::default()
        };
        synth_haystack(&params, n, &mut ChaCha8Rng::seed_from_u64(11)).unwrap()
    }

    fn strategies() -> Vec<Strategy> {
        ["uniform8", "uniform32", "tstar"].iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn empty_dataset_gives_empty_report() {
        let report = run_benchmark(&[], &strategies(), &BenchOptions::default());
        assert_eq!(report, BenchReport::default());
    }

    #[test]
    fn summaries_follow_strategy_order() {
        let report = run_benchmark(&dataset(6), &strategies(), &BenchOptions::default());
        let names: Vec<&str> = report.summaries.iter().map(|s| s.strategy.as_str()).collect();
        assert_eq!(names, ["uniform8", "uniform32", "tstar"]);
        assert_eq!(report.records.len(), 18);
        assert!(report.failures.is_empty());
        assert_eq!(report.summary("uniform8").unwrap().efficiency.frames_processed, 0);
        assert!(report.summary("tstar").unwrap().mean_frames_processed <= 1_024.0);
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let data = dataset(5);
        let one = run_benchmark(&data, &strategies(), &BenchOptions { jobs: 1, ..BenchOptions::default() });
        let three = run_benchmark(&data, &strategies(), &BenchOptions { jobs: 3, ..BenchOptions::default() });
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&three).unwrap());
    }

    #[test]
    fn failures_are_collected() {
        let options = BenchOptions {
            scorer: ScorerSpec::File {
                path: "/nonexistent/{instance_id}.tsv".into(),
                cost_units_per_frame: 1.0,
            },
            ..BenchOptions::default()
        };
        let report = run_benchmark(&dataset(2), &strategies(), &options);
        assert_eq!(report.failures.len(), 6);
        assert!(report.failures[0].error.contains("synth-00000"));
        assert_eq!(report.summaries.len(), 3);
        assert_eq!(report.summaries[0].instances, 0);
    }
}
