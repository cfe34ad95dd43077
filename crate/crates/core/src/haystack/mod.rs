//! Haystack benchmarks: datasets of long videos with planted needles, baseline
//! strategies, the benchmark runner and the complexity experiment.

mod bench;
mod complexity;
mod dataset;
mod strategy;
mod synth;

use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scoring::{ExternalScorer, FileScorer, OracleScorer, Scorer, ScorerError, ScorerSpec};

pub use bench::{run_benchmark, BenchFailure, BenchOptions, BenchRecord, BenchReport, StrategySummary};
pub use complexity::{complexity_experiment, write_complexity_csv, ComplexityParams, ComplexityRow};
pub use dataset::{load_dataset, parse_dataset, write_dataset, DatasetRecord, HaystackInstance, RecordObject, Split};
pub use strategy::{run_strategy, uniform_indices, Strategy, StrategyRun, TStarParams};
pub use synth::{materialize, synth_haystack, SynthParams, CUE_LABEL, TARGET_LABEL};

#[derive(Debug, Error)]
pub enum HaystackError {
    #[error("dataset line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Frames(#[from] crate::frames::FrameError),
}

/// Per-item seed: `seed` xor the first eight bytes of SHA-256 of `key`.
///
/// Every strategy and worker derives the same stream for the same instance, so
/// thread count and run order never change results.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let digest = Sha256::digest(key.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(bytes)
}

/// Instantiates the scorer `spec` describes for one instance. Oracle scorers
/// place every query object at the instance's reference keyframes; file paths
/// may use `{video_id}` and `{instance_id}` placeholders.
pub fn build_scorer(spec: &ScorerSpec, instance: &HaystackInstance, seed: u64) -> Result<Box<dyn Scorer>, ScorerError> {
    Ok(match spec {
        ScorerSpec::Oracle(params) => Box::new(OracleScorer::for_references(
            params.clone(),
            &instance.query,
            &instance.reference_indices(),
            seed,
        )),
        ScorerSpec::File {
            path,
            cost_units_per_frame,
        } => {
            let path = path
                .replace("{video_id}", &instance.video.video_id)
                .replace("{instance_id}", &instance.instance_id);
            Box::new(FileScorer::open(path, *cost_units_per_frame)?)
        }
        ScorerSpec::External {
            command,
            cost_units_per_frame,
        } => Box::new(ExternalScorer::spawn(command, *cost_units_per_frame)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_per_key_and_base() {
        let a = derive_seed(7, "synth-00001");
        assert_eq!(a, derive_seed(7, "synth-00001"));
        assert_ne!(a, derive_seed(7, "synth-00002"));
        assert_ne!(a, derive_seed(8, "synth-00001"));
        assert_eq!(derive_seed(7, "x") ^ derive_seed(0, "x"), 7);
    }
}
