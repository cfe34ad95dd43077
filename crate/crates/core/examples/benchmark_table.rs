//! Uniform sampling, exhaustive retrieval and iterative search on a
//! synthetic haystack.
//!
//! cargo run --release --example benchmark_table [instances]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tstar::haystack::{run_benchmark, synth_haystack, BenchOptions, SynthParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(100);
    let params = SynthParams {
        frame_count: 18_000,
        ..SynthParams::default()
    };
    let data = synth_haystack(&params, n, &mut ChaCha8Rng::seed_from_u64(2025))?;
    let strategies = ["uniform8", "uniform32", "retrieval8", "tstar", "tstar32"]
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<_>, _>>()?;
    let report = run_benchmark(&data, &strategies, &BenchOptions::default());

    println!("{n} videos of {} frames, temporal threshold 5 s", params.frame_count);
    println!("{:<11} {:>6} {:>6} {:>6} {:>11} {:>7}", "strategy", "P%", "R%", "F1%", "frames/run", "iters");
    for s in &report.summaries {
        let (p, r, f) = s.metrics[0].percentages();
        println!(
            "{:<11} {p:>6.1} {r:>6.1} {f:>6.1} {:>11.1} {:>7.1}",
            s.strategy, s.mean_frames_processed, s.mean_iterations
        );
    }
    for failure in &report.failures {
        eprintln!("{} on {}: {}", failure.strategy, failure.instance_id, failure.error);
    }
    Ok(())
}
