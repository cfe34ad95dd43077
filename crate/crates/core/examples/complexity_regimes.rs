//! Iterations needed as the video grows, with honest and scrambled scorers.
//!
//! cargo run --release --example complexity_regimes [trials]

use tstar::haystack::{complexity_experiment, ComplexityParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(10);
    let params = ComplexityParams {
        lengths: vec![1_024, 4_096, 16_384, 65_536],
        accuracies: vec![1.0 / 64.0, 0.25, 1.0],
        trials,
        seed: 1,
        ..ComplexityParams::default()
    };
    println!("{:>7} {:>8} {:>11} {:>11} {:>7}", "L", "p", "iterations", "frames", "found");
    for row in complexity_experiment(&params)? {
        println!(
            "{:>7} {:>8.4} {:>11.1} {:>11.0} {:>6.0}%",
            row.frame_count,
            row.accuracy,
            row.mean_iterations,
            row.mean_frames,
            100.0 * row.found_rate
        );
    }
    Ok(())
}
