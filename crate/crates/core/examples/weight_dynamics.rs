//! Watch the sampling distribution concentrate around the needle.
//!
//! cargo run --release --example weight_dynamics

use tstar::prelude::*;

const BINS: usize = 60;

fn sparkline(prob: &[f64]) -> String {
    let per_bin = prob.len().div_ceil(BINS);
    let bins: Vec<f64> = prob.chunks(per_bin).map(|c| c.iter().sum()).collect();
    let top = bins.iter().cloned().fold(0.0, f64::max);
    let ramp = [' ', '.', ':', '-', '=', '+', '*', '#', '@'];
    bins.iter()
        .map(|b| ramp[((b / top) * (ramp.len() - 1) as f64).round() as usize])
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let video = VideoSource::new("kitchen", 18_000, 30.0)?;
    let query = GroundedQuery::new(
        "Where did I leave the keys?",
        vec![WeightedObject::target("keys")],
        vec![WeightedObject::cue("hallway")],
    )?;
    let needle = 12_345;
    let params = OracleParams {
        locality_sigma: 15.0,
        cue_sigma: 1_500.0,
        ..OracleParams::default()
    };
    let mut scorer = OracleScorer::for_references(params, &query, &[needle], 3);
    let mut cfg = SearchConfig::for_video(&video);
    cfg.seed = 3;
    let options = SearchOptions {
        record_distributions: true,
    };
    let outcome = run_search_with(&video, &query, &mut scorer, &cfg, options)?;

    let marker = needle * BINS / video.frame_count;
    println!("{:>5} {:>8}  {}^ needle", "iter", "mass±w", " ".repeat(marker));
    let snapshots = outcome
        .trace
        .iterations
        .iter()
        .filter_map(|r| r.prob_snapshot.as_ref())
        .chain(outcome.trace.final_prob.as_ref());
    for (t, prob) in snapshots.enumerate() {
        let mass: f64 = prob[needle.saturating_sub(cfg.window)..=(needle + cfg.window).min(prob.len() - 1)]
            .iter()
            .sum();
        println!("{t:>5} {mass:>8.4}  {}", sparkline(prob));
    }
    println!("{} after {} frames", outcome.terminal_reason(), outcome.efficiency.frames_processed);
    Ok(())
}
