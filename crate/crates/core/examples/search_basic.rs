//! Find a needle in an hour of video with a simulated detector.
//!
//! cargo run --release --example search_basic

use tstar::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let video = VideoSource::new("hour-long", 108_000, 30.0)?;
    let query = GroundedQuery::new(
        "What is written on the red mug?",
        vec![WeightedObject::target("red mug")],
        vec![WeightedObject::cue("kitchen counter")],
    )?;
    let needle = video.index_at(2_412.5);
    let mut scorer = OracleScorer::for_references(OracleParams::default(), &query, &[needle], 7);

    let mut cfg = SearchConfig::for_video(&video);
    cfg.seed = 7;
    let outcome = run_search(&video, &query, &mut scorer, &cfg)?;

    println!("needle at frame {needle} ({:.1} s)", video.timestamp_of(needle));
    println!(
        "stopped: {} after {} iterations, {} of {} frames examined",
        outcome.terminal_reason(),
        outcome.iterations(),
        outcome.efficiency.frames_processed,
        video.frame_count
    );
    for kf in &outcome.keyframes.entries {
        let gap = kf.index.abs_diff(needle);
        println!("  frame {:>6}  {:>8.2} s  score {:.3}  ({gap} frames from the needle)", kf.index, kf.timestamp, kf.score);
    }
    Ok(())
}
