//! Plug in your own detector by implementing `Scorer`.
//!
//! Here the "video" is a function from frame index to brightness and the
//! detector reports a `flash` wherever a frame is much brighter than usual,
//! plus `storm` while clouds darken the scene around it.
//!
//! cargo run --release --example custom_scorer

use tstar::prelude::*;
use tstar::sampling::GridLayout;
use tstar::scoring::{CellDetections, CellResult, ScorerError};

struct Footage {
    flash_at: usize,
}

impl Footage {
    fn brightness(&self, frame: usize) -> f64 {
        let flicker = ((frame as f64 * 12.9898).sin() * 43_758.545).fract().abs() * 20.0;
        let d = frame.abs_diff(self.flash_at) as f64;
        let clouds = 40.0 * (-(d / 2_000.0).powi(2)).exp();
        let flash = 160.0 * (-d / 30.0).exp();
        100.0 + flicker - clouds + flash
    }
}

struct BrightnessDetector<'a> {
    footage: &'a Footage,
    frames_seen: usize,
}

impl Scorer for BrightnessDetector<'_> {
    fn score_grid(&mut self, grid: &GridLayout, _query: &GroundedQuery) -> Result<CellDetections, ScorerError> {
        let cells = grid
            .filled()
            .map(|(cell, frame)| {
                self.frames_seen += 1;
                let b = self.footage.brightness(frame);
                let mut detections = Vec::new();
                if b > 130.0 {
                    detections.push(Detection::new("flash", ((b - 130.0) / 100.0).min(1.0)));
                }
                if b < 100.0 {
                    detections.push(Detection::new("storm", ((100.0 - b) / 40.0).min(1.0)));
                }
                CellResult { cell, frame, detections }
            })
            .collect();
        Ok(CellDetections { cells })
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let footage = Footage {
        flash_at: 40_500,
    };
    let video = VideoSource::new("timelapse", 72_000, 24.0)?;
    let query = GroundedQuery::new(
        "When did the lightning strike?",
        vec![WeightedObject::target("flash")],
        vec![WeightedObject::cue("storm")],
    )?;
    let mut detector = BrightnessDetector {
        footage: &footage,
        frames_seen: 0,
    };
    let mut cfg = SearchConfig::for_video(&video);
    cfg.k = 4;
    cfg.seed = 1;
    let outcome = run_search(&video, &query, &mut detector, &cfg)?;

    println!(
        "{} after {} iterations; detector looked at {} of {} frames",
        outcome.terminal_reason(),
        outcome.iterations(),
        detector.frames_seen,
        video.frame_count
    );
    for kf in &outcome.keyframes.entries {
        println!("  frame {:>6} at {:>7.1} s  score {:.2}", kf.index, kf.timestamp, kf.score);
    }
    println!("flash was at frame {}", footage.flash_at);
    Ok(())
}
