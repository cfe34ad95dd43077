//! Drive the search through a detector running in another process.
//!
//! The example re-executes itself with `--serve` to play the detector: it
//! reads one JSON request per line on stdin and answers on stdout. Any
//! program speaking the same protocol can be used, e.g. from the command line
//! with `tstar search --scorer 'external:python detector.py'`.
//!
//! cargo run --example external_scorer

use std::io;

use tstar::prelude::*;
use tstar::scoring::{protocol, ExternalScorer};

const NEEDLE: usize = 31_337;

fn query() -> GroundedQuery {
    GroundedQuery::new(
        "When does the bus arrive?",
        vec![WeightedObject::target("bus")],
        vec![WeightedObject::cue("bus stop")],
    )
    .expect("valid query")
}

fn detector() -> OracleScorer {
    OracleScorer::for_references(OracleParams::default(), &query(), &[NEEDLE], 11)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if std::env::args().any(|a| a == "--serve") {
        let answered = protocol::serve(io::stdin().lock(), io::stdout().lock(), &mut detector())?;
        eprintln!("detector answered {answered} requests");
        return Ok(());
    }

    let video = VideoSource::new("street", 54_000, 30.0)?;
    let mut cfg = SearchConfig::for_video(&video);
    cfg.seed = 11;

    let exe = std::env::current_exe()?;
    let mut remote = ExternalScorer::spawn(&format!("'{}' --serve", exe.display()), 1.0)?;
    let over_pipe = run_search(&video, &query(), &mut remote, &cfg)?;
    drop(remote);
    let in_process = run_search(&video, &query(), &mut detector(), &cfg)?;

    println!(
        "external detector: {} after {} frames, keyframes {:?}",
        over_pipe.terminal_reason(),
        over_pipe.efficiency.frames_processed,
        over_pipe.keyframes.indices()
    );
    println!(
        "same detector in process gives the same keyframes: {}",
        over_pipe.keyframes == in_process.keyframes
    );
    Ok(())
}
