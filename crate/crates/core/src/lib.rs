//! Budgeted temporal search for keyframes in long videos.
//!
//! A query names target objects (which must be found) and cue objects (which
//! hint where targets may be). The search repeatedly draws a grid of frames
//! from a distribution over the video, scores the grid, verifies promising
//! cells and reshapes the distribution around what it saw, until every target
//! is verified or the frame budget is spent.
//!
//! ```no_run
//! use tstar::prelude::*;
//!
//! let video = VideoSource::new("kitchen", 18_000, 30.0).unwrap();
//! let query = GroundedQuery::new(
//!     "What colour is the cup?",
//!     vec![WeightedObject::target("cup")],
//!     vec![WeightedObject::cue("table")],
//! )
//! .unwrap();
//! let mut scorer = OracleScorer::for_references(OracleParams::default(), &query, &[5_400], 7);
//! let cfg = SearchConfig::for_video(&video);
//! let outcome = run_search(&video, &query, &mut scorer, &cfg).unwrap();
//! println!("{:?}", outcome.keyframes.indices());
//! ```

pub mod cli;
pub mod config;
pub mod distribution;
pub mod frames;
pub mod haystack;
pub mod metrics;
pub mod model;
pub mod sampling;
pub mod scoring;
pub mod search;

/// The types most programs need.
pub mod prelude {
    pub use crate::config::{validate_config, SearchConfig};
    pub use crate::model::{GroundedQuery, Keyframe, KeyframeSet, ReferenceKeyframe, ScoreState, VideoSource, WeightedObject};
    pub use crate::scoring::{Detection, OracleParams, OracleScorer, Scorer, ScorerSpec};
    pub use crate::search::{run_search, run_search_with, SearchOptions, SearchOutcome, TerminalReason};
}
