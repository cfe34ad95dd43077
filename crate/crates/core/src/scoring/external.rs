//! Scorer running in a child process, driven over the line protocol.

use std::io::{BufReader, BufWriter};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use super::protocol::{read_line, write_line, Request, Response};
use super::{CellDetections, Detection, Scorer, ScorerError};
use crate::model::GroundedQuery;
use crate::sampling::GridLayout;

pub struct ExternalScorer {
    child: Child,
    stdin: Option<BufWriter<ChildStdin>>,
    stdout: BufReader<ChildStdout>,
    cost_units_per_frame: f64,
}

impl ExternalScorer {
    /// Spawns `command` through the shell. The child's stderr is inherited.
    pub fn spawn(command: &str, cost_units_per_frame: f64) -> Result<Self, ScorerError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScorerError::External(format!("failed to start {command:?}: {e}")))?;
        let stdin = child.stdin.take().map(BufWriter::new);
        let stdout = child
            .stdout
            .take()
            .map(BufReader::new)
            .ok_or_else(|| ScorerError::External("child has no stdout".into()))?;
        Ok(Self {
            child,
            stdin,
            stdout,
            cost_units_per_frame,
        })
    }

    fn round_trip(&mut self, request: &Request) -> Result<CellDetections, ScorerError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| ScorerError::External("scorer input already closed".into()))?;
        write_line(stdin, request).map_err(|e| match e {
            ScorerError::Io(io) => ScorerError::External(format!("process stopped accepting requests: {io}")),
            other => other,
        })?;
        let response: Response = read_line(&mut self.stdout)?
            .ok_or_else(|| ScorerError::External("process exited before replying".into()))?;
        response.into_detections(request)
    }
}

impl Scorer for ExternalScorer {
    fn score_grid(&mut self, grid: &GridLayout, query: &GroundedQuery) -> Result<CellDetections, ScorerError> {
        self.round_trip(&Request::grid(grid, query))
    }

    fn score_frame(&mut self, frame: usize, query: &GroundedQuery) -> Result<Vec<Detection>, ScorerError> {
        let result = self.round_trip(&Request::verify(frame, query))?;
        Ok(result
            .cells
            .into_iter()
            .next()
            .map(|c| c.detections)
            .unwrap_or_default())
    }

    fn cost_units_per_frame(&self) -> f64 {
        self.cost_units_per_frame
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        // Closing stdin lets a well-behaved child exit on its own.
        self.stdin.take();
        if matches!(self.child.try_wait(), Ok(None)) {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WeightedObject;
    use crate::sampling::build_grid;

    fn query() -> GroundedQuery {
        GroundedQuery::new("q", vec![WeightedObject::target("needle")], vec![]).unwrap()
    }

    #[test]
    fn dead_child_is_a_scorer_error() {
        let mut scorer = ExternalScorer::spawn("exit 0", 1.0).unwrap();
        let grid = build_grid(&[1], 1).unwrap();
        assert!(matches!(scorer.score_grid(&grid, &query()), Err(ScorerError::External(_))));
    }

    #[test]
    fn canned_reply_is_parsed() {
        let reply = r#"{"cells":[{"cell":0,"detections":[{"label":"needle","confidence":0.7}]}]}"#;
        let mut scorer = ExternalScorer::spawn(&format!("read line; echo '{reply}'; cat >/dev/null"), 2.0).unwrap();
        let dets = scorer.score_frame(9, &query()).unwrap();
        assert_eq!(dets, vec![Detection::new("needle", 0.7)]);
        assert_eq!(scorer.cost_units_per_frame(), 2.0);
    }
}
