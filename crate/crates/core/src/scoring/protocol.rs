//! Newline-delimited JSON protocol spoken with external scorer processes.
//!
//! The parent writes one request per line:
//!
//! ```json
//! {"type":"grid","cells":[{"cell":0,"frame":12}],"targets":[{"label":"cup","weight":1.0}],"cues":[]}
//! ```
//!
//! and the child answers each request, in order, with one line:
//!
//! ```json
//! {"cells":[{"cell":0,"detections":[{"label":"cup","confidence":0.8}]}]}
//! ```
//!
//! `type` is `"verify"` for single-frame re-scores. Lines are UTF-8.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CellDetections, CellResult, Detection, Scorer, ScorerError};
use crate::model::{GroundedQuery, WeightedObject};
use crate::sampling::GridLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestKind {
    Grid,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRef {
    pub cell: usize,
    pub frame: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    #[serde(rename = "type")]
    pub kind: RequestKind,
    pub cells: Vec<CellRef>,
    pub targets: Vec<WeightedObject>,
    #[serde(default)]
    pub cues: Vec<WeightedObject>,
}

impl Request {
    pub fn grid(grid: &GridLayout, query: &GroundedQuery) -> Self {
        Self {
            kind: RequestKind::Grid,
            cells: grid.filled().map(|(cell, frame)| CellRef { cell, frame }).collect(),
            targets: query.targets.clone(),
            cues: query.cues.clone(),
        }
    }

    pub fn verify(frame: usize, query: &GroundedQuery) -> Self {
        Self {
            kind: RequestKind::Verify,
            cells: vec![CellRef { cell: 0, frame }],
            targets: query.targets.clone(),
            cues: query.cues.clone(),
        }
    }

    /// The grid and query this request describes.
    pub fn to_parts(&self) -> Result<(GridLayout, GroundedQuery), ScorerError> {
        let filled = self.cells.iter().map(|c| c.cell + 1).max().unwrap_or(0);
        let mut side = 1;
        while side * side < filled {
            side += 1;
        }
        let mut cells = vec![None; side * side];
        for c in &self.cells {
            if cells[c.cell].replace(c.frame).is_some() {
                return Err(ScorerError::External(format!("cell {} listed twice", c.cell)));
            }
        }
        let query = GroundedQuery {
            question: String::new(),
            targets: self.targets.clone(),
            cues: self.cues.clone(),
        };
        Ok((GridLayout { side, cells }, query))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReply {
    pub cell: usize,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub cells: Vec<CellReply>,
}

impl Response {
    pub fn from_detections(result: &CellDetections) -> Self {
        Self {
            cells: result
                .cells
                .iter()
                .map(|c| CellReply {
                    cell: c.cell,
                    detections: c.detections.clone(),
                })
                .collect(),
        }
    }

    /// Pairs each reply with the frame the request put in that cell.
    pub fn into_detections(self, request: &Request) -> Result<CellDetections, ScorerError> {
        let mut cells = Vec::with_capacity(request.cells.len());
        for reply in self.cells {
            let frame = request
                .cells
                .iter()
                .find(|c| c.cell == reply.cell)
                .map(|c| c.frame)
                .ok_or_else(|| ScorerError::External(format!("reply names unknown cell {}", reply.cell)))?;
            cells.push(CellResult {
                cell: reply.cell,
                frame,
                detections: reply.detections,
            });
        }
        cells.sort_by_key(|c| c.cell);
        if cells.len() != request.cells.len() || cells.windows(2).any(|w| w[0].cell == w[1].cell) {
            return Err(ScorerError::External(format!(
                "reply covers {} cells, request had {}",
                cells.len(),
                request.cells.len()
            )));
        }
        Ok(CellDetections { cells })
    }
}

/// Writes one JSON value followed by a newline.
pub fn write_line<W: Write, T: Serialize>(writer: &mut W, value: &T) -> Result<(), ScorerError> {
    let text = serde_json::to_string(value).map_err(|e| ScorerError::External(e.to_string()))?;
    writer.write_all(text.as_bytes())?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

/// Reads one JSON line; `Ok(None)` at end of stream.
pub fn read_line<R: BufRead, T: for<'de> Deserialize<'de>>(reader: &mut R) -> Result<Option<T>, ScorerError> {
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        if !line.trim().is_empty() {
            break;
        }
    }
    serde_json::from_str(line.trim_end())
        .map(Some)
        .map_err(|e| ScorerError::External(format!("malformed line: {e}")))
}

/// Answers requests from `input` with `scorer` until end of stream.
///
/// This is the child side of the protocol, useful for wrapping any in-process
/// scorer as an external one.
pub fn serve<R: BufRead, W: Write, S: Scorer + ?Sized>(
    mut input: R,
    mut output: W,
    scorer: &mut S,
) -> Result<usize, ScorerError> {
    let mut answered = 0;
    while let Some(request) = read_line::<_, Request>(&mut input)? {
        let (grid, query) = request.to_parts()?;
        let result = match request.kind {
            RequestKind::Grid => scorer.score_grid(&grid, &query)?,
            RequestKind::Verify => {
                let frame = request.cells.first().map(|c| c.frame).unwrap_or_default();
                CellDetections {
                    cells: vec![CellResult {
                        cell: 0,
                        frame,
                        detections: scorer.score_frame(frame, &query)?,
                    }],
                }
            }
        };
        write_line(&mut output, &Response::from_detections(&result))?;
        answered += 1;
    }
    Ok(answered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::build_grid;
    use crate::scoring::{parse_scores, FileScorer};
    use proptest::prelude::*;

    fn query() -> GroundedQuery {
        GroundedQuery::new(
            "q",
            vec![WeightedObject::target("needle")],
            vec![WeightedObject::cue("hay")],
        )
        .unwrap()
    }

    #[test]
    fn wire_format_matches_documented_shape() {
        let grid = build_grid(&[12, 4], 2).unwrap();
        let text = serde_json::to_string(&Request::grid(&grid, &query())).unwrap();
        assert_eq!(
            text,
            r#"{"type":"grid","cells":[{"cell":0,"frame":4},{"cell":1,"frame":12}],"targets":[{"label":"needle","weight":1.0}],"cues":[{"label":"hay","weight":0.5}]}"#
        );
        let reply: Response =
            serde_json::from_str(r#"{"cells":[{"cell":0,"detections":[{"label":"needle","confidence":0.8}]}]}"#)
                .unwrap();
        assert_eq!(reply.cells[0].detections[0].confidence, 0.8);
    }

    #[test]
    fn serve_answers_in_order() {
        let table = parse_scores("4\tneedle\t0.9\n12\thay\t0.4\n".as_bytes()).unwrap();
        let mut scorer = FileScorer::new(table, 1.0);
        let grid = build_grid(&[12, 4], 2).unwrap();
        let mut input = Vec::new();
        write_line(&mut input, &Request::grid(&grid, &query())).unwrap();
        write_line(&mut input, &Request::verify(4, &query())).unwrap();
        let mut output = Vec::new();
        assert_eq!(serve(input.as_slice(), &mut output, &mut scorer).unwrap(), 2);
        let mut lines = output.as_slice();
        let first: Response = read_line(&mut lines).unwrap().unwrap();
        let second: Response = read_line(&mut lines).unwrap().unwrap();
        assert!(read_line::<_, Response>(&mut lines).unwrap().is_none());
        assert_eq!(first.cells.len(), 2);
        assert_eq!(first.cells[0].detections, vec![Detection::new("needle", 0.9)]);
        assert_eq!(second.cells[0].detections, vec![Detection::new("needle", 0.9)]);
    }

    #[test]
    fn mismatched_reply_is_rejected() {
        let grid = build_grid(&[1, 2], 2).unwrap();
        let request = Request::grid(&grid, &query());
        let reply = Response {
            cells: vec![CellReply {
                cell: 0,
                detections: vec![],
            }],
        };
        assert!(reply.into_detections(&request).is_err());
    }

    proptest! {
        #[test]
        fn request_round_trips(frames in proptest::collection::btree_set(0usize..10_000, 1..64), verify in any::<bool>()) {
            let frames: Vec<usize> = frames.into_iter().collect();
            let request = if verify {
                Request::verify(frames[0], &query())
            } else {
                Request::grid(&build_grid(&frames, 8).unwrap(), &query())
            };
            let mut buf = Vec::new();
            write_line(&mut buf, &request).unwrap();
            let back: Request = read_line(&mut buf.as_slice()).unwrap().unwrap();
            prop_assert_eq!(&back, &request);
            let (grid, _) = back.to_parts().unwrap();
            let listed: Vec<usize> = grid.filled().map(|(_, f)| f).collect();
            let mut want = if verify { vec![frames[0]] } else { frames.clone() };
            want.sort_unstable();
            prop_assert_eq!(listed, want);
        }
    }
}
