//! Scorer backed by a precomputed table of detections.
//!
//! The table is tab-separated, one detection per line:
//! `frame_index<TAB>label<TAB>confidence`. Blank lines and lines starting with
//! `#` are ignored. Frames missing from the table have no detections.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use super::{CellDetections, CellResult, Detection, Scorer, ScorerError};
use crate::model::GroundedQuery;
use crate::sampling::GridLayout;

#[derive(Debug, Clone, Default)]
pub struct FileScorer {
    table: HashMap<usize, Vec<Detection>>,
    cost_units_per_frame: f64,
}

impl FileScorer {
    pub fn new(table: HashMap<usize, Vec<Detection>>, cost_units_per_frame: f64) -> Self {
        Self {
            table,
            cost_units_per_frame,
        }
    }

    pub fn open(path: impl AsRef<Path>, cost_units_per_frame: f64) -> Result<Self, ScorerError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| ScorerError::ScoresFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let table = parse_scores(std::io::BufReader::new(file))?;
        Ok(Self::new(table, cost_units_per_frame))
    }

    pub fn detections(&self, frame: usize) -> &[Detection] {
        self.table.get(&frame).map_or(&[], Vec::as_slice)
    }
}

/// Parses a scores table into per-frame detection lists, keeping file order.
pub fn parse_scores(reader: impl BufRead) -> Result<HashMap<usize, Vec<Detection>>, ScorerError> {
    let mut table: HashMap<usize, Vec<Detection>> = HashMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = n + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| ScorerError::ScoresLine {
            line: line_no,
            reason: reason.to_string(),
        };
        let mut fields = trimmed.split('\t');
        let (Some(frame), Some(label), Some(conf), None) = (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(bad("expected frame_index, label and confidence separated by tabs"));
        };
        let frame: usize = frame.trim().parse().map_err(|_| bad("frame index is not a non-negative integer"))?;
        let confidence: f64 = conf.trim().parse().map_err(|_| bad("confidence is not a number"))?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(bad("confidence must lie in [0, 1]"));
        }
        if label.is_empty() {
            return Err(bad("empty label"));
        }
        table.entry(frame).or_default().push(Detection::new(label, confidence));
    }
    Ok(table)
}

impl Scorer for FileScorer {
    fn score_grid(&mut self, grid: &GridLayout, _query: &GroundedQuery) -> Result<CellDetections, ScorerError> {
        Ok(CellDetections {
            cells: grid
                .filled()
                .map(|(cell, frame)| CellResult {
                    cell,
                    frame,
                    detections: self.detections(frame).to_vec(),
                })
                .collect(),
        })
    }

    fn cost_units_per_frame(&self) -> f64 {
        self.cost_units_per_frame
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WeightedObject;
    use crate::sampling::build_grid;

    const TABLE: &str = "# frame\tlabel\tconfidence\n42\tneedle\t0.75\n42\ttable\t0.3\n\n7\tneedle\t0.1\n";

    #[test]
    fn passes_listed_confidences_through() {
        let mut scorer = FileScorer::new(parse_scores(TABLE.as_bytes()).unwrap(), 1.0);
        let q = GroundedQuery::new("q", vec![WeightedObject::target("needle")], vec![]).unwrap();
        let grid = build_grid(&[42, 3], 2).unwrap();
        let out = scorer.score_grid(&grid, &q).unwrap();
        assert_eq!(out.cells.len(), 2);
        assert_eq!(out.cells[0].frame, 3);
        assert!(out.cells[0].detections.is_empty());
        assert_eq!(
            out.cells[1].detections,
            vec![Detection::new("needle", 0.75), Detection::new("table", 0.3)]
        );
    }

    #[test]
    fn reports_bad_lines() {
        for (text, line) in [
            ("1\tx\n", 1),
            ("1\tx\t0.5\n-3\tx\t0.5\n", 2),
            ("1\tx\t1.5\n", 1),
            ("1\tx\tabc\n", 1),
            ("1\tx\t0.1\t9\n", 1),
        ] {
            match parse_scores(text.as_bytes()) {
                Err(ScorerError::ScoresLine { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(
            FileScorer::open("/definitely/not/here.tsv", 1.0),
            Err(ScorerError::ScoresFile { .. })
        ));
    }
}
