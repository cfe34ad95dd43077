//! Line-delimited JSON dataset of haystack instances.
//!
//! One instance per line:
//!
//! ```json
//! {"video_id":"v1","frame_count":18000,"fps":30,"question":"...","targets":[{"label":"cup"}],
//!  "cues":[{"label":"sink","weight":0.5}],"keyframe_timestamps_s":[12.5],"answer":"...","split":"test"}
//! ```
//!
//! Optional fields: `instance_id` (defaults to `<video_id>-<record>`),
//! `keyframe_indices` (frame of each reference timestamp), `frame_store`
//! (directory of PGM frames) and `embeddings` (embedding file). Missing object
//! weights default to 1.0 for targets and 0.5 for cues.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HaystackError;
use crate::model::{GroundedQuery, ReferenceKeyframe, VideoSource, WeightedObject, CUE_WEIGHT, TARGET_WEIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    #[default]
    Test,
}

/// One benchmark row: a video, a grounded question, its reference keyframes
/// and the answer.
#[derive(Debug, Clone, PartialEq)]
pub struct HaystackInstance {
    pub instance_id: String,
    pub video: VideoSource,
    pub query: GroundedQuery,
    pub reference_keyframes: Vec<ReferenceKeyframe>,
    pub answer: String,
    pub split: Split,
    pub embeddings: Option<PathBuf>,
}

impl HaystackInstance {
    pub fn validate(&self) -> Result<(), String> {
        self.video.validate().map_err(|e| e.to_string())?;
        self.query.validate().map_err(|e| e.to_string())?;
        if self.reference_keyframes.is_empty() {
            return Err("at least one reference keyframe required".into());
        }
        let duration = self.video.duration_s();
        for r in &self.reference_keyframes {
            if !(r.timestamp_s >= 0.0 && r.timestamp_s <= duration) {
                return Err(format!(
                    "keyframe timestamp {} outside the video's {duration} s",
                    r.timestamp_s
                ));
            }
            if let Some(i) = r.frame_index {
                if i >= self.video.frame_count {
                    return Err(format!("keyframe index {i} outside {} frames", self.video.frame_count));
                }
            }
        }
        Ok(())
    }

    /// Reference keyframes as frame indices.
    pub fn reference_indices(&self) -> Vec<usize> {
        self.reference_keyframes
            .iter()
            .map(|r| r.frame_index(&self.video))
            .collect()
    }

    pub fn to_record(&self) -> DatasetRecord {
        let object = |o: &WeightedObject| RecordObject {
            label: o.label.clone(),
            weight: Some(o.weight),
        };
        let indices: Vec<Option<usize>> = self.reference_keyframes.iter().map(|r| r.frame_index).collect();
        DatasetRecord {
            instance_id: Some(self.instance_id.clone()),
            video_id: self.video.video_id.clone(),
            frame_count: self.video.frame_count,
            fps: self.video.fps,
            question: self.query.question.clone(),
            targets: Some(self.query.targets.iter().map(object).collect()),
            cues: self.query.cues.iter().map(object).collect(),
            keyframe_timestamps_s: self.reference_keyframes.iter().map(|r| r.timestamp_s).collect(),
            keyframe_indices: indices.iter().all(Option::is_some).then(|| indices.iter().flatten().copied().collect()),
            answer: self.answer.clone(),
            split: self.split,
            frame_store: self.video.frame_store.clone(),
            embeddings: self.embeddings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordObject {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

/// The wire form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<String>,
    pub video_id: String,
    pub frame_count: usize,
    pub fps: f64,
    pub question: String,
    #[serde(default)]
    pub targets: Option<Vec<RecordObject>>,
    #[serde(default)]
    pub cues: Vec<RecordObject>,
    pub keyframe_timestamps_s: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyframe_indices: Option<Vec<usize>>,
    #[serde(default)]
    pub answer: String,
    #[serde(default)]
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_store: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
}

impl DatasetRecord {
    pub fn into_instance(self, record_no: usize) -> Result<HaystackInstance, String> {
        let targets = match self.targets {
            Some(t) if !t.is_empty() => t,
            _ => return Err("targets required".into()),
        };
        let weigh = |objects: Vec<RecordObject>, default: f64| -> Vec<WeightedObject> {
            objects
                .into_iter()
                .map(|o| WeightedObject::new(o.label, o.weight.unwrap_or(default)))
                .collect()
        };
        let reference_keyframes = match &self.keyframe_indices {
            Some(indices) => {
                if indices.len() != self.keyframe_timestamps_s.len() {
                    return Err("keyframe_indices and keyframe_timestamps_s differ in length".into());
                }
                self.keyframe_timestamps_s
                    .iter()
                    .zip(indices)
                    .map(|(&t, &i)| ReferenceKeyframe {
                        timestamp_s: t,
                        frame_index: Some(i),
                    })
                    .collect()
            }
            None => self
                .keyframe_timestamps_s
                .iter()
                .map(|&t| ReferenceKeyframe::at(t))
                .collect(),
        };
        let instance = HaystackInstance {
            instance_id: self
                .instance_id
                .unwrap_or_else(|| format!("{}-{record_no}", self.video_id)),
            video: VideoSource {
                video_id: self.video_id,
                frame_count: self.frame_count,
                fps: self.fps,
                frame_store: self.frame_store,
            },
            query: GroundedQuery {
                question: self.question,
                targets: weigh(targets, TARGET_WEIGHT),
                cues: weigh(self.cues, CUE_WEIGHT),
            },
            reference_keyframes,
            answer: self.answer,
            split: self.split,
            embeddings: self.embeddings,
        };
        instance.validate()?;
        Ok(instance)
    }
}

/// Parses a dataset; records are numbered from 1 and blank lines skipped.
pub fn parse_dataset(reader: impl BufRead) -> Result<Vec<HaystackInstance>, HaystackError> {
    let mut out = Vec::new();
    let mut record_no = 0;
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| HaystackError::Parse {
            line: n + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        record_no += 1;
        let fail = |reason: String| HaystackError::Parse { line: n + 1, reason };
        let record: DatasetRecord = serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
        out.push(record.into_instance(record_no).map_err(fail)?);
    }
    let mut ids: Vec<&str> = out.iter().map(|i| i.instance_id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(HaystackError::Parse {
            line: 0,
            reason: format!("duplicate instance_id {:?}", w[0]),
        });
    }
    Ok(out)
}

/// Reads a dataset file. Relative `frame_store` and `embeddings` paths are
/// taken relative to the file's directory.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<HaystackInstance>, HaystackError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| HaystackError::Io(path.to_path_buf(), e))?;
    let mut data = parse_dataset(std::io::BufReader::new(file))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for instance in &mut data {
        for p in [&mut instance.video.frame_store, &mut instance.embeddings].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
    Ok(data)
}

pub fn write_dataset<W: Write>(mut out: W, instances: &[HaystackInstance]) -> std::io::Result<()> {
    for instance in instances {
        serde_json::to_writer(&mut out, &instance.to_record())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = r#"{"video_id":"a","frame_count":300,"fps":30,"question":"q1","targets":[{"label":"cup"}],"cues":[{"label":"sink"}],"keyframe_timestamps_s":[2.0],"answer":"x","split":"train"}
{"instance_id":"b-q","video_id":"b","frame_count":600,"fps":30,"question":"q2","targets":[{"label":"key","weight":0.8}],"keyframe_timestamps_s":[1.0,19.0],"keyframe_indices":[30,570],"answer":"y"}
"#;

    #[test]
    fn parses_well_formed_records() {
        let data = parse_dataset(TWO.as_bytes()).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0].instance_id, "a-1");
        assert_eq!(data[0].split, Split::Train);
        assert_eq!(data[0].query.targets[0].weight, 1.0);
        assert_eq!(data[0].query.cues[0].weight, 0.5);
        assert_eq!(data[0].reference_indices(), vec![60]);
        assert_eq!(data[1].instance_id, "b-q");
        assert_eq!(data[1].split, Split::Test);
        assert_eq!(data[1].query.targets[0].weight, 0.8);
        assert_eq!(data[1].reference_indices(), vec![30, 570]);
    }

    #[test]
    fn rejects_timestamp_past_the_end() {
        let line = r#"{"video_id":"a","frame_count":300,"fps":30,"question":"q","targets":[{"label":"cup"}],"keyframe_timestamps_s":[10.5],"answer":""}"#;
        match parse_dataset(format!("\n{line}\n").as_bytes()) {
            Err(HaystackError::Parse { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("outside"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_missing_targets() {
        for line in [
            r#"{"video_id":"a","frame_count":300,"fps":30,"question":"q","keyframe_timestamps_s":[1.0],"answer":""}"#,
            r#"{"video_id":"a","frame_count":300,"fps":30,"question":"q","targets":[],"keyframe_timestamps_s":[1.0],"answer":""}"#,
        ] {
            match parse_dataset(line.as_bytes()) {
                Err(HaystackError::Parse { reason, .. }) => assert_eq!(reason, "targets required"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn rejects_structural_problems() {
        for line in [
            r#"{"video_id":"a","frame_count":300,"fps":30,"question":"q","targets":[{"label":"c"}],"keyframe_timestamps_s":[],"answer":""}"#,
            r#"{"video_id":"a","frame_count":0,"fps":30,"question":"q","targets":[{"label":"c"}],"keyframe_timestamps_s":[0.0],"answer":""}"#,
            r#"{"video_id":"a","frame_count":300,"fps":30,"question":"q","targets":[{"label":"c"}],"keyframe_timestamps_s":[1.0],"keyframe_indices":[1,2],"answer":""}"#,
            r#"{"video_id":"a","frame_count":300,"fps":30,"question":"q","targets":[{"label":"c"}],"cues":[{"label":"c"}],"keyframe_timestamps_s":[1.0],"answer":""}"#,
            r#"not json"#,
        ] {
            assert!(parse_dataset(line.as_bytes()).is_err(), "{line}");
        }
        let dup = format!("{0}\n{0}\n", TWO.lines().nth(1).unwrap());
        assert!(parse_dataset(dup.as_bytes()).is_err());
    }

    #[test]
    fn write_then_parse_is_identity() {
        let data = parse_dataset(TWO.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        assert_eq!(parse_dataset(buf.as_slice()).unwrap(), data);
    }
}
