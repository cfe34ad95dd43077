//! On-disk frame data: grayscale frame images and per-frame embeddings.
//!
//! A frame store is a directory of 8-bit binary PGM (P5) files named by
//! zero-padded frame index, e.g. `000042.pgm`.
//!
//! An embedding file is text. After optional `#` comment lines, the header
//! line holds `rows dims`; then come `rows` lines of `dims` whitespace
//! separated numbers, row `i` being the embedding of frame `i`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, GrayImage, ImageEncoder};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("embedding file {path} line {line}: {reason}")]
    Embedding { path: PathBuf, line: usize, reason: String },
    #[error("frame {index} is outside the {rows} stored rows")]
    MissingRow { index: usize, rows: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameStore {
    dir: PathBuf,
}

impl FrameStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, index: usize) -> PathBuf {
        self.dir.join(format!("{index:06}.pgm"))
    }

    pub fn load(&self, index: usize) -> Result<GrayImage, FrameError> {
        let path = self.path_of(index);
        let img = image::open(&path).map_err(|source| FrameError::Image {
            path: path.clone(),
            source,
        })?;
        Ok(img.to_luma8())
    }

    pub fn save(&self, index: usize, img: &GrayImage) -> Result<(), FrameError> {
        std::fs::create_dir_all(&self.dir).map_err(|source| FrameError::Io {
            path: self.dir.clone(),
            source,
        })?;
        let path = self.path_of(index);
        let file = File::create(&path).map_err(|source| FrameError::Io {
            path: path.clone(),
            source,
        })?;
        let encoder = PnmEncoder::new(BufWriter::new(file)).with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary));
        encoder
            .write_image(img.as_raw(), img.width(), img.height(), ExtendedColorType::L8)
            .map_err(|source| FrameError::Image { path, source })
    }

    /// Checks that every frame in `0..frame_count` loads.
    pub fn check(&self, frame_count: usize) -> Result<(), FrameError> {
        (0..frame_count).try_for_each(|i| self.load(i).map(|_| ()))
    }
}

/// Row-major matrix of per-frame embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dims: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dims: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * dims, data.len(), "embedding data does not match its shape");
        Self { rows, dims, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, index: usize) -> Result<&[f64], FrameError> {
        if index >= self.rows {
            return Err(FrameError::MissingRow {
                index,
                rows: self.rows,
            });
        }
        Ok(&self.data[index * self.dims..(index + 1) * self.dims])
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, FrameError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| FrameError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read(BufReader::new(file), path)
    }

    fn read(reader: impl BufRead, path: &Path) -> Result<Self, FrameError> {
        let bad = |line: usize, reason: &str| FrameError::Embedding {
            path: path.to_path_buf(),
            line,
            reason: reason.to_string(),
        };
        let mut shape: Option<(usize, usize)> = None;
        let mut data = Vec::new();
        let mut seen_rows = 0;
        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|source| FrameError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            match shape {
                None => {
                    let fields: Vec<&str> = text.split_whitespace().collect();
                    let [rows, dims] = fields[..] else {
                        return Err(bad(line_no, "header must be `rows dims`"));
                    };
                    let rows: usize = rows.parse().map_err(|_| bad(line_no, "rows is not an integer"))?;
                    let dims: usize = dims.parse().map_err(|_| bad(line_no, "dims is not an integer"))?;
                    if dims == 0 {
                        return Err(bad(line_no, "dims must be positive"));
                    }
                    data.reserve(rows * dims);
                    shape = Some((rows, dims));
                }
                Some((rows, dims)) => {
                    if seen_rows == rows {
                        return Err(bad(line_no, "more rows than the header declares"));
                    }
                    let before = data.len();
                    for field in text.split_whitespace() {
                        data.push(field.parse::<f64>().map_err(|_| bad(line_no, "value is not a number"))?);
                    }
                    if data.len() - before != dims {
                        return Err(bad(line_no, "row length differs from dims"));
                    }
                    seen_rows += 1;
                }
            }
        }
        let (rows, dims) = shape.ok_or_else(|| bad(0, "missing header"))?;
        if seen_rows != rows {
            return Err(bad(0, "fewer rows than the header declares"));
        }
        Ok(Self::new(rows, dims, data))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), FrameError> {
        let path = path.as_ref();
        let io = |source| FrameError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(out, "# rows dims").map_err(io)?;
        writeln!(out, "{} {}", self.rows, self.dims).map_err(io)?;
        for r in 0..self.rows {
            let row = &self.data[r * self.dims..(r + 1) * self.dims];
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" ")).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = FrameStore::new(dir.path());
        let img = GrayImage::from_fn(13, 7, |x, y| image::Luma([(x * 19 + y * 5) as u8]));
        store.save(42, &img).unwrap();
        assert!(store.path_of(42).ends_with("000042.pgm"));
        let bytes = std::fs::read(store.path_of(42)).unwrap();
        assert_eq!(&bytes[..2], b"P5");
        assert_eq!(store.load(42).unwrap(), img);
        assert!(store.load(7).is_err());
        assert!(store.check(43).is_err());
    }

    #[test]
    fn embedding_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        let m = EmbeddingMatrix::new(3, 2, vec![1.0, 0.0, 0.5, -0.25, 0.0, 2.0]);
        m.write(&path).unwrap();
        let back = EmbeddingMatrix::open(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.row(1).unwrap(), &[0.5, -0.25]);
        assert!(back.row(3).is_err());
    }

    #[test]
    fn embedding_file_errors() {
        let parse = |text: &str| EmbeddingMatrix::read(text.as_bytes(), Path::new("t"));
        assert!(parse("").is_err());
        assert!(parse("2 2\n1 2\n").is_err());
        assert!(parse("1 2\n1 2 3\n").is_err());
        assert!(parse("1 2\n1 x\n").is_err());
        assert!(parse("1 2\n1 2\n3 4\n").is_err());
        assert!(parse("# c\n1 2\n\n1 2\n").is_ok());
    }
}
