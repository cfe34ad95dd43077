//! Synthetic haystacks with planted needles.

use std::path::Path;

use image::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{derive_seed, HaystackError, HaystackInstance, Split};
use crate::config::default_window;
use crate::frames::{EmbeddingMatrix, FrameStore};
use crate::model::{GroundedQuery, ReferenceKeyframe, VideoSource, WeightedObject};
use crate::scoring::OracleParams;

/// The target planted in every synthetic video.
pub const TARGET_LABEL: &str = "needle";
/// The cue that accompanies the needle.
pub const CUE_LABEL: &str = "landmark";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub frame_count: usize,
    pub fps: f64,
    pub keyframes_per_instance: usize,
    /// Propagation half-width `w`; keyframes are at least `2w` frames apart.
    /// Defaults to the search default for `fps`.
    pub window: Option<usize>,
    pub with_cue: bool,
    /// Scorer the dataset is meant to be searched with.
    pub oracle: OracleParams,
    /// `(width, height)` of rendered frames; nothing is rendered when unset.
    pub frame_image_size: Option<(u32, u32)>,
    /// Dimensions of written embeddings; nothing is written when unset.
    pub embedding_dims: Option<usize>,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            frame_count: 18_000,
            fps: 30.0,
            keyframes_per_instance: 2,
            window: None,
            with_cue: true,
            oracle: OracleParams::default(),
            frame_image_size: None,
            embedding_dims: None,
        }
    }
}

impl SynthParams {
    pub fn spacing(&self) -> usize {
        2 * self.window.unwrap_or_else(|| default_window(self.fps))
    }

    pub fn validate(&self) -> Result<(), HaystackError> {
        let bad = |m: String| Err(HaystackError::Params(m));
        if self.frame_count == 0 || !(self.fps.is_finite() && self.fps > 0.0) {
            return bad("frame_count and fps must be positive".into());
        }
        let k = self.keyframes_per_instance;
        if k == 0 || k > self.frame_count {
            return bad(format!("keyframes_per_instance must be in 1..={}", self.frame_count));
        }
        if (k - 1) * self.spacing() >= self.frame_count {
            return bad(format!(
                "{k} keyframes spaced {} frames apart do not fit in {} frames",
                self.spacing(),
                self.frame_count
            ));
        }
        if let Some((w, h)) = self.frame_image_size {
            if w == 0 || h == 0 {
                return bad("frame images need a positive size".into());
            }
        }
        if self.embedding_dims == Some(0) {
            return bad("embedding_dims must be positive".into());
        }
        self.oracle.validate().map_err(HaystackError::Params)
    }
}

/// Generates `n` instances named `synth-00000`, `synth-00001`, ...
///
/// Keyframes are uniform over the video, redrawn while closer than
/// [`SynthParams::spacing`] to an earlier one.
pub fn synth_haystack<R: Rng + ?Sized>(
    params: &SynthParams,
    n: usize,
    rng: &mut R,
) -> Result<Vec<HaystackInstance>, HaystackError> {
    params.validate()?;
    let mut cues = Vec::new();
    if params.with_cue {
        cues.push(WeightedObject::cue(CUE_LABEL));
    }
    let query = GroundedQuery::new(
        "When is the needle in view?",
        vec![WeightedObject::target(TARGET_LABEL)],
        cues,
    )
    .expect("fixed query is valid");
    Ok((0..n)
        .map(|i| {
            let id = format!("synth-{i:05}");
            let frames = place_keyframes(params, rng);
            let answer = frames
                .iter()
                .map(|&f| format!("{:.3}", f as f64 / params.fps))
                .collect::<Vec<_>>()
                .join(", ");
            HaystackInstance {
                instance_id: id.clone(),
                video: VideoSource {
                    video_id: id,
                    frame_count: params.frame_count,
                    fps: params.fps,
                    frame_store: None,
                },
                query: query.clone(),
                reference_keyframes: frames
                    .iter()
                    .map(|&f| ReferenceKeyframe::at_frame(f, params.fps))
                    .collect(),
                answer: format!("at {answer} s"),
                split: Split::Test,
                embeddings: None,
            }
        })
        .collect())
}

fn place_keyframes<R: Rng + ?Sized>(params: &SynthParams, rng: &mut R) -> Vec<usize> {
    let spacing = params.spacing();
    let len = params.frame_count;
    'restart: loop {
        let mut frames: Vec<usize> = Vec::with_capacity(params.keyframes_per_instance);
        for _ in 0..params.keyframes_per_instance {
            let mut tries = 0;
            loop {
                let f = rng.random_range(0..len);
                if frames.iter().all(|&g| f.abs_diff(g) >= spacing) {
                    frames.push(f);
                    break;
                }
                tries += 1;
                if tries == 10_000 {
                    continue 'restart;
                }
            }
        }
        frames.sort_unstable();
        return frames;
    }
}

/// Writes frames and embeddings for `instances` under `dir` and points the
/// instances at them with paths relative to `dir`.
///
/// Frames go to `frames/<instance_id>/`: each keyframe shows a bright disc on
/// noise and every other frame is plain noise. Embeddings go to
/// `embeddings/<instance_id>.txt`; frames within `w` of a keyframe lean towards
/// a shared direction.
pub fn materialize(
    instances: &mut [HaystackInstance],
    params: &SynthParams,
    dir: &Path,
    seed: u64,
) -> Result<(), HaystackError> {
    params.validate()?;
    for instance in instances {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &instance.instance_id));
        let keyframes = instance.reference_indices();
        if let Some((w, h)) = params.frame_image_size {
            let rel = Path::new("frames").join(&instance.instance_id);
            let store = FrameStore::new(dir.join(&rel));
            for f in 0..instance.video.frame_count {
                let img = render_frame(w, h, keyframes.contains(&f), &mut rng);
                store.save(f, &img)?;
            }
            instance.video.frame_store = Some(rel);
        }
        if let Some(dims) = params.embedding_dims {
            let rel = Path::new("embeddings").join(format!("{}.txt", instance.instance_id));
            let reach = params.spacing() / 2;
            let matrix = synth_embeddings(instance.video.frame_count, dims, &keyframes, reach, &mut rng);
            let path = dir.join(&rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| HaystackError::Io(parent.to_path_buf(), e))?;
            }
            matrix.write(&path)?;
            instance.embeddings = Some(rel);
        }
    }
    Ok(())
}

fn render_frame<R: Rng + ?Sized>(w: u32, h: u32, disc: bool, rng: &mut R) -> GrayImage {
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let radius = w.min(h) as f64 / 3.0;
    GrayImage::from_fn(w, h, |x, y| {
        let noise: u8 = rng.random_range(0..=90);
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        if disc && dx * dx + dy * dy <= radius * radius {
            image::Luma([200 + noise / 2])
        } else {
            image::Luma([noise])
        }
    })
}

fn synth_embeddings<R: Rng + ?Sized>(
    frame_count: usize,
    dims: usize,
    keyframes: &[usize],
    reach: usize,
    rng: &mut R,
) -> EmbeddingMatrix {
    let mut gauss = |scale: f64| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    };
    let mut direction: Vec<f64> = (0..dims).map(|_| gauss(1.0)).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    direction.iter_mut().for_each(|v| *v /= norm);
    let noise_scale = 1.0 / (dims as f64).sqrt();
    let mut data = Vec::with_capacity(frame_count * dims);
    for f in 0..frame_count {
        let nearest = keyframes.iter().map(|&k| k.abs_diff(f)).min().unwrap_or(usize::MAX);
        let pull = if nearest <= reach {
            2.0 * (1.0 - nearest as f64 / (reach + 1) as f64)
        } else {
            0.0
        };
        for d in direction.iter() {
            data.push(gauss(noise_scale) + pull * d);
        }
    }
    EmbeddingMatrix::new(frame_count, dims, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthParams {
        SynthParams {
            frame_count: 10_000,
            ..SynthParams::default()
        }
    }

    #[test]
    fn hundred_instances_are_valid_and_spaced() {
        let params = small();
        let data = synth_haystack(&params, 100, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(data.len(), 100);
        for inst in &data {
            inst.validate().unwrap();
            let refs = inst.reference_indices();
            assert_eq!(refs.len(), 2);
            assert!(refs[1] - refs[0] >= params.spacing());
            assert_eq!(inst.query.targets[0].label, TARGET_LABEL);
        }
    }

    #[test]
    fn single_keyframe_option() {
        let params = SynthParams {
            keyframes_per_instance: 1,
            ..small()
        };
        let data = synth_haystack(&params, 20, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(data.iter().all(|i| i.reference_keyframes.len() == 1));
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = synth_haystack(&small(), 10, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = synth_haystack(&small(), 10, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let c = synth_haystack(&small(), 10, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_impossible_spacing() {
        let params = SynthParams {
            frame_count: 300,
            keyframes_per_instance: 3,
            ..SynthParams::default()
        };
        assert!(synth_haystack(&params, 1, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn rendered_keyframes_stand_out() {
        let dir = tempfile::tempdir().unwrap();
        let params = SynthParams {
            frame_count: 400,
            keyframes_per_instance: 1,
            frame_image_size: Some((24, 24)),
            embedding_dims: Some(8),
            ..SynthParams::default()
        };
        let mut data = synth_haystack(&params, 1, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        materialize(&mut data, &params, dir.path(), 5).unwrap();
        let store = FrameStore::new(dir.path().join(data[0].video.frame_store.as_ref().unwrap()));
        let key = data[0].reference_indices()[0];
        let other = (key + 200) % 400;
        let ssim_params = crate::metrics::SsimParams::default();
        let key_img = store.load(key).unwrap();
        let self_sim = crate::metrics::ssim(&key_img, &key_img, &ssim_params).unwrap();
        let cross = crate::metrics::ssim(&key_img, &store.load(other).unwrap(), &ssim_params).unwrap();
        assert!(self_sim > 0.999 && cross < 0.5, "{self_sim} {cross}");

        let emb = EmbeddingMatrix::open(dir.path().join(data[0].embeddings.as_ref().unwrap())).unwrap();
        assert_eq!((emb.rows(), emb.dims()), (400, 8));
        let neighbour = if key + 1 < 400 { key + 1 } else { key - 1 };
        let near = crate::metrics::embedding_sim(emb.row(key).unwrap(), emb.row(neighbour).unwrap()).unwrap();
        let far = crate::metrics::embedding_sim(emb.row(key).unwrap(), emb.row(other).unwrap()).unwrap();
        assert!(near > far, "{near} {far}");
    }
}
