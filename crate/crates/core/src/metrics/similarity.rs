//! Frame-to-frame similarity: temporal threshold, SSIM and embedding cosine.

use image::GrayImage;
use serde::{Deserialize, Serialize};

use super::MetricError;

/// 1 when the two timestamps are at most `threshold_s` apart, else 0.
pub fn temporal_sim(t_pred: f64, t_ref: f64, threshold_s: f64) -> f64 {
    if (t_pred - t_ref).abs() <= threshold_s {
        1.0
    } else {
        0.0
    }
}

/// Parameters of the Gaussian-windowed SSIM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub gaussian_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            gaussian_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(MetricError::InvalidParams(format!(
                "ssim window must be odd and at least 3, got {}",
                self.window
            )));
        }
        if !(self.gaussian_sigma > 0.0 && self.dynamic_range > 0.0) {
            return Err(MetricError::InvalidParams("sigma and dynamic range must be positive".into()));
        }
        Ok(())
    }

    fn kernel(&self) -> Vec<f64> {
        let radius = (self.window / 2) as f64;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| {
                let x = i as f64 - radius;
                (-(x * x) / (2.0 * self.gaussian_sigma * self.gaussian_sigma)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }
}

/// Mean SSIM over every position where the window fits entirely inside both
/// images.
pub fn ssim(a: &GrayImage, b: &GrayImage, params: &SsimParams) -> Result<f64, MetricError> {
    params.validate()?;
    if a.dimensions() != b.dimensions() {
        return Err(MetricError::Dimension(format!(
            "images are {:?} and {:?}",
            a.dimensions(),
            b.dimensions()
        )));
    }
    let (w, h) = (a.width() as usize, a.height() as usize);
    if w < params.window || h < params.window {
        return Err(MetricError::Dimension(format!(
            "{w}x{h} image is smaller than the {0}x{0} window",
            params.window
        )));
    }
    let x: Vec<f64> = a.as_raw().iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.as_raw().iter().map(|&v| v as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let kernel = params.kernel();
    let blur = |plane: &[f64]| filter_valid(plane, w, h, &kernel);
    let (mu_x, mu_y) = (blur(&x), blur(&y));
    let (e_xx, e_yy, e_xy) = (blur(&xx), blur(&yy), blur(&xy));

    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let n = mu_x.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let var_x = e_xx[i] - mx * mx;
            let var_y = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (var_x + var_y + c2))
        })
        .sum();
    Ok(total / n as f64)
}

/// Separable "valid" convolution: output is `(w - k + 1) × (h - k + 1)`.
fn filter_valid(plane: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let ow = w - k + 1;
    let oh = h - k + 1;
    let mut rows = vec![0.0; ow * h];
    for r in 0..h {
        let line = &plane[r * w..(r + 1) * w];
        for c in 0..ow {
            rows[r * ow + c] = kernel.iter().zip(&line[c..c + k]).map(|(g, v)| g * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = kernel
                .iter()
                .enumerate()
                .map(|(i, g)| g * rows[(r + i) * ow + c])
                .sum();
        }
    }
    out
}

/// Cosine similarity of two precomputed embeddings.
pub fn embedding_sim(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(MetricError::Dimension(format!(
            "embedding lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let norm_a = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (norm_a * norm_b)).clamp(-1.0, 1.0))
}
