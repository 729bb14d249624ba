use alloc::vec;
use alloc::vec::Vec;

use super::FrameScorer;
use crate::frame::EquirectFrame;

/// Zero-mean normalized cross-correlation of block-averaged luma.
/// Deterministic and cheap; scores lie in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct PatchCorrelation {
    /// Target width of the downsampled image.
    pub target_width: u32,
}

impl Default for PatchCorrelation {
    fn default() -> Self {
        Self { target_width: 64 }
    }
}

pub struct PatchFeatures {
    values: Vec<f32>,
}

impl FrameScorer for PatchCorrelation {
    type Features = PatchFeatures;

    fn prepare(&self, frame: &EquirectFrame) -> PatchFeatures {
        let (w, h) = (frame.width() as usize, frame.height() as usize);
        let f = (w / self.target_width.max(1) as usize).max(1);
        let (dw, dh) = (w / f, h / f);
        let luma = frame.luma();
        let mut values = vec![0f32; dw * dh];
        for y in 0..dh * f {
            for x in 0..dw * f {
                values[(y / f) * dw + x / f] += luma[y * w + x] as f32;
            }
        }
        let n = values.len() as f32;
        let mean = values.iter().sum::<f32>() / n;
        let mut norm = 0f32;
        for v in &mut values {
            *v -= mean;
            norm += *v * *v;
        }
        let norm = libm::sqrtf(norm);
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        PatchFeatures { values }
    }

    fn score(&self, a: &PatchFeatures, b: &PatchFeatures) -> f64 {
        if a.values.len() != b.values.len() {
            return f64::NEG_INFINITY;
        }
        a.values.iter().zip(&b.values).map(|(x, y)| (x * y) as f64).sum()
    }
}
