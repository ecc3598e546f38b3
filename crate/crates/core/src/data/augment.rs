//! Random resized crop (fixed aspect, bilinear resampling) and color jitter.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SampleShape;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AugmentationSpec {
    #[default]
    None,
    /// Area fraction drawn uniformly from `[crop_lower_bound, 1]`.
    RandomResizedCrop { crop_lower_bound: f64 },
    ColorJitter { brightness: f64, contrast: f64, saturation: f64 },
}

impl AugmentationSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::None => Ok(()),
            Self::RandomResizedCrop { crop_lower_bound } if crop_lower_bound > 0.0 && crop_lower_bound <= 1.0 => Ok(()),
            Self::RandomResizedCrop { crop_lower_bound } => {
                Err(Error::InvalidInput(format!("crop lower bound {crop_lower_bound} outside (0, 1]")))
            }
            Self::ColorJitter { brightness, contrast, saturation } => {
                if [brightness, contrast, saturation].iter().all(|x| x.is_finite() && *x >= 0.0) {
                    Ok(())
                } else {
                    Err(Error::InvalidInput("color jitter strengths must be >= 0".into()))
                }
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Self::None)
    }

    /// Short tag such as `none`, `crop0.30`, `jitter0.40`.
    pub fn tag(&self) -> String {
        match *self {
            Self::None => "none".into(),
            Self::RandomResizedCrop { crop_lower_bound } => format!("crop{crop_lower_bound:.2}"),
            Self::ColorJitter { brightness, contrast, saturation } => {
                format!("jitter{brightness:.2}-{contrast:.2}-{saturation:.2}")
            }
        }
    }
}

fn factor<R: Rng + ?Sized>(strength: f64, rng: &mut R) -> f64 {
    let lo = (1.0 - strength).max(0.0);
    let hi = 1.0 + strength;
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        1.0
    }
}

/// Applies `spec` to one image; `None` copies the sample unchanged. Output
/// keeps the input shape and lies in `[0, 1]` for crop and jitter. Flat
/// samples are rejected for the image augmentations.
pub fn augment<F: Scalar, R: Rng + ?Sized>(sample: &[F], shape: SampleShape, spec: &AugmentationSpec, rng: &mut R) -> Result<Vec<F>> {
    if sample.len() != shape.dim() {
        return Err(Error::DimensionMismatch { expected: shape.dim(), found: sample.len() });
    }
    let (h, w, c) = match (spec, shape) {
        (AugmentationSpec::None, _) => return Ok(sample.to_vec()),
        (_, SampleShape::Image { height, width, channels }) => (height, width, channels),
        (_, SampleShape::Flat { .. }) => {
            return Err(Error::InvalidInput("image augmentation applied to a flat sample".into()));
        }
    };
    let img: Vec<f64> = sample.iter().map(|x| x.to_f64_lossy()).collect();
    let out = match *spec {
        AugmentationSpec::None => unreachable!(),
        AugmentationSpec::RandomResizedCrop { crop_lower_bound } => {
            let area = if crop_lower_bound < 1.0 { rng.random_range(crop_lower_bound..=1.0) } else { 1.0 };
            let r = area.sqrt();
            let y0 = rng.random_range(0.0..=1.0) * (h as f64) * (1.0 - r);
            let x0 = rng.random_range(0.0..=1.0) * (w as f64) * (1.0 - r);
            resized_crop(&img, h, w, c, y0, x0, r)
        }
        AugmentationSpec::ColorJitter { brightness, contrast, saturation } => {
            let b = factor(brightness, rng);
            let k = factor(contrast, rng);
            let s = factor(saturation, rng);
            jitter(&img, c, b, k, s)
        }
    };
    Ok(out.into_iter().map(|x| F::lit(x.clamp(0.0, 1.0))).collect())
}

/// Output pixel `(i, j)` samples the source at
/// `(y0 + (i + 0.5) r - 0.5, x0 + (j + 0.5) r - 0.5)` with bilinear
/// interpolation and edge clamping; `r = 1, y0 = x0 = 0` is the identity.
fn resized_crop(img: &[f64], h: usize, w: usize, c: usize, y0: f64, x0: f64, r: f64) -> Vec<f64> {
    let mut out = vec![0.0; img.len()];
    let at = |y: usize, x: usize, ch: usize| img[(y * w + x) * c + ch];
    for i in 0..h {
        let sy = (y0 + (i as f64 + 0.5) * r - 0.5).clamp(0.0, (h - 1) as f64);
        let ya = sy.floor() as usize;
        let yb = (ya + 1).min(h - 1);
        let fy = sy - ya as f64;
        for j in 0..w {
            let sx = (x0 + (j as f64 + 0.5) * r - 0.5).clamp(0.0, (w - 1) as f64);
            let xa = sx.floor() as usize;
            let xb = (xa + 1).min(w - 1);
            let fx = sx - xa as f64;
            for ch in 0..c {
                let top = at(ya, xa, ch) * (1.0 - fx) + at(ya, xb, ch) * fx;
                let bot = at(yb, xa, ch) * (1.0 - fx) + at(yb, xb, ch) * fx;
                out[(i * w + j) * c + ch] = top * (1.0 - fy) + bot * fy;
            }
        }
    }
    out
}

/// Brightness scales every pixel, contrast pulls toward the image's mean
/// gray level, saturation pulls each pixel toward its own gray level and is
/// skipped for single-channel images.
fn jitter(img: &[f64], c: usize, b: f64, k: f64, s: f64) -> Vec<f64> {
    let mut out: Vec<f64> = img.iter().map(|x| (x * b).clamp(0.0, 1.0)).collect();
    let gray = |px: &[f64]| if c == 3 { 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2] } else { px.iter().sum::<f64>() / c as f64 };
    if k != 1.0 {
        let npx = out.len() / c;
        let mean = out.chunks(c).map(gray).sum::<f64>() / npx as f64;
        out.iter_mut().for_each(|x| *x = ((*x - mean) * k + mean).clamp(0.0, 1.0));
    }
    if c == 3 && s != 1.0 {
        for px in out.chunks_mut(3) {
            let g = gray(px);
            px.iter_mut().for_each(|x| *x = ((*x - g) * s + g).clamp(0.0, 1.0));
        }
    }
    out
}
