//! Seeded synthetic benchmarks with controllable per-class difficulty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, SampleShape, Split};
use crate::error::{Error, Result};

/// Two classes whose centers are pulled toward their midpoint; `strength = 1`
/// makes them identical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapPair {
    pub a: usize,
    pub b: usize,
    pub strength: f64,
}

/// Unit-covariance Gaussian blobs centred on a scaled simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub dim: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Distance between any two class means before overlap is applied.
    pub separation: f64,
    pub overlap_pairs: Vec<OverlapPair>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_classes: 5,
            dim: 8,
            train_per_class: 200,
            test_per_class: 100,
            separation: 4.0,
            overlap_pairs: Vec::new(),
            seed: 0,
        }
    }
}

fn validate_pairs(pairs: &[OverlapPair], n: usize) -> Result<()> {
    for p in pairs {
        if p.a >= n || p.b >= n || p.a == p.b || !(0.0..=1.0).contains(&p.strength) {
            return Err(Error::InvalidInput(format!("bad overlap pair {p:?} for {n} classes")));
        }
    }
    Ok(())
}

fn pull_together(points: &mut [Vec<f64>], pairs: &[OverlapPair]) {
    for p in pairs {
        let (ma, mb) = (points[p.a].clone(), points[p.b].clone());
        let h = p.strength / 2.0;
        for k in 0..ma.len() {
            points[p.a][k] = ma[k] + h * (mb[k] - ma[k]);
            points[p.b][k] = mb[k] + h * (ma[k] - mb[k]);
        }
    }
}

/// Class means: `separation / sqrt(2) * e_k`, then the overlap pulls.
pub fn class_means(spec: &SyntheticSpec) -> Result<Vec<Vec<f64>>> {
    if spec.n_classes < 2 || spec.dim < spec.n_classes || spec.separation <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "synthetic spec needs n_classes >= 2, dim >= n_classes, separation > 0 (got {}, {}, {})",
            spec.n_classes, spec.dim, spec.separation
        )));
    }
    validate_pairs(&spec.overlap_pairs, spec.n_classes)?;
    let scale = spec.separation / std::f64::consts::SQRT_2;
    let mut means: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|k| {
            let mut m = vec![0.0; spec.dim];
            m[k] = scale;
            m
        })
        .collect();
    pull_together(&mut means, &spec.overlap_pairs);
    Ok(means)
}

/// Returns `(train, test)`, deterministic in `spec.seed`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<(Dataset<f64>, Dataset<f64>)> {
    let means = class_means(spec)?;
    if spec.train_per_class == 0 || spec.test_per_class == 0 {
        return Err(Error::InvalidInput("samples per class must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = |count: usize, split: Split| {
        let mut features = Vec::with_capacity(count * spec.n_classes * spec.dim);
        let mut labels = Vec::with_capacity(count * spec.n_classes);
        for (k, m) in means.iter().enumerate() {
            for _ in 0..count {
                features.extend(m.iter().map(|&mu| mu + rng.sample::<f64, _>(StandardNormal)));
                labels.push(k);
            }
        }
        Dataset::new(features, labels, spec.n_classes, SampleShape::Flat { dim: spec.dim }, split)
    };
    let train = draw(spec.train_per_class, Split::Train)?;
    let test = draw(spec.test_per_class, Split::Test)?;
    Ok((train, test))
}

/// Square grayscale images: each class is a template built from Gaussian
/// bumps at seeded positions; samples add a random one-pixel jitter and
/// pixel noise, clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSpec {
    pub n_classes: usize,
    pub size: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub bumps_per_class: usize,
    pub noise: f64,
    pub overlap_pairs: Vec<OverlapPair>,
    pub seed: u64,
}

impl Default for ImageSpec {
    fn default() -> Self {
        Self {
            n_classes: 5,
            size: 10,
            train_per_class: 200,
            test_per_class: 100,
            bumps_per_class: 2,
            noise: 0.3,
            overlap_pairs: Vec::new(),
            seed: 0,
        }
    }
}

pub fn gen_synthetic_images(spec: &ImageSpec) -> Result<(Dataset<f64>, Dataset<f64>)> {
    if spec.n_classes < 2 || spec.size < 2 || spec.bumps_per_class == 0 || spec.noise < 0.0 {
        return Err(Error::InvalidInput(format!("bad image spec {spec:?}")));
    }
    if spec.train_per_class == 0 || spec.test_per_class == 0 {
        return Err(Error::InvalidInput("samples per class must be positive".into()));
    }
    validate_pairs(&spec.overlap_pairs, spec.n_classes)?;
    let s = spec.size;
    let sigma = s as f64 / 6.0;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut templates: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|_| {
            let mut t = vec![0.0; s * s];
            for _ in 0..spec.bumps_per_class {
                let cy = rng.random_range(0.0..s as f64);
                let cx = rng.random_range(0.0..s as f64);
                for y in 0..s {
                    for x in 0..s {
                        let d2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
                        t[y * s + x] += (-d2 / (2.0 * sigma * sigma)).exp();
                    }
                }
            }
            let mx = t.iter().copied().fold(0.0, f64::max);
            t.iter_mut().for_each(|v| *v /= mx);
            t
        })
        .collect();
    pull_together(&mut templates, &spec.overlap_pairs);

    let shape = SampleShape::Image { height: s, width: s, channels: 1 };
    let mut draw = |count: usize, split: Split| {
        let mut features = Vec::with_capacity(count * spec.n_classes * s * s);
        let mut labels = Vec::with_capacity(count * spec.n_classes);
        for (k, t) in templates.iter().enumerate() {
            for _ in 0..count {
                let dy = rng.random_range(-1i64..=1);
                let dx = rng.random_range(-1i64..=1);
                for y in 0..s as i64 {
                    for x in 0..s as i64 {
                        let sy = (y - dy).clamp(0, s as i64 - 1) as usize;
                        let sx = (x - dx).clamp(0, s as i64 - 1) as usize;
                        let noise: f64 = rng.sample(StandardNormal);
                        features.push((t[sy * s + sx] + spec.noise * noise).clamp(0.0, 1.0));
                    }
                }
                labels.push(k);
            }
        }
        Dataset::new(features, labels, spec.n_classes, shape, split)
    };
    let train = draw(spec.train_per_class, Split::Train)?;
    let test = draw(spec.test_per_class, Split::Test)?;
    Ok((train, test))
}
