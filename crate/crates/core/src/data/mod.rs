//! Datasets, file loaders, synthetic benchmarks and image augmentation.

mod augment;
mod csv_io;
mod idx;
mod synthetic;

pub use augment::{augment, AugmentationSpec};
pub use csv_io::{load_csv, read_csv, write_csv};
pub use idx::{load_idx, parse_idx, parse_idx_images, parse_idx_labels, write_idx_images, write_idx_labels, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use synthetic::{class_means, gen_synthetic, gen_synthetic_images, ImageSpec, OverlapPair, SyntheticSpec};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// Layout of one sample's feature vector. Images are stored row-major with
/// interleaved channels (`[(y * width + x) * channels + c]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleShape {
    Flat { dim: usize },
    Image { height: usize, width: usize, channels: usize },
}

impl SampleShape {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Flat { dim } => dim,
            Self::Image { height, width, channels } => height * width * channels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Labeled samples of uniform shape, labels in `[0, n_classes)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Dataset<F> {
    features: Vec<F>,
    labels: Vec<usize>,
    n_classes: usize,
    shape: SampleShape,
    split: Split,
}

impl<F: Scalar> Dataset<F> {
    pub fn new(features: Vec<F>, labels: Vec<usize>, n_classes: usize, shape: SampleShape, split: Split) -> Result<Self> {
        let d = shape.dim();
        if d == 0 {
            return Err(Error::InvalidInput("sample dimension must be positive".into()));
        }
        check_len(labels.len() * d, features.len())?;
        if let Some(l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidInput(format!("label {l} out of range for {n_classes} classes")));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature".into()));
        }
        Ok(Self { features, labels, n_classes, shape, split })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn shape(&self) -> SampleShape {
        self.shape
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn sample(&self, i: usize) -> &[F] {
        let d = self.dim();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[F] {
        &self.features
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    /// Same samples viewed as flat vectors.
    pub fn flattened(mut self) -> Self {
        self.shape = SampleShape::Flat { dim: self.dim() };
        self
    }

    pub fn cast<G: Scalar>(&self) -> Dataset<G> {
        Dataset {
            features: self.features.iter().map(|x| G::lit(x.to_f64_lossy())).collect(),
            labels: self.labels.clone(),
            n_classes: self.n_classes,
            shape: self.shape,
            split: self.split,
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.dim());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.sample(i));
            labels.push(self.labels[i]);
        }
        Self { features, labels, n_classes: self.n_classes, shape: self.shape, split: self.split }
    }
}
