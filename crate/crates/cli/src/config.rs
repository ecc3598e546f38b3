//! Flat TOML experiment configuration.
//!
//! Every key is optional; unknown keys are rejected. Example:
//!
//! ```toml
//! dataset = "synthetic"          # synthetic | synthetic_images | csv | idx
//! n_classes = 5
//! dim = 10
//! train_per_class = 2000
//! test_per_class = 1000
//! separation = 5.0
//! overlap_pairs = [[0, 1, 0.6], [0, 2, 0.6]]
//! model = "mlp"                  # mlp | softmax
//! hidden = 64
//! epochs = 40
//! batch_size = 64
//! learning_rate = 0.05
//! methods = ["normal", "clam"]   # normal focal tce pw ggf clam
//! augmentation = "crop"          # none | crop | jitter
//! crop_lower_bounds = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
//! seeds = [0, 1, 2, 3, 4]
//! ```

use std::path::{Path, PathBuf};

use clam_core::data::{
    gen_synthetic, gen_synthetic_images, load_csv, load_idx, AugmentationSpec, Dataset, ImageSpec, OverlapPair,
    SyntheticSpec, Split,
};
use clam_core::losses::{GgfPreset, LossSpec};
use clam_core::simplex::{Projection, RestrictedSimplex};
use clam_core::classifier::Architecture;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic,
    SyntheticImages,
    Csv,
    Idx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Softmax,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationKind {
    None,
    Crop,
    Jitter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub n_classes: usize,
    pub dim: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub separation: f64,
    /// `[a, b, strength]` triples.
    pub overlap_pairs: Vec<(usize, usize, f64)>,
    pub image_size: usize,
    pub image_noise: f64,
    pub image_bumps: usize,
    /// Seed for the synthetic data; the run seed when absent.
    pub data_seed: Option<u64>,
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,

    pub model: ModelKind,
    pub hidden: usize,
    pub epochs: usize,
    pub iterations_per_epoch: Option<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub full_pass_accuracy: bool,

    pub methods: Vec<String>,
    pub tau: f64,
    pub u_min: Option<f64>,
    pub projection: Projection,
    pub focal_gamma: f64,
    pub tce_gamma: f64,
    pub pw_gamma: f64,
    pub pw_theta: f64,
    pub ggf_preset: Option<GgfPreset>,
    pub ggf_alpha: f64,
    pub ggf_w_min: f64,
    pub ggf_frequency: usize,

    pub augmentation: AugmentationKind,
    pub crop_lower_bounds: Vec<f64>,
    pub jitter_brightness: f64,
    pub jitter_contrast: f64,
    pub jitter_saturation: f64,
    /// Also run every method and seed without augmentation, for pairing.
    pub include_unaugmented: bool,

    pub seeds: Vec<u64>,
    pub worst_fraction: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synthetic,
            n_classes: 5,
            dim: 10,
            train_per_class: 2000,
            test_per_class: 1000,
            separation: 5.0,
            overlap_pairs: vec![(0, 1, 0.6), (0, 2, 0.6)],
            image_size: 10,
            image_noise: 0.8,
            image_bumps: 2,
            data_seed: None,
            train_csv: None,
            test_csv: None,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            model: ModelKind::Mlp,
            hidden: 64,
            epochs: 40,
            iterations_per_epoch: None,
            batch_size: 64,
            learning_rate: 0.05,
            full_pass_accuracy: false,
            methods: vec!["normal".into(), "clam".into()],
            tau: 1.0,
            u_min: None,
            projection: Projection::ScaledClip,
            focal_gamma: 2.0,
            tce_gamma: 0.5,
            pw_gamma: 2.5,
            pw_theta: 0.8,
            ggf_preset: None,
            ggf_alpha: 0.9,
            ggf_w_min: 0.1,
            ggf_frequency: 1,
            augmentation: AugmentationKind::None,
            crop_lower_bounds: vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            jitter_brightness: 0.4,
            jitter_contrast: 0.4,
            jitter_saturation: 0.4,
            include_unaugmented: false,
            seeds: vec![0],
            worst_fraction: 0.1,
            output_dir: PathBuf::from("runs"),
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        // relative data paths are taken from the config file's directory
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.train_csv,
            &mut cfg.test_csv,
            &mut cfg.train_images,
            &mut cfg.train_labels,
            &mut cfg.test_images,
            &mut cfg.test_labels,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn architecture(&self) -> Architecture {
        match self.model {
            ModelKind::Softmax => Architecture::Softmax,
            ModelKind::Mlp => Architecture::Mlp { hidden: self.hidden },
        }
    }

    pub fn loss_spec(&self, name: &str) -> Result<LossSpec<f64>, CliError> {
        let spec = match name {
            "normal" => LossSpec::Normal,
            "focal" => LossSpec::Focal { gamma: self.focal_gamma },
            "tce" => LossSpec::Tce { gamma: self.tce_gamma },
            "pw" => LossSpec::Pw { gamma: self.pw_gamma, theta_pw: self.pw_theta },
            "ggf" => match self.ggf_preset {
                Some(p) => LossSpec::ggf_preset(p),
                None => LossSpec::Ggf { alpha: self.ggf_alpha, w_min: self.ggf_w_min, frequency: self.ggf_frequency },
            },
            "clam" => LossSpec::Clam { tau: self.tau, u_min: self.u_min, projection: self.projection },
            other => return Err(bad(format!("unknown method '{other}'"))),
        };
        spec.validate().map_err(|e| bad(format!("method {name}: {e}")))?;
        Ok(spec)
    }

    /// Augmentations to sweep, `None` first when unaugmented runs are requested.
    pub fn augmentations(&self) -> Vec<AugmentationSpec> {
        let mut out = Vec::new();
        if self.include_unaugmented || self.augmentation == AugmentationKind::None {
            out.push(AugmentationSpec::None);
        }
        match self.augmentation {
            AugmentationKind::None => {}
            AugmentationKind::Crop => out.extend(
                self.crop_lower_bounds.iter().map(|&crop_lower_bound| AugmentationSpec::RandomResizedCrop { crop_lower_bound }),
            ),
            AugmentationKind::Jitter => out.push(AugmentationSpec::ColorJitter {
                brightness: self.jitter_brightness,
                contrast: self.jitter_contrast,
                saturation: self.jitter_saturation,
            }),
        }
        out
    }

    fn overlap(&self) -> Vec<OverlapPair> {
        self.overlap_pairs.iter().map(|&(a, b, strength)| OverlapPair { a, b, strength }).collect()
    }

    pub fn synthetic_spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_classes: self.n_classes,
            dim: self.dim,
            train_per_class: self.train_per_class,
            test_per_class: self.test_per_class,
            separation: self.separation,
            overlap_pairs: self.overlap(),
            seed: self.data_seed.unwrap_or(seed),
        }
    }

    fn image_spec(&self, seed: u64) -> ImageSpec {
        ImageSpec {
            n_classes: self.n_classes,
            size: self.image_size,
            train_per_class: self.train_per_class,
            test_per_class: self.test_per_class,
            bumps_per_class: self.image_bumps,
            noise: self.image_noise,
            overlap_pairs: self.overlap(),
            seed: self.data_seed.unwrap_or(seed),
        }
    }

    /// Whether the data differ between seeds (synthetic data without a fixed
    /// `data_seed`).
    pub fn data_depends_on_seed(&self) -> bool {
        matches!(self.dataset, DatasetSource::Synthetic | DatasetSource::SyntheticImages) && self.data_seed.is_none()
    }

    /// `(train, test)` for a run seed.
    pub fn load_data(&self, seed: u64) -> Result<(Dataset<f64>, Option<Dataset<f64>>), CliError> {
        let data_err = |e: clam_core::Error| bad(format!("dataset: {e}"));
        match self.dataset {
            DatasetSource::Synthetic => {
                let (tr, te) = gen_synthetic(&self.synthetic_spec(seed)).map_err(data_err)?;
                Ok((tr, Some(te)))
            }
            DatasetSource::SyntheticImages => {
                let (tr, te) = gen_synthetic_images(&self.image_spec(seed)).map_err(data_err)?;
                Ok((tr, Some(te)))
            }
            DatasetSource::Csv => {
                let train = self.train_csv.as_ref().ok_or_else(|| bad("csv dataset needs train_csv"))?;
                let tr = load_csv(train, Split::Train).map_err(data_err)?;
                let te = self.test_csv.as_ref().map(|p| load_csv(p, Split::Test)).transpose().map_err(data_err)?;
                Ok(harmonize(tr, te))
            }
            DatasetSource::Idx => {
                let (Some(ti), Some(tl)) = (&self.train_images, &self.train_labels) else {
                    return Err(bad("idx dataset needs train_images and train_labels"));
                };
                let tr = load_idx(ti, tl).map_err(data_err)?;
                let te = match (&self.test_images, &self.test_labels) {
                    (Some(i), Some(l)) => Some(load_idx(i, l).map_err(data_err)?.with_split(Split::Test)),
                    (None, None) => None,
                    _ => return Err(bad("give both test_images and test_labels or neither")),
                };
                Ok(harmonize(tr, te))
            }
        }
    }

    /// Checks everything that can be checked without touching data files.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.methods.is_empty() {
            return Err(bad("methods must not be empty"));
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds must not be empty"));
        }
        for m in &self.methods {
            self.loss_spec(m)?;
        }
        if self.methods.iter().any(|m| m == "clam") && self.tau <= 0.0 {
            return Err(bad(format!("tau = {} must be positive", self.tau)));
        }
        if !(self.worst_fraction > 0.0 && self.worst_fraction <= 1.0) {
            return Err(bad(format!("worst_fraction = {} outside (0, 1]", self.worst_fraction)));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.iterations_per_epoch == Some(0) {
            return Err(bad("epochs, batch_size and iterations_per_epoch must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(bad(format!("learning_rate = {} must be positive", self.learning_rate)));
        }
        if self.model == ModelKind::Mlp && self.hidden == 0 {
            return Err(bad("hidden must be positive"));
        }
        if self.augmentation == AugmentationKind::Crop && self.crop_lower_bounds.is_empty() {
            return Err(bad("crop_lower_bounds must not be empty"));
        }
        for a in self.augmentations() {
            a.validate().map_err(|e| bad(e.to_string()))?;
        }
        if self.augmentation != AugmentationKind::None && self.dataset == DatasetSource::Synthetic {
            return Err(bad("image augmentation needs an image dataset (synthetic_images or idx)"));
        }
        if matches!(self.dataset, DatasetSource::Synthetic | DatasetSource::SyntheticImages) {
            if self.n_classes < 2 {
                return Err(bad("n_classes must be at least 2"));
            }
            if self.train_per_class == 0 || self.test_per_class == 0 {
                return Err(bad("empty dataset: train_per_class and test_per_class must be positive"));
            }
            self.check_simplex(self.n_classes)?;
            let probe = if self.dataset == DatasetSource::Synthetic {
                clam_core::data::class_means(&self.synthetic_spec(0)).map(|_| ())
            } else {
                gen_synthetic_images(&ImageSpec { train_per_class: 1, test_per_class: 1, ..self.image_spec(0) }).map(|_| ())
            };
            probe.map_err(|e| bad(format!("dataset: {e}")))?;
        }
        Ok(())
    }

    /// Checks that CLAM's restricted simplex is nonempty for `n` classes.
    pub fn check_simplex(&self, n: usize) -> Result<(), CliError> {
        if self.methods.iter().any(|m| m == "clam") {
            if let Some(u) = self.u_min {
                RestrictedSimplex::new(n, u).map_err(|e| bad(format!("u_min: {e}")))?;
            }
        }
        Ok(())
    }
}

/// Gives train and test the same class count (labels may not reach the
/// top class in one of the files).
fn harmonize(tr: Dataset<f64>, te: Option<Dataset<f64>>) -> (Dataset<f64>, Option<Dataset<f64>>) {
    let n = te.as_ref().map_or(tr.n_classes(), |t| t.n_classes().max(tr.n_classes()));
    let widen = |d: Dataset<f64>| {
        if d.n_classes() == n {
            d
        } else {
            Dataset::new(d.features().to_vec(), d.labels().to_vec(), n, d.shape(), d.split()).expect("labels stay in range")
        }
    };
    (widen(tr), te.map(widen))
}

/// Parses `0,1,2` or `0..5`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad(format!("bad seed range '{s}'")))?;
        let b: u64 = b.trim().parse().map_err(|_| bad(format!("bad seed range '{s}'")))?;
        if a >= b {
            return Err(bad(format!("empty seed range '{s}'")));
        }
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| bad(format!("bad seed '{x}'"))))
        .collect()
}
