//! The CLAM epoch loop and the baseline loops, sharing one code path so
//! every method consumes the random stream identically.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{argmax, Architecture, ClassifierParams};
use super::{accuracies_from_counts, class_accuracies};
use crate::data::{augment, AugmentationSpec, Dataset};
use crate::error::{check_len, Error, Result};
use crate::game::GameTrace;
use crate::losses::{ggf_epoch_weights, tce_weights_update, LossSpec};
use crate::metrics::{fairness_report, FairnessReport};
use crate::scalar::Scalar;
use crate::simplex::{mw_update, MwConfig, RestrictedSimplex, WeightVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Minibatch steps per epoch; `None` means one pass over the data.
    pub iterations_per_epoch: Option<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub architecture: Architecture,
    pub augmentation: AugmentationSpec,
    /// Recompute the epoch's training accuracies with a full pass over the
    /// training set instead of reusing the minibatch predictions.
    pub full_pass_accuracy: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            iterations_per_epoch: None,
            batch_size: 64,
            learning_rate: 0.05,
            seed: 0,
            architecture: Architecture::default(),
            augmentation: AugmentationSpec::None,
            full_pass_accuracy: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.iterations_per_epoch == Some(0) {
            return Err(Error::InvalidInput("epochs, batch size and iterations must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidInput(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if let Architecture::Mlp { hidden: 0 } = self.architecture {
            return Err(Error::InvalidInput("hidden width must be positive".into()));
        }
        self.augmentation.validate()
    }

    fn steps(&self, n_samples: usize) -> usize {
        self.iterations_per_epoch.unwrap_or_else(|| n_samples.div_ceil(self.batch_size))
    }
}

/// What happened in one epoch. `weights` are the class weights in force
/// during the epoch (uniform for unweighted methods, unnormalized for GGF).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct EpochRecord<F> {
    pub epoch: usize,
    pub weights: Vec<F>,
    pub train_acc: Vec<F>,
    pub train_empty: Vec<bool>,
    pub test_acc: Option<Vec<F>>,
    pub mean_loss: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct TrainResult<F> {
    pub method: LossSpec<F>,
    pub params: ClassifierParams<F>,
    pub epochs: Vec<EpochRecord<F>>,
    /// Weights after the last epoch's update.
    pub final_weights: Vec<F>,
}

impl<F: Scalar> TrainResult<F> {
    pub fn final_epoch(&self) -> &EpochRecord<F> {
        self.epochs.last().expect("at least one epoch")
    }

    pub fn final_train_acc(&self) -> &[F] {
        &self.final_epoch().train_acc
    }

    pub fn final_test_acc(&self) -> Option<&[F]> {
        self.final_epoch().test_acc.as_deref()
    }

    /// The CLAM run viewed as a game: round `t` pairs `w^t` with the training
    /// accuracies `v^t`.
    pub fn as_game_trace(&self) -> Result<GameTrace<F>> {
        let LossSpec::Clam { tau, projection, .. } = self.method else {
            return Err(Error::InvalidInput(format!("{} run has no multiplicative-weights trace", self.method.name())));
        };
        let weights = self.epochs.iter().map(|e| WeightVector::new(e.weights.clone())).collect::<Result<_>>()?;
        let payoffs = self.epochs.iter().map(|e| e.train_acc.clone()).collect();
        GameTrace::from_sequence(weights, payoffs, WeightVector::new(self.final_weights.clone())?, tau, projection)
    }

    /// Fairness reports of the final epoch on train and (if present) test.
    pub fn final_reports(&self, worst_fraction: F) -> Result<(FairnessReport<F>, Option<FairnessReport<F>>)> {
        let train = fairness_report(self.final_train_acc(), worst_fraction)?;
        let test = self.final_test_acc().map(|v| fairness_report(v, worst_fraction)).transpose()?;
        Ok((train, test))
    }

    /// `{config, per_epoch: [{epoch, w, train_acc, test_acc, mean_loss}], final}`.
    pub fn to_json<C: Serialize>(&self, config: &C, worst_fraction: F) -> Result<serde_json::Value> {
        let (train, test) = self.final_reports(worst_fraction)?;
        let per_epoch: Vec<_> = self
            .epochs
            .iter()
            .map(|e| {
                serde_json::json!({
                    "epoch": e.epoch,
                    "w": e.weights,
                    "train_acc": e.train_acc,
                    "test_acc": e.test_acc,
                    "mean_loss": e.mean_loss,
                })
            })
            .collect();
        Ok(serde_json::json!({
            "config": to_value(config)?,
            "method": to_value(&self.method)?,
            "per_epoch": per_epoch,
            "final_weights": self.final_weights,
            "final": { "train": to_value(&train)?, "test": to_value(&test)? },
        }))
    }
}

fn to_value<T: Serialize + ?Sized>(x: &T) -> Result<serde_json::Value> {
    serde_json::to_value(x).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// How class weights evolve between epochs.
enum Rule<F> {
    Fixed,
    Clam { cfg: MwConfig<F>, simplex: RestrictedSimplex<F> },
    Tce { gamma: F },
    Ggf { alpha: F, w_min: F, frequency: usize },
}

/// Class-weighted training from uniform `w^0`: each epoch runs the minibatch steps with
/// per-sample weights `n w_label`, then updates `w` from the epoch's
/// training accuracies.
pub fn train_clam<F: Scalar>(
    train: &Dataset<F>,
    test: Option<&Dataset<F>>,
    tcfg: &TrainConfig,
    mw: &MwConfig<F>,
    s: &RestrictedSimplex<F>,
) -> Result<TrainResult<F>> {
    check_len(train.n_classes(), s.n())?;
    let method = LossSpec::Clam { tau: mw.tau, u_min: Some(s.u_min()), projection: mw.projection };
    run(train, test, tcfg, method, Rule::Clam { cfg: *mw, simplex: *s })
}

/// Normal, Focal, PW, TCE and GGF training.
pub fn train_baseline<F: Scalar>(
    train: &Dataset<F>,
    test: Option<&Dataset<F>>,
    tcfg: &TrainConfig,
    spec: &LossSpec<F>,
) -> Result<TrainResult<F>> {
    spec.validate()?;
    let rule = match *spec {
        LossSpec::Normal | LossSpec::Focal { .. } | LossSpec::Pw { .. } => Rule::Fixed,
        LossSpec::Tce { gamma } => Rule::Tce { gamma },
        LossSpec::Ggf { alpha, w_min, frequency } => Rule::Ggf { alpha, w_min, frequency },
        LossSpec::Clam { .. } => return Err(Error::InvalidInput("use train_clam for CLAM".into())),
    };
    run(train, test, tcfg, *spec, rule)
}

/// Dispatches on `spec`; CLAM without an explicit `u_min` uses `1 / (2n)`.
pub fn train_method<F: Scalar>(
    train: &Dataset<F>,
    test: Option<&Dataset<F>>,
    tcfg: &TrainConfig,
    spec: &LossSpec<F>,
) -> Result<TrainResult<F>> {
    spec.validate()?;
    match *spec {
        LossSpec::Clam { tau, u_min, projection } => {
            let n = train.n_classes();
            let s = match u_min {
                Some(u) => RestrictedSimplex::new(n, u)?,
                None => RestrictedSimplex::practical(n)?,
            };
            train_clam(train, test, tcfg, &MwConfig::new(tau, projection)?, &s)
        }
        _ => train_baseline(train, test, tcfg, spec),
    }
}

fn run<F: Scalar>(
    train: &Dataset<F>,
    test: Option<&Dataset<F>>,
    tcfg: &TrainConfig,
    method: LossSpec<F>,
    rule: Rule<F>,
) -> Result<TrainResult<F>> {
    tcfg.validate()?;
    let n = train.n_classes();
    if n < 2 {
        return Err(Error::InvalidInput(format!("training needs at least 2 classes, got {n}")));
    }
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if let Some(t) = test {
        check_len(train.dim(), t.dim())?;
        check_len(n, t.n_classes())?;
        if t.is_empty() {
            return Err(Error::InvalidInput("empty test set".into()));
        }
    }
    let augmenting = !tcfg.augmentation.is_none();
    if augmenting {
        tcfg.augmentation.validate()?;
    }
    let loss = method.sample_loss();
    let lr = F::lit(tcfg.learning_rate);
    let d = train.dim();
    let samples = train.len();
    let steps = tcfg.steps(samples);
    let b = tcfg.batch_size;

    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut params = ClassifierParams::init(tcfg.architecture, d, n, &mut rng)?;
    let inv_n = F::one() / F::from_usize_lossy(n);
    let mut weights: Vec<F> = match rule {
        Rule::Ggf { .. } => vec![F::one(); n],
        _ => vec![inv_n; n],
    };
    let mut order: Vec<usize> = (0..samples).collect();
    let mut cursor = samples;
    let mut records = Vec::with_capacity(tcfg.epochs);

    let mut inputs = Vec::with_capacity(b * d);
    let mut labels = Vec::with_capacity(b);
    let mut sample_w = Vec::with_capacity(b);

    for epoch in 0..tcfg.epochs {
        let multiplier: Vec<F> = match rule {
            Rule::Fixed => vec![F::one(); n],
            Rule::Clam { .. } | Rule::Tce { .. } => weights.iter().map(|&w| w / inv_n).collect(),
            Rule::Ggf { .. } => weights.clone(),
        };
        let (mut correct, mut count) = (vec![0usize; n], vec![0usize; n]);
        let (mut loss_sum, mut loss_count) = (vec![F::zero(); n], vec![0usize; n]);
        let mut batch_loss_total = F::zero();

        for _ in 0..steps {
            inputs.clear();
            labels.clear();
            sample_w.clear();
            for _ in 0..b {
                if cursor == samples {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let i = order[cursor];
                cursor += 1;
                let y = train.label(i);
                if augmenting {
                    inputs.extend(augment(train.sample(i), train.shape(), &tcfg.augmentation, &mut rng)?);
                } else {
                    inputs.extend_from_slice(train.sample(i));
                }
                labels.push(y);
                sample_w.push(multiplier[y]);
            }
            let eval = params.grad_step(&inputs, &labels, &sample_w, &loss, lr).map_err(|e| match e {
                Error::NonFiniteGradient(msg) => Error::NonFiniteGradient(format!("epoch {epoch}: {msg}")),
                other => other,
            })?;
            batch_loss_total += eval.loss;
            for ((row, &y), &l) in eval.probs.chunks(n).zip(&labels).zip(&eval.losses) {
                count[y] += 1;
                if argmax(row) == y {
                    correct[y] += 1;
                }
                loss_sum[y] += l;
                loss_count[y] += 1;
            }
        }

        let train_acc = if tcfg.full_pass_accuracy {
            class_accuracies(&params, train)?
        } else {
            accuracies_from_counts(&correct, &count)?
        };
        let test_acc = test.map(|t| class_accuracies(&params, t)).transpose()?;
        let class_loss: Vec<F> = loss_sum
            .iter()
            .zip(&loss_count)
            .map(|(&s, &c)| if c == 0 { F::zero() } else { s / F::from_usize_lossy(c) })
            .collect();

        let used = weights.clone();
        weights = match &rule {
            Rule::Fixed => weights,
            Rule::Clam { cfg, simplex } => {
                let w = WeightVector::new(weights)?;
                mw_update(&w, &train_acc.acc, cfg, simplex)?.into_vec()
            }
            Rule::Tce { gamma } => tce_weights_update(&weights, &class_loss, *gamma)?,
            Rule::Ggf { alpha, w_min, frequency } => {
                ggf_epoch_weights(train_acc.acc.as_slice(), *alpha, *w_min, epoch + 1, *frequency)
            }
        };
        records.push(EpochRecord {
            epoch,
            weights: used,
            train_acc: train_acc.acc.into_vec(),
            train_empty: train_acc.empty,
            test_acc: test_acc.map(|a| a.acc.into_vec()),
            mean_loss: batch_loss_total / F::from_usize_lossy(steps),
        });
    }
    Ok(TrainResult { method, params, epochs: records, final_weights: weights })
}
