//! Per-sample losses and per-epoch class-weight rules for CLAM and the four
//! fairness baselines (focal, tilted CE, performance-weighted, GGF-weighted).

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;
use crate::simplex::Projection;

/// Probabilities below this are clamped before taking the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

fn clamp_prob<F: Scalar>(p: F) -> Result<F> {
    if !(p > F::zero()) || p > F::one() + F::lit(PROB_FLOOR) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1]")));
    }
    Ok(p.max(F::lit(PROB_FLOOR)).min(F::one()))
}

/// `-ln p`.
pub fn ce_loss<F: Scalar>(p: F) -> Result<F> {
    Ok(-clamp_prob(p)?.ln())
}

/// `-ln p * (1 - p)^gamma`.
pub fn focal_loss<F: Scalar>(p: F, gamma: F) -> Result<F> {
    let p = clamp_prob(p)?;
    Ok(-p.ln() * (F::one() - p).powf(gamma))
}

/// `-ln p * ((1 - p)^gamma + theta_pw)`.
pub fn pw_loss<F: Scalar>(p: F, gamma: F, theta_pw: F) -> Result<F> {
    let p = clamp_prob(p)?;
    Ok(-p.ln() * ((F::one() - p).powf(gamma) + theta_pw))
}

/// The loss applied to one sample given the predicted probability of its
/// true class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar", tag = "kind", rename_all = "snake_case")]
pub enum SampleLoss<F> {
    CrossEntropy,
    Focal { gamma: F },
    PerformanceWeighted { gamma: F, theta_pw: F },
}

impl<F: Scalar> SampleLoss<F> {
    pub fn value(&self, p: F) -> Result<F> {
        match *self {
            Self::CrossEntropy => ce_loss(p),
            Self::Focal { gamma } => focal_loss(p, gamma),
            Self::PerformanceWeighted { gamma, theta_pw } => pw_loss(p, gamma, theta_pw),
        }
    }

    /// The scalar `s` with `d loss / d z_k = s * (p_k - [k = y])` for softmax
    /// logits `z`, i.e. `s = -p * d loss / d p` evaluated at the true-class
    /// probability `p`. Equals one for cross entropy.
    pub fn logit_scale(&self, p: F) -> F {
        let one = F::one();
        match *self {
            Self::CrossEntropy => one,
            Self::Focal { gamma } => focal_modulation(p, gamma),
            Self::PerformanceWeighted { gamma, theta_pw } => {
                // (1-p)^g + theta - g p ln p (1-p)^(g-1)
                let q = one - p;
                let base = q.powf(gamma) + theta_pw;
                base - focal_correction(p, gamma)
            }
        }
    }
}

/// `(1-p)^g - g p ln p (1-p)^(g-1)`.
fn focal_modulation<F: Scalar>(p: F, gamma: F) -> F {
    (F::one() - p).powf(gamma) - focal_correction(p, gamma)
}

/// `g p ln p (1-p)^(g-1)`, zero when `g = 0` or `p = 1` (its limit).
fn focal_correction<F: Scalar>(p: F, gamma: F) -> F {
    let q = F::one() - p;
    if gamma == F::zero() || q <= F::zero() {
        return F::zero();
    }
    gamma * p * p.max(F::lit(PROB_FLOOR)).ln() * q.powf(gamma - F::one())
}

/// Training method: the base per-sample loss plus the class-weighting rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar", tag = "method", rename_all = "snake_case")]
pub enum LossSpec<F> {
    Normal,
    Focal { gamma: F },
    Tce { gamma: F },
    Pw { gamma: F, theta_pw: F },
    Ggf { alpha: F, w_min: F, frequency: usize },
    /// `u_min = None` selects `1 / (2n)` once the class count is known.
    Clam { tau: F, u_min: Option<F>, projection: Projection },
}

/// Per-dataset GGF settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GgfPreset {
    Cifar10,
    Cifar100,
    FashionMnist,
    MiniImagenet,
    Imagenet,
}

impl<F: Scalar> LossSpec<F> {
    pub fn focal_default() -> Self {
        Self::Focal { gamma: F::lit(2.0) }
    }

    pub fn tce_default() -> Self {
        Self::Tce { gamma: F::lit(0.5) }
    }

    pub fn pw_default() -> Self {
        Self::Pw { gamma: F::lit(2.5), theta_pw: F::lit(0.8) }
    }

    pub fn ggf_preset(preset: GgfPreset) -> Self {
        let (alpha, w_min, frequency) = match preset {
            GgfPreset::Cifar10 => (0.9, 0.1, 1),
            GgfPreset::Cifar100 => (0.98, 0.1, 2),
            GgfPreset::FashionMnist => (0.98, 0.1, 2),
            GgfPreset::MiniImagenet => (0.95, 0.01, 2),
            GgfPreset::Imagenet => (0.998, 0.2, 1),
        };
        Self::Ggf { alpha: F::lit(alpha), w_min: F::lit(w_min), frequency }
    }

    pub fn clam_default() -> Self {
        Self::Clam { tau: F::one(), u_min: None, projection: Projection::ScaledClip }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Focal { .. } => "focal",
            Self::Tce { .. } => "tce",
            Self::Pw { .. } => "pw",
            Self::Ggf { .. } => "ggf",
            Self::Clam { .. } => "clam",
        }
    }

    pub fn sample_loss(&self) -> SampleLoss<F> {
        match *self {
            Self::Focal { gamma } => SampleLoss::Focal { gamma },
            Self::Pw { gamma, theta_pw } => SampleLoss::PerformanceWeighted { gamma, theta_pw },
            _ => SampleLoss::CrossEntropy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        let finite_nonneg = |x: F| x.is_finite() && x >= F::zero();
        match *self {
            Self::Normal => Ok(()),
            Self::Focal { gamma } | Self::Tce { gamma } if !finite_nonneg(gamma) => bad(format!("gamma = {gamma} must be >= 0")),
            Self::Tce { gamma } if gamma > F::one() => bad(format!("TCE gamma = {gamma} must be <= 1")),
            Self::Focal { .. } | Self::Tce { .. } => Ok(()),
            Self::Pw { gamma, theta_pw } => {
                if !finite_nonneg(gamma) || !finite_nonneg(theta_pw) {
                    bad(format!("PW gamma = {gamma}, theta = {theta_pw} must be >= 0"))
                } else {
                    Ok(())
                }
            }
            Self::Ggf { alpha, w_min, frequency } => {
                if !(alpha > F::zero() && alpha <= F::one()) {
                    bad(format!("GGF alpha = {alpha} must be in (0, 1]"))
                } else if !(w_min >= F::zero() && w_min <= F::one()) {
                    bad(format!("GGF w_min = {w_min} must be in [0, 1]"))
                } else if frequency == 0 {
                    bad("GGF frequency must be >= 1".into())
                } else {
                    Ok(())
                }
            }
            Self::Clam { tau, u_min, .. } => {
                if !finite_nonneg(tau) {
                    bad(format!("CLAM tau = {tau} must be >= 0"))
                } else if u_min.is_some_and(|u| !finite_nonneg(u)) {
                    bad("CLAM u_min must be >= 0".into())
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// `w_t(c) = (1 - gamma) w_{t-1}(c) + gamma softmax(L_t)_c`.
pub fn tce_weights_update<F: Scalar>(w_prev: &[F], class_losses: &[F], gamma: F) -> Result<Vec<F>> {
    check_len(w_prev.len(), class_losses.len())?;
    if class_losses.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("class losses must be finite".into()));
    }
    let mx = class_losses.iter().copied().fold(F::neg_infinity(), F::max);
    let e: Vec<F> = class_losses.iter().map(|&l| (l - mx).exp()).collect();
    let z: F = e.iter().copied().sum();
    let keep = F::one() - gamma;
    Ok(w_prev.iter().zip(&e).map(|(&w, &ei)| keep * w + gamma * (ei / z)).collect())
}

/// Rank-based GGF weights `max(alpha^(rank - 1), w_min)`, where rank 1 is the
/// least accurate class (ties broken by class index). On epochs with
/// `epoch % frequency != 0` all weights are one. Weights are not normalized.
pub fn ggf_epoch_weights<F: Scalar>(prev_epoch_acc: &[F], alpha: F, w_min: F, epoch: usize, frequency: usize) -> Vec<F> {
    let n = prev_epoch_acc.len();
    if frequency == 0 || epoch % frequency != 0 {
        return vec![F::one(); n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        prev_epoch_acc[a]
            .partial_cmp(&prev_epoch_acc[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut w = vec![F::one(); n];
    for (rank0, &c) in order.iter().enumerate() {
        w[c] = alpha.powi(rank0 as i32).max(w_min);
    }
    w
}
