//! Fairness metrics over per-class accuracies and aggregation across runs.
//!
//! The mean is `(1/n) sum_i v_i`; the coefficient of variation is `std / mean`
//! with the sample (n - 1) standard deviation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Spread statistics of one class-accuracy vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct FairnessReport<F> {
    pub mean: F,
    pub range: F,
    pub std: F,
    pub cov: F,
    pub worst_fraction: F,
    /// Mean accuracy over the `max(1, floor(worst_fraction * n))` lowest classes.
    pub worst_fraction_acc: F,
    pub per_class: Vec<F>,
}

impl<F: Scalar> FairnessReport<F> {
    pub fn n(&self) -> usize {
        self.per_class.len()
    }

    /// Lowest per-class accuracy.
    pub fn worst_class_acc(&self) -> F {
        self.per_class.iter().copied().fold(F::infinity(), F::min)
    }

    pub const CSV_HEADER: [&'static str; 5] = ["std", "cov", "range", "mean_acc", "worst_acc"];

    /// Values in the order of [`Self::CSV_HEADER`].
    pub fn csv_values(&self) -> [F; 5] {
        [self.std, self.cov, self.range, self.mean, self.worst_fraction_acc]
    }
}

/// Mean and sample standard deviation computed on data shifted by the first
/// element, so constant inputs give exactly that constant and zero.
fn shifted_mean_std<F: Scalar>(xs: &[F]) -> (F, F) {
    let k = xs[0];
    let n = F::from_usize_lossy(xs.len());
    let dmean = xs.iter().map(|&x| x - k).sum::<F>() / n;
    if xs.len() < 2 {
        return (k + dmean, F::zero());
    }
    let ss = xs.iter().map(|&x| (x - k - dmean) * (x - k - dmean)).sum::<F>();
    (k + dmean, (ss / (n - F::one())).sqrt())
}

/// Worst-set size `max(1, floor(fraction * n))`.
pub fn worst_set_size(n: usize, fraction: f64) -> usize {
    (((fraction * n as f64) + 1e-9).floor() as usize).clamp(1, n.max(1))
}

pub fn fairness_report<F: Scalar>(v: &[F], worst_fraction: F) -> Result<FairnessReport<F>> {
    let n = v.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("fairness report needs at least 2 classes, got {n}")));
    }
    if !(worst_fraction > F::zero() && worst_fraction <= F::one()) {
        return Err(Error::InvalidInput(format!("worst fraction {worst_fraction} outside (0, 1]")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite accuracy".into()));
    }
    let (mean, std) = shifted_mean_std(v);
    let (lo, hi) = v.iter().fold((F::infinity(), F::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let cov = if mean != F::zero() {
        std / mean.abs()
    } else if std == F::zero() {
        F::zero()
    } else {
        F::infinity()
    };
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let k = worst_set_size(n, worst_fraction.to_f64_lossy());
    let worst = sorted[..k].iter().copied().sum::<F>() / F::from_usize_lossy(k);
    Ok(FairnessReport {
        mean,
        range: hi - lo,
        std,
        cov,
        worst_fraction,
        worst_fraction_acc: worst,
        per_class: v.to_vec(),
    })
}

/// `with_da.range - without_da.range`; negative when augmentation's
/// class-dependent spread shrank.
pub fn range_difference<F: Scalar>(with_da: &FairnessReport<F>, without_da: &FairnessReport<F>) -> Result<F> {
    if with_da.n() != without_da.n() {
        return Err(Error::DimensionMismatch { expected: without_da.n(), found: with_da.n() });
    }
    Ok(with_da.range - without_da.range)
}

/// Mean and sample standard deviation (zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Summary<F> {
    pub mean: F,
    pub std: F,
    pub count: usize,
}

impl<F: Scalar> std::fmt::Display for Summary<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6}±{:.6}", self.mean.to_f64_lossy(), self.std.to_f64_lossy())
    }
}

pub fn aggregate_scalars<F: Scalar>(xs: &[F]) -> Result<Summary<F>> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("cannot aggregate an empty list".into()));
    }
    let (mean, std) = shifted_mean_std(xs);
    Ok(Summary { mean, std, count: xs.len() })
}

/// Field-wise [`Summary`] across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ReportAggregate<F> {
    pub std: Summary<F>,
    pub cov: Summary<F>,
    pub range: Summary<F>,
    pub mean: Summary<F>,
    pub worst: Summary<F>,
}

impl<F: Scalar> ReportAggregate<F> {
    /// Cells in `FairnessReport::CSV_HEADER` order, formatted `mean±std`.
    pub fn csv_cells(&self) -> [String; 5] {
        [self.std, self.cov, self.range, self.mean, self.worst].map(|s| s.to_string())
    }
}

pub fn aggregate_reports<F: Scalar>(reports: &[FairnessReport<F>]) -> Result<ReportAggregate<F>> {
    let field = |f: fn(&FairnessReport<F>) -> F| aggregate_scalars(&reports.iter().map(f).collect::<Vec<_>>());
    Ok(ReportAggregate {
        std: field(|r| r.std)?,
        cov: field(|r| r.cov)?,
        range: field(|r| r.range)?,
        mean: field(|r| r.mean)?,
        worst: field(|r| r.worst_fraction_acc)?,
    })
}

/// Average ranks (1-based), ties share the mean of their positions.
pub fn average_ranks<F: Scalar>(x: &[F]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with tie-averaged ranks. `None` when either
/// input is constant.
pub fn spearman<F: Scalar>(a: &[F], b: &[F]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}
