//! Weight vectors on the probability simplex, the lower-bounded simplex
//! `{w : sum(w) = 1, w_i >= u_min}`, projections onto it, the projected
//! multiplicative-weights update, and the two fair aggregators (the
//! generalized Gini welfare function and the min-linear value).
//!
//! Three projections are provided:
//!
//! * [`Projection::ProofClip`]: normalize, clip each component up to
//!   `u_min`, renormalize once. This is the map the regret analysis is
//!   written for. The renormalization can push clipped components back
//!   below `u_min`, so the result is not always inside the set.
//! * [`Projection::ScaledClip`]: `w_i = max(c * x_i, u_min)` with the unique
//!   `c > 0` making the sum one. Always feasible; the training default.
//! * [`Projection::Euclidean`]: water-filling, `w_i = max(y_i - theta, u_min)`
//!   with `y = x / sum(x)`.
//!
//! Every projection returns its input unchanged when the input already lies
//! in the set (sum equal to one up to a few ulps, every component at least
//! `u_min`).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::accuracy::ClassAccuracyVector;
use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// A probability vector over `n` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct WeightVector<F> {
    w: Vec<F>,
}

impl<F: Scalar> WeightVector<F> {
    /// Validates non-negativity and unit mass (within [`Scalar::sum_tolerance`]).
    pub fn new(w: Vec<F>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        if let Some((i, x)) = w.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= F::zero())) {
            return Err(Error::InvalidInput(format!("weight {i} = {x} is negative or non-finite")));
        }
        let s: F = w.iter().copied().sum();
        if (s - F::one()).abs() > F::sum_tolerance() {
            return Err(Error::InvalidInput(format!("weights sum to {s}, not 1")));
        }
        Ok(Self { w })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform weight vector needs n > 0");
        let u = F::one() / F::from_usize_lossy(n);
        Self { w: vec![u; n] }
    }

    /// One-hot vector `e_k`.
    pub fn vertex(n: usize, k: usize) -> Self {
        assert!(k < n);
        let mut w = vec![F::zero(); n];
        w[k] = F::one();
        Self { w }
    }

    pub(crate) fn from_vec_unchecked(w: Vec<F>) -> Self {
        Self { w }
    }

    pub fn as_slice(&self) -> &[F] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn into_vec(self) -> Vec<F> {
        self.w
    }

    /// `KL(self || other) = sum_i self_i ln(self_i / other_i)`, with the
    /// convention `0 ln 0 = 0`. Infinite when `other` has a zero where
    /// `self` does not.
    pub fn kl_divergence(&self, other: &WeightVector<F>) -> Result<F> {
        check_len(self.len(), other.len())?;
        let mut acc = F::zero();
        for (&p, &q) in self.w.iter().zip(&other.w) {
            if p > F::zero() {
                acc += p * (p / q).ln();
            }
        }
        Ok(acc)
    }

    /// `max_i |self_i - other_i|`.
    pub fn linf_distance(&self, other: &WeightVector<F>) -> F {
        self.w
            .iter()
            .zip(&other.w)
            .map(|(a, b)| (*a - *b).abs())
            .fold(F::zero(), F::max)
    }
}

impl<F> std::ops::Index<usize> for WeightVector<F> {
    type Output = F;
    fn index(&self, i: usize) -> &F {
        &self.w[i]
    }
}

/// The set `{w in R^n : sum(w) = 1, w_i >= u_min}`.
///
/// The intended regime is `0 < u_min < 1/n`. The closed endpoints are
/// accepted: `u_min = 0` gives the full simplex (plain Hedge) and
/// `u_min = 1/n` collapses the set to the uniform vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct RestrictedSimplex<F> {
    n: usize,
    u_min: F,
}

impl<F: Scalar> RestrictedSimplex<F> {
    pub fn new(n: usize, u_min: F) -> Result<Self> {
        let infeasible = || Error::InfeasibleSimplex { n, u_min: u_min.to_f64_lossy() };
        if n == 0 || !u_min.is_finite() || u_min < F::zero() {
            return Err(infeasible());
        }
        if F::from_usize_lossy(n) * u_min > F::one() + F::epsilon() * F::lit(4.0) {
            return Err(infeasible());
        }
        Ok(Self { n, u_min })
    }

    /// Lower bound `1 / (2n)`, the setting used for every practical run.
    pub fn practical(n: usize) -> Result<Self> {
        Self::new(n, F::one() / (F::lit(2.0) * F::from_usize_lossy(n)))
    }

    /// The unconstrained simplex.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, F::zero())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn u_min(&self) -> F {
        self.u_min
    }

    /// Mass left after every component receives `u_min`.
    pub fn free_mass(&self) -> F {
        (F::one() - F::from_usize_lossy(self.n) * self.u_min).max(F::zero())
    }

    /// Membership up to [`Scalar::sum_tolerance`] on the sum and a few ulps
    /// on the lower bound.
    pub fn contains(&self, w: &[F]) -> bool {
        if w.len() != self.n {
            return false;
        }
        let s: F = w.iter().copied().sum();
        let lb = self.u_min - F::epsilon() * F::lit(16.0);
        (s - F::one()).abs() <= F::sum_tolerance() && w.iter().all(|x| *x >= lb)
    }

    /// Membership with a sum tolerance of a few ulps per component, used to
    /// decide whether a projection may return its input untouched.
    fn contains_tight(&self, w: &[F]) -> bool {
        let s: F = w.iter().copied().sum();
        let tol = F::epsilon() * F::lit(4.0) * F::from_usize_lossy(self.n.max(1));
        (s - F::one()).abs() <= tol && w.iter().all(|x| *x >= self.u_min)
    }
}

/// Which map sends an updated weight vector back into the restricted simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    ProofClip,
    #[default]
    ScaledClip,
    Euclidean,
}

impl std::str::FromStr for Projection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "proof_clip" | "proofclip" => Ok(Self::ProofClip),
            "scaled_clip" | "scaledclip" => Ok(Self::ScaledClip),
            "euclidean" => Ok(Self::Euclidean),
            other => Err(Error::InvalidInput(format!("unknown projection '{other}'"))),
        }
    }
}

/// Multiplicative-weights step size and projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct MwConfig<F> {
    pub tau: F,
    pub projection: Projection,
}

impl<F: Scalar> MwConfig<F> {
    /// `tau = 0` is accepted and turns the update into the identity on
    /// feasible weights.
    pub fn new(tau: F, projection: Projection) -> Result<Self> {
        if !tau.is_finite() || tau < F::zero() {
            return Err(Error::InvalidInput(format!("tau must be finite and >= 0, got {tau}")));
        }
        Ok(Self { tau, projection })
    }
}

impl<F: Scalar> Default for MwConfig<F> {
    fn default() -> Self {
        Self { tau: F::one(), projection: Projection::ScaledClip }
    }
}

/// Non-increasing weights summing to one, applied to a utility vector
/// sorted in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct GgfWeights<F> {
    g: Vec<F>,
}

impl<F: Scalar> GgfWeights<F> {
    pub fn new(g: Vec<F>) -> Result<Self> {
        let wv = WeightVector::new(g)?;
        let g = wv.into_vec();
        if g.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::InvalidInput("GGF weights must be non-increasing".into()));
        }
        Ok(Self { g })
    }

    pub fn as_slice(&self) -> &[F] {
        &self.g
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

fn validate_nonneg<F: Scalar>(x: &[F]) -> Result<F> {
    if x.is_empty() {
        return Err(Error::InvalidInput("empty vector".into()));
    }
    let mut s = F::zero();
    for (i, &xi) in x.iter().enumerate() {
        if !(xi.is_finite() && xi >= F::zero()) {
            return Err(Error::InvalidInput(format!("component {i} = {xi} is negative or non-finite")));
        }
        s += xi;
    }
    if !(s > F::zero()) {
        return Err(Error::InvalidInput("vector has no positive component".into()));
    }
    Ok(s)
}

/// Indices of `y` sorted by value, descending; ties keep index order.
fn argsort_desc<F: Scalar>(y: &[F]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| y[b].partial_cmp(&y[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    idx
}

/// Maps a non-negative vector with positive mass onto `s` using `method`.
///
/// Fails on an empty vector, a negative or non-finite component, a vector
/// with no positive component, or a length different from `s.n()`.
pub fn project<F: Scalar>(x: &[F], s: &RestrictedSimplex<F>, method: Projection) -> Result<WeightVector<F>> {
    let total = validate_nonneg(x)?;
    check_len(s.n, x.len())?;
    if s.contains_tight(x) {
        return Ok(WeightVector::from_vec_unchecked(x.to_vec()));
    }
    let y: Vec<F> = x.iter().map(|&xi| xi / total).collect();
    let u = s.u_min;
    if s.free_mass() <= F::zero() {
        return Ok(WeightVector::from_vec_unchecked(vec![u; s.n]));
    }
    let w = match method {
        Projection::ProofClip => {
            let z: F = y.iter().map(|&yi| yi.max(u)).sum();
            y.iter().map(|&yi| yi.max(u) / z).collect()
        }
        Projection::ScaledClip => {
            let c = clip_scale(&y, s);
            y.iter().map(|&yi| (c * yi).max(u)).collect()
        }
        Projection::Euclidean => {
            let theta = water_level(&y, s);
            y.iter().map(|&yi| (yi - theta).max(u)).collect()
        }
    };
    Ok(WeightVector::from_vec_unchecked(w))
}

/// The `c > 0` solving `sum_i max(c * y_i, u) = 1`.
///
/// With `y` sorted descending and `c_k = (1 - (n - k) u) / (y_(1) + .. + y_(k))`
/// the hypothesis "top k unclipped", the solution is `c_k` for the largest
/// `k` with `c_k * y_(k) >= u`. `k = 1` always qualifies when `n u <= 1`.
pub fn clip_scale<F: Scalar>(y: &[F], s: &RestrictedSimplex<F>) -> F {
    let n = y.len();
    let u = s.u_min;
    let order = argsort_desc(y);
    let mut prefix = F::zero();
    let mut best = None;
    for (k0, &i) in order.iter().enumerate() {
        if y[i] <= F::zero() {
            break;
        }
        let k = k0 + 1;
        prefix += y[i];
        let c = (F::one() - F::from_usize_lossy(n - k) * u) / prefix;
        if c * y[i] >= u {
            best = Some(c);
        }
    }
    best.unwrap_or_else(|| (F::one() - F::from_usize_lossy(n - 1) * u) / y[order[0]])
}

/// The threshold `theta` with `sum_i max(y_i - theta, u) = 1`.
pub fn water_level<F: Scalar>(y: &[F], s: &RestrictedSimplex<F>) -> F {
    let u = s.u_min;
    let r = s.free_mass();
    // shifted problem: project (y - u) onto {z >= 0, sum z = r}
    let order = argsort_desc(y);
    let mut prefix = F::zero();
    let mut theta = F::zero();
    for (k0, &i) in order.iter().enumerate() {
        let zi = y[i] - u;
        prefix += zi;
        let t = (prefix - r) / F::from_usize_lossy(k0 + 1);
        if zi - t > F::zero() {
            theta = t;
        }
    }
    theta
}

/// One projected multiplicative-weights step with the intermediate vectors
/// kept for regret diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MwStep<F> {
    /// `x = (w * exp(-tau v)) / sum(...)`, before projection.
    pub normalized: Vec<F>,
    pub next: WeightVector<F>,
}

/// `project(w * exp(-tau * v))`.
pub fn mw_update<F: Scalar>(
    w: &WeightVector<F>,
    v: &ClassAccuracyVector<F>,
    cfg: &MwConfig<F>,
    s: &RestrictedSimplex<F>,
) -> Result<WeightVector<F>> {
    Ok(mw_update_detailed(w, v, cfg, s)?.next)
}

pub fn mw_update_detailed<F: Scalar>(
    w: &WeightVector<F>,
    v: &ClassAccuracyVector<F>,
    cfg: &MwConfig<F>,
    s: &RestrictedSimplex<F>,
) -> Result<MwStep<F>> {
    check_len(w.len(), v.len())?;
    check_len(s.n, w.len())?;
    let u: Vec<F> = w
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(&wi, &vi)| wi * (-cfg.tau * vi).exp())
        .collect();
    let z: F = u.iter().copied().sum();
    let normalized = u.iter().map(|&ui| ui / z).collect();
    let next = project(&u, s, cfg.projection)?;
    Ok(MwStep { normalized, next })
}

/// `V_{w,v} = sum_i w_i v_i`.
pub fn weighted_value<F: Scalar>(w: &WeightVector<F>, v: &[F]) -> Result<F> {
    check_len(w.len(), v.len())?;
    Ok(w.as_slice().iter().zip(v).map(|(&a, &b)| a * b).sum())
}

/// Exact minimizer of `sum_i w_i v_i` over the restricted simplex: every
/// component gets `u_min` and the free mass goes to the first argmin of `v`.
pub fn min_linear_over_simplex<F: Scalar>(v: &[F], s: &RestrictedSimplex<F>) -> Result<(WeightVector<F>, F)> {
    check_len(s.n, v.len())?;
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite value {x}")));
    }
    let (k, &vmin) = v
        .iter()
        .enumerate()
        .fold((0, &v[0]), |acc, (i, x)| if *x < *acc.1 { (i, x) } else { acc });
    let u = s.u_min;
    let free = s.free_mass();
    let mut w = vec![u; s.n];
    w[k] += free;
    let value = u * v.iter().copied().sum::<F>() + free * vmin;
    Ok((WeightVector::from_vec_unchecked(w), value))
}

/// Generalized Gini welfare: `sum_j g_j u_(j)` with `u` sorted ascending, so
/// the largest weight lands on the worst-off component.
pub fn ggf_value<F: Scalar>(g: &GgfWeights<F>, u: &[F]) -> Result<F> {
    check_len(g.len(), u.len())?;
    let mut sorted = u.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(g.g.iter().zip(&sorted).map(|(&a, &b)| a * b).sum())
}
