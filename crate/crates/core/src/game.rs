//! Finite zero-sum game between a min player running projected
//! multiplicative weights over classes and a max player that best-responds
//! with one column of a payoff matrix, plus exact checks of the regret bound
//! and of the last-iterate argument for converged weights.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::accuracy::ClassAccuracyVector;
use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;
use crate::simplex::{
    min_linear_over_simplex, mw_update_detailed, project, weighted_value, MwConfig, Projection,
    RestrictedSimplex, WeightVector,
};

/// `M[i][j]`: accuracy of parameter choice `j` on class `i`, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct PayoffMatrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> PayoffMatrix<F> {
    pub fn new(rows: Vec<Vec<F>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput("payoff matrix needs at least one row and column".into()));
        }
        let mut data = Vec::with_capacity(n * m);
        for r in &rows {
            check_len(m, r.len())?;
            data.extend_from_slice(r);
        }
        Self::from_row_major(n, m, data)
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("payoff matrix needs at least one row and column".into()));
        }
        check_len(rows * cols, data.len())?;
        if let Some(x) = data.iter().find(|x| !(**x >= F::zero() && **x <= F::one())) {
            return Err(Error::InvalidInput(format!("payoff entry {x} outside [0, 1]")));
        }
        Ok(Self { rows, cols, data })
    }

    /// Entries drawn uniformly from `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Self> {
        let data = (0..rows * cols).map(|_| F::lit(rng.random::<f64>())).collect();
        Self::from_row_major(rows, cols, data)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `sum_i w_i M[i][j]` for every column `j`.
    pub fn column_values(&self, w: &WeightVector<F>) -> Result<Vec<F>> {
        check_len(self.rows, w.len())?;
        let mut out = vec![F::zero(); self.cols];
        for i in 0..self.rows {
            let wi = w[i];
            for (j, o) in out.iter_mut().enumerate() {
                *o += wi * self.get(i, j);
            }
        }
        Ok(out)
    }
}

/// Column maximizing the weighted accuracy, lowest index on ties.
pub fn best_response_column<F: Scalar>(m: &PayoffMatrix<F>, w: &WeightVector<F>) -> Result<usize> {
    let vals = m.column_values(w)?;
    let mut best = 0;
    for (j, v) in vals.iter().enumerate().skip(1) {
        if *v > vals[best] {
            best = j;
        }
    }
    Ok(best)
}

/// One round of play: the min player's weights `w^t`, the max player's
/// column `j_t`, its payoff column `v^t`, `V_t = <w^t, v^t>`, and the
/// normalized pre-projection vector `x^{t+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct GameRound<F> {
    pub weights: WeightVector<F>,
    pub column: usize,
    pub payoff: Vec<F>,
    pub value: F,
    pub normalized_next: Vec<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct GameTrace<F> {
    pub rounds: Vec<GameRound<F>>,
    /// `w^{T+1}`, the weights after the last update.
    pub final_weights: WeightVector<F>,
    pub tau: F,
    pub projection: Projection,
}

impl<F: Scalar> GameTrace<F> {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// `w^{t+1}` for the zero-based round `t`.
    pub fn weights_after(&self, t: usize) -> &WeightVector<F> {
        self.rounds.get(t + 1).map_or(&self.final_weights, |r| &r.weights)
    }

    pub fn mean_value(&self) -> Option<F> {
        if self.rounds.is_empty() {
            return None;
        }
        let s: F = self.rounds.iter().map(|r| r.value).sum();
        Some(s / F::from_usize_lossy(self.rounds.len()))
    }

    /// Builds a trace from an externally generated sequence of weights and
    /// accuracy vectors (for instance a training run). Column indices are
    /// the round numbers and `x^{t+1}` is recomputed from `tau`.
    pub fn from_sequence(
        weights: Vec<WeightVector<F>>,
        payoffs: Vec<Vec<F>>,
        final_weights: WeightVector<F>,
        tau: F,
        projection: Projection,
    ) -> Result<Self> {
        check_len(weights.len(), payoffs.len())?;
        let mut rounds = Vec::with_capacity(weights.len());
        for (t, (w, v)) in weights.into_iter().zip(payoffs).enumerate() {
            let value = weighted_value(&w, &v)?;
            let u: Vec<F> = w.as_slice().iter().zip(&v).map(|(&a, &b)| a * (-tau * b).exp()).collect();
            let z: F = u.iter().copied().sum();
            let normalized_next = u.iter().map(|&x| x / z).collect();
            rounds.push(GameRound { weights: w, column: t, payoff: v, value, normalized_next });
        }
        Ok(Self { rounds, final_weights, tau, projection })
    }

    /// CSV with columns `t, j_t, V_t, w_1..w_n` (rounds numbered from 1).
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let n = self.final_weights.len();
        let mut header = vec!["t".to_string(), "j_t".into(), "V_t".into()];
        header.extend((1..=n).map(|i| format!("w_{i}")));
        wtr.write_record(&header)?;
        for (t, r) in self.rounds.iter().enumerate() {
            let mut rec = vec![(t + 1).to_string(), r.column.to_string(), r.value.to_string()];
            rec.extend(r.weights.as_slice().iter().map(|x| x.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Plays `rounds` rounds: the max player best-responds to `w^t`, the min
/// player pays `V_t` and updates with `cfg`. Starts from `project(w0)`, or
/// uniform when `w0` is `None`.
pub fn run_mw_game<F: Scalar>(
    m: &PayoffMatrix<F>,
    rounds: usize,
    cfg: &MwConfig<F>,
    s: &RestrictedSimplex<F>,
    w0: Option<&WeightVector<F>>,
) -> Result<GameTrace<F>> {
    check_len(m.n_rows(), s.n())?;
    let mut w = match w0 {
        Some(w0) => project(w0.as_slice(), s, cfg.projection)?,
        None => project(WeightVector::<F>::uniform(s.n()).as_slice(), s, cfg.projection)?,
    };
    let mut trace = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let j = best_response_column(m, &w)?;
        let payoff = m.column(j);
        let value = weighted_value(&w, &payoff)?;
        let acc = ClassAccuracyVector::new(payoff.clone())?;
        let step = mw_update_detailed(&w, &acc, cfg, s)?;
        trace.push(GameRound { weights: w, column: j, payoff, value, normalized_next: step.normalized });
        w = step.next;
    }
    Ok(GameTrace { rounds: trace, final_weights: w, tau: cfg.tau, projection: cfg.projection })
}

/// `ln(1 + sqrt(ln n / T) / (1 + alpha_max))`.
pub fn tau_theorem<F: Scalar>(n: usize, rounds: usize, alpha_max: F) -> Result<F> {
    if n < 2 || rounds == 0 {
        return Err(Error::InvalidInput(format!("tau_theorem needs n >= 2 and T >= 1 (n = {n}, T = {rounds})")));
    }
    if !(alpha_max >= F::zero() && alpha_max <= F::one()) {
        return Err(Error::InvalidInput(format!("alpha_max = {alpha_max} outside [0, 1]")));
    }
    let r = (F::from_usize_lossy(n).ln() / F::from_usize_lossy(rounds)).sqrt();
    Ok((F::one() + r / (F::one() + alpha_max)).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct RoundDiagnostics<F> {
    /// `pi(x)_i / x_i - 1` per class.
    pub epsilon: Vec<F>,
    pub alpha: F,
    /// `KL(w~ || w^{t+1}) - KL(w~ || w^t)`.
    pub kl_delta: F,
    /// `-(1 - e^{-tau}) V_{w^t,v^t} + (1 + alpha_t) tau V_{w~,v^t}`.
    pub bound: F,
}

impl<F: Scalar> RoundDiagnostics<F> {
    pub fn excess(&self) -> F {
        self.kl_delta - self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct RegretDiagnostics<F> {
    /// False when the trace was not produced with the clip-renormalize
    /// projection; the per-step inequality is only established for it.
    pub valid: bool,
    pub comparator: WeightVector<F>,
    pub rounds: Vec<RoundDiagnostics<F>>,
    pub max_alpha: F,
    /// `(1/T) sum_t V_{w^t,v^t}`.
    pub lhs: F,
    /// `(1/T) min_{w~} sum_t V_{w~,v^t}`.
    pub best_fixed: F,
    /// Bound obtained by summing the per-step inequalities, valid for any tau:
    /// `(KL(w~||w^1) - KL(w~||w^{T+1}) + tau sum_t (1+alpha_t) V_{w~,v^t}) / ((1 - e^{-tau}) T)`.
    pub rhs_telescoped: F,
    /// Closed form after substituting the theorem's tau:
    /// `ln n/T + (1+a) sqrt(ln n/T) + ((1+a)/T + sqrt(ln n/T^3)/2) sum_t V_{w~,v^t}`.
    pub rhs_exact: F,
    /// Stated bound: `best_fixed + ln n/T + (1+a) sqrt(ln n/T)`.
    pub rhs_theorem: F,
    pub per_step_violations: usize,
    pub max_excess: F,
    pub tolerance: F,
}

impl<F: Scalar> RegretDiagnostics<F> {
    pub fn per_step_holds(&self) -> bool {
        self.per_step_violations == 0
    }

    pub fn summed_bound_holds(&self) -> bool {
        self.lhs <= self.rhs_telescoped + self.tolerance
    }

    pub fn exact_bound_holds(&self) -> bool {
        self.lhs <= self.rhs_exact + self.tolerance
    }

    pub fn theorem_bound_holds(&self) -> bool {
        self.lhs <= self.rhs_theorem + self.tolerance
    }

    pub fn summary(&self) -> DiagnosticsSummary {
        DiagnosticsSummary {
            valid: self.valid,
            rounds: self.rounds.len(),
            lhs: self.lhs.to_f64_lossy(),
            best_fixed: self.best_fixed.to_f64_lossy(),
            rhs_exact: self.rhs_exact.to_f64_lossy(),
            rhs_theorem: self.rhs_theorem.to_f64_lossy(),
            rhs_telescoped: self.rhs_telescoped.to_f64_lossy(),
            max_alpha: self.max_alpha.to_f64_lossy(),
            per_step_violations: self.per_step_violations,
            max_excess: self.max_excess.to_f64_lossy(),
        }
    }
}

/// Flat view of [`RegretDiagnostics`] for JSON export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub valid: bool,
    pub rounds: usize,
    pub lhs: f64,
    pub best_fixed: f64,
    pub rhs_exact: f64,
    pub rhs_theorem: f64,
    pub rhs_telescoped: f64,
    pub max_alpha: f64,
    pub per_step_violations: usize,
    pub max_excess: f64,
}

/// Evaluates the regret argument on a played trace against the best fixed
/// strategy in hindsight `w~ = argmin_{w in s} <w, sum_t v^t>`.
///
/// Every round is checked for
/// `KL(w~||w^{t+1}) - KL(w~||w^t) <= -(1-e^{-tau}) V_{w^t,v^t} + (1+alpha_t) tau V_{w~,v^t}`
/// with slack [`Scalar::sum_tolerance`]. An empty trace yields zero rounds
/// and all aggregates zero.
pub fn verify_theorem1<F: Scalar>(trace: &GameTrace<F>, s: &RestrictedSimplex<F>, tau: F) -> Result<RegretDiagnostics<F>> {
    let n = s.n();
    check_len(n, trace.final_weights.len())?;
    let tol = F::sum_tolerance();
    let valid = trace.projection == Projection::ProofClip;
    let big_t = trace.len();
    if big_t == 0 {
        return Ok(RegretDiagnostics {
            valid,
            comparator: WeightVector::uniform(n),
            rounds: Vec::new(),
            max_alpha: F::zero(),
            lhs: F::zero(),
            best_fixed: F::zero(),
            rhs_telescoped: F::zero(),
            rhs_exact: F::zero(),
            rhs_theorem: F::zero(),
            per_step_violations: 0,
            max_excess: F::zero(),
            tolerance: tol,
        });
    }

    let mut total = vec![F::zero(); n];
    for r in &trace.rounds {
        check_len(n, r.payoff.len())?;
        for (acc, &v) in total.iter_mut().zip(&r.payoff) {
            *acc += v;
        }
    }
    let (comparator, best_sum) = min_linear_over_simplex(&total, s)?;

    // components pushed up by less than this are treated as unclipped
    let eps_floor = F::epsilon() * F::lit(64.0);
    let decay = F::one() - (-tau).exp();
    let mut rounds = Vec::with_capacity(big_t);
    let mut lhs_sum = F::zero();
    let mut weighted_alpha_sum = F::zero();
    let mut max_alpha = F::zero();
    let mut violations = 0;
    let mut max_excess = F::neg_infinity();
    for (t, r) in trace.rounds.iter().enumerate() {
        let next = trace.weights_after(t);
        let epsilon: Vec<F> = next
            .as_slice()
            .iter()
            .zip(&r.normalized_next)
            .map(|(&p, &x)| p / x - F::one())
            .collect();
        let v_tilde = weighted_value(&comparator, &r.payoff)?;
        let clipped: F = epsilon
            .iter()
            .zip(comparator.as_slice().iter().zip(&r.payoff))
            .filter(|(e, _)| **e > eps_floor)
            .map(|(_, (&w, &v))| w * v)
            .sum();
        let alpha = if v_tilde > F::zero() { clipped / v_tilde } else { F::zero() };
        let kl_delta = comparator.kl_divergence(next)? - comparator.kl_divergence(&r.weights)?;
        let bound = -decay * r.value + (F::one() + alpha) * tau * v_tilde;
        let excess = kl_delta - bound;
        if excess > tol {
            violations += 1;
        }
        max_excess = max_excess.max(excess);
        max_alpha = max_alpha.max(alpha);
        lhs_sum += r.value;
        weighted_alpha_sum += (F::one() + alpha) * v_tilde;
        rounds.push(RoundDiagnostics { epsilon, alpha, kl_delta, bound });
    }

    let tf = F::from_usize_lossy(big_t);
    let ln_n = F::from_usize_lossy(n).ln();
    let lhs = lhs_sum / tf;
    let best_fixed = best_sum / tf;
    let kl_start = comparator.kl_divergence(&trace.rounds[0].weights)?;
    let kl_end = comparator.kl_divergence(&trace.final_weights)?;
    let rhs_telescoped = if decay > F::zero() {
        (kl_start - kl_end + tau * weighted_alpha_sum) / (decay * tf)
    } else {
        F::infinity()
    };
    let one_a = F::one() + max_alpha;
    let root = (ln_n / tf).sqrt();
    let rhs_exact = ln_n / tf + one_a * root + (one_a / tf + F::lit(0.5) * (ln_n / (tf * tf * tf)).sqrt()) * best_sum;
    let rhs_theorem = best_fixed + ln_n / tf + one_a * root;

    Ok(RegretDiagnostics {
        valid,
        comparator,
        rounds,
        max_alpha,
        lhs,
        best_fixed,
        rhs_telescoped,
        rhs_exact,
        rhs_theorem,
        per_step_violations: violations,
        max_excess,
        tolerance: tol,
    })
}

/// Runs `m` once with `tau = 1` to measure `max_t alpha_t`, then reruns
/// with `tau_theorem(n, T, alpha)` and returns the second trace together
/// with its diagnostics.
pub fn run_theorem_schedule<F: Scalar>(
    m: &PayoffMatrix<F>,
    rounds: usize,
    s: &RestrictedSimplex<F>,
) -> Result<(GameTrace<F>, RegretDiagnostics<F>)> {
    let probe_cfg = MwConfig::new(F::one(), Projection::ProofClip)?;
    let probe = run_mw_game(m, rounds, &probe_cfg, s, None)?;
    let alpha = verify_theorem1(&probe, s, F::one())?.max_alpha.min(F::one());
    let tau = tau_theorem(s.n(), rounds.max(1), alpha)?;
    let cfg = MwConfig::new(tau, Projection::ProofClip)?;
    let trace = run_mw_game(m, rounds, &cfg, s, None)?;
    let diag = verify_theorem1(&trace, s, tau)?;
    Ok((trace, diag))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct LastIterateReport<F> {
    pub window: usize,
    /// `max_{t,t' in window} ||w^t - w^{t'}||_inf`.
    pub weight_variation: F,
    pub converged: bool,
    /// `|V_T - mean of V_t over the window|`.
    pub gap: F,
    /// `tol * n + max_i (max_t v_i^t - min_t v_i^t)` over the window.
    pub bound: F,
    /// `None` when the weights have not converged.
    pub passed: Option<bool>,
}

/// Compares the last round's value with the trailing-window average when
/// the weights in that window moved by less than `tol`.
pub fn last_iterate_check<F: Scalar>(trace: &GameTrace<F>, window: usize, tol: F) -> Result<LastIterateReport<F>> {
    if window < 2 || window > trace.len() {
        return Err(Error::InvalidInput(format!(
            "window {window} must be in [2, {}]",
            trace.len()
        )));
    }
    let tail = &trace.rounds[trace.len() - window..];
    let n = trace.final_weights.len();
    let mut weight_variation = F::zero();
    let mut fluctuation = F::zero();
    for i in 0..n {
        let (mut wlo, mut whi) = (F::infinity(), F::neg_infinity());
        let (mut vlo, mut vhi) = (F::infinity(), F::neg_infinity());
        for r in tail {
            wlo = wlo.min(r.weights[i]);
            whi = whi.max(r.weights[i]);
            vlo = vlo.min(r.payoff[i]);
            vhi = vhi.max(r.payoff[i]);
        }
        weight_variation = weight_variation.max(whi - wlo);
        fluctuation = fluctuation.max(vhi - vlo);
    }
    let mean = tail.iter().map(|r| r.value).sum::<F>() / F::from_usize_lossy(window);
    let last = tail[window - 1].value;
    let gap = (last - mean).abs();
    let bound = tol * F::from_usize_lossy(n) + fluctuation;
    let converged = weight_variation < tol;
    Ok(LastIterateReport {
        window,
        weight_variation,
        converged,
        gap,
        bound,
        passed: converged.then_some(gap <= bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pennies() -> PayoffMatrix<f64> {
        PayoffMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn best_response_examples() {
        let w = WeightVector::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(best_response_column(&pennies(), &w).unwrap(), 1);
        let single = PayoffMatrix::new(vec![vec![0.2], vec![0.9]]).unwrap();
        assert_eq!(best_response_column(&single, &w).unwrap(), 0);
        let dom = PayoffMatrix::new(vec![vec![0.1, 0.5, 0.4], vec![0.2, 0.6, 0.6]]).unwrap();
        for a in [0.0, 0.3, 0.9, 1.0] {
            let w = WeightVector::new(vec![a, 1.0 - a]).unwrap();
            assert_eq!(best_response_column(&dom, &w).unwrap(), 1);
        }
        assert!(best_response_column(&dom, &WeightVector::uniform(3)).is_err());
    }

    #[test]
    fn ties_go_to_lowest_column() {
        assert_eq!(best_response_column(&pennies(), &WeightVector::uniform(2)).unwrap(), 0);
    }

    #[test]
    fn payoff_validation() {
        assert!(PayoffMatrix::new(vec![vec![1.5]]).is_err());
        assert!(PayoffMatrix::new(vec![vec![0.5, 0.2], vec![0.1]]).is_err());
        assert!(PayoffMatrix::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn single_cell_game() {
        let m = PayoffMatrix::new(vec![vec![0.37]]).unwrap();
        let s = RestrictedSimplex::new(1, 0.5).unwrap();
        let cfg = MwConfig::new(1.0, Projection::ProofClip).unwrap();
        let tr = run_mw_game(&m, 20, &cfg, &s, None).unwrap();
        for r in &tr.rounds {
            assert_eq!(r.weights.as_slice(), &[1.0]);
            assert_eq!(r.value, 0.37);
        }
    }

    #[test]
    fn zero_rounds_is_empty() {
        let s = RestrictedSimplex::new(2, 0.01).unwrap();
        let tr = run_mw_game(&pennies(), 0, &MwConfig::new(0.1, Projection::ProofClip).unwrap(), &s, None).unwrap();
        assert!(tr.is_empty());
        let d = verify_theorem1(&tr, &s, 0.1).unwrap();
        assert_eq!(d.per_step_violations, 0);
    }

    #[test]
    fn zero_tau_freezes_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = PayoffMatrix::<f64>::random(4, 3, &mut rng).unwrap();
        let s = RestrictedSimplex::new(4, 0.05).unwrap();
        let w0 = WeightVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let tr = run_mw_game(&m, 15, &MwConfig::new(0.0, Projection::ProofClip).unwrap(), &s, Some(&w0)).unwrap();
        let v0 = tr.rounds[0].value;
        for r in &tr.rounds {
            assert_eq!(r.weights, w0);
            assert_eq!(r.value, v0);
        }
    }

    #[test]
    fn matching_pennies_average() {
        let s = RestrictedSimplex::new(2, 0.01).unwrap();
        let cfg = MwConfig::new(0.1, Projection::ProofClip).unwrap();
        let tr = run_mw_game(&pennies(), 10_000, &cfg, &s, None).unwrap();
        let avg = tr.mean_value().unwrap();
        assert!((0.48..=0.52).contains(&avg), "{avg}");
    }

    #[test]
    fn single_round_constant_payoff() {
        let m = PayoffMatrix::new(vec![vec![0.6_f64], vec![0.6], vec![0.6]]).unwrap();
        let s = RestrictedSimplex::new(3, 0.1).unwrap();
        let tau = 0.7;
        let tr = run_mw_game(&m, 1, &MwConfig::new(tau, Projection::ProofClip).unwrap(), &s, None).unwrap();
        let d = verify_theorem1(&tr, &s, tau).unwrap();
        let r = &d.rounds[0];
        assert!(r.kl_delta.abs() < 1e-15);
        let a = r.alpha;
        let analytic = (tau * (1.0 + a) - (1.0 - (-tau as f64).exp())) * 0.6;
        assert!((r.bound - analytic).abs() < 1e-15);
        assert!(d.per_step_holds());
    }

    #[test]
    fn per_step_inequality_on_random_games() {
        let s = RestrictedSimplex::new(10, 0.01).unwrap();
        let cfg = MwConfig::new(1.0, Projection::ProofClip).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = PayoffMatrix::<f64>::random(10, 8, &mut rng).unwrap();
            let tr = run_mw_game(&m, 200, &cfg, &s, None).unwrap();
            let d = verify_theorem1(&tr, &s, 1.0).unwrap();
            assert!(d.valid);
            assert_eq!(d.per_step_violations, 0, "seed {seed}: max excess {}", d.max_excess);
            assert!(d.summed_bound_holds());
            for r in &tr.rounds {
                assert!(r.weights.as_slice().iter().all(|&x| x > 0.0));
            }
        }
    }

    #[test]
    fn non_proof_projection_is_flagged() {
        let s = RestrictedSimplex::new(2, 0.1).unwrap();
        let tr = run_mw_game(&pennies(), 5, &MwConfig::new(1.0, Projection::ScaledClip).unwrap(), &s, None).unwrap();
        assert!(!verify_theorem1(&tr, &s, 1.0).unwrap().valid);
    }

    #[test]
    fn tau_theorem_examples() {
        let t: f64 = tau_theorem(10, 100, 0.1).unwrap();
        let expect = (1.0 + (10f64.ln() / 100.0).sqrt() / 1.1).ln();
        assert!((t - expect).abs() < 1e-15);
        assert!((t - 0.12923).abs() < 5e-6, "{t}");
        let mut prev = f64::INFINITY;
        for k in 2..=8 {
            let v: f64 = tau_theorem(10, 10usize.pow(k), 0.3).unwrap();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        assert!(tau_theorem::<f64>(10, 100, 0.0).unwrap() > tau_theorem(10, 100, 1.0).unwrap());
        assert!(tau_theorem::<f64>(1, 100, 0.0).is_err());
        assert!(tau_theorem::<f64>(3, 0, 0.0).is_err());
        assert!(tau_theorem::<f64>(3, 10, 1.5).is_err());
    }

    #[test]
    fn last_iterate_constant_matrix() {
        let m = PayoffMatrix::new(vec![vec![0.4, 0.4], vec![0.4, 0.4], vec![0.4, 0.4]]).unwrap();
        let s = RestrictedSimplex::new(3, 0.05).unwrap();
        let tr = run_mw_game(&m, 30, &MwConfig::new(1.0, Projection::ProofClip).unwrap(), &s, None).unwrap();
        let rep = last_iterate_check(&tr, 10, 1e-9).unwrap();
        assert!(rep.converged);
        assert!(rep.gap < 1e-15);
        assert_eq!(rep.passed, Some(true));
    }

    #[test]
    fn last_iterate_window_errors() {
        let s = RestrictedSimplex::new(2, 0.1).unwrap();
        let tr = run_mw_game(&pennies(), 5, &MwConfig::new(1.0, Projection::ProofClip).unwrap(), &s, None).unwrap();
        assert!(last_iterate_check(&tr, 6, 1e-6).is_err());
        assert!(last_iterate_check(&tr, 1, 1e-6).is_err());
    }

    #[test]
    fn trace_csv_layout() {
        let s = RestrictedSimplex::new(2, 0.1).unwrap();
        let tr = run_mw_game(&pennies(), 3, &MwConfig::new(1.0, Projection::ProofClip).unwrap(), &s, None).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,j_t,V_t,w_1,w_2");
        assert_eq!(lines.count(), 3);
    }
}
