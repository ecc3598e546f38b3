//! Softmax regression and a one-hidden-layer ReLU network with hand-written
//! backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::losses::SampleLoss;
use crate::scalar::Scalar;

pub const DEFAULT_HIDDEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Softmax,
    Mlp { hidden: usize },
}

impl Default for Architecture {
    fn default() -> Self {
        Self::Mlp { hidden: DEFAULT_HIDDEN }
    }
}

/// Fully connected layer, `w` is `outputs x inputs` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Dense<F> {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<F>,
    pub b: Vec<F>,
}

impl<F: Scalar> Dense<F> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, w: vec![F::zero(); inputs * outputs], b: vec![F::zero(); outputs] }
    }

    fn forward(&self, x: &[F], out: &mut [F]) {
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &self.w[o * self.inputs..(o + 1) * self.inputs];
            *slot = self.b[o] + row.iter().zip(x).map(|(&a, &b)| a * b).sum::<F>();
        }
    }
}

/// Model parameters: one layer for softmax regression, two for the MLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ClassifierParams<F> {
    pub architecture: Architecture,
    pub layers: Vec<Dense<F>>,
}

fn layer_sizes(arch: Architecture, d: usize, n: usize) -> Result<Vec<(usize, usize)>> {
    if d == 0 || n < 2 {
        return Err(Error::InvalidInput(format!("classifier needs d >= 1 and n >= 2 (d = {d}, n = {n})")));
    }
    match arch {
        Architecture::Softmax => Ok(vec![(d, n)]),
        Architecture::Mlp { hidden: 0 } => Err(Error::InvalidInput("hidden width must be positive".into())),
        Architecture::Mlp { hidden } => Ok(vec![(d, hidden), (hidden, n)]),
    }
}

impl<F: Scalar> ClassifierParams<F> {
    pub fn zeros(arch: Architecture, d: usize, n: usize) -> Result<Self> {
        let layers = layer_sizes(arch, d, n)?.into_iter().map(|(i, o)| Dense::zeros(i, o)).collect();
        Ok(Self { architecture: arch, layers })
    }

    /// Weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, d: usize, n: usize, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(arch, d, n)?;
        for layer in &mut p.layers {
            let a = 1.0 / (layer.inputs as f64).sqrt();
            for w in &mut layer.w {
                *w = F::lit(rng.random_range(-a..=a));
            }
        }
        Ok(p)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn n_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// All parameters in layer order, weights before biases.
    pub fn to_flat(&self) -> Vec<F> {
        let mut v = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            v.extend_from_slice(&l.w);
            v.extend_from_slice(&l.b);
        }
        v
    }

    pub fn set_flat(&mut self, flat: &[F]) -> Result<()> {
        check_len(self.n_params(), flat.len())?;
        let mut k = 0;
        for l in &mut self.layers {
            let (nw, nb) = (l.w.len(), l.b.len());
            l.w.copy_from_slice(&flat[k..k + nw]);
            k += nw;
            l.b.copy_from_slice(&flat[k..k + nb]);
            k += nb;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.iter().chain(&l.b).all(|x| x.is_finite()))
    }

    fn check_batch(&self, inputs: &[F]) -> Result<usize> {
        let d = self.input_dim();
        if inputs.len() % d != 0 {
            return Err(Error::DimensionMismatch { expected: d, found: inputs.len() % d });
        }
        if inputs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite input".into()));
        }
        Ok(inputs.len() / d)
    }

    /// Softmax probabilities for a row-major batch; one row of `n` per sample.
    pub fn forward_probs(&self, inputs: &[F]) -> Result<Vec<F>> {
        let b = self.check_batch(inputs)?;
        let d = self.input_dim();
        let n = self.n_classes();
        let mut probs = vec![F::zero(); b * n];
        let mut hidden = Vec::new();
        for j in 0..b {
            let z = &mut probs[j * n..(j + 1) * n];
            self.logits_into(&inputs[j * d..(j + 1) * d], &mut hidden, z);
            softmax_in_place(z);
        }
        Ok(probs)
    }

    /// Argmax prediction per sample, ties to the lowest class index.
    pub fn predict(&self, inputs: &[F]) -> Result<Vec<usize>> {
        let n = self.n_classes();
        let probs = self.forward_probs(inputs)?;
        Ok(probs.chunks(n).map(argmax).collect())
    }

    fn logits_into(&self, x: &[F], hidden: &mut Vec<F>, z: &mut [F]) {
        match self.layers.as_slice() {
            [out] => out.forward(x, z),
            [h, out] => {
                hidden.resize(h.outputs, F::zero());
                h.forward(x, hidden);
                hidden.iter_mut().for_each(|a| *a = a.max(F::zero()));
                out.forward(hidden, z);
            }
            _ => unreachable!("one or two layers"),
        }
    }

    /// Mean over the batch of `weight_j * loss(p_{j, y_j})` and its gradient.
    /// `probs` receives the forward-pass probabilities and `losses` the
    /// unweighted per-sample losses.
    pub fn loss_and_gradient(
        &self,
        inputs: &[F],
        labels: &[usize],
        sample_weights: &[F],
        loss: &SampleLoss<F>,
    ) -> Result<BatchEval<F>> {
        let b = self.check_batch(inputs)?;
        check_len(b, labels.len())?;
        check_len(b, sample_weights.len())?;
        if b == 0 {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        let d = self.input_dim();
        let n = self.n_classes();
        if let Some(&l) = labels.iter().find(|&&l| l >= n) {
            return Err(Error::InvalidInput(format!("label {l} out of range for {n} classes")));
        }
        let inv_b = F::one() / F::from_usize_lossy(b);
        let mut grad = Self::zeros(self.architecture, d, n)?;
        let mut probs = vec![F::zero(); b * n];
        let mut losses = Vec::with_capacity(b);
        let mut total = F::zero();
        let mut hidden = Vec::new();
        let mut dz = vec![F::zero(); n];
        let mut dh = Vec::new();
        for j in 0..b {
            let x = &inputs[j * d..(j + 1) * d];
            let p = &mut probs[j * n..(j + 1) * n];
            self.logits_into(x, &mut hidden, p);
            softmax_in_place(p);
            let y = labels[j];
            let py = p[y];
            if !py.is_finite() {
                return Err(Error::NonFiniteGradient(format!("forward pass gave probability {py} for sample {j}")));
            }
            let lj = loss.value(py)?;
            losses.push(lj);
            let sw = sample_weights[j];
            total += sw * lj;
            let scale = sw * loss.logit_scale(py) * inv_b;
            for k in 0..n {
                let t = if k == y { F::one() } else { F::zero() };
                dz[k] = scale * (p[k] - t);
            }
            match self.layers.as_slice() {
                [_] => accumulate(&mut grad.layers[0], x, &dz),
                [h, out] => {
                    accumulate(&mut grad.layers[1], &hidden, &dz);
                    dh.clear();
                    dh.resize(h.outputs, F::zero());
                    for (k, &g) in dz.iter().enumerate() {
                        let row = &out.w[k * out.inputs..(k + 1) * out.inputs];
                        for (slot, &w) in dh.iter_mut().zip(row) {
                            *slot += g * w;
                        }
                    }
                    for (slot, &a) in dh.iter_mut().zip(&hidden) {
                        if a <= F::zero() {
                            *slot = F::zero();
                        }
                    }
                    accumulate(&mut grad.layers[0], x, &dh);
                }
                _ => unreachable!("one or two layers"),
            }
        }
        Ok(BatchEval { loss: total * inv_b, gradient: grad, probs, losses })
    }

    /// One SGD step on the weighted mean loss. Returns the evaluation taken
    /// before the step. A non-finite gradient or update leaves `self`
    /// untouched.
    pub fn grad_step(
        &mut self,
        inputs: &[F],
        labels: &[usize],
        sample_weights: &[F],
        loss: &SampleLoss<F>,
        lr: F,
    ) -> Result<BatchEval<F>> {
        let eval = self.loss_and_gradient(inputs, labels, sample_weights, loss)?;
        if !eval.gradient.is_finite() {
            return Err(Error::NonFiniteGradient(format!("batch of {} samples, loss {}", labels.len(), eval.loss)));
        }
        let mut next = self.clone();
        for (l, g) in next.layers.iter_mut().zip(&eval.gradient.layers) {
            for (w, &gw) in l.w.iter_mut().zip(&g.w) {
                *w -= lr * gw;
            }
            for (b, &gb) in l.b.iter_mut().zip(&g.b) {
                *b -= lr * gb;
            }
        }
        if !next.is_finite() {
            return Err(Error::NonFiniteGradient(format!("step with learning rate {lr} overflowed the parameters")));
        }
        *self = next;
        Ok(eval)
    }
}

/// Forward and backward results for one minibatch.
#[derive(Debug, Clone)]
pub struct BatchEval<F> {
    pub loss: F,
    pub gradient: ClassifierParams<F>,
    pub probs: Vec<F>,
    pub losses: Vec<F>,
}

fn accumulate<F: Scalar>(g: &mut Dense<F>, x: &[F], delta: &[F]) {
    for (o, &dl) in delta.iter().enumerate() {
        if dl == F::zero() {
            continue;
        }
        g.b[o] += dl;
        let row = &mut g.w[o * g.inputs..(o + 1) * g.inputs];
        for (w, &xi) in row.iter_mut().zip(x) {
            *w += dl * xi;
        }
    }
}

pub(crate) fn softmax_in_place<F: Scalar>(z: &mut [F]) {
    let mx = z.iter().copied().fold(F::neg_infinity(), F::max);
    let mut s = F::zero();
    for v in z.iter_mut() {
        *v = (*v - mx).exp();
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}

pub(crate) fn argmax<F: Scalar>(row: &[F]) -> usize {
    let mut best = 0;
    for (k, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_give_uniform() {
        let p = ClassifierParams::<f64>::zeros(Architecture::Softmax, 3, 4).unwrap();
        let probs = p.forward_probs(&[1.0, -2.0, 0.5]).unwrap();
        assert!(probs.iter().all(|&x| x == 0.25));
    }

    #[test]
    fn large_logit_goes_one_hot() {
        let mut p = ClassifierParams::<f64>::zeros(Architecture::Softmax, 1, 3).unwrap();
        p.layers[0].w[0] = 1.0;
        let probs = p.forward_probs(&[800.0]).unwrap();
        assert_eq!(probs[0], 1.0);
        assert!(probs[1] < 1e-300);
    }

    #[test]
    fn rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let p = ClassifierParams::<f64>::init(Architecture::Mlp { hidden: 6 }, 4, 5, &mut rng).unwrap();
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(-3.0..3.0)).collect();
            for row in p.forward_probs(&x).unwrap().chunks(5) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|&q| q > 0.0 && q < 1.0));
            }
        }
    }

    #[test]
    fn shape_and_finiteness_errors() {
        let p = ClassifierParams::<f64>::zeros(Architecture::Softmax, 3, 2).unwrap();
        assert!(p.forward_probs(&[1.0, 2.0]).is_err());
        assert!(p.forward_probs(&[1.0, f64::NAN, 0.0]).is_err());
        assert!(ClassifierParams::<f64>::zeros(Architecture::Mlp { hidden: 0 }, 3, 2).is_err());
    }

    #[test]
    fn single_sample_ce_logit_gradient() {
        let p = ClassifierParams::<f64>::zeros(Architecture::Softmax, 1, 3).unwrap();
        let e = p.loss_and_gradient(&[1.0], &[1], &[2.0], &SampleLoss::CrossEntropy).unwrap();
        // input 1 makes the weight gradient equal the logit gradient
        let third = 1.0 / 3.0;
        let expect = [2.0 * third, 2.0 * (third - 1.0), 2.0 * third];
        for k in 0..3 {
            assert!((e.gradient.layers[0].w[k] - expect[k]).abs() < 1e-15);
            assert!((e.gradient.layers[0].b[k] - expect[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_lr_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = ClassifierParams::<f64>::init(Architecture::Mlp { hidden: 4 }, 2, 3, &mut rng).unwrap();
        let before = p.clone();
        p.grad_step(&[0.3, -0.2], &[2], &[1.0], &SampleLoss::CrossEntropy, 0.0).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = ClassifierParams::<f64>::init(Architecture::Mlp { hidden: 3 }, 2, 2, &mut rng).unwrap();
        let mut q = ClassifierParams::zeros(p.architecture, 2, 2).unwrap();
        q.set_flat(&p.to_flat()).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.n_params(), 2 * 3 + 3 + 3 * 2 + 2);
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }
}
