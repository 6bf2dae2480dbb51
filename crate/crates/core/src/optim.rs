//! Parameter containers, the adaptive-moment optimizer and central-difference
//! gradient checking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A set of dense parameter tensors viewed as flat slices.
///
/// Gradients use the same container type, so `tensors` of a gradient lines
/// up one to one with `tensors` of the parameters.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn get_flat(&self, mut index: usize) -> f64 {
        for t in self.tensors() {
            if index < t.len() {
                return t[index];
            }
            index -= t.len();
        }
        panic!("flat parameter index out of range");
    }

    fn set_flat(&mut self, mut index: usize, value: f64) {
        for t in self.tensors_mut() {
            if index < t.len() {
                t[index] = value;
                return;
            }
            index -= t.len();
        }
        panic!("flat parameter index out of range");
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Adam with bias-corrected first and second moments.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step<P: Parameters + ?Sized>(&mut self, params: &mut P, grads: &P) {
        let grads = grads.tensors();
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for (k, p) in params.tensors_mut().into_iter().enumerate() {
            let g = grads[k];
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            debug_assert_eq!(p.len(), g.len());
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Compares `analytic` against central differences of the loss on
/// `probe_count` uniformly drawn coordinates.
///
/// `terms` returns the loss as a list of summands. Differences are taken
/// term by term, so summands a coordinate does not touch cancel exactly
/// instead of adding rounding noise of the full loss to small gradients.
///
/// Returns the largest `|analytic - numeric| / max(1e-8, |numeric|)`.
pub fn central_difference_check<P, F>(
    params: &P,
    analytic: &P,
    terms: F,
    probe_count: usize,
    eps: f64,
    seed: u64,
) -> f64
where
    P: Parameters + Clone,
    F: Fn(&P) -> Vec<f64>,
{
    let n = params.num_params();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..probe_count {
        let i = rng.random_range(0..n);
        let original = params.get_flat(i);
        probe.set_flat(i, original + eps);
        let up = terms(&probe);
        probe.set_flat(i, original - eps);
        let down = terms(&probe);
        probe.set_flat(i, original);
        if up.len() != down.len() {
            return f64::NAN;
        }
        let numeric = up.iter().zip(&down).map(|(u, d)| u - d).sum::<f64>() / (2.0 * eps);
        let err = (analytic.get_flat(i) - numeric).abs() / numeric.abs().max(1e-8);
        worst = worst.max(err);
    }
    worst
}
