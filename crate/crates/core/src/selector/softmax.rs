//! Multinomial logistic regression trained by gradient descent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const MIN_STD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// `None` trains full-batch; otherwise shuffled mini-batches of this size.
    #[serde(default)]
    pub batch_size: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub exclude_degenerate: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            epochs: 500,
            learning_rate: 0.1,
            l2: 1e-3,
            batch_size: None,
            seed: 42,
            exclude_degenerate: false,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(format!("l2 must be non-negative, got {}", self.l2));
        }
        if self.batch_size == Some(0) {
            return Err("batch size must be positive".into());
        }
        Ok(())
    }
}

/// Per-column mean and (population) standard deviation, the latter clamped
/// at [`MIN_STD`].
pub fn fit_normalizer(x: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len().max(1) as f64;
    let mut means = vec![0.0; dim];
    for row in x {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut stds = vec![0.0; dim];
    for row in x {
        for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
            *s += (v - m).powi(2) / n;
        }
    }
    for s in &mut stds {
        *s = s.sqrt().max(MIN_STD);
    }
    (means, stds)
}

pub fn normalize(row: &[f64], means: &[f64], stds: &[f64]) -> Vec<f64> {
    row.iter()
        .zip(means)
        .zip(stds)
        .map(|((v, m), s)| (v - m) / s)
        .collect()
}

pub fn logits(w: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    w.iter()
        .zip(b)
        .map(|(wk, bk)| bk + wk.iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

/// Mean cross-entropy plus `l2 / 2 * ||W||²` (the bias is not penalized),
/// with its gradient with respect to `W` and `b`.
pub fn loss_and_gradient(
    w: &[Vec<f64>],
    b: &[f64],
    x: &[Vec<f64>],
    y: &[usize],
    l2: f64,
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let k = w.len();
    let d = w.first().map_or(0, Vec::len);
    let n = x.len().max(1) as f64;
    let mut gw = vec![vec![0.0; d]; k];
    let mut gb = vec![0.0; k];
    let mut loss = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let p = softmax(&logits(w, b, xi));
        loss -= p[yi].max(f64::MIN_POSITIVE).ln();
        for c in 0..k {
            let delta = (p[c] - if c == yi { 1.0 } else { 0.0 }) / n;
            gb[c] += delta;
            for (g, v) in gw[c].iter_mut().zip(xi) {
                *g += delta * v;
            }
        }
    }
    loss /= n;
    let mut penalty = 0.0;
    for (gk, wk) in gw.iter_mut().zip(w) {
        for (g, v) in gk.iter_mut().zip(wk) {
            *g += l2 * v;
            penalty += v * v;
        }
    }
    (loss + 0.5 * l2 * penalty, gw, gb)
}

/// Trains from zero weights; returns `(W, b, loss before each epoch)`.
pub fn fit(
    x: &[Vec<f64>],
    y: &[usize],
    classes: usize,
    hp: &Hyperparams,
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let d = x.first().map_or(0, Vec::len);
    let mut w = vec![vec![0.0; d]; classes];
    let mut b = vec![0.0; classes];
    let mut history = Vec::with_capacity(hp.epochs);
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let step = |w: &mut Vec<Vec<f64>>, b: &mut Vec<f64>, gw: &[Vec<f64>], gb: &[f64]| {
        for (wk, gk) in w.iter_mut().zip(gw) {
            for (v, g) in wk.iter_mut().zip(gk) {
                *v -= hp.learning_rate * g;
            }
        }
        for (v, g) in b.iter_mut().zip(gb) {
            *v -= hp.learning_rate * g;
        }
    };
    for _ in 0..hp.epochs {
        let (loss, gw, gb) = loss_and_gradient(&w, &b, x, y, hp.l2);
        history.push(loss);
        match hp.batch_size {
            Some(bs) if bs < x.len() => {
                order.shuffle(&mut rng);
                for chunk in order.chunks(bs) {
                    let xb: Vec<Vec<f64>> = chunk.iter().map(|&i| x[i].clone()).collect();
                    let yb: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
                    let (_, gw, gb) = loss_and_gradient(&w, &b, &xb, &yb, hp.l2);
                    step(&mut w, &mut b, &gw, &gb);
                }
            }
            _ => step(&mut w, &mut b, &gw, &gb),
        }
    }
    (w, b, history)
}
