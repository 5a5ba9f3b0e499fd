//! Cross-entropy training of linear softmax policies with centered
//! RMSProp, plus the experience buffer that feeds it.

use std::collections::VecDeque;

use rand::Rng;

use super::policy::softmax;
use crate::state::{Action, GameState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub rms_decay: f64,
    pub momentum: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.005,
            rms_decay: 0.9,
            momentum: 0.9,
            epsilon: 1e-8,
            weight_decay: 1e-6,
            batch: 30,
        }
    }
}

/// One decision point: active features per legal action and the search's
/// visit distribution as the target.
#[derive(Clone, Debug)]
pub struct Sample {
    pub state: GameState,
    pub actions: Vec<Action>,
    /// Active feature ids per action.
    pub features: Vec<Vec<u32>>,
    pub target: Vec<f64>,
    /// Size of the feature set `features` was computed against.
    pub feature_count: usize,
}

fn logits(weights: &[f64], sample: &Sample) -> Vec<f64> {
    sample
        .features
        .iter()
        .map(|fs| fs.iter().map(|&f| weights[f as usize]).sum())
        .collect()
}

/// Cross-entropy between the target and the policy's distribution.
pub fn loss(weights: &[f64], sample: &Sample) -> f64 {
    let l = logits(weights, sample);
    let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + l.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    sample
        .target
        .iter()
        .zip(&l)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, x)| -t * (x - log_z))
        .sum()
}

pub fn batch_loss(weights: &[f64], batch: &[&Sample]) -> f64 {
    batch.iter().map(|s| loss(weights, s)).sum::<f64>() / batch.len() as f64
}

/// Gradient of the mean batch loss: for each sample, sum over actions of
/// `(pi(a) - target(a))` times the action's feature activity.
pub fn gradient(weights: &[f64], batch: &[&Sample]) -> Vec<f64> {
    let mut g = vec![0.0; weights.len()];
    let scale = 1.0 / batch.len() as f64;
    for s in batch {
        let p = softmax(&logits(weights, s));
        let t_sum: f64 = s.target.iter().sum();
        for ((fs, pa), ta) in s.features.iter().zip(&p).zip(&s.target) {
            let d = (pa * t_sum - ta) * scale;
            for &f in fs {
                g[f as usize] += d;
            }
        }
    }
    g
}

/// Centered RMSProp state for one weight vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RmsProp {
    mean_grad: Vec<f64>,
    mean_sq: Vec<f64>,
    mom: Vec<f64>,
}

impl RmsProp {
    pub fn step(&mut self, weights: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        let n = weights.len();
        for v in [&mut self.mean_grad, &mut self.mean_sq, &mut self.mom] {
            v.resize(n, 0.0);
        }
        let rho = cfg.rms_decay;
        for i in 0..n {
            let g = grad[i];
            self.mean_grad[i] = rho * self.mean_grad[i] + (1.0 - rho) * g;
            self.mean_sq[i] = rho * self.mean_sq[i] + (1.0 - rho) * g * g;
            let var = (self.mean_sq[i] - self.mean_grad[i] * self.mean_grad[i]).max(0.0);
            self.mom[i] = cfg.momentum * self.mom[i] + cfg.lr * g / (var + cfg.epsilon).sqrt();
            weights[i] -= self.mom[i];
            weights[i] *= 1.0 - cfg.weight_decay;
        }
    }
}

/// One optimisation step on the mean loss of `batch`.
pub fn train_step(weights: &mut [f64], opt: &mut RmsProp, batch: &[&Sample], cfg: &TrainConfig) {
    if batch.is_empty() {
        return;
    }
    let g = gradient(weights, batch);
    opt.step(weights, &g, cfg);
}

/// FIFO ring of samples with uniform sampling.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Sample>,
}

impl ReplayBuffer {
    pub const DEFAULT_CAPACITY: usize = 2500;

    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity.min(4096)),
        }
    }

    pub fn push(&mut self, s: Sample) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(s);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> &Sample {
        &self.items[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Sample {
        &mut self.items[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.items.iter()
    }

    /// `n` indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| rng.gen_range(0..self.items.len())).collect()
    }
}
