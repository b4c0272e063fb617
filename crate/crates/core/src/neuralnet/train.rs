use rand::seq::SliceRandom;

use super::{accumulate, FreezeMask, NetworkParams, NnError, WINDOW};
use crate::channel::DomainDataset;
use crate::rng::{derive_seed, stream, stream_rng};

/// Mini-batch training settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Windows per optimizer step.
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub window: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 20,
            epochs: 50,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            window: WINDOW,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |what: &str| Err(NnError::Config(what.to_string()));
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if self.window == 0 {
            return bad("window length must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

/// Adam with bias correction. Frozen groups are skipped entirely, including
/// their moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: NetworkParams,
    v: NetworkParams,
}

impl Adam {
    pub fn new(params: &NetworkParams, config: &TrainConfig) -> Self {
        Self {
            learning_rate: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            step: 0,
            m: NetworkParams::zeros(params.hidden()),
            v: NetworkParams::zeros(params.hidden()),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut NetworkParams, grads: &NetworkParams, mask: FreezeMask) {
        self.step += 1;
        let t = self.step as f64;
        let c1 = 1.0 - self.beta1.powf(t);
        let c2 = 1.0 - self.beta2.powf(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        let groups = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for (((group, p), (_, g)), ((_, m), (_, v))) in groups {
            if group.frozen(mask) {
                continue;
            }
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    /// Mean per-sample loss of each epoch.
    pub loss_curve: Vec<f64>,
}

/// Trains on non-overlapping windows of a labeled dataset (truncated to a
/// multiple of the window length), visiting windows in a freshly shuffled
/// order each epoch.
pub fn train(
    dataset: &DomainDataset,
    config: &TrainConfig,
    init: NetworkParams,
    mask: FreezeMask,
) -> Result<TrainOutcome, NnError> {
    config.validate()?;
    let labels = dataset.labels().ok_or(NnError::Unlabeled)?;
    let voltages = dataset.voltages();
    let n = config.window;
    let windows = voltages.len() / n;
    if windows == 0 {
        return Err(NnError::TooFewSamples {
            window: n,
            got: voltages.len(),
        });
    }
    let targets: Vec<f64> = labels[..windows * n].iter().map(|&s| s as f64).collect();

    let mut params = init;
    let mut adam = Adam::new(&params, config);
    let mut grad = NetworkParams::zeros(params.hidden());
    let mut order: Vec<usize> = (0..windows).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut rng = stream_rng(derive_seed(config.seed, epoch as u64), stream::SHUFFLE);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.fill_zero();
            let weight = 1.0 / batch.len() as f64;
            for &w in batch {
                let range = w * n..(w + 1) * n;
                epoch_loss += accumulate(
                    &params,
                    &voltages[range.clone()],
                    &targets[range],
                    weight,
                    &mut grad,
                    !mask.gru1,
                );
            }
            adam.step(&mut params, &grad, mask);
        }
        loss_curve.push(epoch_loss / windows as f64);
    }
    Ok(TrainOutcome { params, loss_curve })
}
