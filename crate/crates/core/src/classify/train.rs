use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::bce_loss;
use super::model::{ConvTextModel, Gradients};
use super::{ClassifyError, Optimizer, Result, TrainConfig};
use crate::corpus::PAD_ID;

/// One training document: token ids and a 0/1 target per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub ids: Vec<u32>,
    pub targets: Vec<f64>,
}

/// Content order used to reduce gradients inside a batch, so the sum does
/// not depend on where an example sits in the dataset.
fn content_order(a: &Example, b: &Example) -> Ordering {
    a.ids.cmp(&b.ids).then_with(|| {
        a.targets
            .iter()
            .map(|t| t.to_bits())
            .cmp(b.targets.iter().map(|t| t.to_bits()))
    })
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl OptimizerState {
    fn new(model: &ConvTextModel, config: &TrainConfig) -> Self {
        let zeros: Vec<Vec<f64>> = model.parameters().iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            kind: config.optimizer,
            lr: config.learning_rate,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    fn apply(&mut self, model: &mut ConvTextModel, grads: &[Vec<f64>]) {
        self.step += 1;
        let embed_dim = model.embed_dim();
        let (bc1, bc2) = (
            1.0 - ADAM_BETA1.powi(self.step),
            1.0 - ADAM_BETA2.powi(self.step),
        );
        for (ti, params) in model.parameters_mut().into_iter().enumerate() {
            // the padding row (first `embed_dim` entries of tensor 0) is frozen
            let start = if ti == 0 { PAD_ID as usize * embed_dim + embed_dim } else { 0 };
            let g = &grads[ti];
            match self.kind {
                Optimizer::Sgd => {
                    for i in start..params.len() {
                        params[i] -= self.lr * g[i];
                    }
                }
                Optimizer::Adam => {
                    let (m, v) = (&mut self.m[ti], &mut self.v[ti]);
                    for i in start..params.len() {
                        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                        let m_hat = m[i] / bc1;
                        let v_hat = v[i] / bc2;
                        params[i] -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                    }
                }
            }
        }
    }
}

/// Mini-batch training on the mean binary cross entropy.
///
/// Returns the trained model and the mean training loss of each epoch
/// (measured on the forward passes of that epoch, before each update).
/// Identical seed, data and configuration give a bit-identical history.
pub fn train(
    model: &ConvTextModel,
    dataset: &[Example],
    config: &TrainConfig,
) -> Result<(ConvTextModel, Vec<f64>)> {
    train_until(model, dataset, config, |_, _, _| false)
}

/// [`train`] with a callback after every epoch, given the epoch index, the
/// current model and that epoch's loss. Returning `true` stops early.
pub fn train_until(
    model: &ConvTextModel,
    dataset: &[Example],
    config: &TrainConfig,
    mut stop: impl FnMut(usize, &ConvTextModel, f64) -> bool,
) -> Result<(ConvTextModel, Vec<f64>)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    for ex in dataset {
        model.check_input(&ex.ids)?;
        if ex.targets.len() != model.num_labels() {
            return Err(ClassifyError::LengthMismatch(model.num_labels(), ex.targets.len()));
        }
    }

    let mut model = model.clone();
    let mut state = OptimizerState::new(&model, config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let mut batch: Vec<&Example> = chunk.iter().map(|&i| &dataset[i]).collect();
            batch.sort_by(|a, b| content_order(a, b));

            let results = batch
                .par_iter()
                .map(|ex| {
                    let (probs, grads) = model.backward(&ex.ids, &ex.targets)?;
                    Ok((bce_loss(&probs, &ex.targets)?, grads))
                })
                .collect::<Result<Vec<_>>>()?;

            let mut total = Gradients::zeros_like(&model);
            for (loss, grads) in &results {
                epoch_loss += loss;
                total.add_assign(grads);
            }
            total.scale(1.0 / batch.len() as f64);
            let dense = total.to_dense(&model);
            state.apply(&mut model, &dense);
        }
        history.push(epoch_loss / dataset.len() as f64);
        if stop(epoch, &model, history[epoch]) {
            break;
        }
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{evaluate, ModelSpec};

    fn spec() -> ModelSpec {
        ModelSpec { embed_dim: 6, channels: vec![6, 6], kernel_width: 3, pool_after: vec![] }
    }

    /// 20 docs over filler ids 4..10; class 1 carries token 2, class 0 token 3.
    fn separable() -> Vec<Example> {
        (0..20)
            .map(|i| {
                let positive = i % 2 == 0;
                let mut ids: Vec<u32> = (0..8).map(|j| 4 + ((i * 3 + j * 5) % 6) as u32).collect();
                ids[(i % 8) as usize] = if positive { 2 } else { 3 };
                Example { ids, targets: vec![if positive { 1.0 } else { 0.0 }] }
            })
            .collect()
    }

    #[test]
    fn separable_set_converges() {
        let model = ConvTextModel::new(&spec(), 10, 8, vec!["pos".into()], 5).unwrap();
        let cfg = TrainConfig { epochs: 200, batch_size: 4, learning_rate: 0.01, ..Default::default() };
        let (trained, history) = train(&model, &separable(), &cfg).unwrap();
        assert_eq!(history.len(), 200);
        let final_bce = evaluate(&trained, &separable(), 0.5).unwrap().bce;
        assert!(final_bce < 0.05, "final bce {final_bce}");
    }

    #[test]
    fn zero_learning_rate_keeps_weights() {
        let model = ConvTextModel::new(&spec(), 10, 8, vec!["pos".into()], 5).unwrap();
        for optimizer in [Optimizer::Adam, Optimizer::Sgd] {
            let cfg = TrainConfig { epochs: 3, learning_rate: 0.0, optimizer, ..Default::default() };
            let (trained, _) = train(&model, &separable(), &cfg).unwrap();
            assert_eq!(trained, model);
        }
    }

    #[test]
    fn same_seed_same_history() {
        let model = ConvTextModel::new(&spec(), 10, 8, vec!["pos".into()], 5).unwrap();
        let cfg = TrainConfig { epochs: 5, batch_size: 3, ..Default::default() };
        let (m1, h1) = train(&model, &separable(), &cfg).unwrap();
        let (m2, h2) = train(&model, &separable(), &cfg).unwrap();
        assert_eq!(h1.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), h2.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert_eq!(m1, m2);
    }

    #[test]
    fn full_batch_is_permutation_invariant() {
        let model = ConvTextModel::new(&spec(), 10, 8, vec!["pos".into()], 5).unwrap();
        let data = separable();
        let mut reversed = data.clone();
        reversed.reverse();
        let cfg = TrainConfig { epochs: 4, batch_size: data.len(), ..Default::default() };
        let (m1, h1) = train(&model, &data, &cfg).unwrap();
        let (m2, h2) = train(&model, &reversed, &cfg).unwrap();
        assert_eq!(h1.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), h2.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert_eq!(m1, m2);
    }

    #[test]
    fn padding_row_never_updates() {
        let model = ConvTextModel::new(&spec(), 10, 8, vec!["pos".into()], 5).unwrap();
        let mut data = separable();
        for ex in &mut data {
            ex.ids[7] = 0;
        }
        let (trained, _) = train(&model, &data, &TrainConfig { epochs: 3, ..Default::default() }).unwrap();
        assert!(trained.embedding.row(0).iter().all(|&v| v == 0.0));
        assert_ne!(trained.embedding, model.embedding);
    }

    #[test]
    fn errors() {
        let model = ConvTextModel::new(&spec(), 10, 8, vec!["pos".into()], 5).unwrap();
        assert!(matches!(train(&model, &[], &TrainConfig::default()), Err(ClassifyError::EmptyDataset)));
        let bad = TrainConfig { batch_size: 0, ..Default::default() };
        assert!(matches!(train(&model, &separable(), &bad), Err(ClassifyError::InvalidConfig(_))));
        let wrong = vec![Example { ids: vec![2; 8], targets: vec![1.0, 0.0] }];
        assert!(matches!(train(&model, &wrong, &TrainConfig::default()), Err(ClassifyError::LengthMismatch(1, 2))));
    }
}
