use super::metrics::bce_loss;
use super::model::ConvTextModel;
use super::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central-difference step.
pub const GRADCHECK_STEP: f64 = 1e-5;

/// Largest relative disagreement between backpropagated and finite
/// difference gradients of the loss, over all trainable parameters.
pub fn gradient_check(model: &ConvTextModel, ids: &[u32], targets: &[f64]) -> Result<f64> {
    let (_, grads) = model.backward(ids, targets)?;
    gradient_check_against(model, ids, targets, &grads.to_dense(model))
}

/// Compares a supplied analytic gradient (tensors in
/// [`ConvTextModel::parameters`] order) with central differences. The
/// frozen padding embedding row is skipped.
pub fn gradient_check_against(
    model: &ConvTextModel,
    ids: &[u32],
    targets: &[f64],
    analytic: &[Vec<f64>],
) -> Result<f64> {
    let sizes: Vec<usize> = model.parameters().iter().map(|t| t.len()).collect();
    let coords = sizes
        .iter()
        .enumerate()
        .flat_map(|(ti, &len)| (if ti == 0 { model.embed_dim() } else { 0 }..len).map(move |i| (ti, i)));
    check_coordinates(model, ids, targets, analytic, coords)
}

/// Like [`gradient_check`] but only on `samples` coordinates drawn with a
/// seeded generator, for models too wide to probe exhaustively. The
/// embedding rows actually used by `ids` are always included.
pub fn gradient_check_sampled(
    model: &ConvTextModel,
    ids: &[u32],
    targets: &[f64],
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let (_, grads) = model.backward(ids, targets)?;
    let analytic = grads.to_dense(model);
    let sizes: Vec<usize> = model.parameters().iter().map(|t| t.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = model.embed_dim();
    let mut coords: Vec<(usize, usize)> = Vec::with_capacity(samples + d);
    if let Some(&id) = ids.iter().find(|&&id| id != 0) {
        coords.extend((0..d).map(|j| (0, id as usize * d + j)));
    }
    for _ in 0..samples {
        let ti = rng.random_range(1..sizes.len());
        coords.push((ti, rng.random_range(0..sizes[ti])));
    }
    check_coordinates(model, ids, targets, &analytic, coords.into_iter())
}

fn check_coordinates(
    model: &ConvTextModel,
    ids: &[u32],
    targets: &[f64],
    analytic: &[Vec<f64>],
    coords: impl Iterator<Item = (usize, usize)>,
) -> Result<f64> {
    model.check_input(ids)?;
    let loss = |m: &ConvTextModel| -> Result<f64> { bce_loss(&m.forward(ids)?, targets) };
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (ti, i) in coords {
        let original = probe.parameters()[ti][i];
        probe.parameters_mut()[ti][i] = original + GRADCHECK_STEP;
        let plus = loss(&probe)?;
        probe.parameters_mut()[ti][i] = original - GRADCHECK_STEP;
        let minus = loss(&probe)?;
        probe.parameters_mut()[ti][i] = original;

        let numeric = (plus - minus) / (2.0 * GRADCHECK_STEP);
        let exact = analytic[ti][i];
        let denom = exact.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((exact - numeric).abs() / denom);
    }
    Ok(worst)
}
