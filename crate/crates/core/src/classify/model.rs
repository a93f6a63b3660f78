use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassifyError, Result};
use crate::corpus::PAD_ID;

/// Layer layout of a [`ConvTextModel`].
///
/// `channels[i]` is the output width of convolution `i`; `pool_after` lists
/// convolution indices followed by a width-2, stride-2 max-pool. A global
/// max-pool over time always follows the last convolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub embed_dim: usize,
    pub channels: Vec<usize>,
    pub kernel_width: usize,
    pub pool_after: Vec<usize>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::tagger()
    }
}

impl ModelSpec {
    /// Two convolutions and one (global) pooling.
    pub fn tagger() -> Self {
        Self {
            embed_dim: 64,
            channels: vec![128, 128],
            kernel_width: 5,
            pool_after: vec![],
        }
    }

    /// Four convolutions and two poolings: a stride-2 pool after the second
    /// convolution and the global pool after the fourth.
    pub fn scorer() -> Self {
        Self {
            embed_dim: 64,
            channels: vec![64, 128, 128, 128],
            kernel_width: 5,
            pool_after: vec![1],
        }
    }

    fn validate(&self, seq_len: usize) -> Result<()> {
        let bad = |m: String| Err(ClassifyError::InvalidArchitecture(m));
        if self.embed_dim == 0 || self.channels.is_empty() || self.channels.contains(&0) {
            return bad("embedding and channel widths must be positive".into());
        }
        if self.kernel_width % 2 == 0 {
            return bad(format!("kernel width {} is not odd", self.kernel_width));
        }
        let mut len = seq_len;
        for (i, _) in self.channels.iter().enumerate() {
            if self.pool_after.contains(&i) {
                len /= 2;
            }
        }
        if self.pool_after.iter().any(|&p| p >= self.channels.len()) {
            return bad("pool index beyond last convolution".into());
        }
        if len == 0 {
            return bad(format!("sequence length {seq_len} vanishes after pooling"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub kernel_width: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    /// `(kernel_width * in_channels) × out_channels`; row `k * in + i`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Embedding → 1-D convolutions with ReLU and same padding → max-pools →
/// global max-pool → dense → sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvTextModel {
    pub(crate) sequence_length: usize,
    /// Row 0 is the padding embedding: always zero and never trained.
    pub(crate) embedding: Array2<f64>,
    pub(crate) convs: Vec<ConvLayer>,
    pub(crate) pool_after: Vec<usize>,
    /// `features × labels`.
    pub(crate) dense_weights: Array2<f64>,
    pub(crate) dense_bias: Array1<f64>,
    pub(crate) label_names: Vec<String>,
}

/// Parameter-shaped gradient. Embedding rows are stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding: BTreeMap<u32, Array1<f64>>,
    pub convs: Vec<(Array2<f64>, Array1<f64>)>,
    pub dense_weights: Array2<f64>,
    pub dense_bias: Array1<f64>,
}

struct LayerCache {
    cols: Array2<f64>,
    pre_activation: Array2<f64>,
    /// For a pooled layer: source row of each pooled output, per channel.
    pool_argmax: Option<Array2<usize>>,
}

struct ForwardCache {
    layers: Vec<LayerCache>,
    global_argmax: Vec<usize>,
    features: Array1<f64>,
    probabilities: Array1<f64>,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    // keep strictly inside (0, 1) even when exp saturates
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

impl ConvTextModel {
    /// Seeded Glorot-uniform initialization; biases and the padding row start at zero.
    pub fn new(
        spec: &ModelSpec,
        embedding_rows: usize,
        sequence_length: usize,
        label_names: Vec<String>,
        seed: u64,
    ) -> Result<Self> {
        spec.validate(sequence_length)?;
        if label_names.is_empty() {
            return Err(ClassifyError::InvalidArchitecture("at least one label required".into()));
        }
        if embedding_rows < 2 {
            return Err(ClassifyError::InvalidArchitecture(
                "embedding needs pad and unknown rows".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = spec.embed_dim;
        let mut embedding = glorot(&mut rng, embedding_rows, d, embedding_rows, d);
        embedding.row_mut(PAD_ID as usize).fill(0.0);

        let k = spec.kernel_width;
        let mut in_ch = d;
        let mut convs = Vec::with_capacity(spec.channels.len());
        for &out_ch in &spec.channels {
            convs.push(ConvLayer {
                kernel_width: k,
                in_channels: in_ch,
                out_channels: out_ch,
                weights: glorot(&mut rng, k * in_ch, out_ch, k * in_ch, k * out_ch),
                bias: Array1::zeros(out_ch),
            });
            in_ch = out_ch;
        }
        let labels = label_names.len();
        Ok(Self {
            sequence_length,
            embedding,
            convs,
            pool_after: spec.pool_after.clone(),
            dense_weights: glorot(&mut rng, in_ch, labels, in_ch, labels),
            dense_bias: Array1::zeros(labels),
            label_names,
        })
    }

    pub fn sequence_length(&self) -> usize {
        self.sequence_length
    }

    pub fn num_labels(&self) -> usize {
        self.label_names.len()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn embedding_rows(&self) -> usize {
        self.embedding.nrows()
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.ncols()
    }

    pub fn conv_layers(&self) -> &[ConvLayer] {
        &self.convs
    }

    pub fn pool_after(&self) -> &[usize] {
        &self.pool_after
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            embed_dim: self.embed_dim(),
            channels: self.convs.iter().map(|c| c.out_channels).collect(),
            kernel_width: self.convs[0].kernel_width,
            pool_after: self.pool_after.clone(),
        }
    }

    /// Sets every weight and bias (and the embedding) to zero.
    pub fn zero_parameters(&mut self) {
        for t in self.parameters_mut() {
            t.fill(0.0);
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|t| t.len()).sum()
    }

    /// Parameter tensors in canonical order: embedding, then each
    /// convolution's weights and bias, then dense weights and bias.
    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out = vec![self.embedding.as_slice().expect("standard layout")];
        for c in &self.convs {
            out.push(c.weights.as_slice().expect("standard layout"));
            out.push(c.bias.as_slice().expect("standard layout"));
        }
        out.push(self.dense_weights.as_slice().expect("standard layout"));
        out.push(self.dense_bias.as_slice().expect("standard layout"));
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.embedding.as_slice_mut().expect("standard layout")];
        for c in &mut self.convs {
            out.push(c.weights.as_slice_mut().expect("standard layout"));
            out.push(c.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.dense_weights.as_slice_mut().expect("standard layout"));
        out.push(self.dense_bias.as_slice_mut().expect("standard layout"));
        out
    }

    pub(crate) fn check_input(&self, ids: &[u32]) -> Result<()> {
        if ids.len() != self.sequence_length {
            return Err(ClassifyError::ShapeMismatch {
                expected: self.sequence_length,
                got: ids.len(),
            });
        }
        let rows = self.embedding.nrows();
        if let Some(&id) = ids.iter().find(|&&id| id as usize >= rows) {
            return Err(ClassifyError::TokenOutOfRange { id, rows });
        }
        Ok(())
    }

    /// Label probabilities for one token sequence, each strictly in (0, 1).
    pub fn forward(&self, ids: &[u32]) -> Result<Vec<f64>> {
        self.check_input(ids)?;
        Ok(self.forward_cached(ids).probabilities.to_vec())
    }

    fn forward_cached(&self, ids: &[u32]) -> ForwardCache {
        let mut x = self.embedding.select(Axis(0), &ids.iter().map(|&i| i as usize).collect::<Vec<_>>());
        let mut layers = Vec::with_capacity(self.convs.len());
        for (li, conv) in self.convs.iter().enumerate() {
            let cols = im2col(x.view(), conv.kernel_width);
            let mut z = cols.dot(&conv.weights);
            z += &conv.bias;
            let a = z.mapv(|v| v.max(0.0));
            let (next, pool_argmax) = if self.pool_after.contains(&li) {
                let (p, idx) = max_pool2(&a);
                (p, Some(idx))
            } else {
                (a, None)
            };
            layers.push(LayerCache {
                cols,
                pre_activation: z,
                pool_argmax,
            });
            x = next;
        }
        let mut global_argmax = Vec::with_capacity(x.ncols());
        let mut features = Array1::zeros(x.ncols());
        for (c, col) in x.axis_iter(Axis(1)).enumerate() {
            let (t, v) = argmax(col.iter().copied());
            global_argmax.push(t);
            features[c] = v;
        }
        let logits = features.dot(&self.dense_weights) + &self.dense_bias;
        ForwardCache {
            layers,
            global_argmax,
            features,
            probabilities: logits.mapv(sigmoid),
        }
    }

    /// Forward pass plus gradient of the mean-over-labels binary cross
    /// entropy with respect to every parameter. Returns (probabilities, grads).
    pub fn backward(&self, ids: &[u32], targets: &[f64]) -> Result<(Vec<f64>, Gradients)> {
        self.check_input(ids)?;
        let labels = self.num_labels();
        if targets.len() != labels {
            return Err(ClassifyError::LengthMismatch(labels, targets.len()));
        }
        let cache = self.forward_cached(ids);
        let dlogits: Array1<f64> = cache
            .probabilities
            .iter()
            .zip(targets)
            .map(|(p, t)| (p - t) / labels as f64)
            .collect();

        let dense_weights = outer(&cache.features, &dlogits);
        let dfeatures = self.dense_weights.dot(&dlogits);

        // scatter the global max-pool gradient
        let last = self.convs.len() - 1;
        let last_rows = pooled_rows(&cache.layers[last]);
        let mut dx = Array2::zeros((last_rows, self.convs[last].out_channels));
        for (c, &t) in cache.global_argmax.iter().enumerate() {
            dx[[t, c]] = dfeatures[c];
        }

        let mut conv_grads = Vec::with_capacity(self.convs.len());
        for (conv, layer) in self.convs.iter().zip(&cache.layers).rev() {
            let mut da = match &layer.pool_argmax {
                Some(idx) => unpool(&dx, idx, layer.pre_activation.nrows()),
                None => dx,
            };
            da.zip_mut_with(&layer.pre_activation, |g, &z| {
                if z <= 0.0 {
                    *g = 0.0
                }
            });
            let dw = layer.cols.t().dot(&da);
            let db = da.sum_axis(Axis(0));
            let dcols = da.dot(&conv.weights.t());
            dx = col2im(&dcols, conv.kernel_width, conv.in_channels);
            conv_grads.push((dw, db));
        }
        conv_grads.reverse();

        let mut embedding: BTreeMap<u32, Array1<f64>> = BTreeMap::new();
        for (t, &id) in ids.iter().enumerate() {
            if id == PAD_ID {
                continue;
            }
            let row = dx.row(t);
            embedding
                .entry(id)
                .and_modify(|g| *g += &row)
                .or_insert_with(|| row.to_owned());
        }

        Ok((
            cache.probabilities.to_vec(),
            Gradients {
                embedding,
                convs: conv_grads,
                dense_weights,
                dense_bias: dlogits,
            },
        ))
    }
}

impl Gradients {
    pub fn zeros_like(model: &ConvTextModel) -> Self {
        Self {
            embedding: BTreeMap::new(),
            convs: model
                .convs
                .iter()
                .map(|c| (Array2::zeros(c.weights.raw_dim()), Array1::zeros(c.out_channels)))
                .collect(),
            dense_weights: Array2::zeros(model.dense_weights.raw_dim()),
            dense_bias: Array1::zeros(model.dense_bias.len()),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (id, row) in &other.embedding {
            self.embedding
                .entry(*id)
                .and_modify(|g| *g += row)
                .or_insert_with(|| row.clone());
        }
        for ((w, b), (ow, ob)) in self.convs.iter_mut().zip(&other.convs) {
            *w += ow;
            *b += ob;
        }
        self.dense_weights += &other.dense_weights;
        self.dense_bias += &other.dense_bias;
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.embedding.values_mut() {
            *g *= factor;
        }
        for (w, b) in &mut self.convs {
            *w *= factor;
            *b *= factor;
        }
        self.dense_weights *= factor;
        self.dense_bias *= factor;
    }

    /// Dense tensors in [`ConvTextModel::parameters`] order.
    pub fn to_dense(&self, model: &ConvTextModel) -> Vec<Vec<f64>> {
        let mut emb = Array2::<f64>::zeros(model.embedding.raw_dim());
        for (&id, row) in &self.embedding {
            emb.row_mut(id as usize).assign(row);
        }
        let mut out = vec![emb.into_raw_vec_and_offset().0];
        for (w, b) in &self.convs {
            out.push(w.iter().copied().collect());
            out.push(b.to_vec());
        }
        out.push(self.dense_weights.iter().copied().collect());
        out.push(self.dense_bias.to_vec());
        out
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let a2 = a.view().insert_axis(Axis(1));
    let b2 = b.view().insert_axis(Axis(0));
    a2.dot(&b2)
}

fn pooled_rows(layer: &LayerCache) -> usize {
    match &layer.pool_argmax {
        Some(idx) => idx.nrows(),
        None => layer.pre_activation.nrows(),
    }
}

/// Same-padded unfold: row `t` holds input rows `t - k/2 ..= t + k/2`.
fn im2col(x: ArrayView2<f64>, kernel: usize) -> Array2<f64> {
    let (rows, ch) = x.dim();
    let pad = kernel / 2;
    let mut cols = Array2::zeros((rows, kernel * ch));
    for t in 0..rows {
        for k in 0..kernel {
            let src = t + k;
            if src < pad || src - pad >= rows {
                continue;
            }
            cols.slice_mut(s![t, k * ch..(k + 1) * ch]).assign(&x.row(src - pad));
        }
    }
    cols
}

fn col2im(dcols: &Array2<f64>, kernel: usize, ch: usize) -> Array2<f64> {
    let rows = dcols.nrows();
    let pad = kernel / 2;
    let mut dx = Array2::zeros((rows, ch));
    for t in 0..rows {
        for k in 0..kernel {
            let src = t + k;
            if src < pad || src - pad >= rows {
                continue;
            }
            let mut dst = dx.row_mut(src - pad);
            dst += &dcols.slice(s![t, k * ch..(k + 1) * ch]);
        }
    }
    dx
}

/// Width-2 stride-2 max-pool over time; an odd trailing row is dropped.
fn max_pool2(a: &Array2<f64>) -> (Array2<f64>, Array2<usize>) {
    let (rows, ch) = a.dim();
    let out_rows = rows / 2;
    let mut out = Array2::zeros((out_rows, ch));
    let mut idx = Array2::zeros((out_rows, ch));
    for r in 0..out_rows {
        for c in 0..ch {
            let (i0, i1) = (2 * r, 2 * r + 1);
            let (src, v) = if a[[i1, c]] > a[[i0, c]] { (i1, a[[i1, c]]) } else { (i0, a[[i0, c]]) };
            out[[r, c]] = v;
            idx[[r, c]] = src;
        }
    }
    (out, idx)
}

fn unpool(d: &Array2<f64>, idx: &Array2<usize>, rows: usize) -> Array2<f64> {
    let mut out = Array2::zeros((rows, d.ncols()));
    for ((r, c), &g) in d.indexed_iter() {
        out[[idx[[r, c]], c]] += g;
    }
    out
}
