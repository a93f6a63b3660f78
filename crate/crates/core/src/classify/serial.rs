//! JSON model files with base64 little-endian `f64` weight blobs.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::model::{ConvLayer, ConvTextModel, ModelSpec};
use super::{ClassifyError, Result, TrainConfig};

pub const MODEL_FORMAT: &str = "mediaseries-model/1";

#[derive(Serialize, Deserialize)]
struct Blob {
    shape: Vec<usize>,
    data: String,
}

#[derive(Serialize, Deserialize)]
struct ConvEntry {
    kernel_width: usize,
    in_channels: usize,
    out_channels: usize,
    weights: Blob,
    bias: Blob,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    sequence_length: usize,
    label_names: Vec<String>,
    pool_after: Vec<usize>,
    embedding: Blob,
    conv_layers: Vec<ConvEntry>,
    dense_weights: Blob,
    dense_bias: Blob,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    training: Option<TrainConfig>,
}

fn encode(shape: &[usize], values: impl Iterator<Item = f64>) -> Blob {
    let bytes: Vec<u8> = values.flat_map(f64::to_le_bytes).collect();
    Blob {
        shape: shape.to_vec(),
        data: STANDARD.encode(bytes),
    }
}

fn decode(blob: &Blob, what: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(&blob.data)
        .map_err(|e| ClassifyError::Format(format!("{what}: {e}")))?;
    let expected: usize = blob.shape.iter().product();
    if bytes.len() != expected * 8 {
        return Err(ClassifyError::Format(format!(
            "{what}: {} bytes for shape {:?}",
            bytes.len(),
            blob.shape
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn matrix(blob: &Blob, what: &str) -> Result<Array2<f64>> {
    if blob.shape.len() != 2 {
        return Err(ClassifyError::Format(format!("{what}: expected a matrix")));
    }
    Array2::from_shape_vec((blob.shape[0], blob.shape[1]), decode(blob, what)?)
        .map_err(|e| ClassifyError::Format(format!("{what}: {e}")))
}

fn vector(blob: &Blob, what: &str) -> Result<Array1<f64>> {
    if blob.shape.len() != 1 {
        return Err(ClassifyError::Format(format!("{what}: expected a vector")));
    }
    Ok(Array1::from(decode(blob, what)?))
}

impl ConvTextModel {
    pub fn to_json(&self, training: Option<&TrainConfig>) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            sequence_length: self.sequence_length,
            label_names: self.label_names.clone(),
            pool_after: self.pool_after.clone(),
            embedding: encode(self.embedding.shape(), self.embedding.iter().copied()),
            conv_layers: self
                .convs
                .iter()
                .map(|c| ConvEntry {
                    kernel_width: c.kernel_width,
                    in_channels: c.in_channels,
                    out_channels: c.out_channels,
                    weights: encode(c.weights.shape(), c.weights.iter().copied()),
                    bias: encode(c.bias.shape(), c.bias.iter().copied()),
                })
                .collect(),
            dense_weights: encode(self.dense_weights.shape(), self.dense_weights.iter().copied()),
            dense_bias: encode(self.dense_bias.shape(), self.dense_bias.iter().copied()),
            training: training.cloned(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    /// Parses a model file and re-checks every shape invariant.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| ClassifyError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(ClassifyError::Format(format!("unsupported format {:?}", file.format)));
        }
        let embedding = matrix(&file.embedding, "embedding")?;
        if embedding.nrows() < 2 || embedding.row(0).iter().any(|&v| v != 0.0) {
            return Err(ClassifyError::Format("padding embedding row must be zero".into()));
        }
        let mut convs = Vec::new();
        let mut width = embedding.ncols();
        for (i, c) in file.conv_layers.iter().enumerate() {
            let weights = matrix(&c.weights, "conv weights")?;
            let bias = vector(&c.bias, "conv bias")?;
            if c.in_channels != width
                || weights.dim() != (c.kernel_width * c.in_channels, c.out_channels)
                || bias.len() != c.out_channels
            {
                return Err(ClassifyError::Format(format!("conv layer {i} shapes do not chain")));
            }
            width = c.out_channels;
            convs.push(ConvLayer {
                kernel_width: c.kernel_width,
                in_channels: c.in_channels,
                out_channels: c.out_channels,
                weights,
                bias,
            });
        }
        if convs.is_empty() {
            return Err(ClassifyError::Format("no convolution layers".into()));
        }
        let dense_weights = matrix(&file.dense_weights, "dense weights")?;
        let dense_bias = vector(&file.dense_bias, "dense bias")?;
        let labels = file.label_names.len();
        if dense_weights.dim() != (width, labels) || dense_bias.len() != labels {
            return Err(ClassifyError::Format("dense layer shape mismatch".into()));
        }
        let model = ConvTextModel {
            sequence_length: file.sequence_length,
            embedding,
            convs,
            pool_after: file.pool_after,
            dense_weights,
            dense_bias,
            label_names: file.label_names,
        };
        let spec: ModelSpec = model.spec();
        if spec.kernel_width % 2 == 0
            || model.convs.iter().any(|c| c.kernel_width != spec.kernel_width)
            || labels == 0
        {
            return Err(ClassifyError::Format("invalid architecture".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path, training: Option<&TrainConfig>) -> Result<()> {
        std::fs::write(path, self.to_json(training) + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn save_load_forward_bit_identical(seed in any::<u64>(), ids in proptest::collection::vec(0u32..12, 9)) {
            let spec = ModelSpec { embed_dim: 3, channels: vec![4, 2], kernel_width: 3, pool_after: vec![0] };
            let m = ConvTextModel::new(&spec, 12, 9, vec!["a".into(), "b".into()], seed).unwrap();
            let back = ConvTextModel::from_json(&m.to_json(None)).unwrap();
            prop_assert_eq!(&back, &m);
            let p1: Vec<u64> = m.forward(&ids).unwrap().iter().map(|p| p.to_bits()).collect();
            let p2: Vec<u64> = back.forward(&ids).unwrap().iter().map(|p| p.to_bits()).collect();
            prop_assert_eq!(p1, p2);
        }
    }

    #[test]
    fn rejects_wrong_format_and_corrupt_blobs() {
        let spec = ModelSpec { embed_dim: 2, channels: vec![2], kernel_width: 1, pool_after: vec![] };
        let m = ConvTextModel::new(&spec, 4, 3, vec!["a".into()], 1).unwrap();
        let text = m.to_json(Some(&TrainConfig::default()));
        assert!(text.contains(MODEL_FORMAT) && text.contains("\"optimizer\": \"adam\""));
        assert!(ConvTextModel::from_json(&text.replace(MODEL_FORMAT, "other/2")).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["dense_bias"]["data"] = "AAAA".into();
        assert!(ConvTextModel::from_json(&v.to_string()).is_err());
    }
}
