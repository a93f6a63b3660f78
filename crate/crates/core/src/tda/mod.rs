//! Tag-probability point clouds, PCA and Mapper graphs.

mod mapper;
mod pca;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifyError, ConvTextModel};

pub use mapper::{decorate, mapper, Cover, Lens, MapperEdge, MapperGraph, MapperNode};
pub use pca::{pca_fit, pca_transform, PcaModel};

/// Default cut for the high-scoring subset; selection is strictly greater.
pub const GBV_SELECT_THRESHOLD: f64 = 0.9999;

#[derive(Debug, Error)]
pub enum TdaError {
    #[error("point cloud is empty")]
    EmptyInput,
    #[error("all points are identical")]
    DegenerateInput,
    #[error("expected {expected} columns, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid target dimension {k} for {n} points in {d} dimensions")]
    InvalidDimension { k: usize, n: usize, d: usize },
    #[error("invalid cover: {0}")]
    BadCover(String),
    #[error("lens coordinate {0} out of range")]
    BadLens(usize),
    #[error("non-finite coordinate in point {0}")]
    NonFinite(String),
    #[error("no score for document {0}")]
    MissingScore(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TdaError>;

/// Labelled points with one scalar score each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub ids: Vec<String>,
    /// Row-major, one row per id.
    pub coords: Vec<Vec<f64>>,
    pub extra: BTreeMap<String, f64>,
}

impl PointCloud {
    pub fn new(ids: Vec<String>, coords: Vec<Vec<f64>>, extra: BTreeMap<String, f64>) -> Result<Self> {
        if ids.len() != coords.len() {
            return Err(TdaError::ShapeMismatch { expected: ids.len(), got: coords.len() });
        }
        if let Some(first) = coords.first() {
            for (id, row) in ids.iter().zip(&coords) {
                if row.len() != first.len() {
                    return Err(TdaError::ShapeMismatch { expected: first.len(), got: row.len() });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(TdaError::NonFinite(id.clone()));
                }
            }
        }
        Ok(Self { ids, coords, extra })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    /// Same ids and scores with new coordinates.
    pub fn with_coords(&self, coords: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.ids.clone(), coords, self.extra.clone())
    }
}

/// Runs the tagger over each document; row i is its full sigmoid vector.
pub fn tag_probability_cloud(
    tagger: &ConvTextModel,
    docs: &[(String, Vec<u32>)],
    scores: &BTreeMap<String, f64>,
) -> Result<PointCloud> {
    if docs.is_empty() {
        return Err(TdaError::EmptyInput);
    }
    let coords = docs
        .par_iter()
        .map(|(_, ids)| tagger.forward(ids))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut extra = BTreeMap::new();
    for (id, _) in docs {
        let score = scores.get(id).ok_or_else(|| TdaError::MissingScore(id.clone()))?;
        extra.insert(id.clone(), *score);
    }
    PointCloud::new(docs.iter().map(|(id, _)| id.clone()).collect(), coords, extra)
}

/// Ids whose score is strictly above `threshold`, in input order.
pub fn select_above<'a>(scores: impl IntoIterator<Item = (&'a String, &'a f64)>, threshold: f64) -> Vec<String> {
    scores
        .into_iter()
        .filter(|(_, &p)| p > threshold)
        .map(|(id, _)| id.clone())
        .collect()
}
