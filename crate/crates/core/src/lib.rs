//! Corpus analytics for news archives.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] turns raw HTML dumps into normalized token sequences.
//! * [`classify`] trains and applies small 1-D convolutional text classifiers
//!   (a multilabel topic tagger and a binary scorer).
//! * [`timeseries`] aggregates per-document scores into series and provides
//!   moving-average decomposition, cross-correlation, and a structural
//!   regression used for interval-based anomaly detection.
//! * [`tda`] reduces tag-probability clouds with PCA and builds Mapper graphs.
//! * [`emit`] renders CSV, SVG, DOT and JSON reports.
//! * [`cli`] wires everything together behind the `mediaseries` binary.

pub mod classify;
pub mod cli;
pub mod corpus;
pub mod emit;
pub mod synth;
pub mod tda;
pub mod timeseries;

pub use classify::{ConvTextModel, TrainConfig};
pub use corpus::{Document, NormalizedDoc, Vocabulary};
pub use tda::{MapperGraph, PcaModel};
pub use timeseries::{Decomposition, StructuralModel, TimeSeries};
