//! Weight-space region lab.
//!
//! Trains populations of small tanh classifiers from a shared pretrained
//! encoder and maps the regions of weight space they occupy: task-vector
//! clustering, interpolation and extrapolation scans, convex-hull sampling
//! with the PB comparison metric, linear-probe generalized loss, and
//! centroid-fusion fine-tuning.
//!
//! Modules, bottom-up:
//!
//! | module | purpose |
//! |--------|---------|
//! | [`weightstore`] | segmented weight vectors, WSV1 checkpoints, store index |
//! | [`synthgen`] | synthetic task families and datasets |
//! | [`trainer`] | encoder + head model, exact gradients, training modes |
//! | [`evaluator`] | linear probing, generalized loss, PB |
//! | [`geometry`] | task vectors, cosine similarity, spectral clustering, projections |
//! | [`regions`] | combinations, interpolation, hull sampling, centroids, radius scans |
//! | [`experiments`] | end-to-end suites and report layout |
//! | [`plot`] | minimal deterministic SVG line plots |

pub mod error;
pub mod evaluator;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod plot;
pub mod regions;
pub mod seeding;
pub mod synthgen;
pub mod trainer;
pub mod weightstore;

pub use error::{Error, Result};
pub use evaluator::{pb, GroupLossTable, LossReport, ProbeConfig};
pub use geometry::{ClusterResult, TaskVectorSet};
pub use regions::{AlphaSchedule, CombinationWeights, GroupKind, ModelGroup};
pub use synthgen::{DatasetPair, DatasetSpec, LabeledSet, RuleKind, TaskFamilySpec};
pub use trainer::{ModelConfig, TrainConfig, TrainMode};
pub use weightstore::{CheckpointManifest, ParamSegment, SegmentKind, WeightVector};
