//! Predicting whether a research article will be cited in a public policy
//! document from the online attention it received.
//!
//! The crate covers the whole experiment: ingesting per-source mention
//! counts ([`dataset`]), class balancing, stratified splits and k-fold
//! cross-validation ([`evalkit`]), three classifiers built from scratch
//! ([`mnb`], [`forest`], [`svm`]), model-derived feature rankings
//! ([`ranking`]), a synthetic data generator ([`synthgen`]) and the
//! orchestrating pipeline ([`experiment`]).

pub mod dataset;
pub mod error;
pub mod evalkit;
pub mod experiment;
pub mod forest;
pub mod mnb;
pub mod model;
pub mod ranking;
pub mod rng;
pub mod svm;
pub mod synthgen;

pub use dataset::{ArticleRecord, Feature, FeatureVector, Label, RecordSet, FEATURE_ORDER, N_FEATURES};
pub use error::{Error, ErrorKind, Result};
pub use experiment::{run_experiment, ExperimentConfig, Report};
pub use model::{ModelKind, ModelParams, TrainedModel};
