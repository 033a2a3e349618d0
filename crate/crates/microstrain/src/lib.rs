//! Files, datasets and the batch driver around `microstrain-core`.
//!
//! - [`frames`]: frame directories to sequences, PNG output
//! - [`manifest`]: dataset manifests (JSON or CSV)
//! - [`config`]: `key = value` pipeline configuration
//! - [`formats`]: flow files, feature matrices, reports
//! - [`synth`]: seeded synthetic micro-motion datasets
//! - [`pipeline`]: parallel extraction, caching, evaluation
//! - [`cli`]: the `microstrain` command

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod frames;
pub mod manifest;
pub mod pipeline;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use manifest::{DatasetManifest, ManifestRecord};
pub use pipeline::{extract_features, run_pipeline};
pub use synth::{generate_sequences, write_dataset, SynthSpec};
