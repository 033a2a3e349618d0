//! Optical strain features for subtle facial motion.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the numeric half of
//! the pipeline:
//!
//! - [`image`]: frames, Gaussian smoothing, vertical Sobel, bilinear resize
//! - [`flow`]: dense windowed least-squares optical flow
//! - [`strain`]: strain tensor components and magnitudes from a flow field
//! - [`osf`]: the 2500-dimensional composite strain feature
//! - [`lbptop`]: block LBP-TOP histograms over a video volume
//! - [`osw`]: strain-weighted XY-plane histograms
//! - [`features`]: feature vectors, configuration and concatenation
//! - [`resample`]: linear temporal resampling of a sequence
//! - [`svm`], [`eval`]: one-vs-rest linear SVM, LOSO/LOVO cross-validation and metrics
//!
//! File formats, manifests, dataset synthesis and the command line live in the
//! `microstrain` crate.
#![no_std]
// Negated comparisons double as NaN rejection in parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod eval;
pub mod features;
pub mod flow;
pub mod image;
pub mod lbptop;
pub mod osf;
pub mod osw;
pub mod resample;
pub mod strain;
pub mod svm;

pub use error::{Error, Result};
pub use features::{concat_features, FeatureConfig, FeatureVector};
pub use flow::{estimate_flow, FlowField, FlowParams};
pub use image::{Frame, FrameSequence, Grid};
pub use lbptop::{BlockHistogramSet, LbpTopParams, Plane};
pub use strain::{compute_strain, StrainMap};
