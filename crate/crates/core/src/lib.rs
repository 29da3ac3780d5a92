//! Iris-recognition pipeline built from windowed wavelet scattering
//! features and block-wise Haralick textural features, reduced with PCA and
//! matched with a minimum-distance classifier.
//!
//! # Stages
//! - [`image`] / [`corpus`]: PGM I/O, preprocessing, manifests, and a
//!   deterministic synthetic corpus for end-to-end validation.
//! - [`scattering`]: Morlet filter bank and the two-layer scattering
//!   cascade with mean/variance pooling.
//! - [`texture`]: block-wise gray-level co-occurrence matrices and the 14
//!   Haralick features.
//! - [`features`]: concatenation and PCA reduction.
//! - [`matcher`]: gallery enrollment, minimum-distance identification, and
//!   evaluation reports.
//! - [`pipeline`] / [`persist`]: configuration, the per-image extractor,
//!   and versioned binary artifacts.
//!
//! The `scatiris` CLI in this workspace drives the same API end to end:
//! `synth`, `extract`, `train`, `evaluate`, `identify`, `bench`.

pub mod corpus;
pub mod error;
pub mod features;
pub mod fft;
pub mod image;
pub mod matcher;
pub mod persist;
pub mod pipeline;
pub mod scattering;
pub mod texture;

#[cfg(test)]
pub(crate) mod testutil;

pub use corpus::{
    generate_synthetic, split_dataset, DatasetManifest, ManifestEntry, Split, SyntheticSpec,
};
pub use error::{Error, Result};
pub use features::{concat_features, FeatureVector, FitOptions, FitRoute, PcaModel, ReducedVector};
pub use image::{load_image, save_pgm, ColorPolicy, GrayImage};
pub use matcher::{evaluate, identify, EvalReport, Gallery, MatchResult};
pub use pipeline::{FeatureExtractor, PipelineConfig};
pub use scattering::{
    build_filter_bank, pool_scattering, scatter, scattering_path_count, FilterBank,
    ScatterFeatures, ScatteringConfig, ScatteringMaps,
};
pub use texture::{
    block_texture_features, cooccurrence, haralick14, quantize, BlockGrid, CooccurrenceMatrix,
    HaralickVector, QuantizedImage, TextureFeatures,
};
