//! Fractal-dimension features of EEG wavelet subbands, four binary
//! classifiers, cross-validated fitness `time / accuracy`, and a binary
//! genetic algorithm that searches feature subsets for the lowest fitness.
//!
//! The signal-processing and classifier code is generic over [`Scalar`]
//! (`f32`/`f64`); the feature pipeline runs on `f64` through the aliases
//! below.

pub mod chromosome;
pub mod classify;
pub mod dataio;
pub mod dwt;
pub mod evaluate;
pub mod featspace;
pub mod fractal;
pub mod ga;
pub mod linalg;
pub mod rng;
pub mod scalar;

pub use scalar::Scalar;

pub type Decomposition = dwt::WaveletDecomposition<f64>;
pub type Decomposition32 = dwt::WaveletDecomposition<f32>;
pub type Fd = fractal::FdEstimate<f64>;
pub type Fd32 = fractal::FdEstimate<f32>;
pub type DMatrix = linalg::Matrix<f64>;
pub type DMatrix32 = linalg::Matrix<f32>;
pub type Model = classify::TrainedModel<f64>;
pub type Model32 = classify::TrainedModel<f32>;

pub use chromosome::Chromosome;
pub use classify::{ClassifierKind, Hyperparams};
pub use evaluate::{EvalConfig, FitnessRecord, TimingMode};
pub use featspace::FeatureMatrix;
pub use ga::{ClassifierPolicy, GaConfig, GaTrace};
