//! Detection of CNN-generated images from checkerboard artifacts.
//!
//! The detector suppresses image content with a 5×5 median-filter residual,
//! accumulates log-magnitude DFT spectra over random crops, and feeds the
//! resulting grid to a logistic classifier. A second, pixel-domain score can
//! be fused with the spectrum score by picking whichever is more confident.
//!
//! Module map:
//!
//! * [`image`]: PGM/PPM codec and the canonical in-memory rasters.
//! * [`enhance`]: median residual, crop sampling, 2D DFT and spectrum accumulation.
//! * [`classifier`]: standardized logistic regression and the `CLF1` model format.
//! * [`ensemble`]: margin-based fusion of two detector scores.
//! * [`metrics`]: confusion counts, F-score and average precision.
//! * [`synthgen`]: synthetic real/fake datasets with known artifact bins.
//! * [`pipeline`]: image → feature vector glue shared by the CLI and tests.

pub mod classifier;
pub mod enhance;
pub mod ensemble;
mod error;
pub mod image;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod synthgen;

pub use classifier::{ClassifierModel, FeatureSource, FeatureVector, TrainConfig};
pub use enhance::{CropSet, EnhancedSpectrum, ResidualImage};
pub use ensemble::ScorePair;
pub use error::{Error, Result};
pub use image::{Channels, GrayImage, Image};
pub use metrics::{EvalReport, Label, ScoredLabel};
pub use pipeline::EnhanceParams;
pub use synthgen::{DatasetManifest, SynthConfig};
