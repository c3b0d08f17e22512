//! Image → feature vector for either detector.

use crate::classifier::{flatten_spectrum, pixel_features, FeatureSource, FeatureVector};
use crate::enhance::{enhance_image, EnhancedSpectrum, DEFAULT_EPSILON};
use crate::error::Result;
use crate::image::Image;

pub const DEFAULT_CROP_SIZE: usize = 64;
pub const DEFAULT_CROP_COUNT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhanceParams {
    pub crop_size: usize,
    pub crop_count: usize,
    pub seed: u64,
    pub epsilon: f64,
}

impl Default for EnhanceParams {
    fn default() -> Self {
        Self {
            crop_size: DEFAULT_CROP_SIZE,
            crop_count: DEFAULT_CROP_COUNT,
            seed: 0,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl EnhanceParams {
    pub fn enhance(&self, img: &Image) -> Result<EnhancedSpectrum> {
        enhance_image(
            img,
            self.crop_size,
            self.crop_count,
            self.seed,
            self.epsilon,
        )
    }
}

/// Every image is enhanced with the same crop seed, so a spectrum depends
/// only on the image content and the parameters.
pub fn extract_features(
    img: &Image,
    source: FeatureSource,
    params: &EnhanceParams,
) -> Result<FeatureVector> {
    match source {
        FeatureSource::Spectrum => params.enhance(img).map(|e| flatten_spectrum(&e)),
        FeatureSource::Pixel => Ok(pixel_features(img)),
    }
}
