//! Enhanced spectrum: median residual, random crops, log-magnitude DFT sum.
//!
//! For an image `I` with 5×5 median `I'`, the residual `I − I'` is cropped
//! `L` times at `N×N`, each crop is transformed, and the per-bin values
//! `log10(max(|F|, ε))` are summed. Checkerboard artifacts sit at the same
//! bins in every crop, so they accumulate while content averages out.

mod crops;
mod dft;
mod median;

pub use crops::{sample_crops, CropSet};
pub use dft::{dft2d, DftPlan};
pub use median::median_filter_5x5;

use crate::error::{Error, Result};
use crate::image::{to_gray, GrayImage, Image};

pub const DEFAULT_EPSILON: f64 = 1e-12;

const ESP_MAGIC: &[u8; 4] = b"ESP1";

/// Signed difference between an image and its 5×5 median.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ResidualImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} residual needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn crop_into(&self, row: usize, col: usize, n: usize, tile: &mut Vec<f64>) {
        tile.clear();
        for r in row..row + n {
            let start = r * self.width + col;
            tile.extend_from_slice(&self.values[start..start + n]);
        }
    }
}

pub fn residual(img: &GrayImage) -> ResidualImage {
    let filtered = median_filter_5x5(img);
    let values = img
        .values()
        .iter()
        .zip(filtered.values())
        .map(|(a, b)| a - b)
        .collect();
    ResidualImage {
        width: img.width(),
        height: img.height(),
        values,
    }
}

/// `N×N` accumulated log-magnitude spectrum, DC at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancedSpectrum {
    size: usize,
    crop_count: usize,
    values: Vec<f64>,
}

impl EnhancedSpectrum {
    pub fn new(size: usize, crop_count: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::Shape(format!(
                "spectrum of size {size} needs {} values, got {}",
                size * size,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("spectrum holds non-finite values".into()));
        }
        Ok(Self {
            size,
            crop_count,
            values,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn crop_count(&self) -> usize {
        self.crop_count
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[u * self.size + v]
    }

    pub fn median(&self) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let m = sorted.len() / 2;
        if sorted.len() % 2 == 1 {
            sorted[m]
        } else {
            (sorted[m - 1] + sorted[m]) / 2.0
        }
    }

    /// Copy with DC moved to the centre, for display.
    pub fn center_shifted(&self) -> GrayImage {
        let n = self.size;
        let h = n / 2;
        let mut out = vec![0.0; n * n];
        for u in 0..n {
            for v in 0..n {
                out[((u + h) % n) * n + (v + h) % n] = self.values[u * n + v];
            }
        }
        GrayImage::new(n, n, out).expect("square grid")
    }

    /// `.esp` layout: `ESP1`, N (u32 LE), L (u32 LE), N² f64 LE row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.values.len());
        out.extend_from_slice(ESP_MAGIC);
        out.extend_from_slice(&(self.size as u32).to_le_bytes());
        out.extend_from_slice(&(self.crop_count as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != ESP_MAGIC {
            return Err(Error::Format("missing ESP1 header".into()));
        }
        let size = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let crop_count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let expected = size
            .checked_mul(size)
            .and_then(|c| c.checked_mul(8))
            .and_then(|b| b.checked_add(12))
            .ok_or_else(|| Error::Format("spectrum size overflows".into()))?;
        if bytes.len() != expected {
            return Err(Error::Length {
                expected,
                found: bytes.len(),
            });
        }
        let values = bytes[12..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(size, crop_count, values)
    }
}

/// `E[u,v] = Σ_n log10(max(|F_n[u,v]|, ε))`, crops taken in origin order.
pub fn accumulate_spectrum(
    residual: &ResidualImage,
    crops: &CropSet,
    epsilon: f64,
) -> Result<EnhancedSpectrum> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Argument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !crops.fits(residual.width, residual.height) {
        return Err(Error::Dimension(format!(
            "crops of size {} do not fit a {}x{} residual",
            crops.crop_size(),
            residual.width,
            residual.height
        )));
    }
    let n = crops.crop_size();
    let plan = DftPlan::new(n);
    let mut acc = vec![0.0; n * n];
    let mut tile = Vec::with_capacity(n * n);
    for &(row, col) in crops.origins() {
        residual.crop_into(row, col, n, &mut tile);
        for (slot, bin) in acc.iter_mut().zip(plan.forward(&tile)) {
            *slot += bin.norm().max(epsilon).log10();
        }
    }
    Ok(EnhancedSpectrum {
        size: n,
        crop_count: crops.count(),
        values: acc,
    })
}

/// Full enhancement: luma → residual → crops → accumulated spectrum.
pub fn enhance_image(
    img: &Image,
    n: usize,
    l: usize,
    seed: u64,
    epsilon: f64,
) -> Result<EnhancedSpectrum> {
    let gray = to_gray(img);
    // Check dimensions before paying for the median filter.
    let crops = sample_crops(gray.width(), gray.height(), n, l, seed)?;
    accumulate_spectrum(&residual(&gray), &crops, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Channels;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn random_gray(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = SplitMix64::new(seed);
        GrayImage::new(w, h, (0..w * h).map(|_| rng.below(256) as f64).collect()).unwrap()
    }

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = SplitMix64::new(seed);
        Image::new(
            w,
            h,
            Channels::Gray,
            (0..w * h).map(|_| rng.below(256) as u8).collect(),
        )
        .unwrap()
    }

    #[test]
    fn residual_of_constant_is_zero() {
        let r = residual(&GrayImage::new(9, 6, vec![100.0; 54]).unwrap());
        assert!(r.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn residual_keeps_isolated_spike() {
        let mut v = vec![0.0; 25];
        v[12] = 255.0;
        let r = residual(&GrayImage::new(5, 5, v).unwrap());
        assert_eq!(r.values()[12], 255.0);
        assert!(r
            .values()
            .iter()
            .enumerate()
            .all(|(i, &x)| i == 12 || x == 0.0));
    }

    #[test]
    fn residual_bounded_on_bytes() {
        let r = residual(&random_gray(20, 20, 3));
        assert!(r.values().iter().all(|v| (-255.0..=255.0).contains(v)));
    }

    #[test]
    fn single_crop_is_plain_log_magnitude() {
        let g = random_gray(16, 16, 4);
        let r = residual(&g);
        let crops = CropSet::from_origins(8, vec![(3, 5)], 16, 16).unwrap();
        let e = accumulate_spectrum(&r, &crops, DEFAULT_EPSILON).unwrap();
        let mut tile = Vec::new();
        r.crop_into(3, 5, 8, &mut tile);
        let f = dft2d(&tile, 8);
        for (got, bin) in e.values().iter().zip(f) {
            assert_eq!(*got, bin.norm().max(DEFAULT_EPSILON).log10());
        }
    }

    #[test]
    fn zero_residual_hits_the_floor() {
        let r = ResidualImage::new(16, 16, vec![0.0; 256]).unwrap();
        let crops = sample_crops(16, 16, 8, 3, 1).unwrap();
        let e = accumulate_spectrum(&r, &crops, 1e-6).unwrap();
        assert!(e.values().iter().all(|&v| v == 3.0 * (1e-6f64).log10()));
    }

    #[test]
    fn repeated_origin_doubles() {
        let r = residual(&random_gray(12, 12, 8));
        let one = accumulate_spectrum(
            &r,
            &CropSet::from_origins(8, vec![(1, 2)], 12, 12).unwrap(),
            1e-12,
        )
        .unwrap();
        let two = accumulate_spectrum(
            &r,
            &CropSet::from_origins(8, vec![(1, 2), (1, 2)], 12, 12).unwrap(),
            1e-12,
        )
        .unwrap();
        for (a, b) in one.values().iter().zip(two.values()) {
            assert_eq!(2.0 * a, *b);
        }
        assert_eq!(two.crop_count(), 2);
    }

    #[test]
    fn rejects_bad_epsilon_and_foreign_crops() {
        let r = ResidualImage::new(8, 8, vec![0.0; 64]).unwrap();
        let crops = CropSet::from_origins(8, vec![(0, 0)], 8, 8).unwrap();
        assert!(matches!(
            accumulate_spectrum(&r, &crops, 0.0),
            Err(Error::Argument(_))
        ));
        let big = CropSet::from_origins(8, vec![(2, 2)], 16, 16).unwrap();
        assert!(matches!(
            accumulate_spectrum(&r, &big, 1e-12),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn constant_image_spectrum() {
        let img = Image::new(128, 128, Channels::Gray, vec![90; 128 * 128]).unwrap();
        let e = enhance_image(&img, 64, 8, 5, DEFAULT_EPSILON).unwrap();
        let floor = 8.0 * DEFAULT_EPSILON.log10();
        assert!(e.values().iter().all(|&v| v == floor));
    }

    #[test]
    fn too_small_image_is_a_dimension_error() {
        let img = random_image(63, 100, 1);
        assert!(matches!(
            enhance_image(&img, 64, 4, 0, 1e-12),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn enhancement_is_deterministic() {
        let img = random_image(80, 72, 21);
        let a = enhance_image(&img, 32, 6, 77, DEFAULT_EPSILON).unwrap();
        let b = enhance_image(&img, 32, 6, 77, DEFAULT_EPSILON).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn esp_codec() {
        let e = enhance_image(&random_image(40, 40, 2), 16, 3, 1, 1e-12).unwrap();
        let bytes = e.to_bytes();
        assert_eq!(&bytes[..4], b"ESP1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 16);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(EnhancedSpectrum::from_bytes(&bytes).unwrap(), e);
        assert!(matches!(
            EnhancedSpectrum::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Length { .. })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            EnhancedSpectrum::from_bytes(&bad),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn center_shift_moves_dc() {
        let mut values = vec![0.0; 64];
        values[0] = 1.0;
        let e = EnhancedSpectrum::new(8, 1, values).unwrap();
        assert_eq!(e.center_shifted().get(4, 4), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn spectrum_is_finite(seed in any::<u64>(), eps_exp in -15i32..-1) {
            let img = random_image(24, 20, seed);
            let e = enhance_image(&img, 16, 3, seed, 10f64.powi(eps_exp)).unwrap();
            prop_assert!(e.values().iter().all(|v| v.is_finite()));
        }

        #[test]
        fn offset_invariance(seed in any::<u64>(), offset in -50i32..50) {
            let g = random_gray(24, 24, seed);
            let shifted = GrayImage::new(24, 24, g.values().iter().map(|v| v + offset as f64).collect()).unwrap();
            let crops = sample_crops(24, 24, 16, 4, seed).unwrap();
            let a = accumulate_spectrum(&residual(&g), &crops, 1e-12).unwrap();
            let b = accumulate_spectrum(&residual(&shifted), &crops, 1e-12).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
