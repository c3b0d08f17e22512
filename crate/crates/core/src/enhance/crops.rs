use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// `L` square crop origins of side `N`, as `(row, col)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CropSet {
    crop_size: usize,
    origins: Vec<(usize, usize)>,
    seed: u64,
}

impl CropSet {
    /// Explicit origins, checked against an image of `width × height`.
    pub fn from_origins(
        crop_size: usize,
        origins: Vec<(usize, usize)>,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if crop_size == 0 || origins.is_empty() {
            return Err(Error::Argument(
                "need a positive crop size and at least one origin".into(),
            ));
        }
        if width < crop_size || height < crop_size {
            return Err(too_small(width, height, crop_size));
        }
        if let Some(&(r, c)) = origins
            .iter()
            .find(|&&(r, c)| r > height - crop_size || c > width - crop_size)
        {
            return Err(Error::Dimension(format!(
                "crop origin ({r}, {c}) leaves the {width}x{height} image"
            )));
        }
        Ok(Self {
            crop_size,
            origins,
            seed: 0,
        })
    }

    pub fn crop_size(&self) -> usize {
        self.crop_size
    }

    pub fn count(&self) -> usize {
        self.origins.len()
    }

    pub fn origins(&self) -> &[(usize, usize)] {
        &self.origins
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn fits(&self, width: usize, height: usize) -> bool {
        width >= self.crop_size
            && height >= self.crop_size
            && self
                .origins
                .iter()
                .all(|&(r, c)| r + self.crop_size <= height && c + self.crop_size <= width)
    }
}

fn too_small(width: usize, height: usize, n: usize) -> Error {
    Error::Dimension(format!(
        "image {width}x{height} is smaller than crop size {n}"
    ))
}

/// Draw `l` origins uniformly from the valid rectangle.
///
/// Each origin consumes two SplitMix64 outputs: the first reduced modulo
/// `height − n + 1` gives the row, the second modulo `width − n + 1` the
/// column. Duplicates are allowed.
pub fn sample_crops(width: usize, height: usize, n: usize, l: usize, seed: u64) -> Result<CropSet> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::Argument(format!(
            "crop size must be even and at least 8, got {n}"
        )));
    }
    if l == 0 {
        return Err(Error::Argument("crop count must be at least 1".into()));
    }
    if width < n || height < n {
        return Err(too_small(width, height, n));
    }
    let rows = (height - n + 1) as u64;
    let cols = (width - n + 1) as u64;
    let mut rng = SplitMix64::new(seed);
    let origins = (0..l)
        .map(|_| {
            let r = rng.below(rows) as usize;
            let c = rng.below(cols) as usize;
            (r, c)
        })
        .collect();
    Ok(CropSet {
        crop_size: n,
        origins,
        seed,
    })
}
