//! Synthetic "real" and "fake" images with known spectral signatures.
//!
//! Real images are multi-octave value noise built with bilinear
//! interpolation on power-of-two cells; the triangle interpolation kernel
//! has a zero at the Nyquist frequency, so these images carry no isolated
//! Nyquist peaks. Fake images go through the transposed-convolution
//! mechanism: a low-resolution texture is zero-insertion upsampled and then
//! convolved with a small kernel, which leaves spectral replicas at the
//! Nyquist bins. Both classes are min/max normalized and quantized to 8 bits
//! as the very last step.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::{write_image, Channels, Image};
use crate::metrics::Label;
use crate::rng::SplitMix64;

const STREAM_REAL: u64 = 0x7265_616c;
const STREAM_FAKE: u64 = 0x6661_6b65;

pub const MANIFEST_NAME: &str = "manifest.csv";

/// Odd-sized square convolution kernel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    values: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "kernel size must be odd, got {size}"
            )));
        }
        if values.len() != size * size {
            return Err(Error::Shape(format!(
                "{size}x{size} kernel needs {} values",
                size * size
            )));
        }
        Ok(Self { size, values })
    }

    /// `size × size` box filter with weights `1/size²`.
    pub fn box_filter(size: usize) -> Result<Self> {
        let w = 1.0 / (size * size) as f64;
        Self::new(size, vec![w; size * size])
    }

    /// Normalized, sampled Gaussian.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(Error::Argument(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let h = (size / 2) as f64;
        let mut values: Vec<f64> = (0..size * size)
            .map(|i| {
                let dy = (i / size) as f64 - h;
                let dx = (i % size) as f64 - h;
                (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = values.iter().sum();
        values.iter_mut().for_each(|v| *v /= total);
        Self::new(size, values)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Default for Kernel {
    fn default() -> Self {
        Self::box_filter(3).expect("3 is odd")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub image_size: usize,
    pub upsample_factor: usize,
    pub kernel: Kernel,
    pub noise_octaves: usize,
    pub count_real: usize,
    pub count_fake: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            image_size: 256,
            upsample_factor: 2,
            kernel: Kernel::default(),
            noise_octaves: 5,
            count_real: 100,
            count_fake: 100,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.upsample_factor < 2 {
            return Err(Error::Argument("upsample factor must be at least 2".into()));
        }
        if self.image_size == 0 || !self.image_size.is_multiple_of(self.upsample_factor) {
            return Err(Error::Argument(format!(
                "image size {} must be a positive multiple of the upsample factor {}",
                self.image_size, self.upsample_factor
            )));
        }
        if self.noise_octaves == 0 {
            return Err(Error::Argument("need at least one noise octave".into()));
        }
        Ok(())
    }

    /// SHA-256 over a canonical text rendering of every field.
    pub fn digest(&self) -> String {
        let mut canon = format!(
            "size={};factor={};octaves={};real={};fake={};seed={};kernel={}:",
            self.image_size,
            self.upsample_factor,
            self.noise_octaves,
            self.count_real,
            self.count_fake,
            self.seed,
            self.kernel.size
        );
        for v in &self.kernel.values {
            write!(canon, "{:016x},", v.to_bits()).unwrap();
        }
        let hash = Sha256::digest(canon.as_bytes());
        hash.iter().fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
    }
}

/// Sum of bilinearly interpolated random grids with cells 2, 4, 8, …,
/// amplitude proportional to the cell size.
fn value_noise(size: usize, octaves: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let mut out = vec![0.0; size * size];
    let mut cell = 2usize;
    for _ in 0..octaves {
        if cell > size {
            break;
        }
        let g = size / cell + 2;
        let grid: Vec<f64> = (0..g * g).map(|_| rng.next_f64()).collect();
        let amp = cell as f64;
        for y in 0..size {
            let (gy, ty) = (y / cell, (y % cell) as f64 / cell as f64);
            for x in 0..size {
                let (gx, tx) = (x / cell, (x % cell) as f64 / cell as f64);
                let top = grid[gy * g + gx] * (1.0 - tx) + grid[gy * g + gx + 1] * tx;
                let bottom =
                    grid[(gy + 1) * g + gx] * (1.0 - tx) + grid[(gy + 1) * g + gx + 1] * tx;
                out[y * size + x] += amp * (top * (1.0 - ty) + bottom * ty);
            }
        }
        cell *= 2;
    }
    out
}

fn normalize_to_image(size: usize, values: &[f64]) -> Image {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let pixels = values
        .iter()
        .map(|&v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    Image::new(size, size, Channels::Gray, pixels).expect("square image")
}

/// 2D convolution with edge-replicate borders.
fn convolve(src: &[f64], size: usize, kernel: &Kernel) -> Vec<f64> {
    let k = kernel.size as isize;
    let h = k / 2;
    let last = size as isize - 1;
    let mut out = vec![0.0; size * size];
    for r in 0..size as isize {
        for c in 0..size as isize {
            let mut acc = 0.0;
            for i in 0..k {
                let rr = (r + h - i).clamp(0, last) as usize;
                for j in 0..k {
                    let cc = (c + h - j).clamp(0, last) as usize;
                    acc += kernel.values[(i * k + j) as usize] * src[rr * size + cc];
                }
            }
            out[r as usize * size + c as usize] = acc;
        }
    }
    out
}

pub fn gen_real(cfg: &SynthConfig, index: u64) -> Image {
    let mut rng = SplitMix64::derive(cfg.seed, STREAM_REAL, index);
    let noise = value_noise(cfg.image_size, cfg.noise_octaves, &mut rng);
    normalize_to_image(cfg.image_size, &noise)
}

pub fn gen_fake(cfg: &SynthConfig, index: u64) -> Image {
    let mut rng = SplitMix64::derive(cfg.seed, STREAM_FAKE, index);
    let f = cfg.upsample_factor;
    let size = cfg.image_size;
    let low_size = size / f;
    let low = value_noise(low_size, cfg.noise_octaves, &mut rng);
    let mut up = vec![0.0; size * size];
    for y in 0..low_size {
        for x in 0..low_size {
            up[(y * f) * size + x * f] = low[y * low_size + x];
        }
    }
    normalize_to_image(size, &convolve(&up, size, &cfg.kernel))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    /// Known only for manifests produced by [`build_dataset`].
    pub seed: Option<u64>,
    pub config_digest: Option<String>,
}

impl DatasetManifest {
    pub fn labels(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.label.as_u8()).collect()
    }

    pub fn has_both_labels(&self) -> bool {
        let pos = self.entries.iter().any(|e| e.label.is_positive());
        let neg = self.entries.iter().any(|e| !e.label.is_positive());
        pos && neg
    }
}

/// Write a `path,label` CSV. Paths are written as given.
pub fn write_manifest(path: &Path, rows: &[(String, Label)]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["path", "label"]).map_err(csv_err)?;
    for (p, label) in rows {
        w.write_record([p.as_str(), &label.as_u8().to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a `path,label` CSV; relative paths resolve against the manifest's
/// directory.
pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if headers.len() != 2 || &headers[0] != "path" || &headers[1] != "label" {
        return Err(Error::Format(format!(
            "{}: header must be `path,label`",
            path.display()
        )));
    }
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let row = line + 2;
        let label = record[1]
            .trim()
            .parse::<u8>()
            .map_err(|_| {
                Error::Format(format!(
                    "{}:{row}: bad label {:?}",
                    path.display(),
                    &record[1]
                ))
            })
            .and_then(Label::from_u8)?;
        let file = PathBuf::from(record[0].trim());
        let resolved = if file.is_absolute() {
            file
        } else {
            base.join(file)
        };
        if !seen.insert(resolved.clone()) {
            return Err(Error::Format(format!(
                "{}:{row}: duplicate path {}",
                path.display(),
                resolved.display()
            )));
        }
        entries.push(ManifestEntry {
            path: resolved,
            label,
        });
    }
    Ok(DatasetManifest {
        entries,
        seed: None,
        config_digest: None,
    })
}

/// Write `real_%05d.pgm`, `fake_%05d.pgm` and `manifest.csv` into `out_dir`.
pub fn build_dataset(cfg: &SynthConfig, out_dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rows = Vec::with_capacity(cfg.count_real + cfg.count_fake);
    let mut entries = Vec::with_capacity(rows.capacity());
    let jobs = (0..cfg.count_real)
        .map(|i| (format!("real_{i:05}.pgm"), Label::Real, i))
        .chain((0..cfg.count_fake).map(|i| (format!("fake_{i:05}.pgm"), Label::Generated, i)));
    for (name, label, i) in jobs {
        let img = match label {
            Label::Real => gen_real(cfg, i as u64),
            Label::Generated => gen_fake(cfg, i as u64),
        };
        let path = out_dir.join(&name);
        write_image(&path, &img)?;
        entries.push(ManifestEntry { path, label });
        rows.push((name, label));
    }
    write_manifest(&out_dir.join(MANIFEST_NAME), &rows)?;
    Ok(DatasetManifest {
        entries,
        seed: Some(cfg.seed),
        config_digest: Some(cfg.digest()),
    })
}
