//! Logistic regression over standardized features.
//!
//! The same model type backs both detectors: the spectrum detector
//! (flattened enhanced spectra) and the pixel-domain baseline (64×64 luma
//! thumbnails). The source tag travels with features and models so one
//! cannot be scored with the other.

use crate::enhance::EnhancedSpectrum;
use crate::error::{Error, Result};
use crate::image::{to_gray, GrayImage, Image};
use crate::rng::SplitMix64;

const CLF_MAGIC: &[u8; 4] = b"CLF1";

/// Side of the luma thumbnail used by the pixel detector.
pub const PIXEL_SIDE: usize = 64;

/// Standard deviations below this are treated as constant features.
const MIN_STD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSource {
    Spectrum = 0,
    Pixel = 1,
}

impl FeatureSource {
    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Self::Spectrum),
            1 => Ok(Self::Pixel),
            other => Err(Error::Format(format!("unknown feature source tag {other}"))),
        }
    }
}

impl std::fmt::Display for FeatureSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Spectrum => "spectrum",
            Self::Pixel => "pixel",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    source: FeatureSource,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, source: FeatureSource) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape(
                "feature vector holds non-finite values".into(),
            ));
        }
        Ok(Self { values, source })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> FeatureSource {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Row-major flatten, `D = N²`.
pub fn flatten_spectrum(e: &EnhancedSpectrum) -> FeatureVector {
    FeatureVector {
        values: e.values().to_vec(),
        source: FeatureSource::Spectrum,
    }
}

/// Bilinear resample with pixel-centre alignment and clamped borders.
pub fn resize_bilinear(img: &GrayImage, out_w: usize, out_h: usize) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    let axis = |o: usize, scale: f64, len: usize| {
        let p = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = p.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, p - i0 as f64)
    };
    let mut out = Vec::with_capacity(out_w * out_h);
    for oy in 0..out_h {
        let (y0, y1, ty) = axis(oy, sy, h);
        for ox in 0..out_w {
            let (x0, x1, tx) = axis(ox, sx, w);
            let top = img.get(y0, x0) * (1.0 - tx) + img.get(y0, x1) * tx;
            let bottom = img.get(y1, x0) * (1.0 - tx) + img.get(y1, x1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    GrayImage::new(out_w, out_h, out).expect("sized by construction")
}

/// Pixel-domain features: luma resampled to 64×64, flattened.
pub fn pixel_features(img: &Image) -> FeatureVector {
    let thumb = resize_bilinear(&to_gray(img), PIXEL_SIDE, PIXEL_SIDE);
    FeatureVector {
        values: thumb.into_values(),
        source: FeatureSource::Pixel,
    }
}

/// Per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

fn check_shapes(features: &[FeatureVector]) -> Result<(usize, FeatureSource)> {
    let first = features
        .first()
        .ok_or_else(|| Error::Shape("no feature vectors".into()))?;
    let (dim, source) = (first.dim(), first.source);
    if dim == 0 {
        return Err(Error::Shape("empty feature vectors".into()));
    }
    for (i, f) in features.iter().enumerate() {
        if f.dim() != dim {
            return Err(Error::Shape(format!(
                "vector {i} has dimension {}, expected {dim}",
                f.dim()
            )));
        }
        if f.source != source {
            return Err(Error::Shape(format!(
                "vector {i} is {} features, expected {source}",
                f.source
            )));
        }
    }
    Ok((dim, source))
}

pub fn fit_standardizer(features: &[FeatureVector]) -> Result<Standardizer> {
    if features.len() < 2 {
        return Err(Error::Shape(
            "standardization needs at least two vectors".into(),
        ));
    }
    let (dim, _) = check_shapes(features)?;
    let count = features.len() as f64;
    let mut mean = vec![0.0; dim];
    for f in features {
        for (m, v) in mean.iter_mut().zip(&f.values) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0; dim];
    for f in features {
        for ((s, v), m) in var.iter_mut().zip(&f.values).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / count).sqrt();
            if sd < MIN_STD {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(Standardizer { mean, std })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 30,
            batch_size: 16,
            l2: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Argument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Argument("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch size must be at least 1".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::Argument(format!(
                "l2 must be non-negative, got {}",
                self.l2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    source: FeatureSource,
    mean: Vec<f64>,
    std: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ClassifierModel {
    pub fn new(
        source: FeatureSource,
        mean: Vec<f64>,
        std: Vec<f64>,
        weights: Vec<f64>,
        bias: f64,
    ) -> Result<Self> {
        let dim = weights.len();
        if mean.len() != dim || std.len() != dim {
            return Err(Error::Shape(
                "mean, std and weights must share one dimension".into(),
            ));
        }
        if std.iter().any(|&s| s.is_nan() || s <= 0.0) {
            return Err(Error::Format("standard deviations must be positive".into()));
        }
        let finite = mean
            .iter()
            .chain(&std)
            .chain(&weights)
            .all(|v| v.is_finite())
            && bias.is_finite();
        if !finite {
            return Err(Error::Format("model parameters must be finite".into()));
        }
        Ok(Self {
            source,
            mean,
            std,
            weights,
            bias,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn source(&self) -> FeatureSource {
        self.source
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn standardizer(&self) -> Standardizer {
        Standardizer {
            mean: self.mean.clone(),
            std: self.std.clone(),
        }
    }

    /// Pre-sigmoid score.
    pub fn logit(&self, f: &FeatureVector) -> Result<f64> {
        if f.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "feature dimension {} does not match model dimension {}",
                f.dim(),
                self.dim()
            )));
        }
        if f.source != self.source {
            return Err(Error::Shape(format!(
                "{} features given to a {} model",
                f.source, self.source
            )));
        }
        let mut z = self.bias;
        for i in 0..self.dim() {
            z += self.weights[i] * ((f.values[i] - self.mean[i]) / self.std[i]);
        }
        Ok(z)
    }

    /// Probability that the image is CNN-generated.
    pub fn score(&self, f: &FeatureVector) -> Result<f64> {
        self.logit(f).map(sigmoid)
    }

    /// `CLF1`, source tag byte, D (u32 LE), mean, std, weights (D f64 LE
    /// each), bias (f64 LE).
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dim();
        let mut out = Vec::with_capacity(4 + 1 + 4 + 8 * (3 * d + 1));
        out.extend_from_slice(CLF_MAGIC);
        out.push(self.source as u8);
        out.extend_from_slice(&(d as u32).to_le_bytes());
        for v in self.mean.iter().chain(&self.std).chain(&self.weights) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.bias.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 9 || &bytes[..4] != CLF_MAGIC {
            return Err(Error::Format("missing CLF1 header".into()));
        }
        let source = FeatureSource::from_tag(bytes[4])?;
        let d = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let expected = 9 + 8 * (3 * d + 1);
        if bytes.len() != expected {
            return Err(Error::Length {
                expected,
                found: bytes.len(),
            });
        }
        let mut doubles = bytes[9..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut take = |k: usize| doubles.by_ref().take(k).collect::<Vec<_>>();
        let mean = take(d);
        let std = take(d);
        let weights = take(d);
        let bias = take(1)[0];
        Self::new(source, mean, std, weights, bias)
    }
}

pub fn save_model(model: &ClassifierModel) -> Vec<u8> {
    model.to_bytes()
}

pub fn load_model(bytes: &[u8]) -> Result<ClassifierModel> {
    ClassifierModel::from_bytes(bytes)
}

/// Mean binary cross-entropy over `rows` plus `l2·‖w‖²/2`, and its gradient
/// with respect to `(weights, bias)`. Rows are already standardized.
pub fn loss_and_gradient(
    weights: &[f64],
    bias: f64,
    rows: &[&[f64]],
    labels: &[f64],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let count = rows.len() as f64;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    let mut loss = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        let z = dot(weights, x) + bias;
        loss += softplus(z) - y * z;
        let residual = sigmoid(z) - y;
        grad_b += residual;
        for (g, v) in grad_w.iter_mut().zip(x.iter()) {
            *g += residual * v;
        }
    }
    loss /= count;
    grad_b /= count;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / count + l2 * w;
    }
    loss += 0.5 * l2 * dot(weights, weights);
    (loss, grad_w, grad_b)
}

/// Training-set loss before the first update and after every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub losses: Vec<f64>,
}

impl TrainHistory {
    pub fn initial(&self) -> f64 {
        self.losses[0]
    }

    pub fn last(&self) -> f64 {
        *self.losses.last().expect("at least the initial loss")
    }
}

pub fn train(
    features: &[FeatureVector],
    labels: &[u8],
    cfg: &TrainConfig,
) -> Result<ClassifierModel> {
    train_with_history(features, labels, cfg).map(|(m, _)| m)
}

/// Minibatch gradient descent from zero weights. The epoch-`e` visiting order
/// is a Fisher–Yates shuffle driven by SplitMix64 seeded with `seed + e`.
pub fn train_with_history(
    features: &[FeatureVector],
    labels: &[u8],
    cfg: &TrainConfig,
) -> Result<(ClassifierModel, TrainHistory)> {
    cfg.validate()?;
    if features.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::Training(format!(
            "labels must be 0 or 1, found {bad}"
        )));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::Training("both classes must be present".into()));
    }
    let (dim, source) = check_shapes(features)?;
    let standardizer = fit_standardizer(features)?;
    let rows: Vec<Vec<f64>> = features
        .iter()
        .map(|f| standardizer.apply(&f.values))
        .collect();
    let targets: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();
    let all_rows: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();

    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut losses = vec![loss_and_gradient(&weights, bias, &all_rows, &targets, cfg.l2).0];
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut batch_rows: Vec<&[f64]> = Vec::with_capacity(cfg.batch_size);
    let mut batch_targets = Vec::with_capacity(cfg.batch_size);
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        SplitMix64::new(cfg.seed.wrapping_add(epoch as u64)).shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            batch_rows.clear();
            batch_targets.clear();
            for &i in chunk {
                batch_rows.push(&rows[i]);
                batch_targets.push(targets[i]);
            }
            let (_, gw, gb) =
                loss_and_gradient(&weights, bias, &batch_rows, &batch_targets, cfg.l2);
            for (w, g) in weights.iter_mut().zip(&gw) {
                *w -= cfg.learning_rate * g;
            }
            bias -= cfg.learning_rate * gb;
        }
        losses.push(loss_and_gradient(&weights, bias, &all_rows, &targets, cfg.l2).0);
    }
    if !losses.last().unwrap().is_finite() {
        return Err(Error::Training(
            "loss diverged; lower the learning rate".into(),
        ));
    }
    let model = ClassifierModel::new(source, standardizer.mean, standardizer.std, weights, bias)?;
    Ok((model, TrainHistory { losses }))
}
