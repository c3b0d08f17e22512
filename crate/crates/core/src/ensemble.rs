//! Fusion of the pixel-domain score `r_i` and the spectrum score `r_f`: the
//! score farther from 0.5 wins; ties return the mean.
//!
//! Margins closer than [`TIE_TOLERANCE`] count as tied, so decimal inputs
//! such as `(0.3, 0.7)` tie even though their binary margins differ in the
//! last bit.

use crate::error::{Error, Result};

pub const TIE_TOLERANCE: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScorePair {
    r_i: f64,
    r_f: f64,
}

impl ScorePair {
    pub fn new(r_i: f64, r_f: f64) -> Result<Self> {
        for (name, v) in [("r_i", r_i), ("r_f", r_f)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(Self { r_i, r_f })
    }

    pub fn r_i(&self) -> f64 {
        self.r_i
    }

    pub fn r_f(&self) -> f64 {
        self.r_f
    }
}

pub fn combine(p: ScorePair) -> f64 {
    let margin_i = (p.r_i - 0.5).abs();
    let margin_f = (p.r_f - 0.5).abs();
    if (margin_i - margin_f).abs() <= TIE_TOLERANCE {
        (p.r_i + p.r_f) / 2.0
    } else if margin_i > margin_f {
        p.r_i
    } else {
        p.r_f
    }
}

pub fn combine_scores(r_i: f64, r_f: f64) -> Result<f64> {
    ScorePair::new(r_i, r_f).map(combine)
}
