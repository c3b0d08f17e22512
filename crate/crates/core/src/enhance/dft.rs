//! Forward 2D DFT, `F[u,v] = Σ tile[x,y]·exp(−2πi(ux+vy)/N)`, unnormalized.
//!
//! Radix-2 Cooley–Tukey for power-of-two sizes, a direct separable DFT
//! otherwise. Rows are transformed first, then columns; the butterfly order
//! is fixed so results are bit-reproducible.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Precomputed twiddles for one transform size; reuse across crops.
#[derive(Debug, Clone)]
pub struct DftPlan {
    n: usize,
    /// `exp(−2πik/N)` for `k in 0..N`.
    twiddles: Vec<Complex64>,
    bit_reverse: Option<Vec<usize>>,
}

impl DftPlan {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "transform size must be positive");
        let twiddles = (0..n)
            .map(|k| {
                let (s, c) = (-2.0 * PI * k as f64 / n as f64).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        let bit_reverse = n.is_power_of_two().then(|| {
            let bits = n.trailing_zeros();
            (0..n)
                .map(|i| {
                    if bits == 0 {
                        0
                    } else {
                        i.reverse_bits() >> (usize::BITS - bits)
                    }
                })
                .collect()
        });
        Self {
            n,
            twiddles,
            bit_reverse,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Transform a row-major `N×N` real tile.
    pub fn forward(&self, tile: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(tile.len(), n * n, "tile must be N×N");
        let mut data: Vec<Complex64> = tile.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut scratch = vec![Complex64::default(); n];
        for row in data.chunks_exact_mut(n) {
            self.transform_1d(row, &mut scratch);
        }
        let mut column = vec![Complex64::default(); n];
        for col in 0..n {
            for (r, slot) in column.iter_mut().enumerate() {
                *slot = data[r * n + col];
            }
            self.transform_1d(&mut column, &mut scratch);
            for (r, value) in column.iter().enumerate() {
                data[r * n + col] = *value;
            }
        }
        data
    }

    fn transform_1d(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        match &self.bit_reverse {
            Some(rev) => self.radix2(buf, rev),
            None => self.direct(buf, scratch),
        }
    }

    fn radix2(&self, buf: &mut [Complex64], rev: &[usize]) {
        let n = self.n;
        for (i, &j) in rev.iter().enumerate() {
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }

    fn direct(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.n;
        for (u, out) in scratch.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for (x, v) in buf.iter().enumerate() {
                acc += v * self.twiddles[(u * x) % n];
            }
            *out = acc;
        }
        buf.copy_from_slice(scratch);
    }
}

/// One-shot transform of a row-major `N×N` tile.
pub fn dft2d(tile: &[f64], n: usize) -> Vec<Complex64> {
    DftPlan::new(n).forward(tile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    /// Quadruple loop straight from the definition.
    fn naive(tile: &[f64], n: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); n * n];
        for u in 0..n {
            for v in 0..n {
                let mut acc = Complex64::default();
                for x in 0..n {
                    for y in 0..n {
                        let phase = -2.0 * PI * ((u * x + v * y) as f64) / n as f64;
                        acc += tile[x * n + y] * Complex64::new(phase.cos(), phase.sin());
                    }
                }
                out[u * n + v] = acc;
            }
        }
        out
    }

    fn rel_frobenius(a: &[Complex64], b: &[Complex64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let norm: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (diff / norm).sqrt()
    }

    #[test]
    fn constant_tile_is_dc_only() {
        let n = 8;
        let c = -3.25;
        let f = dft2d(&vec![c; n * n], n);
        assert!((f[0] - Complex64::new((n * n) as f64 * c, 0.0)).norm() < 1e-9);
        for bin in &f[1..] {
            assert!(bin.norm() <= 1e-9 * (n * n) as f64 * c.abs());
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        for n in [1, 3, 8, 12] {
            let mut tile = vec![0.0; n * n];
            tile[0] = 1.0;
            for bin in dft2d(&tile, n) {
                assert!((bin.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cosine_along_rows_hits_two_bins() {
        let (n, k) = (16, 3);
        let tile: Vec<f64> = (0..n * n)
            .map(|i| (2.0 * PI * (k * (i / n)) as f64 / n as f64).cos())
            .collect();
        let expected = naive(&tile, n);
        let got = dft2d(&tile, n);
        assert!(rel_frobenius(&got, &expected) < 1e-12);
        let half = (n * n) as f64 / 2.0;
        for u in 0..n {
            for v in 0..n {
                let mag = got[u * n + v].norm();
                if v == 0 && (u == k || u == n - k) {
                    assert!((mag - half).abs() < 1e-9);
                } else {
                    assert!(mag < 1e-9);
                }
            }
        }
    }

    #[test]
    fn agrees_with_naive_for_radix2_and_direct_sizes() {
        let mut rng = SplitMix64::new(5);
        for n in [2, 4, 5, 6, 8, 9, 16] {
            let tile: Vec<f64> = (0..n * n).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
            assert!(
                rel_frobenius(&dft2d(&tile, n), &naive(&tile, n)) < 1e-12,
                "n={n}"
            );
        }
    }

    #[test]
    fn parseval() {
        let mut rng = SplitMix64::new(6);
        let n = 32;
        let tile: Vec<f64> = (0..n * n).map(|_| rng.next_f64() * 510.0 - 255.0).collect();
        let energy: f64 = tile.iter().map(|v| v * v).sum();
        let spectral: f64 =
            dft2d(&tile, n).iter().map(|c| c.norm_sqr()).sum::<f64>() / (n * n) as f64;
        assert!(((energy - spectral) / energy).abs() < 1e-12);
    }
}
