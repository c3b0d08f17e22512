//! Raster types and the binary netpbm codec.
//!
//! Only P5 (gray) and P6 (RGB) with maxval 255 are accepted. Everything
//! downstream works on [`GrayImage`], obtained through [`to_gray`].

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channels {
    Gray = 1,
    Rgb = 3,
}

impl Channels {
    pub fn count(self) -> usize {
        self as usize
    }
}

/// Decoded 8-bit raster, row-major, interleaved when RGB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: Channels,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: Channels, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        let expected = width * height * channels.count();
        if pixels.len() != expected {
            return Err(Error::Length {
                expected,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> Channels {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

/// Single-channel real-valued raster.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} image needs {} values, got {}",
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

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Minimum and maximum value. NaNs are ignored.
    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// BT.601 luma for RGB, identity for gray. No rounding.
pub fn to_gray(img: &Image) -> GrayImage {
    let values = match img.channels {
        Channels::Gray => img.pixels.iter().map(|&p| f64::from(p)).collect(),
        Channels::Rgb => img
            .pixels
            .chunks_exact(3)
            .map(|px| {
                0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2])
            })
            .collect(),
    };
    GrayImage {
        width: img.width,
        height: img.height,
        values,
    }
}

/// Quantize a gray image that already holds values in [0, 255].
pub fn quantize(gray: &GrayImage) -> Image {
    let pixels = gray
        .values
        .iter()
        .map(|&v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    Image {
        width: gray.width,
        height: gray.height,
        channels: Channels::Gray,
        pixels,
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format(format!("expected {what} in header")));
        }
        // At most 20 ASCII digits fit; longer runs are rejected by the parse.
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("{what} out of range")))
    }
}

/// Decode a binary PGM (P5) or PPM (P6) with maxval 255.
pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => Channels::Gray,
        Some(b"P6") => Channels::Rgb,
        _ => return Err(Error::Format("expected P5 or P6 magic".into())),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if !cur
        .bytes
        .get(2)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(Error::Format("missing separator after magic".into()));
    }
    let width = cur.read_uint("width")?;
    let height = cur.read_uint("height")?;
    let maxval = cur.read_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("zero dimension {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::Unsupported(format!(
            "maxval {maxval}, only 255 is supported"
        )));
    }
    // Exactly one whitespace byte separates maxval from the raster.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::Format("missing whitespace after maxval".into())),
    }
    let expected = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(channels.count()))
        .ok_or_else(|| Error::Format("image dimensions overflow".into()))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(Error::Length {
            expected,
            found: payload.len(),
        });
    }
    Image::new(width, height, channels, payload[..expected].to_vec())
}

/// Encode an 8-bit image as P5 or P6.
pub fn encode_pnm(img: &Image) -> Vec<u8> {
    let magic = match img.channels {
        Channels::Gray => "P5",
        Channels::Rgb => "P6",
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Render a real-valued image as P5, mapping `[lo, hi]` linearly onto
/// `[0, 255]` with clamping and half-away-from-zero rounding.
pub fn encode_pgm(img: &GrayImage, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Argument(format!(
            "need finite hi > lo, got lo={lo} hi={hi}"
        )));
    }
    let scale = 255.0 / (hi - lo);
    let pixels = img
        .values
        .iter()
        .map(|&v| ((v - lo) * scale).clamp(0.0, 255.0).round() as u8)
        .collect();
    Ok(encode_pnm(&Image {
        width: img.width,
        height: img.height,
        channels: Channels::Gray,
        pixels,
    }))
}

/// [`encode_pgm`] with the image's own min/max as the range. A constant
/// image maps to all zeros.
pub fn encode_pgm_auto(img: &GrayImage) -> Result<Vec<u8>> {
    let (lo, hi) = img.min_max();
    if hi > lo {
        encode_pgm(img, lo, hi)
    } else {
        encode_pgm(img, lo, lo + 1.0)
    }
}

pub fn read_image(path: &std::path::Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes)
}

pub fn write_image(path: &std::path::Path, img: &Image) -> Result<()> {
    std::fs::write(path, encode_pnm(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pgm(header: &str, payload: &[u8]) -> Vec<u8> {
        let mut v = header.as_bytes().to_vec();
        v.extend_from_slice(payload);
        v
    }

    #[test]
    fn decodes_minimal_pgm() {
        let img = decode_pnm(&pgm("P5\n1 1\n255\n", &[0])).unwrap();
        assert_eq!(img, Image::new(1, 1, Channels::Gray, vec![0]).unwrap());
    }

    #[test]
    fn decodes_ppm() {
        let img = decode_pnm(&pgm("P6\n2 1\n255\n", &[255, 0, 0, 0, 255, 0])).unwrap();
        assert_eq!(img.channels(), Channels::Rgb);
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.pixels(), &[255, 0, 0, 0, 255, 0]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let img = decode_pnm(&pgm("P5\n# made by hand\n2 # w\n1\n# max\n255\n", &[7, 9])).unwrap();
        assert_eq!(img.pixels(), &[7, 9]);
    }

    #[test]
    fn truncated_payload_is_a_length_error() {
        let err = decode_pnm(&pgm("P5\n2 2\n255\n", &[1, 2, 3])).unwrap_err();
        assert!(matches!(
            err,
            Error::Length {
                expected: 4,
                found: 3
            }
        ));
    }

    #[test]
    fn trailing_bytes_are_not_read() {
        let img = decode_pnm(&pgm("P5\n1 1\n255\n", &[5, 6, 7])).unwrap();
        assert_eq!(img.pixels(), &[5]);
    }

    #[test]
    fn rejects_bad_magic_and_maxval() {
        assert!(matches!(
            decode_pnm(b"P2\n1 1\n255\n0"),
            Err(Error::Format(_))
        ));
        assert!(matches!(decode_pnm(b"P5"), Err(Error::Format(_))));
        assert!(matches!(decode_pnm(b"P5\n1\n"), Err(Error::Format(_))));
        assert!(matches!(
            decode_pnm(&pgm("P5\n1 1\n65535\n", &[0, 0])),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn pgm_range_mapping() {
        let (lo, hi) = (-3.5, 12.25);
        let px = |v: f64| {
            let bytes = encode_pgm(&GrayImage::new(1, 1, vec![v]).unwrap(), lo, hi).unwrap();
            *bytes.last().unwrap()
        };
        assert_eq!(px(lo), 0);
        assert_eq!(px(hi), 255);
        // 127.5 rounds away from zero.
        assert_eq!(px((lo + hi) / 2.0), 128);
        assert_eq!(px(lo - 100.0), 0);
        assert_eq!(px(hi + 100.0), 255);
    }

    #[test]
    fn pgm_rejects_empty_range() {
        let g = GrayImage::new(1, 1, vec![0.0]).unwrap();
        assert!(matches!(encode_pgm(&g, 1.0, 1.0), Err(Error::Argument(_))));
        assert!(matches!(encode_pgm(&g, 2.0, 1.0), Err(Error::Argument(_))));
    }

    #[test]
    fn luma_conversion() {
        let white = Image::new(1, 1, Channels::Rgb, vec![255, 255, 255]).unwrap();
        assert!((to_gray(&white).values()[0] - 255.0).abs() < 1e-12);
        let gray = Image::new(1, 1, Channels::Gray, vec![42]).unwrap();
        assert_eq!(to_gray(&gray).values(), &[42.0]);
        let red = Image::new(1, 1, Channels::Rgb, vec![255, 0, 0]).unwrap();
        assert!((to_gray(&red).values()[0] - 76.245).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn quantized_gray_round_trips(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let values: Vec<f64> = (0..w * h).map(|_| rng.below(256) as f64).collect();
            let g = GrayImage::new(w, h, values).unwrap();
            let back = to_gray(&decode_pnm(&encode_pgm(&g, 0.0, 255.0).unwrap()).unwrap());
            prop_assert_eq!(back, g);
        }

        #[test]
        fn luma_stays_in_byte_range(px in proptest::collection::vec(any::<u8>(), 3..=3)) {
            let img = Image::new(1, 1, Channels::Rgb, px).unwrap();
            let y = to_gray(&img).values()[0];
            prop_assert!((0.0..=255.0).contains(&y));
        }
    }
}
