use crate::image::GrayImage;

const RADIUS: isize = 2;
const TAPS: usize = 25;

/// 5×5 median with edge-replicate padding. The median of the 25 taps is the
/// 13th order statistic.
pub fn median_filter_5x5(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let src = img.values();
    let mut out = Vec::with_capacity(w * h);
    let mut window = [0.0f64; TAPS];
    let clamp = |v: isize, len: usize| v.clamp(0, len as isize - 1) as usize;
    for row in 0..h {
        for col in 0..w {
            let mut k = 0;
            for dr in -RADIUS..=RADIUS {
                let r = clamp(row as isize + dr, h);
                let line = &src[r * w..(r + 1) * w];
                for dc in -RADIUS..=RADIUS {
                    window[k] = line[clamp(col as isize + dc, w)];
                    k += 1;
                }
            }
            let (_, median, _) = window.select_nth_unstable_by(TAPS / 2, f64::total_cmp);
            out.push(*median);
        }
    }
    GrayImage::new(w, h, out).expect("shape preserved")
}
