//! Deterministic synthetic test imagery.
//!
//! Everything here is seeded and produces identical output on every run and
//! platform, which the determinism guarantees elsewhere in the crate rely on.
//! The generators are used heavily by the test suites and are exported so
//! downstream harnesses can build reproducible fixtures too.

use crate::evaluation::Homography;
use crate::image::GrayImage;

/// SplitMix64 generator. Small, fast, and stable across releases, unlike
/// external RNG crates whose stream definitions may change.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn next_below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Image of i.i.d. integer intensities in [0, levels).
pub fn random_integer_image(width: usize, height: usize, levels: u32, seed: u64) -> GrayImage {
    let mut rng = SplitMix64::new(seed);
    GrayImage::from_fn(width, height, |_, _| {
        (rng.next_u64() % levels as u64) as f64
    })
    .expect("valid dimensions")
}

/// Multi-octave value noise: random lattices bilinearly interpolated and
/// summed, then mapped into [16, 240]. Produces blob- and ridge-like
/// structure at several scales, which is what the detector and descriptor
/// need to find anything worth matching.
pub fn textured_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let cells = [48usize, 24, 12, 6, 3];
    let amps = [1.0f64, 0.55, 0.3, 0.15, 0.07];
    let mut layers = Vec::new();
    for (li, (&cell, &amp)) in cells.iter().zip(amps.iter()).enumerate() {
        let gw = width / cell + 3;
        let gh = height / cell + 3;
        let mut rng = SplitMix64::new(seed.wrapping_add(0x9e37 * (li as u64 + 1)));
        let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.next_f64()).collect();
        layers.push((cell, amp, gw, lattice));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut raw = vec![0.0f64; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut v = 0.0;
            for (cell, amp, gw, lattice) in &layers {
                let fx = x as f64 / *cell as f64;
                let fy = y as f64 / *cell as f64;
                let x0 = fx.floor() as usize;
                let y0 = fy.floor() as usize;
                let tx = fx - x0 as f64;
                let ty = fy - y0 as f64;
                // smoothstep keeps lattice cell borders from reading as edges
                let sx = tx * tx * (3.0 - 2.0 * tx);
                let sy = ty * ty * (3.0 - 2.0 * ty);
                let at = |gx: usize, gy: usize| lattice[gy * gw + gx];
                let top = at(x0, y0) * (1.0 - sx) + at(x0 + 1, y0) * sx;
                let bot = at(x0, y0 + 1) * (1.0 - sx) + at(x0 + 1, y0 + 1) * sx;
                v += amp * (top * (1.0 - sy) + bot * sy);
            }
            raw[y * width + x] = v;
            min = min.min(v);
            max = max.max(v);
        }
    }
    let span = if max > min { max - min } else { 1.0 };
    let pixels = raw
        .into_iter()
        .map(|v| 16.0 + 224.0 * (v - min) / span)
        .collect();
    GrayImage::new(width, height, pixels).expect("valid dimensions")
}

/// Like [`textured_image`] but quantized to integer intensities, so sums in
/// an integral image stay exact and constant offsets cancel bit-for-bit.
pub fn textured_integer_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let img = textured_image(width, height, seed);
    let pixels = img.pixels().iter().map(|&v| v.floor()).collect();
    GrayImage::new(width, height, pixels).expect("valid dimensions")
}

/// Value noise overlaid with randomly oriented soft-edged bars and disks.
/// The shapes contribute crisp multi-scale edges and corners with dominant
/// local orientations, closer to a photographed scene than bare noise.
pub fn structured_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let noise = textured_image(width, height, seed);
    let mut rng = SplitMix64::new(seed ^ 0xdead_beef_cafe_f00d);
    struct Bar {
        cx: f64,
        cy: f64,
        cos: f64,
        sin: f64,
        half_len: f64,
        half_wid: f64,
        delta: f64,
    }
    let count = (width * height / 4600).max(8);
    let bars: Vec<Bar> = (0..count)
        .map(|_| {
            let theta = rng.next_range(0.0, std::f64::consts::PI);
            Bar {
                cx: rng.next_range(0.0, width as f64),
                cy: rng.next_range(0.0, height as f64),
                cos: theta.cos(),
                sin: theta.sin(),
                half_len: rng.next_range(8.0, 42.0),
                half_wid: rng.next_range(3.0, 14.0),
                delta: rng.next_range(45.0, 95.0) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 },
            }
        })
        .collect();
    GrayImage::from_fn(width, height, |x, y| {
        let mut v = 0.55 * noise.get(x, y) + 0.45 * 128.0;
        for b in &bars {
            let dx = x as f64 - b.cx;
            let dy = y as f64 - b.cy;
            let u = (dx * b.cos + dy * b.sin).abs();
            let w = (-dx * b.sin + dy * b.cos).abs();
            // soft-edged rotated rectangle: one-pixel intensity ramp
            let cover =
                (b.half_len + 0.5 - u).clamp(0.0, 1.0) * (b.half_wid + 0.5 - w).clamp(0.0, 1.0);
            if cover > 0.0 {
                v += b.delta * cover;
            }
        }
        v.clamp(2.0, 253.0)
    })
    .expect("valid dimensions")
}

/// An isotropic Gaussian blob to place in a scene.
#[derive(Debug, Clone, Copy)]
pub struct Blob {
    pub cx: f64,
    pub cy: f64,
    pub sigma: f64,
    pub amplitude: f64,
}

/// Renders blobs on a flat background. The background is exactly constant so
/// detector responses away from the blobs are exactly zero.
pub fn blob_scene(width: usize, height: usize, background: f64, blobs: &[Blob]) -> GrayImage {
    GrayImage::from_fn(width, height, |x, y| {
        let mut v = background;
        for b in blobs {
            let dx = x as f64 - b.cx;
            let dy = y as f64 - b.cy;
            let d2 = dx * dx + dy * dy;
            // beyond 5 sigma the contribution is below any detector threshold
            if d2 < (5.0 * b.sigma) * (5.0 * b.sigma) {
                v += b.amplitude * (-d2 / (2.0 * b.sigma * b.sigma)).exp();
            }
        }
        v
    })
    .expect("valid dimensions")
}

/// Crops `src` starting at `(x0, y0)`.
pub fn crop(src: &GrayImage, x0: usize, y0: usize, width: usize, height: usize) -> GrayImage {
    assert!(x0 + width <= src.width() && y0 + height <= src.height());
    GrayImage::from_fn(width, height, |x, y| src.get(x0 + x, y0 + y)).expect("valid dimensions")
}

/// Samples a `width` x `height` view of `src` rotated by `angle` about the
/// view center, which sits at `(src_cx, src_cy)` in `src`. Returns the view
/// and the homography mapping view coordinates of the unrotated crop (same
/// center, axis aligned) to the rotated view.
///
/// Pairing this with [`crop`] around the same center yields two images of the
/// same underlying scene related by an exact rotation homography, with no
/// empty corners in either image (provided `src` is large enough).
pub fn rotated_view(
    src: &GrayImage,
    src_cx: f64,
    src_cy: f64,
    width: usize,
    height: usize,
    angle: f64,
) -> (GrayImage, Homography) {
    let (sin, cos) = angle.sin_cos();
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let view = GrayImage::from_fn(width, height, |x, y| {
        // inverse-rotate the output pixel into source coordinates
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let sx = src_cx + cos * dx + sin * dy;
        let sy = src_cy - sin * dx + cos * dy;
        src.sample_bilinear(sx, sy)
    })
    .expect("valid dimensions");
    // forward map: p' = R (p - c) + c
    let h = Homography::new([
        [cos, -sin, cx - cos * cx + sin * cy],
        [sin, cos, cy - sin * cx - cos * cy],
        [0.0, 0.0, 1.0],
    ])
    .expect("rotation is invertible");
    (view, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_is_deterministic() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn texture_spans_intensity_range() {
        let img = textured_image(96, 64, 7);
        let lo = img.pixels().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = img
            .pixels()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((lo - 16.0).abs() < 1e-9);
        assert!((hi - 240.0).abs() < 1e-9);
    }

    #[test]
    fn rotated_view_homography_maps_content() {
        let src = textured_image(300, 300, 3);
        let a = crop(&src, 75, 75, 150, 150);
        let (b, h) = rotated_view(&src, 149.5, 149.5, 150, 150, 0.3);
        // a point well inside image a should land on the same intensity in b
        for &(x, y) in &[(75.0, 75.0), (60.0, 90.0), (95.0, 70.0)] {
            let p = h.project(x, y).unwrap();
            let va = a.sample_bilinear(x, y);
            let vb = b.sample_bilinear(p.0, p.1);
            assert!(
                (va - vb).abs() < 6.0,
                "content mismatch at ({x},{y}): {va} vs {vb}"
            );
        }
    }
}
