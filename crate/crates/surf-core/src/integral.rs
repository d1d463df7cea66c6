//! Integral image construction, constant-time box sums, and the border
//! policies that decide what a box sum means once it leaves the image.

use crate::error::Error;
use crate::image::GrayImage;
use crate::Result;

/// How operators behave when their support crosses the image border.
///
/// `Discard` is a feature-level policy: features whose region intersects the
/// border are rejected before any operator runs. At the operator level it
/// falls back to `ZeroPixels` clipping so stray calls stay well defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderPolicy {
    /// Pixels outside the image read as zero.
    ZeroPixels,
    /// Any operator whose support crosses the border responds zero.
    ZeroResponse,
    /// The image is extended by replicating the nearest edge pixel.
    ClampEdge,
    /// The image is extended by mirroring without repeating the edge pixel.
    Reflect,
    /// Features intersecting the border are dropped (see above).
    Discard,
}

impl BorderPolicy {
    pub const ALL: [BorderPolicy; 5] = [
        BorderPolicy::ZeroPixels,
        BorderPolicy::ZeroResponse,
        BorderPolicy::ClampEdge,
        BorderPolicy::Reflect,
        BorderPolicy::Discard,
    ];
}

/// Inclusive pixel rectangle. Coordinates may extend outside the image; only
/// the ordering of the corners is validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
}

impl Rect {
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Result<Self> {
        if x1 > x2 || y1 > y2 {
            return Err(Error::InvalidRectangle { x1, y1, x2, y2 });
        }
        Ok(Self { x1, y1, x2, y2 })
    }
}

/// Box sum under a border policy, plus whether the box actually crossed the
/// border. Callers implementing the zero-response policy zero their whole
/// operator when any constituent box reports `crossed_border`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClippedSum {
    pub sum: f64,
    pub crossed_border: bool,
}

/// Cumulative-sum transform of a [`GrayImage`]: entry (x, y) holds the sum of
/// all source pixels with coordinates <= (x, y). Immutable after
/// construction; every operation is a pure read.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl IntegralImage {
    /// Builds the integral image in a single pass.
    pub fn build(image: &GrayImage) -> IntegralImage {
        let w = image.width();
        let h = image.height();
        let mut values = vec![0.0f64; w * h];
        for y in 0..h {
            let mut row_sum = 0.0;
            for x in 0..w {
                row_sum += image.get(x, y);
                let above = if y > 0 { values[(y - 1) * w + x] } else { 0.0 };
                values[y * w + x] = row_sum + above;
            }
        }
        IntegralImage {
            width: w,
            height: h,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Cumulative sum at (x, y), with the usual convention that index -1
    /// contributes zero.
    #[inline]
    pub fn at(&self, x: i64, y: i64) -> f64 {
        debug_assert!(x >= -1 && y >= -1 && x < self.width as i64 && y < self.height as i64);
        if x < 0 || y < 0 {
            0.0
        } else {
            self.values[y as usize * self.width + x as usize]
        }
    }

    /// Sum of source pixels in the inclusive rectangle. The rectangle must
    /// lie inside the image; out-of-image boxes are [`clipped_rect_sum`]'s
    /// business.
    ///
    /// [`clipped_rect_sum`]: IntegralImage::clipped_rect_sum
    pub fn rect_sum(&self, x1: i64, y1: i64, x2: i64, y2: i64) -> Result<f64> {
        if x1 > x2
            || y1 > y2
            || x1 < 0
            || y1 < 0
            || x2 >= self.width as i64
            || y2 >= self.height as i64
        {
            return Err(Error::InvalidRectangle { x1, y1, x2, y2 });
        }
        Ok(self.rect_sum_unchecked(x1, y1, x2, y2))
    }

    /// Four lookups, three additions/subtractions. Caller guarantees the
    /// rectangle is inside the image.
    #[inline]
    pub fn rect_sum_unchecked(&self, x1: i64, y1: i64, x2: i64, y2: i64) -> f64 {
        self.at(x2, y2) - self.at(x2, y1 - 1) - self.at(x1 - 1, y2) + self.at(x1 - 1, y1 - 1)
    }

    /// True when the rectangle is fully inside the image.
    #[inline]
    pub fn contains_rect(&self, rect: Rect) -> bool {
        rect.x1 >= 0 && rect.y1 >= 0 && rect.x2 < self.width as i64 && rect.y2 < self.height as i64
    }

    /// Box sum for a rectangle that may extend outside the image, resolved
    /// under `policy`. See [`ClippedSum`] for the zero-response contract.
    pub fn clipped_rect_sum(&self, rect: Rect, policy: BorderPolicy) -> ClippedSum {
        if self.contains_rect(rect) {
            return ClippedSum {
                sum: self.rect_sum_unchecked(rect.x1, rect.y1, rect.x2, rect.y2),
                crossed_border: false,
            };
        }
        let xs = axis_spans(rect.x1, rect.x2, self.width as i64, policy);
        let ys = axis_spans(rect.y1, rect.y2, self.height as i64, policy);
        let mut sum = 0.0;
        for &(xl, xh, xm) in &xs {
            for &(yl, yh, ym) in &ys {
                sum += (xm * ym) as f64 * self.rect_sum_unchecked(xl, yl, xh, yh);
            }
        }
        ClippedSum {
            sum,
            crossed_border: true,
        }
    }
}

/// Decomposes a (possibly out-of-range) inclusive coordinate span into
/// in-range spans with multiplicities, according to the border policy's
/// virtual extension along one axis. The clipped 2D sum is then the product
/// combination of the two axes' spans.
fn axis_spans(lo: i64, hi: i64, size: i64, policy: BorderPolicy) -> Vec<(i64, i64, i64)> {
    let mut spans = Vec::with_capacity(3);
    match policy {
        BorderPolicy::ZeroPixels | BorderPolicy::ZeroResponse | BorderPolicy::Discard => {
            let l = lo.max(0);
            let h = hi.min(size - 1);
            if l <= h {
                spans.push((l, h, 1));
            }
        }
        BorderPolicy::ClampEdge => {
            let below = (hi.min(-1) - lo + 1).max(0);
            if below > 0 {
                spans.push((0, 0, below));
            }
            let l = lo.max(0);
            let h = hi.min(size - 1);
            if l <= h {
                spans.push((l, h, 1));
            }
            let above = (hi - lo.max(size) + 1).max(0);
            if above > 0 {
                spans.push((size - 1, size - 1, above));
            }
        }
        BorderPolicy::Reflect => {
            if size == 1 {
                // degenerate reflection: everything maps to the only pixel
                spans.push((0, 0, hi - lo + 1));
                return spans;
            }
            // reflect-101: virtual coordinate v maps into [0, size-1] with
            // period 2(size-1); walk the span in monotone half-period chunks
            let half = size - 1;
            let mut v = lo;
            while v <= hi {
                let k = v.div_euclid(half);
                let chunk_end = ((k + 1) * half).min(hi);
                let (a, b) = if k.rem_euclid(2) == 0 {
                    (v - k * half, chunk_end - k * half)
                } else {
                    ((k + 1) * half - chunk_end, (k + 1) * half - v)
                };
                spans.push((a, b, 1));
                v = chunk_end + 1;
            }
        }
    }
    spans
}
