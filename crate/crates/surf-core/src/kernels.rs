//! Box-filter approximations of second derivatives (fast Hessian) and the
//! two first-derivative operators: the classic Haar-like two-lobe kernel and
//! the centered symmetric alternative.
//!
//! Every filter carries two evaluation paths with identical arithmetic: an
//! `interior` path with no bounds handling and a `bordered` path that
//! resolves out-of-image boxes through a [`BorderPolicy`]. Callers that split
//! their loops into interior and border passes get bit-identical results to a
//! naive bounds-checked loop because both paths share the same box sums and
//! the same combination order.

use crate::integral::{BorderPolicy, ClippedSum, IntegralImage, Rect};

/// First-derivative kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// Two side-by-side lobes of total width 4·rnd(s); has no center pixel,
    /// so the response is biased toward one side of the sample point.
    HaarLike,
    /// Lobes of width h either side of a zero center column, total width
    /// 2h+1, symmetric about the sample point.
    Symmetric,
}

/// First-derivative operator selection: family plus the radius `r` the
/// symmetric kernel's width w = rnd(2·r·s)+1 is derived from. `r = 1` is the
/// recommended value for descriptor sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeKernel {
    pub family: KernelFamily,
    pub radius_at_unit_scale: f64,
}

impl Default for DerivativeKernel {
    fn default() -> Self {
        Self {
            family: KernelFamily::Symmetric,
            radius_at_unit_scale: 1.0,
        }
    }
}

impl DerivativeKernel {
    pub fn haar() -> Self {
        Self {
            family: KernelFamily::HaarLike,
            radius_at_unit_scale: 1.0,
        }
    }

    pub fn symmetric(radius_at_unit_scale: f64) -> Self {
        Self {
            family: KernelFamily::Symmetric,
            radius_at_unit_scale,
        }
    }
}

/// Lobe half-width of the symmetric kernel at `scale`: the kernel width
/// follows rnd(2·r·s)+1, lowered to the nearest odd width so a center pixel
/// always exists.
pub fn symmetric_half_width(radius_at_unit_scale: f64, scale: f64) -> i64 {
    (((2.0 * radius_at_unit_scale * scale).round() as i64) / 2).max(1)
}

/// Gradient operator instantiated at a fixed scale.
#[derive(Debug, Clone, Copy)]
pub struct GradientFilter {
    family: KernelFamily,
    /// Symmetric: lobe half-width. Haar-like: rnd(scale).
    half: i64,
    inv_lobe_area: f64,
}

impl GradientFilter {
    pub fn new(kernel: &DerivativeKernel, scale: f64) -> GradientFilter {
        assert!(scale > 0.0, "gradient scale must be positive");
        match kernel.family {
            KernelFamily::Symmetric => {
                let h = symmetric_half_width(kernel.radius_at_unit_scale, scale);
                GradientFilter {
                    family: KernelFamily::Symmetric,
                    half: h,
                    inv_lobe_area: 1.0 / (h * (2 * h + 1)) as f64,
                }
            }
            KernelFamily::HaarLike => {
                let rs = (scale.round() as i64).max(1);
                GradientFilter {
                    family: KernelFamily::HaarLike,
                    half: rs,
                    inv_lobe_area: 1.0 / (8 * rs * rs) as f64,
                }
            }
        }
    }

    /// Largest pixel offset from the sample point the support can reach.
    pub fn reach(&self) -> i64 {
        match self.family {
            KernelFamily::Symmetric => self.half,
            KernelFamily::HaarLike => 2 * self.half,
        }
    }

    /// Support boxes for dx: (negative lobe, positive lobe).
    fn dx_boxes(&self, x: i64, y: i64) -> (Rect, Rect) {
        match self.family {
            KernelFamily::Symmetric => {
                let h = self.half;
                (
                    Rect {
                        x1: x - h,
                        y1: y - h,
                        x2: x - 1,
                        y2: y + h,
                    },
                    Rect {
                        x1: x + 1,
                        y1: y - h,
                        x2: x + h,
                        y2: y + h,
                    },
                )
            }
            KernelFamily::HaarLike => {
                let s = self.half;
                (
                    Rect {
                        x1: x - 2 * s,
                        y1: y - 2 * s,
                        x2: x - 1,
                        y2: y + 2 * s - 1,
                    },
                    Rect {
                        x1: x,
                        y1: y - 2 * s,
                        x2: x + 2 * s - 1,
                        y2: y + 2 * s - 1,
                    },
                )
            }
        }
    }

    /// Support boxes for dy: (negative lobe, positive lobe). y grows
    /// downward, so positive dy means intensity increasing down the image.
    fn dy_boxes(&self, x: i64, y: i64) -> (Rect, Rect) {
        match self.family {
            KernelFamily::Symmetric => {
                let h = self.half;
                (
                    Rect {
                        x1: x - h,
                        y1: y - h,
                        x2: x + h,
                        y2: y - 1,
                    },
                    Rect {
                        x1: x - h,
                        y1: y + 1,
                        x2: x + h,
                        y2: y + h,
                    },
                )
            }
            KernelFamily::HaarLike => {
                let s = self.half;
                (
                    Rect {
                        x1: x - 2 * s,
                        y1: y - 2 * s,
                        x2: x + 2 * s - 1,
                        y2: y - 1,
                    },
                    Rect {
                        x1: x - 2 * s,
                        y1: y,
                        x2: x + 2 * s - 1,
                        y2: y + 2 * s - 1,
                    },
                )
            }
        }
    }

    /// True when the whole support lies inside the image.
    pub fn fits(&self, ii: &IntegralImage, x: i64, y: i64) -> bool {
        let (w, h) = (ii.width() as i64, ii.height() as i64);
        match self.family {
            KernelFamily::Symmetric => {
                x - self.half >= 0 && x + self.half < w && y - self.half >= 0 && y + self.half < h
            }
            KernelFamily::HaarLike => {
                let s = self.half;
                x - 2 * s >= 0 && x + 2 * s - 1 < w && y - 2 * s >= 0 && y + 2 * s - 1 < h
            }
        }
    }

    /// Gradient with no bounds handling; caller guarantees [`fits`].
    ///
    /// [`fits`]: GradientFilter::fits
    pub fn interior(&self, ii: &IntegralImage, x: i64, y: i64) -> (f64, f64) {
        let (nx, px) = self.dx_boxes(x, y);
        let (ny, py) = self.dy_boxes(x, y);
        let dx = (ii.rect_sum_unchecked(px.x1, px.y1, px.x2, px.y2)
            - ii.rect_sum_unchecked(nx.x1, nx.y1, nx.x2, nx.y2))
            * self.inv_lobe_area;
        let dy = (ii.rect_sum_unchecked(py.x1, py.y1, py.x2, py.y2)
            - ii.rect_sum_unchecked(ny.x1, ny.y1, ny.x2, ny.y2))
            * self.inv_lobe_area;
        (dx, dy)
    }

    /// Gradient with border handling. Under `ZeroResponse` the whole operator
    /// reads (0, 0) as soon as any lobe crosses the border.
    pub fn bordered(&self, ii: &IntegralImage, x: i64, y: i64, policy: BorderPolicy) -> (f64, f64) {
        let (nx, px) = self.dx_boxes(x, y);
        let (ny, py) = self.dy_boxes(x, y);
        let sums: [ClippedSum; 4] = [
            ii.clipped_rect_sum(px, policy),
            ii.clipped_rect_sum(nx, policy),
            ii.clipped_rect_sum(py, policy),
            ii.clipped_rect_sum(ny, policy),
        ];
        if policy == BorderPolicy::ZeroResponse && sums.iter().any(|s| s.crossed_border) {
            return (0.0, 0.0);
        }
        let dx = (sums[0].sum - sums[1].sum) * self.inv_lobe_area;
        let dy = (sums[2].sum - sums[3].sum) * self.inv_lobe_area;
        (dx, dy)
    }

    /// Bounds-checked evaluation: interior fast path when the support fits,
    /// border path otherwise.
    pub fn apply(&self, ii: &IntegralImage, x: i64, y: i64, policy: BorderPolicy) -> (f64, f64) {
        if self.fits(ii, x, y) {
            self.interior(ii, x, y)
        } else {
            self.bordered(ii, x, y, policy)
        }
    }
}

/// Scale-adjusted image gradient at a single pixel.
pub fn gradient(
    ii: &IntegralImage,
    x: i64,
    y: i64,
    scale: f64,
    kernel: &DerivativeKernel,
    policy: BorderPolicy,
) -> (f64, f64) {
    GradientFilter::new(kernel, scale).apply(ii, x, y, policy)
}

/// det(H) combination of the three normalized second-derivative responses.
#[inline]
pub fn hessian_determinant(dxx: f64, dyy: f64, dxy: f64, weight: f64) -> f64 {
    dxx * dyy - (weight * dxy) * (weight * dxy)
}

/// Fast-Hessian box filter of a fixed size (9, 15, 21, ...).
#[derive(Debug, Clone, Copy)]
pub struct HessianFilter {
    size: i64,
    lobe: i64,
    border: i64,
    inv_area: f64,
    weight: f64,
}

impl HessianFilter {
    pub fn new(filter_size: usize, weight: f64) -> HessianFilter {
        assert!(
            filter_size >= 9 && filter_size % 6 == 3,
            "fast-Hessian filter sizes are 9, 15, 21, ... (got {filter_size})"
        );
        let size = filter_size as i64;
        HessianFilter {
            size,
            lobe: size / 3,
            border: (size - 1) / 2,
            inv_area: 1.0 / (size * size) as f64,
            weight,
        }
    }

    pub fn size(&self) -> usize {
        self.size as usize
    }

    /// Margin a pixel must keep from the image edge for the interior path.
    pub fn reach(&self) -> i64 {
        self.border
    }

    pub fn fits(&self, ii: &IntegralImage, x: i64, y: i64) -> bool {
        let b = self.border;
        x - b >= 0 && x + b < ii.width() as i64 && y - b >= 0 && y + b < ii.height() as i64
    }

    /// The support boxes: Dxx outer/inner, Dyy outer/inner, four Dxy quads.
    fn boxes(&self, x: i64, y: i64) -> [Rect; 8] {
        let (l, b) = (self.lobe, self.border);
        let hl = l / 2;
        [
            // Dxx outer and (triple-weighted negative) inner
            Rect {
                x1: x - b,
                y1: y - l + 1,
                x2: x + b,
                y2: y + l - 1,
            },
            Rect {
                x1: x - hl,
                y1: y - l + 1,
                x2: x + hl,
                y2: y + l - 1,
            },
            // Dyy outer and inner
            Rect {
                x1: x - l + 1,
                y1: y - b,
                x2: x + l - 1,
                y2: y + b,
            },
            Rect {
                x1: x - l + 1,
                y1: y - hl,
                x2: x + l - 1,
                y2: y + hl,
            },
            // Dxy quadrants: +top-right, +bottom-left, -top-left, -bottom-right
            Rect {
                x1: x + 1,
                y1: y - l,
                x2: x + l,
                y2: y - 1,
            },
            Rect {
                x1: x - l,
                y1: y + 1,
                x2: x - 1,
                y2: y + l,
            },
            Rect {
                x1: x - l,
                y1: y - l,
                x2: x - 1,
                y2: y - 1,
            },
            Rect {
                x1: x + 1,
                y1: y + 1,
                x2: x + l,
                y2: y + l,
            },
        ]
    }

    #[inline]
    fn combine(&self, s: [f64; 8]) -> (f64, f64, f64) {
        let dxx = (s[0] - 3.0 * s[1]) * self.inv_area;
        let dyy = (s[2] - 3.0 * s[3]) * self.inv_area;
        let dxy = (s[4] + s[5] - s[6] - s[7]) * self.inv_area;
        (dxx, dyy, dxy)
    }

    fn interior_derivatives(&self, ii: &IntegralImage, x: i64, y: i64) -> (f64, f64, f64) {
        let b = self.boxes(x, y);
        let mut s = [0.0f64; 8];
        for (i, r) in b.iter().enumerate() {
            s[i] = ii.rect_sum_unchecked(r.x1, r.y1, r.x2, r.y2);
        }
        self.combine(s)
    }

    /// Some(derivatives), or None when the zero-response policy zeroes the
    /// whole operator.
    fn bordered_derivatives(
        &self,
        ii: &IntegralImage,
        x: i64,
        y: i64,
        policy: BorderPolicy,
    ) -> Option<(f64, f64, f64)> {
        let b = self.boxes(x, y);
        let mut s = [0.0f64; 8];
        let mut crossed = false;
        for (i, r) in b.iter().enumerate() {
            let c = ii.clipped_rect_sum(*r, policy);
            s[i] = c.sum;
            crossed |= c.crossed_border;
        }
        if policy == BorderPolicy::ZeroResponse && crossed {
            return None;
        }
        Some(self.combine(s))
    }

    /// det(H) response with no bounds handling; caller guarantees `fits`.
    pub fn response_interior(&self, ii: &IntegralImage, x: i64, y: i64) -> f64 {
        let (dxx, dyy, dxy) = self.interior_derivatives(ii, x, y);
        hessian_determinant(dxx, dyy, dxy, self.weight)
    }

    /// det(H) response with border handling.
    pub fn response_bordered(
        &self,
        ii: &IntegralImage,
        x: i64,
        y: i64,
        policy: BorderPolicy,
    ) -> f64 {
        match self.bordered_derivatives(ii, x, y, policy) {
            Some((dxx, dyy, dxy)) => hessian_determinant(dxx, dyy, dxy, self.weight),
            None => 0.0,
        }
    }

    /// Bounds-checked det(H) response.
    pub fn response(&self, ii: &IntegralImage, x: i64, y: i64, policy: BorderPolicy) -> f64 {
        if self.fits(ii, x, y) {
            self.response_interior(ii, x, y)
        } else {
            self.response_bordered(ii, x, y, policy)
        }
    }

    /// Sign of the Laplacian (Dxx + Dyy): +1 for dark blobs on light
    /// background, -1 for light blobs, 0 for a flat trace.
    pub fn trace_sign(&self, ii: &IntegralImage, x: i64, y: i64, policy: BorderPolicy) -> i8 {
        let d = if self.fits(ii, x, y) {
            Some(self.interior_derivatives(ii, x, y))
        } else {
            self.bordered_derivatives(ii, x, y, policy)
        };
        match d {
            Some((dxx, dyy, _)) => {
                let t = dxx + dyy;
                if t > 0.0 {
                    1
                } else if t < 0.0 {
                    -1
                } else {
                    0
                }
            }
            None => 0,
        }
    }
}

/// det(H) of the box-filter Hessian at one pixel.
pub fn hessian_response(
    ii: &IntegralImage,
    x: i64,
    y: i64,
    filter_size: usize,
    weight: f64,
    policy: BorderPolicy,
) -> f64 {
    HessianFilter::new(filter_size, weight).response(ii, x, y, policy)
}

/// Laplacian sign at one pixel, computed on demand -- never from a
/// precomputed per-pixel map.
pub fn laplacian_sign(
    ii: &IntegralImage,
    x: i64,
    y: i64,
    filter_size: usize,
    policy: BorderPolicy,
) -> i8 {
    HessianFilter::new(filter_size, 0.9).trace_sign(ii, x, y, policy)
}
