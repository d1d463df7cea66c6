//! Orientation estimation and the 64-element SURF descriptor, with the
//! interpolation and weighting choices that differ between published
//! implementations exposed as strategies.
//!
//! Angles are measured from the +x axis with y growing downward, in
//! (-pi, pi]. Sample coordinates are discretized by adding 0.5 and casting,
//! which equals rounding for the non-negative coordinates that matter.

use crate::config::VariantConfig;
use crate::detector::InterestPoint;
use crate::error::Error;
use crate::integral::{BorderPolicy, IntegralImage};
use crate::kernels::{DerivativeKernel, GradientFilter};
use crate::Result;

/// Orientation estimation strategy selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrientationVariant {
    /// Classic pi/3 sliding window over binned gradient vectors.
    SlidingWindow,
    /// Single weighted gradient sum; faster, slightly less stable.
    AverageGradient,
}

/// Orientation estimation parameters. The window span of the sliding-window
/// variant is always exactly pi/3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationStrategy {
    pub variant: OrientationVariant,
    /// Sampling disk radius in units of the feature scale.
    pub sample_radius_scales: f64,
    /// Gaussian weighting sigma in units of the feature scale.
    pub gaussian_sigma_scales: f64,
}

impl Default for OrientationStrategy {
    fn default() -> Self {
        Self {
            variant: OrientationVariant::SlidingWindow,
            sample_radius_scales: 6.0,
            gaussian_sigma_scales: 2.5,
        }
    }
}

/// Descriptor interpolation strategy selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescriptorVariant {
    /// Each sample contributes to exactly the subregion containing it.
    NearestNeighbor,
    /// Subregions padded by 2s so they overlap; per-subregion Gaussian
    /// weighting; total region grows to 24s.
    OverlappingSubregions,
    /// Pixel-dense sampling with bilinear spreading across subregions.
    Bilinear,
}

/// Descriptor parameters. The grid is always 4x4 subregions of 5s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorStrategy {
    pub variant: DescriptorVariant,
    /// Sigma of the Gaussian centered on the feature (nearest/bilinear).
    pub global_sigma_scales: f64,
    /// Sigma of the per-subregion Gaussian (overlapping subregions).
    pub subregion_sigma_scales: f64,
}

impl Default for DescriptorStrategy {
    fn default() -> Self {
        Self {
            variant: DescriptorVariant::NearestNeighbor,
            global_sigma_scales: 3.3,
            subregion_sigma_scales: 2.5,
        }
    }
}

impl DescriptorStrategy {
    /// Side length of the sampled square region in units of scale: 20 for
    /// nearest/bilinear, 24 for overlapping subregions.
    pub fn region_width_scales(&self) -> f64 {
        match self.variant {
            DescriptorVariant::OverlappingSubregions => 24.0,
            _ => 20.0,
        }
    }
}

/// SURF-64 descriptor: per subregion (row-major 4x4 grid) the four values
/// (sum du, sum dv, sum |du|, sum |dv|) in the feature frame, normalized to
/// unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor64 {
    pub values: [f64; 64],
    /// Orientation the descriptor was extracted at, radians in (-pi, pi].
    pub orientation: f64,
}

impl Descriptor64 {
    pub fn distance(&self, other: &Descriptor64) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Orientation estimate; `degenerate` marks a region with no gradient
/// energy, where the angle defaults to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationEstimate {
    pub angle: f64,
    pub degenerate: bool,
}

/// Add 0.5 then cast: the fast rounding used for all sample coordinates.
#[inline]
fn discretize(v: f64) -> i64 {
    (v + 0.5) as i64
}

/// Angular step between candidate window starts in the sliding-window
/// search. Coarser steps provably pick the wrong window when two windows'
/// gradient sums nearly tie, so the search runs at fine granularity over a
/// sorted-angle prefix structure instead of a coarse histogram.
pub const SLIDING_WINDOW_STEP_RAD: f64 = 0.01;

/// Weighted gradient samples on the integer lattice scaled by `s` within the
/// orientation sampling disk.
fn orientation_samples(
    ii: &IntegralImage,
    p: &InterestPoint,
    cfg: &OrientationStrategy,
    kernel: &DerivativeKernel,
    policy: BorderPolicy,
) -> Vec<(f64, f64)> {
    let radius = cfg.sample_radius_scales;
    let r = radius.floor() as i64;
    let sigma2 = 2.0 * cfg.gaussian_sigma_scales * cfg.gaussian_sigma_scales;
    let filter = GradientFilter::new(kernel, p.scale);
    let mut out = Vec::new();
    for j in -r..=r {
        for i in -r..=r {
            let d2 = (i * i + j * j) as f64;
            if d2 > radius * radius {
                continue;
            }
            let x = discretize(p.x + i as f64 * p.scale);
            let y = discretize(p.y + j as f64 * p.scale);
            let (dx, dy) = filter.apply(ii, x, y, policy);
            if dx == 0.0 && dy == 0.0 {
                continue;
            }
            let w = (-d2 / sigma2).exp();
            out.push((w * dx, w * dy));
        }
    }
    out
}

/// Orientation from the pi/3 window with the largest summed gradient.
pub fn estimate_orientation_sliding(
    ii: &IntegralImage,
    p: &InterestPoint,
    cfg: &OrientationStrategy,
    kernel: &DerivativeKernel,
    policy: BorderPolicy,
) -> OrientationEstimate {
    use std::f64::consts::PI;
    let mut samples: Vec<(f64, f64, f64)> = orientation_samples(ii, p, cfg, kernel, policy)
        .into_iter()
        .map(|(wx, wy)| (wy.atan2(wx), wx, wy))
        .collect();
    if samples.is_empty() {
        return OrientationEstimate {
            angle: 0.0,
            degenerate: true,
        };
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = samples.len();
    let mut px = vec![0.0f64; n + 1];
    let mut py = vec![0.0f64; n + 1];
    for (k, &(_, wx, wy)) in samples.iter().enumerate() {
        px[k + 1] = px[k] + wx;
        py[k + 1] = py[k] + wy;
    }
    // window [lo, lo + pi/3) over angles in (-pi, pi], wrapping past +pi
    let lower_bound = |v: f64| samples.partition_point(|s| s.0 < v);
    let steps = (2.0 * PI / SLIDING_WINDOW_STEP_RAD) as usize;
    let mut best = (0.0f64, 0.0f64, -1.0f64);
    for k in 0..steps {
        let lo = -PI + k as f64 * SLIDING_WINDOW_STEP_RAD;
        let hi = lo + PI / 3.0;
        let (mut sx, mut sy) = (0.0, 0.0);
        let i = lower_bound(lo);
        if hi <= PI {
            let j = lower_bound(hi);
            sx += px[j] - px[i];
            sy += py[j] - py[i];
        } else {
            sx += px[n] - px[i];
            sy += py[n] - py[i];
            let j = lower_bound(hi - 2.0 * PI);
            sx += px[j];
            sy += py[j];
        }
        let m = sx * sx + sy * sy;
        if m > best.2 {
            best = (sx, sy, m);
        }
    }
    if best.2 <= 0.0 {
        return OrientationEstimate {
            angle: 0.0,
            degenerate: true,
        };
    }
    OrientationEstimate {
        angle: best.1.atan2(best.0),
        degenerate: false,
    }
}

/// Orientation from a single Gaussian-weighted gradient sum over the disk.
pub fn estimate_orientation_average(
    ii: &IntegralImage,
    p: &InterestPoint,
    cfg: &OrientationStrategy,
    kernel: &DerivativeKernel,
    policy: BorderPolicy,
) -> OrientationEstimate {
    let samples = orientation_samples(ii, p, cfg, kernel, policy);
    let (sx, sy) = samples
        .iter()
        .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x, ay + y));
    if sx == 0.0 && sy == 0.0 {
        return OrientationEstimate {
            angle: 0.0,
            degenerate: true,
        };
    }
    OrientationEstimate {
        angle: sy.atan2(sx),
        degenerate: false,
    }
}

/// Runs the configured orientation strategy.
pub fn estimate_orientation(
    ii: &IntegralImage,
    p: &InterestPoint,
    cfg: &OrientationStrategy,
    kernel: &DerivativeKernel,
    policy: BorderPolicy,
) -> OrientationEstimate {
    match cfg.variant {
        OrientationVariant::SlidingWindow => {
            estimate_orientation_sliding(ii, p, cfg, kernel, policy)
        }
        OrientationVariant::AverageGradient => {
            estimate_orientation_average(ii, p, cfg, kernel, policy)
        }
    }
}

/// Half-extent in pixels of the rotated descriptor region's bounding box.
fn region_bbox_half(p: &InterestPoint, angle: f64, strat: &DescriptorStrategy) -> f64 {
    let half = 0.5 * strat.region_width_scales() * p.scale;
    let (sin, cos) = angle.sin_cos();
    half * (sin.abs() + cos.abs())
}

/// True when the (rotated) descriptor region pokes outside the image. This
/// is the region the discard border policy rejects features by.
pub fn region_crosses_border(
    ii: &IntegralImage,
    p: &InterestPoint,
    angle: f64,
    strat: &DescriptorStrategy,
) -> bool {
    let h = region_bbox_half(p, angle, strat);
    p.x - h < 0.0
        || p.y - h < 0.0
        || p.x + h > (ii.width() - 1) as f64
        || p.y + h > (ii.height() - 1) as f64
}

/// One gradient sample in the rotated frame: (du, dv) plus the unrotated
/// region coordinates it was taken at.
struct FrameSampler<'a> {
    ii: &'a IntegralImage,
    filter: GradientFilter,
    px: f64,
    py: f64,
    sin: f64,
    cos: f64,
    policy: BorderPolicy,
    /// When set, every sample is known to fit inside the image and the
    /// bounds-free interior path is used (the optimized half of the
    /// interior/border loop split).
    all_interior: bool,
}

impl<'a> FrameSampler<'a> {
    fn new(
        ii: &'a IntegralImage,
        p: &InterestPoint,
        angle: f64,
        strat: &DescriptorStrategy,
        kernel: &DerivativeKernel,
        policy: BorderPolicy,
        force_checked: bool,
    ) -> Self {
        let filter = GradientFilter::new(kernel, p.scale);
        let (sin, cos) = angle.sin_cos();
        // sample pixels stay within bbox + rounding slack + kernel reach
        let margin = region_bbox_half(p, angle, strat) + 0.5 + filter.reach() as f64;
        let all_interior = !force_checked
            && p.x - margin >= 0.0
            && p.y - margin >= 0.0
            && p.x + margin <= (ii.width() - 1) as f64
            && p.y + margin <= (ii.height() - 1) as f64;
        Self {
            ii,
            filter,
            px: p.x,
            py: p.y,
            sin,
            cos,
            policy,
            all_interior,
        }
    }

    /// Gradient in the feature frame at region coordinates (u, v) in pixels.
    #[inline]
    fn sample(&self, u: f64, v: f64) -> (f64, f64) {
        let x = discretize(self.px + u * self.cos - v * self.sin);
        let y = discretize(self.py + u * self.sin + v * self.cos);
        let (dx, dy) = if self.all_interior {
            self.filter.interior(self.ii, x, y)
        } else {
            self.filter.apply(self.ii, x, y, self.policy)
        };
        (
            dx * self.cos + dy * self.sin,
            -dx * self.sin + dy * self.cos,
        )
    }
}

#[inline]
fn accumulate(acc: &mut [f64; 64], sub: usize, w: f64, du: f64, dv: f64) {
    let base = sub * 4;
    acc[base] += w * du;
    acc[base + 1] += w * dv;
    acc[base + 2] += w * du.abs();
    acc[base + 3] += w * dv.abs();
}

fn describe_impl(
    ii: &IntegralImage,
    p: &InterestPoint,
    angle: f64,
    strat: &DescriptorStrategy,
    policy: BorderPolicy,
    kernel: &DerivativeKernel,
    force_checked: bool,
) -> Result<Descriptor64> {
    assert!(p.scale > 0.0, "descriptor scale must be positive");
    let s = p.scale;
    let sampler = FrameSampler::new(ii, p, angle, strat, kernel, policy, force_checked);
    let mut acc = [0.0f64; 64];

    match strat.variant {
        DescriptorVariant::NearestNeighbor => {
            let sigma2 = 2.0 * (strat.global_sigma_scales * s).powi(2);
            for iv in 0..20usize {
                let v = (iv as f64 - 9.5) * s;
                for iu in 0..20usize {
                    let u = (iu as f64 - 9.5) * s;
                    let (du, dv) = sampler.sample(u, v);
                    let w = (-(u * u + v * v) / sigma2).exp();
                    let sub = (iv / 5) * 4 + iu / 5;
                    accumulate(&mut acc, sub, w, du, dv);
                }
            }
        }
        DescriptorVariant::OverlappingSubregions => {
            let sigma2 = 2.0 * strat.subregion_sigma_scales * strat.subregion_sigma_scales;
            // subregion g spans lattice indices 5g ..= 5g+8 (9 samples, the
            // central 5 plus a 2-sample pad shared with its neighbor)
            let sub_range = |i: usize| -> (usize, usize) {
                let lo = if i >= 9 { (i - 8).div_ceil(5) } else { 0 };
                let hi = (i / 5).min(3);
                (lo, hi)
            };
            for iv in 0..24usize {
                let v = (iv as f64 - 11.5) * s;
                let (gv_lo, gv_hi) = sub_range(iv);
                for iu in 0..24usize {
                    let u = (iu as f64 - 11.5) * s;
                    let (du, dv) = sampler.sample(u, v);
                    let (gu_lo, gu_hi) = sub_range(iu);
                    for gv in gv_lo..=gv_hi {
                        let ov = iv as f64 - (5 * gv + 4) as f64;
                        for gu in gu_lo..=gu_hi {
                            let ou = iu as f64 - (5 * gu + 4) as f64;
                            let w = (-(ou * ou + ov * ov) / sigma2).exp();
                            accumulate(&mut acc, gv * 4 + gu, w, du, dv);
                        }
                    }
                }
            }
        }
        DescriptorVariant::Bilinear => {
            // one sample per pixel across the 20s region
            let n = (20.0 * s).ceil() as usize;
            let sigma2 = 2.0 * (strat.global_sigma_scales * s).powi(2);
            for kv in 0..n {
                let v = ((kv as f64 + 0.5) / n as f64 - 0.5) * 20.0 * s;
                let gv = (v / s + 10.0) / 5.0 - 0.5;
                let gv0 = gv.floor();
                let fv = gv - gv0;
                for ku in 0..n {
                    let u = ((ku as f64 + 0.5) / n as f64 - 0.5) * 20.0 * s;
                    let (du, dv) = sampler.sample(u, v);
                    let w = (-(u * u + v * v) / sigma2).exp();
                    let gu = (u / s + 10.0) / 5.0 - 0.5;
                    let gu0 = gu.floor();
                    let fu = gu - gu0;
                    for (vi, vw) in [(gv0 as i64, 1.0 - fv), (gv0 as i64 + 1, fv)] {
                        if !(0..4).contains(&vi) || vw == 0.0 {
                            continue;
                        }
                        for (ui, uw) in [(gu0 as i64, 1.0 - fu), (gu0 as i64 + 1, fu)] {
                            if !(0..4).contains(&ui) || uw == 0.0 {
                                continue;
                            }
                            accumulate(&mut acc, (vi * 4 + ui) as usize, w * uw * vw, du, dv);
                        }
                    }
                }
            }
        }
    }

    let norm2: f64 = acc.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Err(Error::ZeroDescriptor);
    }
    let inv = 1.0 / norm2.sqrt();
    let mut values = [0.0f64; 64];
    for (slot, v) in values.iter_mut().zip(acc.iter()) {
        *slot = v * inv;
    }
    Ok(Descriptor64 {
        values,
        orientation: angle,
    })
}

/// Extracts the SURF-64 descriptor at an oriented interest point.
pub fn describe(
    ii: &IntegralImage,
    p: &InterestPoint,
    angle: f64,
    strat: &DescriptorStrategy,
    policy: BorderPolicy,
    kernel: &DerivativeKernel,
) -> Result<Descriptor64> {
    describe_impl(ii, p, angle, strat, policy, kernel, false)
}

/// Reference implementation that bounds-checks every sample instead of
/// hoisting the interior test to the whole region. Must match [`describe`]
/// bit for bit.
pub fn describe_naive(
    ii: &IntegralImage,
    p: &InterestPoint,
    angle: f64,
    strat: &DescriptorStrategy,
    policy: BorderPolicy,
    kernel: &DerivativeKernel,
) -> Result<Descriptor64> {
    describe_impl(ii, p, angle, strat, policy, kernel, true)
}

/// An interest point together with its descriptor.
#[derive(Debug, Clone)]
pub struct DescribedFeature {
    pub point: InterestPoint,
    pub descriptor: Descriptor64,
}

/// Batch description outcome. Output order follows input order; dropped
/// features are only counted.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub features: Vec<DescribedFeature>,
    /// Rejected by the discard border policy.
    pub dropped_border: usize,
    /// Rejected because the raw descriptor was identically zero.
    pub dropped_zero: usize,
}

/// Orients and describes every point under one variant configuration.
pub fn describe_batch(
    ii: &IntegralImage,
    points: &[InterestPoint],
    vc: &VariantConfig,
) -> BatchResult {
    let mut result = BatchResult {
        features: Vec::with_capacity(points.len()),
        dropped_border: 0,
        dropped_zero: 0,
    };
    for p in points {
        let est = estimate_orientation(ii, p, &vc.orientation, &vc.kernel, vc.border);
        if vc.border == BorderPolicy::Discard
            && region_crosses_border(ii, p, est.angle, &vc.descriptor)
        {
            result.dropped_border += 1;
            continue;
        }
        match describe(ii, p, est.angle, &vc.descriptor, vc.border, &vc.kernel) {
            Ok(descriptor) => result.features.push(DescribedFeature {
                point: *p,
                descriptor,
            }),
            Err(Error::ZeroDescriptor) => result.dropped_zero += 1,
            Err(_) => unreachable!("describe only fails with ZeroDescriptor"),
        }
    }
    result
}
