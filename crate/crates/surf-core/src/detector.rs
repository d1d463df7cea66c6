//! Fast-Hessian scale-space interest point detection: response pyramid,
//! 3x3x3 non-maximum suppression, sub-pixel refinement (full 3D quadratic or
//! independent 1D fits), and on-demand Laplacian sign attachment.

use crate::error::Error;
use crate::image::GrayImage;
use crate::integral::{BorderPolicy, IntegralImage};
use crate::kernels::HessianFilter;
use crate::Result;

/// Sub-pixel refinement strategy.
///
/// `Quadratic3D` fits one quadratic to the full 3x3x3 neighborhood through
/// finite differences and needs ad hoc filtering of runaway solutions;
/// `Independent1D` fits a parabola per axis, which cannot leave the sample
/// cell when the center is the axis maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolationMode {
    Quadratic3D,
    Independent1D,
}

/// Detector configuration.
///
/// The per-octave sampling stride is `pixel_skip * 2^octave`: the skip
/// doubles with each octave alongside the filter-size stride.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub octaves: usize,
    pub scales_per_octave: usize,
    pub base_filter_size: usize,
    pub pixel_skip: usize,
    pub nonmax_radius: usize,
    pub response_threshold: f64,
    pub max_features_hint: Option<usize>,
    pub hessian_weight: f64,
    pub border_policy: BorderPolicy,
    pub interpolation: InterpolationMode,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            octaves: 4,
            scales_per_octave: 4,
            base_filter_size: 9,
            pixel_skip: 1,
            nonmax_radius: 1,
            response_threshold: 0.0,
            max_features_hint: None,
            hessian_weight: 0.9,
            border_policy: BorderPolicy::ZeroResponse,
            interpolation: InterpolationMode::Independent1D,
        }
    }
}

impl DetectorConfig {
    fn validate(&self) -> Result<()> {
        if self.octaves < 1 {
            return Err(Error::InvalidInput("octaves must be >= 1".into()));
        }
        if self.scales_per_octave < 3 {
            return Err(Error::InvalidInput(
                "scales_per_octave must be >= 3 so interior scales exist".into(),
            ));
        }
        if self.pixel_skip < 1 {
            return Err(Error::InvalidInput("pixel_skip must be >= 1".into()));
        }
        if self.base_filter_size < 9 || self.base_filter_size % 6 != 3 {
            return Err(Error::InvalidInput(format!(
                "base_filter_size must be 9, 15, 21, ... (got {})",
                self.base_filter_size
            )));
        }
        Ok(())
    }

    /// Filter size of scale layer `scale_idx` in `octave`. Sizes step by
    /// 6 * 2^octave within an octave, and each octave starts where the
    /// previous one's second layer sat: 9,15,21,27; 15,27,39,51; 27,51,...
    pub fn filter_size(&self, octave: usize, scale_idx: usize) -> usize {
        let mut start = self.base_filter_size;
        let mut step = 6usize;
        for _ in 0..octave {
            start += step;
            step *= 2;
        }
        start + scale_idx * step
    }

    /// Pixel stride between response samples in `octave`.
    pub fn stride(&self, octave: usize) -> usize {
        self.pixel_skip << octave
    }

    /// Detected scale for a continuous filter size: s = 1.2 * size / 9.
    pub fn scale_of_filter_size(&self, filter_size: f64) -> f64 {
        1.2 * filter_size / 9.0
    }
}

/// A detected interest point: sub-pixel location, scale, Laplacian sign, and
/// the det(H) response at the discrete extremum that seeded it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterestPoint {
    pub x: f64,
    pub y: f64,
    pub scale: f64,
    /// +1 dark blob, -1 light blob, 0 unknown/flat.
    pub sign: i8,
    pub response: f64,
}

/// det(H) responses of one (octave, scale) layer, sampled every `stride`
/// pixels.
#[derive(Debug, Clone)]
pub struct ResponseMap {
    pub octave: usize,
    pub scale_idx: usize,
    pub filter_size: usize,
    pub stride: usize,
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl ResponseMap {
    #[inline]
    pub fn get(&self, mx: usize, my: usize) -> f64 {
        self.data[my * self.width + mx]
    }
}

/// All response maps of a detector run, octave-major then scale-major.
#[derive(Debug, Clone)]
pub struct ResponsePyramid {
    pub maps: Vec<ResponseMap>,
    pub octaves: usize,
    pub scales_per_octave: usize,
}

impl ResponsePyramid {
    pub fn map(&self, octave: usize, scale_idx: usize) -> &ResponseMap {
        &self.maps[octave * self.scales_per_octave + scale_idx]
    }

    fn value(&self, octave: usize, scale_idx: usize, mx: usize, my: usize) -> f64 {
        self.map(octave, scale_idx).get(mx, my)
    }
}

/// A discrete 3x3x3 extremum found by non-maximum suppression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extremum {
    pub octave: usize,
    pub scale_idx: usize,
    pub mx: usize,
    pub my: usize,
}

fn map_dims(image_w: usize, image_h: usize, stride: usize) -> (usize, usize) {
    ((image_w - 1) / stride + 1, (image_h - 1) / stride + 1)
}

fn fill_map(
    ii: &IntegralImage,
    filter: &HessianFilter,
    octave: usize,
    scale_idx: usize,
    stride: usize,
    policy: BorderPolicy,
) -> ResponseMap {
    let (mw, mh) = map_dims(ii.width(), ii.height(), stride);
    let mut data = vec![0.0f64; mw * mh];
    let reach = filter.reach();
    // interior cell range: pixels at least `reach` from every edge
    let lo_x = (reach as usize).div_ceil(stride);
    let lo_y = lo_x;
    let hi_x = (ii.width() as i64 - 1 - reach).div_euclid(stride as i64);
    let hi_y = (ii.height() as i64 - 1 - reach).div_euclid(stride as i64);
    let interior = hi_x >= lo_x as i64
        && hi_y >= lo_y as i64
        && (lo_x as i64) <= hi_x
        && (lo_y as i64) <= hi_y;

    if interior {
        let (hi_x, hi_y) = (hi_x as usize, hi_y as usize);
        // border pass: rows above and below the interior band
        for my in (0..lo_y).chain(hi_y + 1..mh) {
            for mx in 0..mw {
                data[my * mw + mx] = filter.response_bordered(
                    ii,
                    (mx * stride) as i64,
                    (my * stride) as i64,
                    policy,
                );
            }
        }
        // rows straddling the interior band: border columns then the
        // optimized interior run with no bounds handling at all
        for my in lo_y..=hi_y {
            let y = (my * stride) as i64;
            for mx in (0..lo_x).chain(hi_x + 1..mw) {
                data[my * mw + mx] = filter.response_bordered(ii, (mx * stride) as i64, y, policy);
            }
            let row = &mut data[my * mw..(my + 1) * mw];
            for (mx, slot) in row[lo_x..=hi_x].iter_mut().enumerate() {
                *slot = filter.response_interior(ii, ((lo_x + mx) * stride) as i64, y);
            }
        }
    } else {
        for my in 0..mh {
            for mx in 0..mw {
                data[my * mw + mx] = filter.response_bordered(
                    ii,
                    (mx * stride) as i64,
                    (my * stride) as i64,
                    policy,
                );
            }
        }
    }

    ResponseMap {
        octave,
        scale_idx,
        filter_size: filter.size(),
        stride,
        width: mw,
        height: mh,
        data,
    }
}

/// Reference implementation of a response map: a single loop with a bounds
/// check at every pixel. Kept as the correctness baseline the optimized
/// interior/border dual-loop must match bit for bit.
pub fn build_response_map_naive(
    ii: &IntegralImage,
    filter_size: usize,
    weight: f64,
    stride: usize,
    policy: BorderPolicy,
) -> ResponseMap {
    let filter = HessianFilter::new(filter_size, weight);
    let (mw, mh) = map_dims(ii.width(), ii.height(), stride);
    let mut data = vec![0.0f64; mw * mh];
    for my in 0..mh {
        for mx in 0..mw {
            data[my * mw + mx] =
                filter.response(ii, (mx * stride) as i64, (my * stride) as i64, policy);
        }
    }
    ResponseMap {
        octave: 0,
        scale_idx: 0,
        filter_size,
        stride,
        width: mw,
        height: mh,
        data,
    }
}

/// Builds the det(H) response pyramid: one map per (octave, scale layer).
pub fn build_response_pyramid(ii: &IntegralImage, cfg: &DetectorConfig) -> Result<ResponsePyramid> {
    cfg.validate()?;
    if ii.width() < cfg.base_filter_size || ii.height() < cfg.base_filter_size {
        return Err(Error::InvalidInput(format!(
            "image {}x{} is smaller than the base filter ({})",
            ii.width(),
            ii.height(),
            cfg.base_filter_size
        )));
    }
    let mut maps = Vec::with_capacity(cfg.octaves * cfg.scales_per_octave);
    for octave in 0..cfg.octaves {
        let stride = cfg.stride(octave);
        for scale_idx in 0..cfg.scales_per_octave {
            let filter = HessianFilter::new(cfg.filter_size(octave, scale_idx), cfg.hessian_weight);
            maps.push(fill_map(
                ii,
                &filter,
                octave,
                scale_idx,
                stride,
                cfg.border_policy,
            ));
        }
    }
    Ok(ResponsePyramid {
        maps,
        octaves: cfg.octaves,
        scales_per_octave: cfg.scales_per_octave,
    })
}

/// Finds discrete extrema: cells strictly greater than all 26 neighbors in
/// their 3x3x3 scale-space cell and strictly above the response threshold.
/// The outermost scale layers of each octave only serve as comparison
/// context and never produce extrema. Ties never survive (strict
/// inequality), so two equal adjacent maxima suppress each other.
pub fn nonmax_suppress(pyramid: &ResponsePyramid, cfg: &DetectorConfig) -> Vec<Extremum> {
    let r = cfg.nonmax_radius.max(1);
    let mut out = Vec::new();
    for octave in 0..pyramid.octaves {
        for scale_idx in 1..pyramid.scales_per_octave.saturating_sub(1) {
            let map = pyramid.map(octave, scale_idx);
            if map.width <= 2 * r || map.height <= 2 * r {
                continue;
            }
            for my in r..map.height - r {
                for mx in r..map.width - r {
                    let v = map.get(mx, my);
                    if v <= cfg.response_threshold {
                        continue;
                    }
                    let mut is_max = true;
                    'scan: for ds in -1i64..=1 {
                        let m = pyramid.map(octave, (scale_idx as i64 + ds) as usize);
                        for dy in -(r as i64)..=r as i64 {
                            for dx in -(r as i64)..=r as i64 {
                                if ds == 0 && dy == 0 && dx == 0 {
                                    continue;
                                }
                                let n = m.get((mx as i64 + dx) as usize, (my as i64 + dy) as usize);
                                if n >= v {
                                    is_max = false;
                                    break 'scan;
                                }
                            }
                        }
                    }
                    if is_max {
                        out.push(Extremum {
                            octave,
                            scale_idx,
                            mx,
                            my,
                        });
                    }
                }
            }
        }
    }
    out
}

/// 3x3x3 neighborhood samples around an extremum, indexed [ds][dy][dx] with
/// offsets -1..=1 mapped to 0..=2.
#[allow(clippy::needless_range_loop)]
fn neighborhood(pyramid: &ResponsePyramid, e: &Extremum) -> [[[f64; 3]; 3]; 3] {
    let mut c = [[[0.0f64; 3]; 3]; 3];
    for ds in 0..3usize {
        for dy in 0..3usize {
            for dx in 0..3usize {
                c[ds][dy][dx] =
                    pyramid.value(e.octave, e.scale_idx + ds - 1, e.mx + dx - 1, e.my + dy - 1);
            }
        }
    }
    c
}

fn is_valid_interior(pyramid: &ResponsePyramid, e: &Extremum) -> bool {
    if e.scale_idx < 1 || e.scale_idx + 1 >= pyramid.scales_per_octave {
        return false;
    }
    let map = pyramid.map(e.octave, e.scale_idx);
    e.mx >= 1 && e.my >= 1 && e.mx + 1 < map.width && e.my + 1 < map.height
}

/// Converts a refined (cell, offset) location into an interest point.
fn to_point(
    pyramid: &ResponsePyramid,
    cfg: &DetectorConfig,
    e: &Extremum,
    dx: f64,
    dy: f64,
    ds: f64,
) -> InterestPoint {
    let map = pyramid.map(e.octave, e.scale_idx);
    let stride = map.stride as f64;
    let x = (e.mx as f64 + dx) * stride;
    let y = (e.my as f64 + dy) * stride;
    // filter sizes are affine in the scale index, so interpolate there
    let step = (cfg.filter_size(e.octave, 1) - cfg.filter_size(e.octave, 0)) as f64;
    let size = cfg.filter_size(e.octave, e.scale_idx) as f64 + ds * step;
    InterestPoint {
        x,
        y,
        scale: cfg.scale_of_filter_size(size),
        sign: 0,
        response: map.get(e.mx, e.my),
    }
}

fn quadratic3d_fit(c: &[[[f64; 3]; 3]; 3]) -> Result<(f64, f64, f64)> {
    // gradient and Hessian of the quadratic through central differences;
    // indices are [ds][dy][dx]
    let gx = (c[1][1][2] - c[1][1][0]) / 2.0;
    let gy = (c[1][2][1] - c[1][0][1]) / 2.0;
    let gs = (c[2][1][1] - c[0][1][1]) / 2.0;
    let hxx = c[1][1][2] - 2.0 * c[1][1][1] + c[1][1][0];
    let hyy = c[1][2][1] - 2.0 * c[1][1][1] + c[1][0][1];
    let hss = c[2][1][1] - 2.0 * c[1][1][1] + c[0][1][1];
    let hxy = (c[1][2][2] - c[1][2][0] - c[1][0][2] + c[1][0][0]) / 4.0;
    let hxs = (c[2][1][2] - c[2][1][0] - c[0][1][2] + c[0][1][0]) / 4.0;
    let hys = (c[2][2][1] - c[2][0][1] - c[0][2][1] + c[0][0][1]) / 4.0;

    // a maximum needs a negative-definite Hessian; anything else is a
    // saddle, ridge, or noise artifact
    let m1 = -hxx;
    let m2 = hxx * hyy - hxy * hxy;
    let det = hxx * (hyy * hss - hys * hys) - hxy * (hxy * hss - hys * hxs)
        + hxs * (hxy * hys - hyy * hxs);
    if det == 0.0 || !det.is_finite() {
        return Err(Error::DegenerateFit("singular fit hessian"));
    }
    if !(m1 > 0.0 && m2 > 0.0 && -det > 0.0) {
        return Err(Error::DegenerateFit("fit is not a local maximum"));
    }

    // solve H d = -g by Cramer's rule
    let b = [-gx, -gy, -gs];
    let h = [[hxx, hxy, hxs], [hxy, hyy, hys], [hxs, hys, hss]];
    let det3 = |m: [[f64; 3]; 3]| -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let col = |k: usize| {
        let mut m = h;
        for row in 0..3 {
            m[row][k] = b[row];
        }
        m
    };
    Ok((det3(col(0)) / det, det3(col(1)) / det, det3(col(2)) / det))
}

/// Refines an extremum by fitting a 3D quadratic to the 3x3x3 neighborhood.
///
/// If any offset component reaches 0.5 the fit is re-centered once toward
/// the offset and retried; a second out-of-range solution rejects the point.
pub fn interpolate_point_quadratic3d(
    pyramid: &ResponsePyramid,
    cfg: &DetectorConfig,
    extremum: &Extremum,
) -> Result<InterestPoint> {
    let mut e = *extremum;
    for attempt in 0..2 {
        if !is_valid_interior(pyramid, &e) {
            return Err(Error::DegenerateFit(
                "re-centered outside the pyramid interior",
            ));
        }
        let c = neighborhood(pyramid, &e);
        let (dx, dy, ds) = quadratic3d_fit(&c)?;
        let inside = dx.abs() < 0.5 && dy.abs() < 0.5 && ds.abs() < 0.5;
        if inside {
            return Ok(to_point(pyramid, cfg, &e, dx, dy, ds));
        }
        if attempt == 1 {
            break;
        }
        // single re-center step toward the offset
        let shift = |v: f64| {
            if v >= 0.5 {
                1i64
            } else if v <= -0.5 {
                -1
            } else {
                0
            }
        };
        e = Extremum {
            octave: e.octave,
            scale_idx: (e.scale_idx as i64 + shift(ds)) as usize,
            mx: (e.mx as i64 + shift(dx)) as usize,
            my: (e.my as i64 + shift(dy)) as usize,
        };
    }
    Err(Error::DegenerateFit(
        "offset out of range after re-centering",
    ))
}

/// Per-axis parabola offset: 0.5 (v- - v+) / (v- - 2 v0 + v+), zero on a
/// flat axis. Strictly inside (-0.5, 0.5) whenever v0 is the axis maximum.
fn axis_offset(vm: f64, v0: f64, vp: f64) -> f64 {
    let denom = vm - 2.0 * v0 + vp;
    if denom == 0.0 {
        0.0
    } else {
        0.5 * (vm - vp) / denom
    }
}

/// Refines an extremum with three independent 1D parabola fits.
pub fn interpolate_point_1d(
    pyramid: &ResponsePyramid,
    cfg: &DetectorConfig,
    extremum: &Extremum,
) -> Result<InterestPoint> {
    if !is_valid_interior(pyramid, extremum) {
        return Err(Error::DegenerateFit("extremum is not interior"));
    }
    let c = neighborhood(pyramid, extremum);
    let dx = axis_offset(c[1][1][0], c[1][1][1], c[1][1][2]);
    let dy = axis_offset(c[1][0][1], c[1][1][1], c[1][2][1]);
    let ds = axis_offset(c[0][1][1], c[1][1][1], c[2][1][1]);
    Ok(to_point(pyramid, cfg, extremum, dx, dy, ds))
}

/// [`detect_on_integral`] that also reports each point's discrete seed
/// extremum, which oracle tests use to rebuild eager per-layer maps.
pub fn detect_with_seeds(
    ii: &IntegralImage,
    cfg: &DetectorConfig,
) -> Result<Vec<(InterestPoint, Extremum)>> {
    let pyramid = build_response_pyramid(ii, cfg)?;
    let extrema = nonmax_suppress(&pyramid, cfg);
    let mut points = Vec::with_capacity(extrema.len());
    for e in &extrema {
        let fit = match cfg.interpolation {
            InterpolationMode::Quadratic3D => interpolate_point_quadratic3d(&pyramid, cfg, e),
            InterpolationMode::Independent1D => interpolate_point_1d(&pyramid, cfg, e),
        };
        let Ok(p) = fit else { continue };
        points.push((p, *e));
    }
    points.sort_by(|(a, _), (b, _)| {
        b.response
            .total_cmp(&a.response)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
            .then(a.scale.total_cmp(&b.scale))
    });
    if let Some(n) = cfg.max_features_hint {
        points.truncate(n);
    }
    // Laplacian sign only for the points actually returned, evaluated at the
    // discrete seed so an eagerly computed full trace-sign map agrees exactly
    for (p, e) in points.iter_mut() {
        let map = pyramid.map(e.octave, e.scale_idx);
        let filter = HessianFilter::new(map.filter_size, cfg.hessian_weight);
        p.sign = filter.trace_sign(
            ii,
            (e.mx * map.stride) as i64,
            (e.my * map.stride) as i64,
            cfg.border_policy,
        );
    }
    Ok(points)
}

/// Runs the full detection pipeline on a prebuilt integral image.
pub fn detect_on_integral(ii: &IntegralImage, cfg: &DetectorConfig) -> Result<Vec<InterestPoint>> {
    Ok(detect_with_seeds(ii, cfg)?
        .into_iter()
        .map(|(p, _)| p)
        .collect())
}

/// Full detection pipeline: integral image, response pyramid, non-maximum
/// suppression, sub-pixel refinement, lazy Laplacian sign. Output is sorted
/// by descending response.
pub fn detect(image: &GrayImage, cfg: &DetectorConfig) -> Result<Vec<InterestPoint>> {
    let ii = IntegralImage::build(image);
    detect_on_integral(&ii, cfg)
}
