//! Homography-sequence handling, the modified repeatability measure, and the
//! descriptor stability protocol.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::association::{associate, score_associations};
use crate::config::VariantConfig;
use crate::descriptor::describe_batch;
use crate::detector::{detect_on_integral, DetectorConfig, InterestPoint};
use crate::error::Error;
use crate::image::{read_pgm, GrayImage};
use crate::integral::IntegralImage;
use crate::Result;

/// 3x3 projective transform, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    pub m: [[f64; 3]; 3],
}

impl Homography {
    /// Validates invertibility (non-zero, finite determinant).
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let h = Homography { m };
        let det = h.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::InvalidInput(format!(
                "homography is not invertible (det = {det})"
            )));
        }
        Ok(h)
    }

    pub fn identity() -> Self {
        Homography {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Homogeneous multiply and perspective divide.
    pub fn project(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let m = &self.m;
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        if w == 0.0 {
            return Err(Error::PointAtInfinity);
        }
        Ok((
            (m[0][0] * x + m[0][1] * y + m[0][2]) / w,
            (m[1][0] * x + m[1][1] * y + m[1][2]) / w,
        ))
    }

    /// Parses 9 whitespace-separated decimals (conventionally 3 per line).
    pub fn parse(text: &str) -> Result<Self> {
        let mut vals = [[0.0f64; 3]; 3];
        let mut count = 0usize;
        for (ln, line) in text.lines().enumerate() {
            for tok in line.split_whitespace() {
                if count >= 9 {
                    return Err(Error::Parse {
                        line: ln + 1,
                        msg: "more than 9 homography entries".into(),
                    });
                }
                vals[count / 3][count % 3] = tok.parse().map_err(|_| Error::Parse {
                    line: ln + 1,
                    msg: format!("bad homography entry {tok:?}"),
                })?;
                count += 1;
            }
        }
        if count != 9 {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: format!("expected 9 homography entries, found {count}"),
            });
        }
        Homography::new(vals)
    }

    pub fn format(&self) -> String {
        let mut s = String::new();
        for row in &self.m {
            let _ = writeln!(s, "{} {} {}", row[0], row[1], row[2]);
        }
        s
    }
}

/// Local scale magnification of a homography at a point: project the point
/// and four samples one pixel away (up, down, left, right) and average the
/// projected samples' distances from the projected point.
pub fn expected_scale(h: &Homography, x: f64, y: f64) -> Result<f64> {
    let (cx, cy) = h.project(x, y)?;
    let mut total = 0.0;
    for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
        let (px, py) = h.project(x + dx, y + dy)?;
        total += ((px - cx).powi(2) + (py - cy).powi(2)).sqrt();
    }
    Ok(total / 4.0)
}

/// An image sequence with homographies mapping image 1 to image i.
#[derive(Debug, Clone)]
pub struct HomographySequence {
    pub name: String,
    /// Images 1..=N in order.
    pub images: Vec<GrayImage>,
    /// `homographies[i]` maps image 1 coordinates to image i+1; the first
    /// entry is the identity.
    pub homographies: Vec<Homography>,
}

impl HomographySequence {
    pub fn new(
        name: String,
        images: Vec<GrayImage>,
        homographies: Vec<Homography>,
    ) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::InvalidInput("sequence has no images".into()));
        }
        if homographies.len() != images.len() {
            return Err(Error::InvalidInput(format!(
                "sequence has {} images but {} homographies",
                images.len(),
                homographies.len()
            )));
        }
        Ok(Self {
            name,
            images,
            homographies,
        })
    }

    /// Loads `img1.pgm .. imgN.pgm` and `H1to2p .. H1toNp` from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sequence".into());
        let mut images = Vec::new();
        let mut idx = 1usize;
        loop {
            let path: PathBuf = dir.join(format!("img{idx}.pgm"));
            if !path.is_file() {
                break;
            }
            images.push(read_pgm(&path)?);
            idx += 1;
        }
        if images.is_empty() {
            return Err(Error::InvalidInput(format!(
                "no img1.pgm found in {}",
                dir.display()
            )));
        }
        let mut homographies = vec![Homography::identity()];
        let mut missing = Vec::new();
        for i in 2..=images.len() {
            let path = dir.join(format!("H1to{i}p"));
            if !path.is_file() {
                missing.push(format!("H1to{i}p"));
                continue;
            }
            let text = std::fs::read_to_string(&path)?;
            homographies.push(Homography::parse(&text)?);
        }
        if !missing.is_empty() {
            return Err(Error::InvalidInput(format!(
                "missing homography files in {}: {}",
                dir.display(),
                missing.join(", ")
            )));
        }
        Self::new(name, images, homographies)
    }
}

/// Outcome of one modified-repeatability evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatabilityResult {
    /// (|A| - |T|) / (|P| - |T|), in [0, 1].
    pub r: f64,
    /// Reference points whose projection lands inside image i.
    pub p_count: usize,
    /// Matched points.
    pub a_count: usize,
    /// Matched points with another detection packed within the position
    /// tolerance, discounted from both sides of the ratio.
    pub t_count: usize,
    pub eps_px: f64,
    pub eps_scale: f64,
}

/// Modified repeatability of `points_i` (detected in image i) against
/// `points_ref` (detected in image 1), under the homography mapping image 1
/// to image i.
///
/// A reference point is *visible* when its projection lands inside
/// `image_i_bounds`. A candidate matches when its position is within
/// `eps_px` of the projection and its scale is within `eps_scale`
/// (relatively) of the homography-adjusted reference scale; the nearest
/// candidate wins. A matched point with any other detection within `eps_px`
/// is ambiguous and ignored: it is removed from both the numerator and the
/// denominator, so packing spurious detections around a true point cannot
/// raise the score.
pub fn modified_repeatability(
    points_ref: &[InterestPoint],
    points_i: &[InterestPoint],
    h: &Homography,
    eps_px: f64,
    eps_scale: f64,
    image_i_bounds: (usize, usize),
) -> Result<RepeatabilityResult> {
    let (w, hgt) = image_i_bounds;
    let mut p_count = 0usize;
    let mut matched = std::collections::BTreeSet::new();
    for a in points_ref {
        let Ok((px, py)) = h.project(a.x, a.y) else {
            continue;
        };
        if px < 0.0 || py < 0.0 || px >= w as f64 || py >= hgt as f64 {
            continue;
        }
        p_count += 1;
        let s_expected = expected_scale(h, a.x, a.y)? * a.scale;
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in points_i.iter().enumerate() {
            let d = ((c.x - px).powi(2) + (c.y - py).powi(2)).sqrt();
            if d >= eps_px {
                continue;
            }
            if (c.scale - s_expected).abs() > eps_scale * s_expected {
                continue;
            }
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, _)) = best {
            matched.insert(j);
        }
    }
    let a_count = matched.len();
    // ambiguous matches: another detection packed within eps_px
    let mut t_count = 0usize;
    for &j in &matched {
        let c = points_i[j];
        let packed = points_i
            .iter()
            .enumerate()
            .any(|(k, d)| k != j && ((d.x - c.x).powi(2) + (d.y - c.y).powi(2)).sqrt() < eps_px);
        if packed {
            t_count += 1;
        }
    }
    if p_count == t_count {
        return Err(Error::MetricDomain(format!(
            "repeatability undefined: |P| = |T| = {p_count}"
        )));
    }
    let r = (a_count as f64 - t_count as f64) / (p_count as f64 - t_count as f64);
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::MetricDomain(format!(
            "repeatability {r} outside [0,1] (|P|={p_count} |A|={a_count} |T|={t_count})"
        )));
    }
    Ok(RepeatabilityResult {
        r,
        p_count,
        a_count,
        t_count,
        eps_px,
        eps_scale,
    })
}

/// Normalizes per-variant score totals by the best variant's total, so the
/// best variant scores exactly 1. Every variant must cover the same images.
pub fn summarize(per_variant: &[(String, Vec<f64>)]) -> Result<Vec<(String, f64)>> {
    if per_variant.is_empty() {
        return Err(Error::InvalidInput("no variants to summarize".into()));
    }
    let n = per_variant[0].1.len();
    if per_variant.iter().any(|(_, v)| v.len() != n) {
        return Err(Error::InvalidInput(
            "variants cover different numbers of images".into(),
        ));
    }
    let totals: Vec<f64> = per_variant.iter().map(|(_, v)| v.iter().sum()).collect();
    let best = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if best.is_nan() || best <= 0.0 {
        return Err(Error::MetricDomain(format!(
            "cannot normalize: best total is {best}"
        )));
    }
    Ok(per_variant
        .iter()
        .zip(totals.iter())
        .map(|((name, _), &t)| (name.clone(), t / best))
        .collect())
}

/// Detector stability protocol: detect in every image with the variant's
/// detector and score each image i > 1 against image 1.
pub fn detector_stability(
    seq: &HomographySequence,
    cfg: &DetectorConfig,
    eps_px: f64,
    eps_scale: f64,
) -> Result<Vec<RepeatabilityResult>> {
    let detections: Vec<Vec<InterestPoint>> = seq
        .images
        .iter()
        .map(|img| {
            let ii = IntegralImage::build(img);
            detect_on_integral(&ii, cfg)
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for i in 1..seq.images.len() {
        out.push(modified_repeatability(
            &detections[0],
            &detections[i],
            &seq.homographies[i],
            eps_px,
            eps_scale,
            (seq.images[i].width(), seq.images[i].height()),
        )?);
    }
    Ok(out)
}

/// Descriptor stability protocol: describe externally supplied per-image
/// interest points under `variant`, associate image 1 against image i, and
/// return each image's correct-association fraction at `tol_px`.
pub fn descriptor_stability_protocol(
    seq: &HomographySequence,
    points_per_image: &[Vec<InterestPoint>],
    variant: &VariantConfig,
    tol_px: f64,
) -> Result<Vec<f64>> {
    if points_per_image.len() != seq.images.len() {
        return Err(Error::InvalidInput(format!(
            "{} point sets supplied for {} images",
            points_per_image.len(),
            seq.images.len()
        )));
    }
    let batches: Vec<_> = seq
        .images
        .iter()
        .zip(points_per_image.iter())
        .map(|(img, pts)| {
            let ii = IntegralImage::build(img);
            describe_batch(&ii, pts, variant)
        })
        .collect();
    let ref_points: Vec<InterestPoint> = batches[0].features.iter().map(|f| f.point).collect();
    let ref_descs: Vec<_> = batches[0]
        .features
        .iter()
        .map(|f| f.descriptor.clone())
        .collect();
    let mut out = Vec::new();
    for (batch, h) in batches.iter().zip(seq.homographies.iter()).skip(1) {
        let pts: Vec<InterestPoint> = batch.features.iter().map(|f| f.point).collect();
        let descs: Vec<_> = batch
            .features
            .iter()
            .map(|f| f.descriptor.clone())
            .collect();
        let matches = associate(&ref_descs, &descs);
        out.push(score_associations(&matches, &ref_points, &pts, h, tol_px));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, scale: f64) -> InterestPoint {
        InterestPoint {
            x,
            y,
            scale,
            sign: 1,
            response: 1.0,
        }
    }

    #[test]
    fn project_identity() {
        let h = Homography::identity();
        assert_eq!(h.project(3.5, -2.0).unwrap(), (3.5, -2.0));
    }

    #[test]
    fn project_translation() {
        let h = Homography::new([[1.0, 0.0, 7.0], [0.0, 1.0, -3.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(h.project(1.0, 2.0).unwrap(), (8.0, -1.0));
    }

    #[test]
    fn project_projective_unit_square() {
        // hand-computed: w = 1 + 0.5x, so (1,0) -> ((1+1)/1.5, 0.5/1.5)
        let h = Homography::new([[1.0, 0.0, 1.0], [0.5, 1.0, 0.0], [0.5, 0.0, 1.0]]).unwrap();
        let cases = [
            ((0.0, 0.0), (1.0, 0.0)),
            ((1.0, 0.0), (2.0 / 1.5, 0.5 / 1.5)),
            ((0.0, 1.0), (1.0, 1.0)),
            ((1.0, 1.0), (2.0 / 1.5, 1.5 / 1.5)),
        ];
        for ((x, y), (ex, ey)) in cases {
            let (px, py) = h.project(x, y).unwrap();
            assert!((px - ex).abs() < 1e-12 && (py - ey).abs() < 1e-12);
        }
    }

    #[test]
    fn project_point_at_infinity() {
        let h = Homography::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, -1.0]]).unwrap();
        assert!(matches!(h.project(1.0, 0.0), Err(Error::PointAtInfinity)));
    }

    #[test]
    fn singular_homography_rejected() {
        assert!(Homography::new([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn expected_scale_identity_and_scaling_and_rotation() {
        assert_eq!(
            expected_scale(&Homography::identity(), 5.0, 5.0).unwrap(),
            1.0
        );
        let double = Homography::new([[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!((expected_scale(&double, 3.0, 4.0).unwrap() - 2.0).abs() < 1e-12);
        let (s, c) = 0.7f64.sin_cos();
        let rot = Homography::new([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!((expected_scale(&rot, 10.0, -2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn homography_parse_round_trip() {
        let h = Homography::new([[1.25, 0.0, 3.0], [0.5, 0.75, -2.0], [0.001, 0.0, 1.0]]).unwrap();
        let parsed = Homography::parse(&h.format()).unwrap();
        assert_eq!(parsed, h);
    }

    #[test]
    fn homography_parse_errors_name_lines() {
        match Homography::parse("1 0 0\n0 x 0\n0 0 1") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(Homography::parse("1 0 0\n0 1 0").is_err());
    }

    #[test]
    fn repeatability_identity_well_separated() {
        let pts: Vec<_> = (0..10)
            .map(|i| pt(20.0 + 30.0 * i as f64, 50.0, 2.0))
            .collect();
        let r = modified_repeatability(&pts, &pts, &Homography::identity(), 1.5, 0.25, (400, 100))
            .unwrap();
        assert_eq!(r.r, 1.0);
        assert_eq!(r.t_count, 0);
        assert_eq!(r.p_count, 10);
    }

    #[test]
    fn repeatability_disjoint_sets() {
        let a: Vec<_> = (0..5)
            .map(|i| pt(10.0 + 20.0 * i as f64, 10.0, 2.0))
            .collect();
        let b: Vec<_> = (0..5)
            .map(|i| pt(10.0 + 20.0 * i as f64, 80.0, 2.0))
            .collect();
        let r =
            modified_repeatability(&a, &b, &Homography::identity(), 1.5, 0.25, (200, 100)).unwrap();
        assert_eq!(r.r, 0.0);
        assert_eq!(r.a_count, 0);
    }

    #[test]
    fn repeatability_hand_enumerated_cluster_scene() {
        // 20 reference points on a coarse grid, all visible
        let mut refs = Vec::new();
        for gy in 0..4 {
            for gx in 0..5 {
                refs.push(pt(30.0 + 40.0 * gx as f64, 30.0 + 40.0 * gy as f64, 2.0));
            }
        }
        // detections: 17 coincide exactly; refs[17] matched but with two
        // extra detections packed nearby (-> in T); refs[18], refs[19] lost
        let mut dets: Vec<InterestPoint> = refs[..18].to_vec();
        dets.push(pt(refs[17].x + 0.5, refs[17].y, 2.0));
        dets.push(pt(refs[17].x - 0.6, refs[17].y + 0.3, 2.0));
        // by hand: |P| = 20, |A| = 18, |T| = 1 -> r = 17/19
        let r =
            modified_repeatability(&refs, &dets, &Homography::identity(), 1.5, 0.25, (250, 200))
                .unwrap();
        assert_eq!(r.p_count, 20);
        assert_eq!(r.a_count, 18);
        assert_eq!(r.t_count, 1);
        assert_eq!(r.r, 17.0 / 19.0);
    }

    #[test]
    fn repeatability_spurious_cluster_cannot_help() {
        let refs: Vec<_> = (0..10)
            .map(|i| pt(20.0 + 25.0 * i as f64, 40.0, 2.0))
            .collect();
        // miss two points
        let dets: Vec<_> = refs[..8].to_vec();
        let base =
            modified_repeatability(&refs, &dets, &Homography::identity(), 1.5, 0.25, (300, 80))
                .unwrap();
        // all pairwise distances exceed 2 eps, so T is empty and the measure
        // reduces to plain repeatability |A| / |P|
        assert_eq!(base.t_count, 0);
        assert_eq!(base.r, base.a_count as f64 / base.p_count as f64);
        // pack a cluster of spurious detections around one matched point
        let mut gamed = dets.clone();
        for k in 0..6 {
            gamed.push(pt(refs[0].x + 0.2 * k as f64 + 0.1, refs[0].y + 0.1, 2.0));
        }
        let after =
            modified_repeatability(&refs, &gamed, &Homography::identity(), 1.5, 0.25, (300, 80))
                .unwrap();
        assert!(after.r <= base.r + 1e-12);
    }

    #[test]
    fn repeatability_scale_mismatch_rejected() {
        let refs = vec![pt(50.0, 50.0, 2.0)];
        let dets = vec![pt(50.0, 50.0, 4.0)]; // double the expected scale
        let r =
            modified_repeatability(&refs, &dets, &Homography::identity(), 1.5, 0.25, (100, 100));
        // |P|=1, |A|=0, |T|=0 -> r=0
        assert_eq!(r.unwrap().r, 0.0);
    }

    #[test]
    fn repeatability_order_invariance() {
        let refs: Vec<_> = (0..8)
            .map(|i| pt(15.0 + 20.0 * i as f64, 30.0, 2.0))
            .collect();
        let mut dets: Vec<_> = refs.iter().map(|p| pt(p.x + 0.4, p.y - 0.2, 2.1)).collect();
        let fwd =
            modified_repeatability(&refs, &dets, &Homography::identity(), 1.5, 0.25, (200, 60))
                .unwrap();
        dets.reverse();
        let rev =
            modified_repeatability(&refs, &dets, &Homography::identity(), 1.5, 0.25, (200, 60))
                .unwrap();
        assert_eq!(fwd.r, rev.r);
        assert_eq!(fwd.a_count, rev.a_count);
    }

    #[test]
    fn repeatability_undefined_when_p_equals_t() {
        // single visible point matched, but ambiguous -> |P| = |T| = 1
        let refs = vec![pt(50.0, 50.0, 2.0)];
        let dets = vec![pt(50.0, 50.0, 2.0), pt(50.5, 50.0, 2.0)];
        assert!(matches!(
            modified_repeatability(&refs, &dets, &Homography::identity(), 1.5, 0.25, (100, 100)),
            Err(Error::MetricDomain(_))
        ));
    }

    #[test]
    fn summarize_single_variant_is_one() {
        let s = summarize(&[("only".into(), vec![0.5, 0.25])]).unwrap();
        assert_eq!(s, vec![("only".into(), 1.0)]);
    }

    #[test]
    fn summarize_direct_division() {
        let s = summarize(&[
            ("a".into(), vec![4.0, 6.0]),
            ("b".into(), vec![5.0, 3.0]),
            ("c".into(), vec![2.0, 3.0]),
        ])
        .unwrap();
        assert_eq!(s[0], ("a".into(), 1.0));
        assert_eq!(s[1], ("b".into(), 0.8));
        assert_eq!(s[2], ("c".into(), 0.5));
    }

    #[test]
    fn summarize_mismatched_coverage() {
        assert!(matches!(
            summarize(&[("a".into(), vec![1.0]), ("b".into(), vec![1.0, 2.0])]),
            Err(Error::InvalidInput(_))
        ));
    }
}
