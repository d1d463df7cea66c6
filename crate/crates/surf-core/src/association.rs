//! Mutual-best-match descriptor association and correctness scoring against
//! a known homography.

use crate::descriptor::Descriptor64;
use crate::detector::InterestPoint;
use crate::evaluation::Homography;

/// An accepted association between feature `index_a` in set A and
/// `index_b` in set B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub index_a: usize,
    pub index_b: usize,
    /// Euclidean distance between the two descriptors.
    pub distance: f64,
}

/// Association options. The Laplacian-sign pre-filter restricts candidate
/// pairs to features with the same blob polarity; it is off by default
/// because the stability metrics are defined on pure mutual-best matching.
#[derive(Debug, Clone, Copy, Default)]
pub struct AssociateOptions {
    pub laplacian_sign_filter: bool,
}

/// Mutual-best-match association: (i, j) is kept iff j is i's nearest
/// neighbor in B and i is j's nearest neighbor in A. Distance ties are
/// broken toward the lowest candidate index, so results are deterministic.
pub fn associate(descs_a: &[Descriptor64], descs_b: &[Descriptor64]) -> Vec<Match> {
    associate_with_signs(descs_a, None, descs_b, None, AssociateOptions::default())
}

/// [`associate`] with optional per-feature Laplacian signs for pre-filtering.
pub fn associate_with_signs(
    descs_a: &[Descriptor64],
    signs_a: Option<&[i8]>,
    descs_b: &[Descriptor64],
    signs_b: Option<&[i8]>,
    opts: AssociateOptions,
) -> Vec<Match> {
    if descs_a.is_empty() || descs_b.is_empty() {
        return Vec::new();
    }
    let compatible = |i: usize, j: usize| -> bool {
        if !opts.laplacian_sign_filter {
            return true;
        }
        match (signs_a, signs_b) {
            (Some(sa), Some(sb)) => sa[i] == sb[j],
            _ => true,
        }
    };

    // squared distances are enough for the argmin scans
    let dist2 = |a: &Descriptor64, b: &Descriptor64| -> f64 {
        a.values
            .iter()
            .zip(b.values.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum()
    };

    let mut best_b: Vec<Option<(usize, f64)>> = vec![None; descs_a.len()];
    let mut best_a: Vec<Option<(usize, f64)>> = vec![None; descs_b.len()];
    for (i, da) in descs_a.iter().enumerate() {
        for (j, db) in descs_b.iter().enumerate() {
            if !compatible(i, j) {
                continue;
            }
            let d = dist2(da, db);
            // strict <, so the lowest index wins ties
            if best_b[i].is_none_or(|(_, bd)| d < bd) {
                best_b[i] = Some((j, d));
            }
            if best_a[j].is_none_or(|(_, bd)| d < bd) {
                best_a[j] = Some((i, d));
            }
        }
    }

    let mut matches = Vec::new();
    for (i, &bb) in best_b.iter().enumerate() {
        let Some((j, d)) = bb else { continue };
        if best_a[j].map(|(bi, _)| bi) == Some(i) {
            matches.push(Match {
                index_a: i,
                index_b: j,
                distance: d.sqrt(),
            });
        }
    }
    matches
}

/// Fraction of matches whose endpoints agree with the homography within
/// `tol_px` pixels. Zero matches scores 0. Projections that blow up count
/// as incorrect.
pub fn score_associations(
    matches: &[Match],
    points_a: &[InterestPoint],
    points_b: &[InterestPoint],
    homography: &Homography,
    tol_px: f64,
) -> f64 {
    if matches.is_empty() {
        return 0.0;
    }
    let mut correct = 0usize;
    for m in matches {
        let pa = points_a[m.index_a];
        let pb = points_b[m.index_b];
        if let Ok((px, py)) = homography.project(pa.x, pa.y) {
            let d = ((px - pb.x).powi(2) + (py - pb.y).powi(2)).sqrt();
            if d < tol_px {
                correct += 1;
            }
        }
    }
    correct as f64 / matches.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SplitMix64;

    fn desc(values: [f64; 64]) -> Descriptor64 {
        Descriptor64 {
            values,
            orientation: 0.0,
        }
    }

    fn unit_axis(k: usize) -> Descriptor64 {
        let mut v = [0.0; 64];
        v[k] = 1.0;
        desc(v)
    }

    fn random_unit(rng: &mut SplitMix64) -> Descriptor64 {
        let mut v = [0.0; 64];
        for slot in v.iter_mut() {
            *slot = rng.next_range(-1.0, 1.0);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for slot in v.iter_mut() {
            *slot /= n;
        }
        desc(v)
    }

    fn point_at(x: f64, y: f64) -> InterestPoint {
        InterestPoint {
            x,
            y,
            scale: 2.0,
            sign: 1,
            response: 1.0,
        }
    }

    /// Independent mutual-best oracle built from a full distance matrix.
    fn brute_mutual(a: &[Descriptor64], b: &[Descriptor64]) -> Vec<(usize, usize)> {
        let d = |i: usize, j: usize| a[i].distance(&b[j]);
        let mut out = Vec::new();
        for i in 0..a.len() {
            let mut bj = 0;
            for j in 1..b.len() {
                if d(i, j) < d(i, bj) {
                    bj = j;
                }
            }
            let mut bi = 0;
            for k in 1..a.len() {
                if d(k, bj) < d(bi, bj) {
                    bi = k;
                }
            }
            if bi == i {
                out.push((i, bj));
            }
        }
        out
    }

    #[test]
    fn identical_sets_match_with_zero_distance() {
        let a = vec![unit_axis(0), unit_axis(1)];
        let b = a.clone();
        let m = associate(&a, &b);
        assert_eq!(m.len(), 2);
        for (k, mm) in m.iter().enumerate() {
            assert_eq!(mm.index_a, k);
            assert_eq!(mm.index_b, k);
            assert_eq!(mm.distance, 0.0);
        }
    }

    #[test]
    fn mutuality_violation_is_excluded() {
        // a0's best is b0, but b0's best is a1
        let mut v0 = [0.0; 64];
        v0[0] = 1.0;
        let mut v1 = [0.0; 64];
        v1[0] = 0.8;
        v1[1] = 0.6;
        let b0 = {
            let mut v = [0.0; 64];
            v[0] = 0.9;
            v[1] = 0.435_889_894_354_067_4; // unit norm
            desc(v)
        };
        let a = vec![desc(v0), desc(v1)];
        let b = vec![b0];
        let m = associate(&a, &b);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].index_a, 1);
        assert!(!m.iter().any(|mm| mm.index_a == 0));
    }

    #[test]
    fn matches_brute_force_oracle_on_random_sets() {
        let mut rng = SplitMix64::new(2024);
        let a: Vec<_> = (0..200).map(|_| random_unit(&mut rng)).collect();
        let b: Vec<_> = (0..200).map(|_| random_unit(&mut rng)).collect();
        let got: Vec<(usize, usize)> = associate(&a, &b)
            .iter()
            .map(|m| (m.index_a, m.index_b))
            .collect();
        let want = brute_mutual(&a, &b);
        assert_eq!(got, want);
        assert!(!got.is_empty());
    }

    #[test]
    fn symmetry_under_role_swap() {
        let mut rng = SplitMix64::new(7);
        let a: Vec<_> = (0..60).map(|_| random_unit(&mut rng)).collect();
        let b: Vec<_> = (0..50).map(|_| random_unit(&mut rng)).collect();
        let mut fwd: Vec<(usize, usize)> = associate(&a, &b)
            .iter()
            .map(|m| (m.index_a, m.index_b))
            .collect();
        let mut rev: Vec<(usize, usize)> = associate(&b, &a)
            .iter()
            .map(|m| (m.index_b, m.index_a))
            .collect();
        fwd.sort_unstable();
        rev.sort_unstable();
        assert_eq!(fwd, rev);
    }

    #[test]
    fn injectivity() {
        let mut rng = SplitMix64::new(99);
        let a: Vec<_> = (0..80).map(|_| random_unit(&mut rng)).collect();
        let b: Vec<_> = (0..80).map(|_| random_unit(&mut rng)).collect();
        let m = associate(&a, &b);
        let mut seen_a = std::collections::HashSet::new();
        let mut seen_b = std::collections::HashSet::new();
        for mm in &m {
            assert!(seen_a.insert(mm.index_a));
            assert!(seen_b.insert(mm.index_b));
        }
    }

    #[test]
    fn irrelevant_addition_changes_nothing() {
        let mut rng = SplitMix64::new(123);
        let a: Vec<_> = (0..40).map(|_| random_unit(&mut rng)).collect();
        let mut b: Vec<_> = (0..40).map(|_| random_unit(&mut rng)).collect();
        let before = associate(&a, &b);
        // a descriptor far from everything: nobody's best match
        let mut far = [0.0; 64];
        far[63] = -50.0;
        b.push(desc(far));
        let after = associate(&a, &b);
        assert_eq!(before.len(), after.len());
        for (x, y) in before.iter().zip(after.iter()) {
            assert_eq!((x.index_a, x.index_b), (y.index_a, y.index_b));
        }
    }

    #[test]
    fn sign_filter_blocks_opposite_polarity() {
        let a = vec![unit_axis(0)];
        let b = vec![unit_axis(0)];
        let m = associate_with_signs(
            &a,
            Some(&[1]),
            &b,
            Some(&[-1]),
            AssociateOptions {
                laplacian_sign_filter: true,
            },
        );
        assert!(m.is_empty());
        let m2 = associate_with_signs(&a, Some(&[1]), &b, Some(&[-1]), AssociateOptions::default());
        assert_eq!(m2.len(), 1);
    }

    #[test]
    fn score_identity_coincident() {
        let pts = vec![point_at(10.0, 10.0), point_at(50.0, 40.0)];
        let matches = vec![
            Match {
                index_a: 0,
                index_b: 0,
                distance: 0.0,
            },
            Match {
                index_a: 1,
                index_b: 1,
                distance: 0.0,
            },
        ];
        let h = Homography::identity();
        assert_eq!(score_associations(&matches, &pts, &pts, &h, 3.0), 1.0);
    }

    #[test]
    fn score_displaced_beyond_tolerance() {
        let pa = vec![point_at(10.0, 10.0)];
        let pb = vec![point_at(20.0, 10.0)];
        let matches = vec![Match {
            index_a: 0,
            index_b: 0,
            distance: 0.0,
        }];
        let h = Homography::identity();
        assert_eq!(score_associations(&matches, &pa, &pb, &h, 3.0), 0.0);
    }

    #[test]
    fn score_mixed_fraction() {
        let pa: Vec<_> = (0..5).map(|i| point_at(10.0 * i as f64, 0.0)).collect();
        let mut pb = pa.clone();
        pb[3].x += 10.0;
        pb[4].y -= 7.0;
        let matches: Vec<_> = (0..5)
            .map(|i| Match {
                index_a: i,
                index_b: i,
                distance: 0.0,
            })
            .collect();
        let h = Homography::identity();
        assert_eq!(score_associations(&matches, &pa, &pb, &h, 3.0), 3.0 / 5.0);
    }

    #[test]
    fn score_empty_is_zero() {
        let h = Homography::identity();
        assert_eq!(score_associations(&[], &[], &[], &h, 3.0), 0.0);
    }
}
