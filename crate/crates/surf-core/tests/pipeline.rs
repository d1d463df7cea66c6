//! Cross-module pipeline tests: detect -> orient -> describe -> associate
//! -> score, on synthetic scenes with known ground truth.

use surf_core::association::associate;
use surf_core::config::VariantConfig;
use surf_core::descriptor::{describe, estimate_orientation, Descriptor64};
use surf_core::detector::{detect, DetectorConfig, InterestPoint};
use surf_core::evaluation::{
    descriptor_stability_protocol, expected_scale, Homography, HomographySequence,
};
use surf_core::integral::IntegralImage;
use surf_core::synth::{crop, rotated_view, textured_image};

fn capped_detector(n: usize) -> DetectorConfig {
    DetectorConfig {
        max_features_hint: Some(n),
        ..DetectorConfig::default()
    }
}

/// Threshold tuning reaches a target feature count the same way the
/// benchmark procedure tunes each implementation to about 2000 features.
#[test]
fn threshold_tunes_to_target_feature_count() {
    let img = surf_core::synth::structured_image(850, 680, 5150);
    let all = detect(&img, &DetectorConfig::default()).unwrap();
    assert!(all.len() > 2000, "only {} raw detections", all.len());
    let cut = all[1999].response;
    let tuned = detect(
        &img,
        &DetectorConfig {
            response_threshold: cut,
            ..DetectorConfig::default()
        },
    )
    .unwrap();
    assert!(
        (1900..=2100).contains(&tuned.len()),
        "tuned to {} features",
        tuned.len()
    );
}

#[test]
fn self_match_fraction_is_near_one() {
    let img = textured_image(240, 200, 50);
    let seq = HomographySequence::new(
        "self".into(),
        vec![img.clone(), img.clone()],
        vec![Homography::identity(), Homography::identity()],
    )
    .unwrap();
    let pts = detect(&img, &capped_detector(300)).unwrap();
    assert!(pts.len() >= 200, "only {} detections", pts.len());
    let points = vec![pts.clone(), pts];
    for vc in [VariantConfig::fast(), VariantConfig::stable()] {
        let fractions = descriptor_stability_protocol(&seq, &points, &vc, 3.0).unwrap();
        assert!(
            fractions[0] >= 0.99,
            "{}: self-match fraction {}",
            vc.name,
            fractions[0]
        );
    }
}

#[test]
fn unrelated_images_match_nothing() {
    let a = textured_image(200, 160, 60);
    let b = textured_image(200, 160, 61);
    let seq = HomographySequence::new(
        "unrelated".into(),
        vec![a.clone(), b.clone()],
        vec![Homography::identity(), Homography::identity()],
    )
    .unwrap();
    let pa = detect(&a, &capped_detector(200)).unwrap();
    let pb = detect(&b, &capped_detector(200)).unwrap();
    let fractions =
        descriptor_stability_protocol(&seq, &[pa, pb], &VariantConfig::stable(), 3.0).unwrap();
    assert!(fractions[0] < 0.05, "fraction {}", fractions[0]);
}

#[test]
fn protocol_is_deterministic_across_reruns() {
    let base = textured_image(420, 420, 70);
    let a = crop(&base, 110, 110, 200, 200);
    let (b, h) = rotated_view(&base, 209.5, 209.5, 200, 200, 0.35);
    let seq = HomographySequence::new(
        "rot".into(),
        vec![a.clone(), b.clone()],
        vec![Homography::identity(), h],
    )
    .unwrap();
    let points = vec![
        detect(&a, &capped_detector(250)).unwrap(),
        detect(&b, &capped_detector(250)).unwrap(),
    ];
    let vc = VariantConfig::stable();
    let first = descriptor_stability_protocol(&seq, &points, &vc, 3.0).unwrap();
    let second = descriptor_stability_protocol(&seq, &points, &vc, 3.0).unwrap();
    assert_eq!(first, second);
    assert!(first[0] > 0.0);
}

/// Descriptor of the corresponding rotated point should be closer to the
/// original's descriptor than typical unrelated pairs are.
#[test]
fn rotated_descriptor_stays_close() {
    let base = textured_image(660, 660, 80);
    let a = crop(&base, 180, 180, 300, 300);
    let angle = 30f64.to_radians();
    let (b, h) = rotated_view(&base, 329.5, 329.5, 300, 300, angle);
    let ii_a = IntegralImage::build(&a);
    let ii_b = IntegralImage::build(&b);
    let vc = VariantConfig::stable();

    let pts = detect(&a, &capped_detector(200)).unwrap();
    let mut da: Vec<Descriptor64> = Vec::new();
    let mut db: Vec<Descriptor64> = Vec::new();
    for p in pts {
        // keep the pair's descriptor regions clear of both images' borders
        let margin = 18.0 * p.scale;
        if p.x < margin || p.y < margin || p.x > 300.0 - margin || p.y > 300.0 - margin {
            continue;
        }
        let (qx, qy) = h.project(p.x, p.y).unwrap();
        if qx < margin || qy < margin || qx > 300.0 - margin || qy > 300.0 - margin {
            continue;
        }
        let q = InterestPoint {
            x: qx,
            y: qy,
            scale: p.scale * expected_scale(&h, p.x, p.y).unwrap(),
            sign: p.sign,
            response: p.response,
        };
        let ea = estimate_orientation(&ii_a, &p, &vc.orientation, &vc.kernel, vc.border);
        let eb = estimate_orientation(&ii_b, &q, &vc.orientation, &vc.kernel, vc.border);
        let fa = describe(&ii_a, &p, ea.angle, &vc.descriptor, vc.border, &vc.kernel).unwrap();
        let fb = describe(&ii_b, &q, eb.angle, &vc.descriptor, vc.border, &vc.kernel).unwrap();
        da.push(fa);
        db.push(fb);
    }
    assert!(da.len() >= 30, "only {} usable pairs", da.len());

    let mut close = 0usize;
    for (i, d) in da.iter().enumerate() {
        let self_dist = d.distance(&db[i]);
        let mut cross: Vec<f64> = db
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, o)| d.distance(o))
            .collect();
        cross.sort_by(f64::total_cmp);
        let median = cross[cross.len() / 2];
        if self_dist < median {
            close += 1;
        }
    }
    assert!(
        close * 10 >= da.len() * 9,
        "{close}/{} rotated descriptors beat the median cross distance",
        da.len()
    );
}

/// Mutual association between an image and its rotated self should link the
/// geometrically corresponding features.
#[test]
fn rotation_pair_associations_are_mostly_correct() {
    let base = textured_image(460, 460, 90);
    let a = crop(&base, 130, 130, 200, 200);
    let (b, h) = rotated_view(&base, 229.5, 229.5, 200, 200, 0.4);
    let ii_a = IntegralImage::build(&a);
    let ii_b = IntegralImage::build(&b);
    let vc = VariantConfig::stable();
    let pa = detect(&a, &capped_detector(250)).unwrap();
    let pb = detect(&b, &capped_detector(250)).unwrap();
    let ba = surf_core::descriptor::describe_batch(&ii_a, &pa, &vc);
    let bb = surf_core::descriptor::describe_batch(&ii_b, &pb, &vc);
    let da: Vec<_> = ba.features.iter().map(|f| f.descriptor.clone()).collect();
    let db: Vec<_> = bb.features.iter().map(|f| f.descriptor.clone()).collect();
    let matches = associate(&da, &db);
    assert!(matches.len() >= 50, "only {} matches", matches.len());
    let qa: Vec<_> = ba.features.iter().map(|f| f.point).collect();
    let qb: Vec<_> = bb.features.iter().map(|f| f.point).collect();
    let frac = surf_core::association::score_associations(&matches, &qa, &qb, &h, 3.0);
    assert!(frac > 0.5, "correct fraction {frac}");
}
