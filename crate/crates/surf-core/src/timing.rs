//! The timing protocol: repeat the work 10 times in-process and keep the
//! best, run that whole experiment 11 times, report the median of the 11
//! bests. Best-of filters scheduler noise; median-of filters run-to-run
//! drift.

use std::time::Instant;

use crate::config::VariantConfig;
use crate::descriptor::describe_batch;
use crate::detector::detect_on_integral;
use crate::image::GrayImage;
use crate::integral::IntegralImage;
use crate::Result;

/// Repetitions inside one run; the best (minimum) is kept.
pub const INNER_REPS: usize = 10;
/// Independent runs; the median of their bests is reported.
pub const OUTER_RUNS: usize = 11;

/// Timing outcome for one variant on one image.
#[derive(Debug, Clone)]
pub struct TimingResult {
    pub variant: String,
    pub image: String,
    /// Best-of-[`INNER_REPS`] milliseconds, one entry per outer run.
    pub best_of_10_ms: Vec<f64>,
    /// True median of the [`OUTER_RUNS`] recorded bests.
    pub median_of_11_ms: f64,
    pub feature_count: usize,
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Runs `work` through the full protocol and returns (per-run bests,
/// median of bests).
pub fn run_protocol<T>(mut work: impl FnMut() -> T) -> (Vec<f64>, f64) {
    let mut bests = Vec::with_capacity(OUTER_RUNS);
    for _ in 0..OUTER_RUNS {
        let mut best = f64::INFINITY;
        for _ in 0..INNER_REPS {
            let start = Instant::now();
            let out = work();
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            std::hint::black_box(&out);
            best = best.min(elapsed);
        }
        bests.push(best);
    }
    let med = median(&bests);
    (bests, med)
}

/// Times detect + describe (integral image construction included, image
/// decode excluded) for one variant, sequentially and in-process.
pub fn time_detect_describe(
    image: &GrayImage,
    variant: &VariantConfig,
    image_label: &str,
) -> Result<TimingResult> {
    // surface pipeline errors once before the timed loop
    let ii = IntegralImage::build(image);
    let pts = detect_on_integral(&ii, &variant.detector)?;
    let feature_count = describe_batch(&ii, &pts, variant).features.len();

    let (bests, med) = run_protocol(|| {
        let ii = IntegralImage::build(image);
        let pts = detect_on_integral(&ii, &variant.detector).expect("validated above");
        describe_batch(&ii, &pts, variant).features.len()
    });
    Ok(TimingResult {
        variant: variant.name.clone(),
        image: image_label.to_string(),
        best_of_10_ms: bests,
        median_of_11_ms: med,
        feature_count,
    })
}
