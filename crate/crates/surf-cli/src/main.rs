//! `surf`: detect and describe SURF-64 features, evaluate detector and
//! descriptor stability over homography sequences, and time variants with
//! the best-of-10 / median-of-11 protocol.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use surf_core::config::VariantConfig;
use surf_core::descriptor::describe_batch;
use surf_core::detector::{detect_on_integral, DetectorConfig, InterestPoint};
use surf_core::error::Error;
use surf_core::evaluation::{
    descriptor_stability_protocol, detector_stability, summarize, HomographySequence,
};
use surf_core::formats::{format_descriptors, format_points, parse_points};
use surf_core::image::read_pgm;
use surf_core::integral::IntegralImage;
use surf_core::timing::{time_detect_describe, TimingResult};
use surf_core::Result;

#[derive(Parser)]
#[command(name = "surf", version, about = "SURF-64 feature toolkit")]
struct Cli {
    /// Seed for synthetic-data generators (reserved; the current
    /// subcommands are fully deterministic and ignore it).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    Descriptor,
    Detector,
}

#[derive(Subcommand)]
enum Command {
    /// Detect interest points in a PGM image and write a points file.
    Detect {
        image: PathBuf,
        /// Variant config file (exactly one).
        #[arg(long = "config", required = true)]
        config: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Describe points from a points file and write a descriptor file.
    Describe {
        image: PathBuf,
        points: PathBuf,
        /// Variant config file (exactly one).
        #[arg(long = "config", required = true)]
        config: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate variants over a sequence directory (img1.pgm.., H1to2p..)
    /// and emit a CSV report.
    Evaluate {
        sequence_dir: PathBuf,
        /// Variant config files (repeatable).
        #[arg(long = "config", required = true)]
        config: Vec<PathBuf>,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Position tolerance in pixels for detector repeatability.
        #[arg(long, default_value_t = 1.5)]
        eps_px: f64,
        /// Relative scale tolerance for detector repeatability.
        #[arg(long, default_value_t = 0.25)]
        eps_scale: f64,
        /// Pixel tolerance for a correct descriptor association.
        #[arg(long, default_value_t = 3.0)]
        tol_assoc: f64,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time detect+describe per variant: 11 runs of best-of-10, median
    /// reported. Variants run strictly one after another.
    Bench {
        image: PathBuf,
        /// Variant config files (repeatable).
        #[arg(long = "config", required = true)]
        config: Vec<PathBuf>,
        /// Optional CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Detect { image, config, out } => cmd_detect(&image, &config, &out),
        Command::Describe {
            image,
            points,
            config,
            out,
        } => cmd_describe(&image, &points, &config, &out),
        Command::Evaluate {
            sequence_dir,
            config,
            mode,
            eps_px,
            eps_scale,
            tol_assoc,
            out,
        } => cmd_evaluate(
            &sequence_dir,
            &config,
            mode,
            eps_px,
            eps_scale,
            tol_assoc,
            out.as_deref(),
        ),
        Command::Bench { image, config, out } => cmd_bench(&image, &config, out.as_deref()),
    }
}

fn load_single_config(paths: &[PathBuf]) -> Result<VariantConfig> {
    if paths.len() != 1 {
        return Err(Error::InvalidInput(format!(
            "expected exactly one --config, got {}",
            paths.len()
        )));
    }
    VariantConfig::load(&paths[0])
}

fn load_configs(paths: &[PathBuf]) -> Result<Vec<VariantConfig>> {
    let configs: Vec<VariantConfig> = paths
        .iter()
        .map(|p| VariantConfig::load(p))
        .collect::<Result<_>>()?;
    for (i, a) in configs.iter().enumerate() {
        if configs[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::InvalidInput(format!(
                "duplicate variant name {:?} in this run",
                a.name
            )));
        }
    }
    Ok(configs)
}

fn cmd_detect(image: &Path, config: &[PathBuf], out: &Path) -> Result<()> {
    let vc = load_single_config(config)?;
    let img = read_pgm(image)?;
    let ii = IntegralImage::build(&img);
    let points = detect_on_integral(&ii, &vc.detector)?;
    std::fs::write(out, format_points(&points))?;
    println!("{} features", points.len());
    Ok(())
}

fn cmd_describe(image: &Path, points: &Path, config: &[PathBuf], out: &Path) -> Result<()> {
    let vc = load_single_config(config)?;
    let img = read_pgm(image)?;
    let pts = parse_points(&std::fs::read_to_string(points)?)?;
    let ii = IntegralImage::build(&img);
    let batch = describe_batch(&ii, &pts, &vc);
    std::fs::write(out, format_descriptors(&batch.features))?;
    println!(
        "{} descriptors ({} dropped: {} border, {} zero)",
        batch.features.len(),
        batch.dropped_border + batch.dropped_zero,
        batch.dropped_border,
        batch.dropped_zero
    );
    Ok(())
}

/// Frozen detector the descriptor protocol selects interest points with, so
/// every variant describes identical points. Recorded in the CSV metadata.
fn reference_detector() -> DetectorConfig {
    DetectorConfig {
        max_features_hint: Some(2000),
        ..DetectorConfig::default()
    }
}

fn cmd_evaluate(
    sequence_dir: &Path,
    config: &[PathBuf],
    mode: Mode,
    eps_px: f64,
    eps_scale: f64,
    tol_assoc: f64,
    out: Option<&Path>,
) -> Result<()> {
    let configs = load_configs(config)?;
    let seq = HomographySequence::load_dir(sequence_dir)?;
    let mut csv = String::new();

    let (metric, per_variant) = match mode {
        Mode::Detector => {
            let _ = writeln!(csv, "# mode: detector");
            let _ = writeln!(csv, "# eps_px: {eps_px}");
            let _ = writeln!(csv, "# eps_scale: {eps_scale}");
            let mut per_variant = Vec::new();
            for vc in &configs {
                let results = detector_stability(&seq, &vc.detector, eps_px, eps_scale)?;
                per_variant.push((
                    vc.name.clone(),
                    results.iter().map(|r| r.r).collect::<Vec<_>>(),
                ));
            }
            ("repeatability", per_variant)
        }
        Mode::Descriptor => {
            let refdet = reference_detector();
            let _ = writeln!(csv, "# mode: descriptor");
            let _ = writeln!(csv, "# tol_assoc: {tol_assoc}");
            let _ = writeln!(
                csv,
                "# reference_detector: octaves={} scales={} base={} skip={} threshold={} max_features={:?}",
                refdet.octaves,
                refdet.scales_per_octave,
                refdet.base_filter_size,
                refdet.pixel_skip,
                refdet.response_threshold,
                refdet.max_features_hint
            );
            let points: Vec<Vec<InterestPoint>> = seq
                .images
                .iter()
                .map(|img| {
                    let ii = IntegralImage::build(img);
                    detect_on_integral(&ii, &refdet)
                })
                .collect::<Result<_>>()?;
            let mut per_variant = Vec::new();
            for vc in &configs {
                let fractions = descriptor_stability_protocol(&seq, &points, vc, tol_assoc)?;
                per_variant.push((vc.name.clone(), fractions));
            }
            ("correct_fraction", per_variant)
        }
    };

    let _ = writeln!(csv, "sequence,image,variant,metric,value");
    for (name, values) in &per_variant {
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{},{metric},{v}", seq.name, i + 2, name);
        }
    }
    for (name, value) in summarize(&per_variant)? {
        let _ = writeln!(csv, "{},all,{name},{metric}_summary,{value}", seq.name);
    }

    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_bench(image: &Path, config: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let configs = load_configs(config)?;
    let img = read_pgm(image)?;
    let label = image.display().to_string();
    // one variant at a time: all of a variant's repetitions finish before
    // the next variant starts
    let results: Vec<TimingResult> = configs
        .iter()
        .map(|vc| time_detect_describe(&img, vc, &label))
        .collect::<Result<_>>()?;

    println!(
        "{:<12} {:>9} {:>12} {:>12}",
        "variant", "features", "median_ms", "best_ms"
    );
    for r in &results {
        let best = r
            .best_of_10_ms
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        println!(
            "{:<12} {:>9} {:>12.3} {:>12.3}",
            r.variant, r.feature_count, r.median_of_11_ms, best
        );
    }

    if let Some(path) = out {
        let mut csv = String::from("variant,image,feature_count,median_of_11_ms,best_of_10_ms\n");
        for r in &results {
            let bests: Vec<String> = r.best_of_10_ms.iter().map(|b| b.to_string()).collect();
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                r.variant,
                r.image,
                r.feature_count,
                r.median_of_11_ms,
                bests.join(";")
            );
        }
        std::fs::write(path, csv)?;
    }
    Ok(())
}
