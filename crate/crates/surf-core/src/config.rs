//! Variant configuration: one struct bundling every strategy choice, with a
//! flat `key = value` file format that diffs cleanly and round-trips
//! losslessly.

use std::fmt::Write as _;
use std::path::Path;

use crate::descriptor::{
    DescriptorStrategy, DescriptorVariant, OrientationStrategy, OrientationVariant,
};
use crate::detector::{DetectorConfig, InterpolationMode};
use crate::error::Error;
use crate::integral::BorderPolicy;
use crate::kernels::{DerivativeKernel, KernelFamily};
use crate::Result;

/// Full strategy selection for one detector/descriptor variant.
///
/// `border` is the single border policy used by both the detector and the
/// descriptor; it is mirrored into `detector.border_policy`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantConfig {
    pub name: String,
    pub detector: DetectorConfig,
    pub orientation: OrientationStrategy,
    pub descriptor: DescriptorStrategy,
    pub border: BorderPolicy,
    pub kernel: DerivativeKernel,
}

impl Default for VariantConfig {
    fn default() -> Self {
        let border = BorderPolicy::ZeroResponse;
        Self {
            name: "default".into(),
            detector: DetectorConfig {
                border_policy: border,
                ..DetectorConfig::default()
            },
            orientation: OrientationStrategy::default(),
            descriptor: DescriptorStrategy::default(),
            border,
            kernel: DerivativeKernel::default(),
        }
    }
}

impl VariantConfig {
    /// Speed-oriented preset: averaged-gradient orientation and
    /// nearest-neighbor descriptor interpolation.
    pub fn fast() -> Self {
        Self {
            name: "fast".into(),
            orientation: OrientationStrategy {
                variant: OrientationVariant::AverageGradient,
                ..OrientationStrategy::default()
            },
            descriptor: DescriptorStrategy {
                variant: DescriptorVariant::NearestNeighbor,
                ..DescriptorStrategy::default()
            },
            ..Self::default()
        }
    }

    /// Stability-oriented preset: sliding-window orientation and
    /// overlapping-subregion descriptor interpolation.
    pub fn stable() -> Self {
        Self {
            name: "stable".into(),
            orientation: OrientationStrategy {
                variant: OrientationVariant::SlidingWindow,
                ..OrientationStrategy::default()
            },
            descriptor: DescriptorStrategy {
                variant: DescriptorVariant::OverlappingSubregions,
                ..DescriptorStrategy::default()
            },
            ..Self::default()
        }
    }

    /// Serializes to the config file format. `parse` inverts this exactly.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "octaves = {}", self.detector.octaves);
        let _ = writeln!(s, "scales_per_octave = {}", self.detector.scales_per_octave);
        let _ = writeln!(s, "base_filter_size = {}", self.detector.base_filter_size);
        let _ = writeln!(s, "pixel_skip = {}", self.detector.pixel_skip);
        let _ = writeln!(s, "nonmax_radius = {}", self.detector.nonmax_radius);
        let _ = writeln!(
            s,
            "response_threshold = {}",
            self.detector.response_threshold
        );
        let _ = writeln!(
            s,
            "max_features = {}",
            match self.detector.max_features_hint {
                Some(n) => n.to_string(),
                None => "none".into(),
            }
        );
        let _ = writeln!(s, "hessian_weight = {}", self.detector.hessian_weight);
        let _ = writeln!(
            s,
            "interpolation = {}",
            match self.detector.interpolation {
                InterpolationMode::Quadratic3D => "quadratic_3d",
                InterpolationMode::Independent1D => "independent_1d",
            }
        );
        let _ = writeln!(s, "border = {}", border_name(self.border));
        let _ = writeln!(
            s,
            "kernel = {}",
            match self.kernel.family {
                KernelFamily::HaarLike => "haar_like",
                KernelFamily::Symmetric => "symmetric",
            }
        );
        let _ = writeln!(s, "kernel_radius = {}", self.kernel.radius_at_unit_scale);
        let _ = writeln!(
            s,
            "orientation = {}",
            match self.orientation.variant {
                OrientationVariant::SlidingWindow => "sliding_window",
                OrientationVariant::AverageGradient => "average_gradient",
            }
        );
        let _ = writeln!(
            s,
            "orientation_radius = {}",
            self.orientation.sample_radius_scales
        );
        let _ = writeln!(
            s,
            "orientation_sigma = {}",
            self.orientation.gaussian_sigma_scales
        );
        let _ = writeln!(
            s,
            "descriptor = {}",
            match self.descriptor.variant {
                DescriptorVariant::NearestNeighbor => "nearest_neighbor",
                DescriptorVariant::OverlappingSubregions => "overlapping_subregions",
                DescriptorVariant::Bilinear => "bilinear",
            }
        );
        let _ = writeln!(
            s,
            "descriptor_sigma = {}",
            self.descriptor.global_sigma_scales
        );
        let _ = writeln!(
            s,
            "subregion_sigma = {}",
            self.descriptor.subregion_sigma_scales
        );
        s
    }

    /// Parses the `key = value` format. Unknown keys are errors; omitted
    /// keys keep their defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<VariantConfig> {
        let mut cfg = VariantConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ln = idx + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: ln,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |msg: String| Error::Parse { line: ln, msg };
            match key {
                "name" => cfg.name = value.to_string(),
                "octaves" => cfg.detector.octaves = parse_num(value, ln)?,
                "scales_per_octave" => cfg.detector.scales_per_octave = parse_num(value, ln)?,
                "base_filter_size" => cfg.detector.base_filter_size = parse_num(value, ln)?,
                "pixel_skip" => cfg.detector.pixel_skip = parse_num(value, ln)?,
                "nonmax_radius" => cfg.detector.nonmax_radius = parse_num(value, ln)?,
                "response_threshold" => cfg.detector.response_threshold = parse_num(value, ln)?,
                "max_features" => {
                    cfg.detector.max_features_hint = if value == "none" {
                        None
                    } else {
                        Some(parse_num(value, ln)?)
                    }
                }
                "hessian_weight" => cfg.detector.hessian_weight = parse_num(value, ln)?,
                "interpolation" => {
                    cfg.detector.interpolation = match value {
                        "quadratic_3d" => InterpolationMode::Quadratic3D,
                        "independent_1d" => InterpolationMode::Independent1D,
                        _ => return Err(bad(format!("unknown interpolation {value:?}"))),
                    }
                }
                "border" => {
                    cfg.border = parse_border(value)
                        .ok_or_else(|| bad(format!("unknown border policy {value:?}")))?;
                }
                "kernel" => {
                    cfg.kernel.family = match value {
                        "haar_like" => KernelFamily::HaarLike,
                        "symmetric" => KernelFamily::Symmetric,
                        _ => return Err(bad(format!("unknown kernel {value:?}"))),
                    }
                }
                "kernel_radius" => cfg.kernel.radius_at_unit_scale = parse_num(value, ln)?,
                "orientation" => {
                    cfg.orientation.variant = match value {
                        "sliding_window" => OrientationVariant::SlidingWindow,
                        "average_gradient" => OrientationVariant::AverageGradient,
                        _ => return Err(bad(format!("unknown orientation {value:?}"))),
                    }
                }
                "orientation_radius" => {
                    cfg.orientation.sample_radius_scales = parse_num(value, ln)?
                }
                "orientation_sigma" => {
                    cfg.orientation.gaussian_sigma_scales = parse_num(value, ln)?
                }
                "descriptor" => {
                    cfg.descriptor.variant = match value {
                        "nearest_neighbor" => DescriptorVariant::NearestNeighbor,
                        "overlapping_subregions" => DescriptorVariant::OverlappingSubregions,
                        "bilinear" => DescriptorVariant::Bilinear,
                        _ => return Err(bad(format!("unknown descriptor {value:?}"))),
                    }
                }
                "descriptor_sigma" => cfg.descriptor.global_sigma_scales = parse_num(value, ln)?,
                "subregion_sigma" => cfg.descriptor.subregion_sigma_scales = parse_num(value, ln)?,
                _ => return Err(bad(format!("unknown key {key:?}"))),
            }
        }
        cfg.detector.border_policy = cfg.border;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<VariantConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_config_string())?;
        Ok(())
    }
}

fn border_name(policy: BorderPolicy) -> &'static str {
    match policy {
        BorderPolicy::ZeroPixels => "zero_pixels",
        BorderPolicy::ZeroResponse => "zero_response",
        BorderPolicy::ClampEdge => "clamp_edge",
        BorderPolicy::Reflect => "reflect",
        BorderPolicy::Discard => "discard",
    }
}

fn parse_border(value: &str) -> Option<BorderPolicy> {
    Some(match value {
        "zero_pixels" => BorderPolicy::ZeroPixels,
        "zero_response" => BorderPolicy::ZeroResponse,
        "clamp_edge" => BorderPolicy::ClampEdge,
        "reflect" => BorderPolicy::Reflect,
        "discard" => BorderPolicy::Discard,
        _ => return None,
    })
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad numeric value {value:?}"),
    })
}
