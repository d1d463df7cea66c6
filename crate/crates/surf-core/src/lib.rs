//! SURF-64 interest point detection and region description where every
//! implementation choice that varies between published implementations is an
//! explicit, selectable strategy, plus the stability metrics and timing
//! protocol used to compare those strategies.
//!
//! The pipeline is the classic one: an integral image enables constant-time
//! box sums ([`integral`]), a fast-Hessian pyramid finds scale-space extrema
//! ([`detector`]), and each interest point gets an orientation and a
//! 64-element gradient-sum descriptor ([`descriptor`]). The parts that differ
//! between implementations in the wild are all configurable:
//!
//! - descriptor interpolation: nearest-neighbor, overlapping subregions, or
//!   bilinear spreading
//! - image border handling: zero pixels, zero response, clamp, reflect, or
//!   feature discard
//! - sub-pixel refinement: full 3D quadratic fit or independent 1D fits
//! - derivative kernel: Haar-like two-lobe or the centered symmetric operator
//! - orientation: sliding π/3 window or a single weighted gradient sum
//!
//! [`association`] and [`evaluation`] implement mutual-best-match scoring and
//! the modified repeatability measure used to rank strategy combinations;
//! [`timing`] implements the best-of-10 / median-of-11 speed protocol.

pub mod association;
pub mod config;
pub mod descriptor;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod formats;
pub mod image;
pub mod integral;
pub mod kernels;
pub mod synth;
pub mod timing;

pub use config::VariantConfig;
pub use descriptor::{Descriptor64, DescriptorStrategy, OrientationStrategy};
pub use detector::{DetectorConfig, InterestPoint};
pub use error::Error;
pub use image::GrayImage;
pub use integral::{BorderPolicy, IntegralImage, Rect};
pub use kernels::DerivativeKernel;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
