//! Grayscale image storage and binary PGM (P5) I/O.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::Error;
use crate::Result;

/// Row-major grayscale image with real-valued intensities, nominally in
/// [0, 255]. Values are stored as `f64` so integral sums of 4096x4096 images
/// of 255s stay exact.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Wraps a row-major pixel buffer. The image must be non-empty, the
    /// buffer length must match, and every intensity must be finite.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "pixel buffer holds {} values, expected {}",
                pixels.len(),
                width * height
            )));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "pixel intensities must be finite".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Returns a copy with `offset` added to every pixel.
    pub fn offset(&self, offset: f64) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|v| v + offset).collect(),
        }
    }

    /// Returns a copy with every pixel multiplied by `k`.
    pub fn scale_intensity(&self, k: f64) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|v| v * k).collect(),
        }
    }

    /// Bilinear sample at real coordinates, clamping to the image edge.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let xc = x.clamp(0.0, (self.width - 1) as f64);
        let yc = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = xc.floor() as usize;
        let y0 = yc.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = xc - x0 as f64;
        let fy = yc - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bot = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bot * fy
    }
}

/// Reads an 8-bit binary PGM (magic `P5`, maxval <= 255).
pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    parse_pgm(&bytes)
}

fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;

    // Header tokens may be separated by whitespace and `#` comments.
    let next_token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::InvalidInput("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos)?;
    if magic != "P5" {
        return Err(Error::InvalidInput(format!(
            "unsupported image format (expected binary PGM magic P5, got {magic:?})"
        )));
    }
    let width: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::InvalidInput("bad PGM width".into()))?;
    let height: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::InvalidInput("bad PGM height".into()))?;
    let maxval: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| Error::InvalidInput("bad PGM maxval".into()))?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::InvalidInput(format!(
            "only 8-bit PGM supported (maxval {maxval})"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = width
        .checked_mul(height)
        .ok_or_else(|| Error::InvalidInput("PGM dimensions overflow".into()))?;
    if bytes.len() < pos + need {
        return Err(Error::InvalidInput(format!(
            "PGM raster truncated: need {need} bytes, have {}",
            bytes.len().saturating_sub(pos)
        )));
    }
    let pixels = bytes[pos..pos + need].iter().map(|&b| b as f64).collect();
    GrayImage::new(width, height, pixels)
}

/// Writes an 8-bit binary PGM, clamping and rounding intensities to 0..=255.
pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    let mut out = Vec::with_capacity(32 + image.width() * image.height());
    write!(out, "P5\n{} {}\n255\n", image.width(), image.height())?;
    out.extend(
        image
            .pixels()
            .iter()
            .map(|&v| (v + 0.5).clamp(0.0, 255.0) as u8),
    );
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_image() {
        assert!(matches!(
            GrayImage::new(0, 0, vec![]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            GrayImage::new(3, 0, vec![]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn rejects_wrong_buffer_length() {
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let dir = std::env::temp_dir().join("surf_core_pgm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.pgm");
        let img = GrayImage::from_fn(7, 5, |x, y| ((x * 13 + y * 31) % 256) as f64).unwrap();
        write_pgm(&path, &img).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_header_comments() {
        let mut data = b"P5\n# a comment\n2 2\n255\n".to_vec();
        data.extend_from_slice(&[0, 64, 128, 255]);
        let img = parse_pgm(&data).unwrap();
        assert_eq!(img.get(1, 1), 255.0);
        assert_eq!(img.get(1, 0), 64.0);
    }

    #[test]
    fn pgm_bad_magic() {
        assert!(parse_pgm(b"P2\n2 2\n255\n....").is_err());
    }

    #[test]
    fn bilinear_sampling_midpoint() {
        let img = GrayImage::new(2, 1, vec![0.0, 10.0]).unwrap();
        assert!((img.sample_bilinear(0.5, 0.0) - 5.0).abs() < 1e-12);
    }
}
