//! Text file formats for interest points and descriptors.
//!
//! Points file: first line is the count, then one `x y scale sign` line per
//! point. Descriptor file: first line is `count 64`, then one
//! `x y scale angle v1 .. v64` line per feature. Floats are written in
//! shortest round-trip form, so identical data produces identical bytes.

use std::fmt::Write as _;

use crate::descriptor::DescribedFeature;
use crate::detector::InterestPoint;
use crate::error::Error;
use crate::Result;

pub fn format_points(points: &[InterestPoint]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", points.len());
    for p in points {
        let _ = writeln!(s, "{} {} {} {}", p.x, p.y, p.scale, p.sign);
    }
    s
}

pub fn parse_points(text: &str) -> Result<Vec<InterestPoint>> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty points file".into(),
    })?;
    let count: usize = first.trim().parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("bad point count {first:?}"),
    })?;
    let mut points = Vec::with_capacity(count);
    for (idx, line) in lines {
        let ln = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected `x y scale sign`, got {} fields", fields.len()),
            });
        }
        let num = |k: usize| -> Result<f64> {
            fields[k].parse().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("bad number {:?}", fields[k]),
            })
        };
        let (x, y, scale) = (num(0)?, num(1)?, num(2)?);
        let sign: i8 = fields[3].parse().map_err(|_| Error::Parse {
            line: ln,
            msg: format!("bad sign {:?}", fields[3]),
        })?;
        if !(-1..=1).contains(&sign) {
            return Err(Error::Parse {
                line: ln,
                msg: format!("sign must be -1, 0, or 1, got {sign}"),
            });
        }
        if scale.is_nan() || scale <= 0.0 {
            return Err(Error::Parse {
                line: ln,
                msg: format!("scale must be positive, got {scale}"),
            });
        }
        points.push(InterestPoint {
            x,
            y,
            scale,
            sign,
            response: 0.0,
        });
    }
    if points.len() != count {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: format!("header promised {count} points, found {}", points.len()),
        });
    }
    Ok(points)
}

pub fn format_descriptors(features: &[DescribedFeature]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} 64", features.len());
    for f in features {
        let _ = write!(
            s,
            "{} {} {} {}",
            f.point.x, f.point.y, f.point.scale, f.descriptor.orientation
        );
        for v in &f.descriptor.values {
            let _ = write!(s, " {v}");
        }
        let _ = writeln!(s);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::Descriptor64;

    fn pt(x: f64, y: f64, scale: f64, sign: i8) -> InterestPoint {
        InterestPoint {
            x,
            y,
            scale,
            sign,
            response: 0.5,
        }
    }

    #[test]
    fn points_round_trip() {
        let pts = vec![pt(1.25, -0.5, 2.4, 1), pt(100.0, 200.125, 13.2, -1)];
        let parsed = parse_points(&format_points(&pts)).unwrap();
        assert_eq!(parsed.len(), 2);
        for (a, b) in pts.iter().zip(parsed.iter()) {
            assert_eq!((a.x, a.y, a.scale, a.sign), (b.x, b.y, b.scale, b.sign));
        }
    }

    #[test]
    fn empty_points_file_round_trip() {
        let parsed = parse_points(&format_points(&[])).unwrap();
        assert!(parsed.is_empty());
    }

    #[test]
    fn parse_errors_name_the_line() {
        match parse_points("2\n1 2 3 1\n4 5 nope 0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_points("1\n1 2 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_points("3\n1 2 3 1\n").is_err()); // count mismatch
    }

    #[test]
    fn descriptor_file_shape() {
        let f = DescribedFeature {
            point: pt(3.0, 4.0, 1.5, 1),
            descriptor: Descriptor64 {
                values: [0.125; 64],
                orientation: -1.5,
            },
        };
        let text = format_descriptors(&[f]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("1 64"));
        let fields: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
        assert_eq!(fields.len(), 4 + 64);
        assert_eq!(fields[0], "3");
        assert_eq!(fields[3], "-1.5");
        assert!(fields[4..].iter().all(|&v| v == "0.125"));
    }
}
