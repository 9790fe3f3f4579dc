//! Corner labels and the label CSV format
//! (`id,u1,v1,u2,v2,u3,v3,u4,v4,units`).

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::DatapipeError;
use crate::camera::PixelPoint;
use crate::vision::CornerQuad;

pub const CSV_HEADER: &str = "id,u1,v1,u2,v2,u3,v3,u4,v4,units";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Units {
    Pixels,
    Normalized,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Pixels => "pixels",
            Units::Normalized => "normalized",
        })
    }
}

impl FromStr for Units {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pixels" => Ok(Units::Pixels),
            "normalized" => Ok(Units::Normalized),
            other => Err(format!("unknown units {other:?}")),
        }
    }
}

/// Four corner labels of one image, TL, TR, BR, BL.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub id: String,
    pub corners: CornerQuad,
    pub units: Units,
}

impl LabeledImage {
    pub fn new(id: impl Into<String>, corners: CornerQuad, units: Units) -> Self {
        Self {
            id: id.into(),
            corners,
            units,
        }
    }

    pub fn require_units(&self, expected: Units) -> Result<(), DatapipeError> {
        if self.units == expected {
            Ok(())
        } else {
            Err(DatapipeError::Units {
                id: self.id.clone(),
                found: self.units,
                expected,
            })
        }
    }
}

/// `u' = u / W`, `v' = v / H`.
pub fn normalize_labels(item: &LabeledImage, width: u32, height: u32) -> Result<LabeledImage, DatapipeError> {
    item.require_units(Units::Pixels)?;
    let (w, h) = (f64::from(width), f64::from(height));
    Ok(LabeledImage {
        id: item.id.clone(),
        corners: item.corners.map(|p| PixelPoint::new(p.u / w, p.v / h)),
        units: Units::Normalized,
    })
}

pub fn denormalize_labels(item: &LabeledImage, width: u32, height: u32) -> Result<LabeledImage, DatapipeError> {
    item.require_units(Units::Normalized)?;
    let (w, h) = (f64::from(width), f64::from(height));
    Ok(LabeledImage {
        id: item.id.clone(),
        corners: item.corners.map(|p| PixelPoint::new(p.u * w, p.v * h)),
        units: Units::Pixels,
    })
}

pub fn write_labels_csv<W: Write>(mut out: W, items: &[LabeledImage]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for item in items {
        write!(out, "{}", item.id)?;
        for p in item.corners.points() {
            write!(out, ",{},{}", p.u, p.v)?;
        }
        writeln!(out, ",{}", item.units)?;
    }
    Ok(())
}

/// Reads a label CSV. Rows keep file order; duplicate ids are rejected.
/// Corner slots are taken as written, without reordering.
pub fn read_labels_csv<R: BufRead>(input: R) -> Result<Vec<LabeledImage>, DatapipeError> {
    let mut lines = input.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => {
            return Err(DatapipeError::Csv {
                line: 1,
                reason: "missing header".into(),
            })
        }
    };
    if header.trim() != CSV_HEADER {
        return Err(DatapipeError::Csv {
            line: 1,
            reason: format!("expected header {CSV_HEADER:?}"),
        });
    }
    let mut seen = HashSet::new();
    let mut items = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| DatapipeError::Csv {
            line: idx + 1,
            reason,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 10 {
            return Err(err(format!("expected 10 fields, got {}", fields.len())));
        }
        let mut values = [0.0; 8];
        for (slot, text) in values.iter_mut().zip(&fields[1..9]) {
            *slot = text.parse().map_err(|e| err(format!("{text:?}: {e}")))?;
        }
        let units: Units = fields[9].parse().map_err(err)?;
        let id = fields[0].to_string();
        if id.is_empty() {
            return Err(err("empty id".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(DatapipeError::DuplicateId(id));
        }
        let corners = CornerQuad::new([
            PixelPoint::new(values[0], values[1]),
            PixelPoint::new(values[2], values[3]),
            PixelPoint::new(values[4], values[5]),
            PixelPoint::new(values[6], values[7]),
        ]);
        items.push(LabeledImage { id, corners, units });
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn item(points: [(f64, f64); 4]) -> LabeledImage {
        LabeledImage::new(
            "img.pgm",
            CornerQuad::new(points.map(|(u, v)| PixelPoint::new(u, v))),
            Units::Pixels,
        )
    }

    #[test]
    fn midpoint_and_origin() {
        let it = item([(640.0, 360.0), (0.0, 0.0), (1280.0, 720.0), (320.0, 180.0)]);
        let n = normalize_labels(&it, 1280, 720).unwrap();
        assert_eq!(n.units, Units::Normalized);
        assert_eq!(n.corners.points()[0], PixelPoint::new(0.5, 0.5));
        assert_eq!(n.corners.points()[1], PixelPoint::new(0.0, 0.0));
        assert!(matches!(
            normalize_labels(&n, 1280, 720),
            Err(DatapipeError::Units { .. })
        ));
        assert!(denormalize_labels(&it, 1280, 720).is_err());
    }

    proptest! {
        #[test]
        fn normalization_round_trip(coords in prop::array::uniform8(0.0f64..1280.0)) {
            let it = item([
                (coords[0], coords[1] * 0.5625),
                (coords[2], coords[3] * 0.5625),
                (coords[4], coords[5] * 0.5625),
                (coords[6], coords[7] * 0.5625),
            ]);
            let back = denormalize_labels(&normalize_labels(&it, 1280, 720).unwrap(), 1280, 720).unwrap();
            for (a, b) in back.corners.points().iter().zip(it.corners.points()) {
                prop_assert!((a.u - b.u).abs() <= 1e-12 && (a.v - b.v).abs() <= 1e-12);
            }
        }

        #[test]
        fn csv_round_trip_is_exact(coords in prop::array::uniform8(-1e4f64..1e4)) {
            let it = item([
                (coords[0], coords[1]), (coords[2], coords[3]),
                (coords[4], coords[5]), (coords[6], coords[7]),
            ]);
            let mut buf = Vec::new();
            write_labels_csv(&mut buf, std::slice::from_ref(&it)).unwrap();
            let back = read_labels_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, vec![it]);
        }
    }

    #[test]
    fn csv_errors() {
        assert!(read_labels_csv("id,u1\n".as_bytes()).is_err());
        let dup = format!("{CSV_HEADER}\na,1,2,3,4,5,6,7,8,pixels\na,1,2,3,4,5,6,7,8,pixels\n");
        assert!(matches!(
            read_labels_csv(dup.as_bytes()),
            Err(DatapipeError::DuplicateId(_))
        ));
        let bad_units = format!("{CSV_HEADER}\na,1,2,3,4,5,6,7,8,inches\n");
        assert!(matches!(
            read_labels_csv(bad_units.as_bytes()),
            Err(DatapipeError::Csv { line: 2, .. })
        ));
        let short = format!("{CSV_HEADER}\na,1,2,3\n");
        assert!(read_labels_csv(short.as_bytes()).is_err());
    }
}
