//! Quadrilateral corners from the extremal intercepts of edge pixels.
//!
//! Every edge pixel `(u, v)` is intersected with the two line families of
//! slope `±m`, giving intercepts `v + m·u` and `v − m·u`. The pixels with
//! the smallest and largest value of each intercept are the four corners of
//! a convex outline.
//!
//! Pixels that share the extreme intercept lie on one sweep line; the
//! middle one (ordered along that line) is taken, which keeps the result
//! consistent under image flips.

use crate::camera::PixelPoint;
use crate::datapipe::reorder_canonical;

use super::{EdgeMap, VisionError};

/// Corners in canonical order: TL, TR, BR, BL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerQuad([PixelPoint; 4]);

impl CornerQuad {
    pub const ROLE_NAMES: [&'static str; 4] = ["TL", "TR", "BR", "BL"];

    /// Wraps points already in TL, TR, BR, BL order. Use
    /// [`reorder_canonical`] for arbitrary input.
    pub const fn new(points: [PixelPoint; 4]) -> Self {
        Self(points)
    }

    pub fn points(&self) -> &[PixelPoint; 4] {
        &self.0
    }

    pub fn tl(&self) -> PixelPoint {
        self.0[0]
    }

    pub fn tr(&self) -> PixelPoint {
        self.0[1]
    }

    pub fn br(&self) -> PixelPoint {
        self.0[2]
    }

    pub fn bl(&self) -> PixelPoint {
        self.0[3]
    }

    pub fn map(&self, f: impl Fn(PixelPoint) -> PixelPoint) -> Self {
        Self(self.0.map(f))
    }

    /// Shoelace area (positive for clockwise-on-screen TL→TR→BR→BL).
    pub fn area(&self) -> f64 {
        let p = &self.0;
        0.5 * (0..4)
            .map(|i| {
                let (a, b) = (p[i], p[(i + 1) % 4]);
                a.u * b.v - b.u * a.v
            })
            .sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        (0..4).map(|i| self.0[i].distance(&self.0[(i + 1) % 4])).sum()
    }

    /// Largest per-corner Euclidean distance to `other`.
    pub fn max_corner_distance(&self, other: &CornerQuad) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }
}

/// Intercept band and spread used to reject near-ties between distant pixels.
///
/// When a side of the outline runs almost parallel to a sweep line, pixels
/// far apart along that side reach nearly the same extreme intercept and
/// jaggies decide which one wins. Such corners are reported as degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    pub slope: f64,
    /// Intercept distance from the extreme within which pixels count as tied.
    pub tie_band: f64,
    /// Largest allowed distance (px) between tied pixels and the chosen one.
    pub max_tie_spread: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            slope: 1.0,
            tie_band: 0.5,
            max_tie_spread: 8.0,
        }
    }
}

impl QuadParams {
    pub fn with_slope(slope: f64) -> Self {
        Self {
            slope,
            ..Self::default()
        }
    }
}

/// Extracts TL, TR, BR, BL with the default tie guard and slope `slope`.
pub fn extract_quadrilateral(edges: &EdgeMap, slope: f64) -> Result<CornerQuad, VisionError> {
    extract_quadrilateral_with(edges, &QuadParams::with_slope(slope))
}

pub fn extract_quadrilateral_with(edges: &EdgeMap, params: &QuadParams) -> Result<CornerQuad, VisionError> {
    let m = params.slope;
    if !(m > 0.0 && m.is_finite()) {
        return Err(VisionError::InvalidParameter(format!("slope {m} must be positive")));
    }
    let pixels: Vec<PixelPoint> = edges
        .edges()
        .map(|(x, y)| PixelPoint::new(x as f64, y as f64))
        .collect();
    if pixels.is_empty() {
        return Err(VisionError::NoTarget);
    }
    let plus = move |p: &PixelPoint| p.v + m * p.u;
    let minus = move |p: &PixelPoint| p.v - m * p.u;
    // TL, TR, BR, BL sweeps.
    let picks = [
        (extreme_on_sweep(&pixels, m, -1.0, true), -1.0, true),
        (extreme_on_sweep(&pixels, m, -1.0, false), -1.0, false),
        (extreme_on_sweep(&pixels, m, 1.0, true), 1.0, true),
        (extreme_on_sweep(&pixels, m, 1.0, false), 1.0, false),
    ];
    for (a, &(ia, _, _)) in picks.iter().enumerate() {
        for &(ib, _, _) in &picks[a + 1..] {
            if ia == ib {
                return Err(VisionError::DegenerateQuad(format!(
                    "{} extreme shares pixel ({}, {}) with another corner",
                    CornerQuad::ROLE_NAMES[a],
                    pixels[ia].u,
                    pixels[ia].v
                )));
            }
        }
    }
    for (role, &(idx, sign, use_plus)) in picks.iter().enumerate() {
        let key = |p: &PixelPoint| if use_plus { plus(p) } else { minus(p) };
        let extreme = key(&pixels[idx]);
        let spread = pixels
            .iter()
            .filter(|p| sign * (extreme - key(p)) <= params.tie_band)
            .map(|p| p.distance(&pixels[idx]))
            .fold(0.0, f64::max);
        if spread > params.max_tie_spread {
            return Err(VisionError::DegenerateQuad(format!(
                "{} extreme is ambiguous: tied pixels span {spread:.1} px",
                CornerQuad::ROLE_NAMES[role]
            )));
        }
    }
    let raw = picks.map(|(i, _, _)| pixels[i]);
    for i in 0..4 {
        let (a, b, c) = (raw[i], raw[(i + 1) % 4], raw[(i + 2) % 4]);
        let cross = (b.u - a.u) * (c.v - b.v) - (b.v - a.v) * (c.u - b.u);
        if cross == 0.0 {
            return Err(VisionError::DegenerateQuad("corner extremes are collinear".into()));
        }
    }
    reorder_canonical(&raw).map_err(|e| VisionError::DegenerateQuad(e.to_string()))
}

/// Index of the pixel with the smallest (`sign < 0`) or largest intercept;
/// exact ties resolve to the median along the sweep line, then to smaller
/// `v` and `u`.
fn extreme_on_sweep(pixels: &[PixelPoint], m: f64, sign: f64, use_plus: bool) -> usize {
    let key = |p: &PixelPoint| sign * if use_plus { p.v + m * p.u } else { p.v - m * p.u };
    let best = pixels.iter().map(key).fold(f64::NEG_INFINITY, f64::max);
    // Position along a line of slope ∓m.
    let along = |p: &PixelPoint| if use_plus { p.u - m * p.v } else { p.u + m * p.v };
    let mut tied: Vec<usize> = (0..pixels.len()).filter(|&i| key(&pixels[i]) == best).collect();
    tied.sort_by(|&a, &b| {
        let (pa, pb) = (&pixels[a], &pixels[b]);
        along(pa)
            .total_cmp(&along(pb))
            .then(pa.v.total_cmp(&pb.v))
            .then(pa.u.total_cmp(&pb.u))
    });
    tied[(tied.len() - 1) / 2]
}
