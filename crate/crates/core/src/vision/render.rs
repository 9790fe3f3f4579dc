//! Synthetic filled quadrilaterals with known corners.

use super::{CornerQuad, RasterImage, VisionError};
use crate::rng::ShiftRng;

const EDGE_EPS: f64 = 1e-9;

/// Optional photometric perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RenderOptions {
    /// Standard deviation of additive Gaussian noise (gray levels).
    pub noise_sigma: f64,
    /// Additive linear shading, gray levels per pixel along u and v,
    /// zero at the image centre.
    pub shading: (f64, f64),
    pub seed: u64,
}

fn validate(width: usize, height: usize, corners: &CornerQuad, fg: u8, bg: u8) -> Result<(), VisionError> {
    if width == 0 || height == 0 {
        return Err(VisionError::Dimensions(format!("{width}x{height}")));
    }
    if fg == bg {
        return Err(VisionError::InvalidParameter("foreground equals background".into()));
    }
    let p = corners.points();
    for q in p {
        if !(q.u >= 0.0 && q.v >= 0.0 && q.u <= (width - 1) as f64 && q.v <= (height - 1) as f64) {
            return Err(VisionError::InvalidQuad(format!(
                "corner ({}, {}) outside {width}x{height}",
                q.u, q.v
            )));
        }
    }
    let mut sign = 0.0;
    for i in 0..4 {
        let (a, b, c) = (p[i], p[(i + 1) % 4], p[(i + 2) % 4]);
        let cross = (b.u - a.u) * (c.v - b.v) - (b.v - a.v) * (c.u - b.u);
        if cross.abs() <= EDGE_EPS || (sign != 0.0 && cross.signum() != sign) {
            return Err(VisionError::InvalidQuad("corners are not strictly convex".into()));
        }
        sign = cross.signum();
    }
    Ok(())
}

/// Column span `[lo, hi]` of the quad on row `y`, if any.
fn row_span(corners: &CornerQuad, y: f64) -> Option<(f64, f64)> {
    let p = corners.points();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..4 {
        let (a, b) = (p[i], p[(i + 1) % 4]);
        let (vmin, vmax) = (a.v.min(b.v), a.v.max(b.v));
        if y < vmin - EDGE_EPS || y > vmax + EDGE_EPS {
            continue;
        }
        if (b.v - a.v).abs() <= EDGE_EPS {
            lo = lo.min(a.u.min(b.u));
            hi = hi.max(a.u.max(b.u));
        } else {
            let t = ((y - a.v) / (b.v - a.v)).clamp(0.0, 1.0);
            let u = a.u + t * (b.u - a.u);
            lo = lo.min(u);
            hi = hi.max(u);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Gray image with pixel centres inside or on the quad set to `fg`.
pub fn render_quad(
    width: usize,
    height: usize,
    corners: &CornerQuad,
    fg: u8,
    bg: u8,
) -> Result<RasterImage, VisionError> {
    render_quad_with(width, height, corners, fg, bg, &RenderOptions::default())
}

pub fn render_quad_with(
    width: usize,
    height: usize,
    corners: &CornerQuad,
    fg: u8,
    bg: u8,
    opts: &RenderOptions,
) -> Result<RasterImage, VisionError> {
    validate(width, height, corners, fg, bg)?;
    let mut img = RasterImage::filled(width, height, 1, bg);
    for y in 0..height {
        if let Some((lo, hi)) = row_span(corners, y as f64) {
            let x0 = (lo - EDGE_EPS).ceil().max(0.0) as usize;
            let x1 = (hi + EDGE_EPS).floor().min((width - 1) as f64);
            if x1 < 0.0 {
                continue;
            }
            for x in x0..=x1 as usize {
                img.set(x, y, 0, fg);
            }
        }
    }
    let (su, sv) = opts.shading;
    if opts.noise_sigma > 0.0 || su != 0.0 || sv != 0.0 {
        let mut rng = ShiftRng::new(opts.seed);
        let (cu, cv) = (width as f64 / 2.0, height as f64 / 2.0);
        for y in 0..height {
            for x in 0..width {
                let mut value = f64::from(img.get(x, y, 0)) + su * (x as f64 - cu) + sv * (y as f64 - cv);
                if opts.noise_sigma > 0.0 {
                    value += opts.noise_sigma * rng.gaussian();
                }
                img.set(x, y, 0, value.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::PixelPoint;

    fn quad(raw: [(f64, f64); 4]) -> CornerQuad {
        CornerQuad::new(raw.map(|(u, v)| PixelPoint::new(u, v)))
    }

    fn fg_count(img: &RasterImage, fg: u8) -> usize {
        img.data().iter().filter(|&&v| v == fg).count()
    }

    #[test]
    fn full_rectangle_leaves_only_border() {
        let img = render_quad(20, 10, &quad([(1.0, 1.0), (18.0, 1.0), (18.0, 8.0), (1.0, 8.0)]), 200, 10).unwrap();
        for y in 0..10 {
            for x in 0..20 {
                let border = x == 0 || y == 0 || x == 19 || y == 9;
                assert_eq!(img.get(x, y, 0) == 200, !border, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn area_matches_shoelace_within_perimeter() {
        let q = quad([(12.3, 8.1), (70.6, 15.4), (61.2, 52.9), (5.5, 40.2)]);
        let img = render_quad(80, 60, &q, 255, 0).unwrap();
        let count = fg_count(&img, 255) as f64;
        assert!((count - q.area().abs()).abs() <= q.perimeter(), "{count} vs {}", q.area());
    }

    #[test]
    fn rejects_invalid_quads() {
        let concave = quad([(10.0, 10.0), (30.0, 20.0), (50.0, 10.0), (30.0, 50.0)]);
        assert!(matches!(
            render_quad(64, 64, &concave, 255, 0),
            Err(VisionError::InvalidQuad(_))
        ));
        let outside = quad([(10.0, 10.0), (70.0, 10.0), (50.0, 40.0), (10.0, 40.0)]);
        assert!(render_quad(64, 64, &outside, 255, 0).is_err());
        let ok = quad([(10.0, 10.0), (50.0, 10.0), (50.0, 40.0), (10.0, 40.0)]);
        assert!(render_quad(64, 64, &ok, 9, 9).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let q = quad([(10.0, 10.0), (50.0, 10.0), (50.0, 40.0), (10.0, 40.0)]);
        let opts = RenderOptions {
            noise_sigma: 5.0,
            shading: (0.2, -0.1),
            seed: 11,
        };
        let a = render_quad_with(64, 64, &q, 180, 60, &opts).unwrap();
        let b = render_quad_with(64, 64, &q, 180, 60, &opts).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, render_quad(64, 64, &q, 180, 60).unwrap());
    }
}
