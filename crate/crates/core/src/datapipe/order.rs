//! Canonical TL, TR, BR, BL corner ordering.

use std::cmp::Ordering;

use super::DatapipeError;
use crate::camera::PixelPoint;
use crate::vision::CornerQuad;

/// Compares by `key`, breaking ties toward smaller `v` and then smaller `u`.
fn prefer(a: &PixelPoint, b: &PixelPoint, key: impl Fn(&PixelPoint) -> f64) -> Ordering {
    key(a)
        .total_cmp(&key(b))
        .then_with(|| a.v.total_cmp(&b.v))
        .then_with(|| a.u.total_cmp(&b.u))
}

pub(crate) fn argmin_by(points: &[PixelPoint], key: impl Fn(&PixelPoint) -> f64 + Copy) -> usize {
    (0..points.len())
        .min_by(|&i, &j| prefer(&points[i], &points[j], key))
        .expect("non-empty")
}

/// Largest `key`; ties still prefer smaller `v`, then smaller `u`.
pub(crate) fn argmax_by(points: &[PixelPoint], key: impl Fn(&PixelPoint) -> f64 + Copy) -> usize {
    argmin_by(points, move |p| -key(p))
}

/// Assigns TL = argmin(u+v), TR = argmax(u−v), BR = argmax(u+v),
/// BL = argmin(u−v).
pub fn reorder_canonical(points: &[PixelPoint; 4]) -> Result<CornerQuad, DatapipeError> {
    for i in 0..4 {
        for j in i + 1..4 {
            if points[i] == points[j] {
                return Err(DatapipeError::AmbiguousOrder(format!(
                    "points {} and {} coincide at ({}, {})",
                    i + 1,
                    j + 1,
                    points[i].u,
                    points[i].v
                )));
            }
        }
    }
    let sum = |p: &PixelPoint| p.u + p.v;
    let diff = |p: &PixelPoint| p.u - p.v;
    let roles = [
        argmin_by(points, sum),
        argmax_by(points, diff),
        argmax_by(points, sum),
        argmin_by(points, diff),
    ];
    for a in 0..4 {
        for b in a + 1..4 {
            if roles[a] == roles[b] {
                return Err(DatapipeError::AmbiguousOrder(format!(
                    "{} and {} both map to point {}",
                    CornerQuad::ROLE_NAMES[a],
                    CornerQuad::ROLE_NAMES[b],
                    roles[a] + 1
                )));
            }
        }
    }
    Ok(CornerQuad::new(roles.map(|i| points[i])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(raw: [(f64, f64); 4]) -> [PixelPoint; 4] {
        raw.map(|(u, v)| PixelPoint::new(u, v))
    }

    #[test]
    fn scrambled_rectangle() {
        let q = reorder_canonical(&pts([(10.0, 10.0), (50.0, 10.0), (10.0, 30.0), (50.0, 30.0)])).unwrap();
        assert_eq!(
            q.points(),
            &pts([(10.0, 10.0), (50.0, 10.0), (50.0, 30.0), (10.0, 30.0)])
        );
        assert_eq!(q.br(), PixelPoint::new(50.0, 30.0));
    }

    #[test]
    fn idempotent() {
        let q = reorder_canonical(&pts([(30.0, 5.0), (3.0, 40.0), (60.0, 20.0), (35.0, 70.0)])).unwrap();
        assert_eq!(reorder_canonical(q.points()).unwrap(), q);
    }

    #[test]
    fn collisions_are_errors() {
        // Collinear points: the last one is both TR and BR.
        let err = reorder_canonical(&pts([(0.0, 0.0), (10.0, 1.0), (20.0, 2.0), (30.0, 3.0)]));
        assert!(matches!(err, Err(DatapipeError::AmbiguousOrder(_))), "{err:?}");
        let dup = reorder_canonical(&pts([(0.0, 0.0), (0.0, 0.0), (1.0, 5.0), (5.0, 1.0)]));
        assert!(matches!(dup, Err(DatapipeError::AmbiguousOrder(_))));
    }

    #[test]
    fn ties_prefer_smaller_v() {
        // Diamond: TL candidates (0,5) and (5,0) tie on u+v = 5.
        let q = reorder_canonical(&pts([(5.0, 0.0), (10.0, 5.0), (5.0, 10.0), (0.0, 5.0)]));
        // TL -> (5,0) by the tie rule; TR ties between (5,0) and (10,5) and
        // also resolves to (5,0).
        assert!(matches!(q, Err(DatapipeError::AmbiguousOrder(_))));
    }
}
