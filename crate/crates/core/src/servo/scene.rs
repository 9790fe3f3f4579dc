//! Virtual planar target standing in for the fiducial markers.

use nalgebra::{Vector3, Vector4};

use crate::config::{Config, ConfigError};

/// Joint configuration at which the default camera looks straight down on
/// the default target from about 0.14 m.
pub const NOMINAL_GOAL: [f64; 4] = [0.0, -0.3, 0.9, -2.17];

const COPLANAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("target needs at least one keypoint")]
    Empty,
    #[error("keypoint {index} lies {distance:e} m off the target plane")]
    NotCoplanar { index: usize, distance: f64 },
    #[error("target keypoints are collinear; plane is undefined")]
    Degenerate,
}

/// World-frame keypoints on a plane `normal · x = offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetScene {
    points: Vec<Vector3<f64>>,
    normal: Vector3<f64>,
    offset: f64,
}

impl TargetScene {
    /// Validates coplanarity (within 1e-9 m) and derives the plane.
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self, SceneError> {
        let first = *points.first().ok_or(SceneError::Empty)?;
        let normal = if points.len() < 3 {
            Vector3::z()
        } else {
            // Largest cross product among fan triangles gives a stable normal.
            let mut best = Vector3::zeros();
            for i in 1..points.len() {
                for j in i + 1..points.len() {
                    let n = (points[i] - first).cross(&(points[j] - first));
                    if n.norm() > best.norm() {
                        best = n;
                    }
                }
            }
            if best.norm() < 1e-15 {
                return Err(SceneError::Degenerate);
            }
            let n = best.normalize();
            if n.z < 0.0 {
                -n
            } else {
                n
            }
        };
        let offset = normal.dot(&first);
        for (index, p) in points.iter().enumerate() {
            let distance = (normal.dot(p) - offset).abs();
            if distance > COPLANAR_TOL {
                return Err(SceneError::NotCoplanar { index, distance });
            }
        }
        Ok(Self {
            points,
            normal,
            offset,
        })
    }

    /// Horizontal square of side `side` centred at `center`.
    ///
    /// Corners are ordered so that a camera looking down with image-up
    /// pointing along world +x sees them as TL, TR, BR, BL.
    pub fn square(center: Vector3<f64>, side: f64) -> Self {
        let h = side / 2.0;
        let points = vec![
            center + Vector3::new(h, h, 0.0),
            center + Vector3::new(h, -h, 0.0),
            center + Vector3::new(-h, -h, 0.0),
            center + Vector3::new(-h, h, 0.0),
        ];
        Self::new(points).expect("square is planar")
    }

    /// Reads `scene.points` (3·N floats) or `scene.center` + `scene.side`.
    pub fn from_config(cfg: &Config) -> Result<Self, ConfigError> {
        if let Some(raw) = cfg.floats("scene.points")? {
            if raw.is_empty() || raw.len() % 3 != 0 {
                return Err(ConfigError::Value {
                    key: "scene.points".into(),
                    value: cfg.get("scene.points").unwrap_or_default().into(),
                    reason: "expected x,y,z triples".into(),
                });
            }
            let points = raw.chunks(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();
            return Self::new(points).map_err(|e| ConfigError::Value {
                key: "scene.points".into(),
                value: cfg.get("scene.points").unwrap_or_default().into(),
                reason: e.to_string(),
            });
        }
        let center = cfg
            .float_array::<3>("scene.center")?
            .map(Vector3::from)
            .unwrap_or(DEFAULT_CENTER.into());
        let side = cfg.parsed_or("scene.side", DEFAULT_SIDE)?;
        Ok(Self::square(center, side))
    }

    pub fn is_config_key(key: &str) -> bool {
        matches!(key, "scene.points" | "scene.center" | "scene.side")
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Plane as `(unit normal, offset)` with `normal · x = offset`.
    pub fn plane(&self) -> (Vector3<f64>, f64) {
        (self.normal, self.offset)
    }
}

const DEFAULT_CENTER: [f64; 3] = [0.165, 0.0, 0.0];
const DEFAULT_SIDE: f64 = 0.04;

impl Default for TargetScene {
    fn default() -> Self {
        Self::square(DEFAULT_CENTER.into(), DEFAULT_SIDE)
    }
}

pub fn nominal_goal() -> Vector4<f64> {
    Vector4::from(NOMINAL_GOAL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_is_planar_and_horizontal() {
        let s = TargetScene::default();
        assert_eq!(s.len(), 4);
        let (n, off) = s.plane();
        assert!((n - Vector3::z()).norm() < 1e-15);
        assert!(off.abs() < 1e-15);
    }

    #[test]
    fn rejects_non_planar_points() {
        let pts = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(1.0, 1.0, 1e-6),
        ];
        assert!(matches!(
            TargetScene::new(pts),
            Err(SceneError::NotCoplanar { .. })
        ));
        assert_eq!(TargetScene::new(vec![]), Err(SceneError::Empty));
        let line = vec![Vector3::zeros(), Vector3::x(), Vector3::x() * 2.0];
        assert_eq!(TargetScene::new(line), Err(SceneError::Degenerate));
    }

    #[test]
    fn config_variants() {
        let cfg = Config::parse("scene.side = 0.05").unwrap();
        let s = TargetScene::from_config(&cfg).unwrap();
        assert!((s.points()[0].x - (0.165 + 0.025)).abs() < 1e-15);
        let cfg = Config::parse("scene.points = 0,0,0, 1,0,0, 0,1,0").unwrap();
        assert_eq!(TargetScene::from_config(&cfg).unwrap().len(), 3);
        let cfg = Config::parse("scene.points = 0,0,0, 1,0").unwrap();
        assert!(TargetScene::from_config(&cfg).is_err());
    }
}
