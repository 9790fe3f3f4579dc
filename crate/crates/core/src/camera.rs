//! Pinhole camera and point-feature interaction matrix.
//!
//! Everything is expressed in pixels: focal lengths are in pixels and the
//! pixel pitch is carried as metadata only.

use nalgebra::{Matrix2x6, Vector2, Vector3};

use crate::config::{Config, ConfigError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CameraError {
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("feature depth must be positive and finite, got {0}")]
    InvalidDepth(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
}

/// ZED mini left-camera calibration at 1280×720.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub u0: f64,
    pub v0: f64,
    pub fu: f64,
    pub fv: f64,
    /// Pixel pitch (m).
    pub rho: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            u0: 617.930,
            v0: 366.566,
            fu: 686.015,
            fv: 681.838,
            rho: 4e-6,
            width: 1280,
            height: 720,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), CameraError> {
        let ok = self.fu > 0.0
            && self.fv > 0.0
            && self.fu.is_finite()
            && self.fv.is_finite()
            && self.u0 >= 0.0
            && self.u0 < f64::from(self.width)
            && self.v0 >= 0.0
            && self.v0 < f64::from(self.height);
        if ok {
            Ok(())
        } else {
            Err(CameraError::InvalidIntrinsics(format!("{self:?}")))
        }
    }

    pub fn from_config(cfg: &Config) -> Result<Self, ConfigError> {
        let d = Self::default();
        Ok(Self {
            u0: cfg.parsed_or("cam.u0", d.u0)?,
            v0: cfg.parsed_or("cam.v0", d.v0)?,
            fu: cfg.parsed_or("cam.fu", d.fu)?,
            fv: cfg.parsed_or("cam.fv", d.fv)?,
            rho: cfg.parsed_or("cam.rho", d.rho)?,
            width: cfg.parsed_or("cam.width", d.width)?,
            height: cfg.parsed_or("cam.height", d.height)?,
        })
    }

    pub fn is_config_key(key: &str) -> bool {
        matches!(
            key,
            "cam.u0" | "cam.v0" | "cam.fu" | "cam.fv" | "cam.rho" | "cam.width" | "cam.height"
        )
    }

    /// Whether a pixel lies on the sensor, `0 ≤ u < width`, `0 ≤ v < height`.
    pub fn contains(&self, p: &PixelPoint) -> bool {
        p.u >= 0.0 && p.v >= 0.0 && p.u < f64::from(self.width) && p.v < f64::from(self.height)
    }

    /// Pixel to normalized image coordinates.
    pub fn normalize(&self, p: &PixelPoint) -> (f64, f64) {
        ((p.u - self.u0) / self.fu, (p.v - self.v0) / self.fv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.u, self.v)
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// 2×6 map from camera twist `(v, ω)` to pixel velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionMatrix {
    pub entries: Matrix2x6<f64>,
}

pub fn project(point_cam: &Vector3<f64>, k: &CameraIntrinsics) -> Result<PixelPoint, CameraError> {
    if !(point_cam.z > 0.0) {
        return Err(CameraError::BehindCamera(point_cam.z));
    }
    Ok(PixelPoint {
        u: k.u0 + k.fu * point_cam.x / point_cam.z,
        v: k.v0 + k.fv * point_cam.y / point_cam.z,
    })
}

/// Camera-frame point at depth `depth` along the ray through `p`.
pub fn backproject(p: &PixelPoint, depth: f64, k: &CameraIntrinsics) -> Vector3<f64> {
    let (x, y) = k.normalize(p);
    Vector3::new(x * depth, y * depth, depth)
}

/// Point-feature interaction matrix in pixel units, `diag(f_u, f_v) · L_x`.
pub fn interaction_matrix(
    p: &PixelPoint,
    depth: f64,
    k: &CameraIntrinsics,
) -> Result<InteractionMatrix, CameraError> {
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(CameraError::InvalidDepth(depth));
    }
    let (x, y) = k.normalize(p);
    let iz = 1.0 / depth;
    #[rustfmt::skip]
    let lx = Matrix2x6::new(
        -iz, 0.0, x * iz, x * y, -(1.0 + x * x), y,
        0.0, -iz, y * iz, 1.0 + y * y, -x * y, -x,
    );
    let mut entries = lx;
    entries.row_mut(0).scale_mut(k.fu);
    entries.row_mut(1).scale_mut(k.fv);
    Ok(InteractionMatrix { entries })
}
