//! Denavit–Hartenberg kinematics of the 4-DOF OpenMANIPULATOR-X.
//!
//! Frames follow the standard (distal) convention: link `i` contributes
//! `Rz(θ_i + θ_i0) · Tz(d_i) · Tx(a_i) · Rx(α_i)`. Jacobians stack the
//! translational block (rows 0..3) above the rotational block (rows 3..6) so
//! they multiply joint rates into twists ordered `(v, ω)`.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6x4, Vector3, Vector4, Vector6};

use crate::config::{Config, ConfigError};
use crate::linalg::{damped_least_squares, Singular};

pub const NUM_JOINTS: usize = 4;

/// Default damping for joint-rate resolution.
pub const DEFAULT_DAMPING: f64 = 1e-3;
/// Default symmetric joint-rate limit (rad/s).
pub const DEFAULT_RATE_LIMIT: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("expected a {expected:?}-frame Jacobian, got {found:?}")]
    FrameMismatch { expected: Frame, found: Frame },
    #[error("joint-rate resolution is singular: {0}")]
    Singular(#[from] Singular),
    #[error("damping must be finite and non-negative, got {0}")]
    InvalidDamping(f64),
}

/// One row of a DH table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    /// Link length (m).
    pub a: f64,
    /// Link twist (rad).
    pub alpha: f64,
    /// Link offset (m).
    pub d: f64,
    /// Constant offset added to the joint variable (rad).
    pub theta_offset: f64,
}

impl DhRow {
    pub const fn new(a: f64, alpha: f64, d: f64, theta_offset: f64) -> Self {
        Self {
            a,
            alpha,
            d,
            theta_offset,
        }
    }
}

/// The four-row DH table of the arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhTable {
    pub rows: [DhRow; NUM_JOINTS],
}

impl DhTable {
    /// OpenMANIPULATOR-X link geometry.
    pub fn open_manipulator_x() -> Self {
        let shoulder = (128.0_f64 / 24.0).atan();
        Self {
            rows: [
                DhRow::new(0.0, std::f64::consts::FRAC_PI_2, 0.077, 0.0),
                DhRow::new(0.13, 0.0, 0.0, shoulder),
                DhRow::new(0.124, 0.0, 0.0, -shoulder),
                DhRow::new(0.126, 0.0, 0.0, 0.0),
            ],
        }
    }

    /// Overrides rows from `link<i>.a`, `link<i>.alpha`, `link<i>.d` and
    /// `link<i>.theta0` (i = 1..=4); missing keys keep the defaults.
    pub fn from_config(cfg: &Config) -> Result<Self, ConfigError> {
        let mut table = Self::open_manipulator_x();
        for (i, row) in table.rows.iter_mut().enumerate() {
            let prefix = format!("link{}", i + 1);
            row.a = cfg.parsed_or(&format!("{prefix}.a"), row.a)?;
            row.alpha = cfg.parsed_or(&format!("{prefix}.alpha"), row.alpha)?;
            row.d = cfg.parsed_or(&format!("{prefix}.d"), row.d)?;
            row.theta_offset = cfg.parsed_or(&format!("{prefix}.theta0"), row.theta_offset)?;
        }
        Ok(table)
    }

    pub fn is_config_key(key: &str) -> bool {
        let Some(rest) = key.strip_prefix("link") else {
            return false;
        };
        matches!(
            rest.split_once('.'),
            Some(("1" | "2" | "3" | "4", "a" | "alpha" | "d" | "theta0"))
        )
    }
}

impl Default for DhTable {
    fn default() -> Self {
        Self::open_manipulator_x()
    }
}

/// Joint angles (rad) and rates (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    pub q: Vector4<f64>,
    pub qdot: Vector4<f64>,
}

/// Rigid transform `x_parent = rotation · x_child + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidPose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidPose {
        let rt = self.rotation.transpose();
        RigidPose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Maps a point from this frame into the parent frame.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Maps a parent-frame point into this frame: `Rᵀ (p − t)`.
    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }

    /// Largest deviation from orthonormality with det = +1.
    pub fn orthonormality_error(&self) -> f64 {
        let r = &self.rotation;
        let gram = (r.transpose() * r - Matrix3::identity()).amax();
        gram.max((r.determinant() - 1.0).abs())
    }
}

impl Default for RigidPose {
    fn default() -> Self {
        Self::identity()
    }
}

pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Frame in which a Jacobian's twist is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    World,
    Camera,
}

/// 6×4 Jacobian mapping joint rates to a `(v, ω)` twist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianMatrix {
    pub entries: Matrix6x4<f64>,
    pub frame: Frame,
}

/// Fixed rotation from the end-effector frame to the camera frame.
///
/// Columns are the camera axes expressed in the end-effector frame. The
/// default points the optical axis (camera z) along the end-effector
/// approach axis (x4), image right along z4 and image down along −y4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraMount {
    pub rotation: Matrix3<f64>,
}

impl CameraMount {
    pub fn approach_aligned() -> Self {
        Self {
            rotation: Matrix3::new(0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0),
        }
    }

    /// Default mount followed by an extra rotation about the camera's own
    /// axes, `Rz(yaw) · Ry(pitch) · Rx(roll)`.
    pub fn with_adjustment(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            rotation: Self::approach_aligned().rotation * rot_z(yaw) * rot_y(pitch) * rot_x(roll),
        }
    }

    /// Reads `mount.roll`, `mount.pitch`, `mount.yaw` (rad, default 0).
    pub fn from_config(cfg: &Config) -> Result<Self, ConfigError> {
        Ok(Self::with_adjustment(
            cfg.parsed_or("mount.roll", 0.0)?,
            cfg.parsed_or("mount.pitch", 0.0)?,
            cfg.parsed_or("mount.yaw", 0.0)?,
        ))
    }

    pub fn is_config_key(key: &str) -> bool {
        matches!(key, "mount.roll" | "mount.pitch" | "mount.yaw")
    }
}

impl Default for CameraMount {
    fn default() -> Self {
        Self::approach_aligned()
    }
}

/// Homogeneous transform of a single DH row at joint value `theta`.
pub fn dh_transform(row: &DhRow, theta: f64) -> RigidPose {
    let (st, ct) = (theta + row.theta_offset).sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    RigidPose {
        rotation: Matrix3::new(ct, -st * ca, st * sa, st, ct * ca, -ct * sa, 0.0, sa, ca),
        translation: Vector3::new(row.a * ct, row.a * st, row.d),
    }
}

/// Cumulative frames `T_0 .. T_4`, with `T_0` the base (identity).
pub fn forward_kinematics(dh: &DhTable, q: &Vector4<f64>) -> [RigidPose; NUM_JOINTS + 1] {
    let mut frames = [RigidPose::identity(); NUM_JOINTS + 1];
    for (i, row) in dh.rows.iter().enumerate() {
        frames[i + 1] = frames[i].compose(&dh_transform(row, q[i]));
    }
    frames
}

/// World pose of the camera: end-effector frame composed with the mount.
pub fn camera_pose(dh: &DhTable, mount: &CameraMount, q: &Vector4<f64>) -> RigidPose {
    let ee = forward_kinematics(dh, q)[NUM_JOINTS];
    ee.compose(&RigidPose::new(mount.rotation, Vector3::zeros()))
}

/// World-frame geometric Jacobian of the end-effector origin.
pub fn geometric_jacobian(dh: &DhTable, q: &Vector4<f64>) -> JacobianMatrix {
    let frames = forward_kinematics(dh, q);
    let tip = frames[NUM_JOINTS].translation;
    let mut entries = Matrix6x4::zeros();
    for (i, frame) in frames[..NUM_JOINTS].iter().enumerate() {
        let axis: Vector3<f64> = frame.rotation.column(2).into();
        let linear = axis.cross(&(tip - frame.translation));
        entries.fixed_view_mut::<3, 1>(0, i).copy_from(&linear);
        entries.fixed_view_mut::<3, 1>(3, i).copy_from(&axis);
    }
    JacobianMatrix {
        entries,
        frame: Frame::World,
    }
}

/// Applies `blkdiag(r, r)` to both twist blocks of a Jacobian.
pub fn rotate_twist_blocks(entries: &Matrix6x4<f64>, r: &Matrix3<f64>) -> Matrix6x4<f64> {
    let mut out = Matrix6x4::zeros();
    out.fixed_view_mut::<3, 4>(0, 0)
        .copy_from(&(r * entries.fixed_view::<3, 4>(0, 0)));
    out.fixed_view_mut::<3, 4>(3, 0)
        .copy_from(&(r * entries.fixed_view::<3, 4>(3, 0)));
    out
}

/// Re-expresses a world-frame Jacobian in the camera frame using the
/// world-to-camera rotation `camera_pose.rotationᵀ`.
pub fn map_to_camera_frame(
    jacobian: &JacobianMatrix,
    camera_pose: &RigidPose,
) -> Result<JacobianMatrix, KinematicsError> {
    if jacobian.frame != Frame::World {
        return Err(KinematicsError::FrameMismatch {
            expected: Frame::World,
            found: jacobian.frame,
        });
    }
    Ok(JacobianMatrix {
        entries: rotate_twist_blocks(&jacobian.entries, &camera_pose.rotation.transpose()),
        frame: Frame::Camera,
    })
}

/// Damped least-squares joint rates `(JᵀJ + μ²I)⁻¹ Jᵀ V`.
///
/// The twist must be expressed in the Jacobian's frame. When any rate
/// exceeds `rate_limit` the whole vector is scaled down so the largest
/// magnitude equals the limit, keeping the direction of motion.
pub fn resolve_joint_rates(
    jacobian: &JacobianMatrix,
    twist: &Vector6<f64>,
    damping: f64,
    rate_limit: Option<f64>,
) -> Result<Vector4<f64>, KinematicsError> {
    if !(damping >= 0.0 && damping.is_finite()) {
        return Err(KinematicsError::InvalidDamping(damping));
    }
    let a = DMatrix::from_column_slice(6, NUM_JOINTS, jacobian.entries.as_slice());
    let b = DVector::from_column_slice(twist.as_slice());
    let x = damped_least_squares(&a, &b, damping)?;
    let mut qdot = Vector4::from_column_slice(x.as_slice());
    if let Some(limit) = rate_limit {
        let peak = qdot.amax();
        if peak > limit {
            qdot *= limit / peak;
        }
    }
    Ok(qdot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn zero_row_is_identity() {
        let pose = dh_transform(&DhRow::new(0.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(pose.rotation, Matrix3::identity());
        assert_eq!(pose.translation, Vector3::zeros());
    }

    #[test]
    fn first_row_lifts_and_twists() {
        let dh = DhTable::open_manipulator_x();
        let pose = dh_transform(&dh.rows[0], 0.0);
        assert_relative_eq!(pose.translation, Vector3::new(0.0, 0.0, 0.077), epsilon = 1e-15);
        assert_relative_eq!(pose.rotation, rot_x(FRAC_PI_2), epsilon = 1e-15);
    }

    #[test]
    fn second_row_matches_elementary_product() {
        let dh = DhTable::open_manipulator_x();
        let row = dh.rows[1];
        let pose = dh_transform(&row, 0.0);
        // Rz(θ0) · Tx(a) with d = α = 0.
        let th = (128.0_f64 / 24.0).atan();
        assert_relative_eq!(pose.rotation, rot_z(th), epsilon = 1e-15);
        assert_relative_eq!(
            pose.translation,
            Vector3::new(0.13 * th.cos(), 0.13 * th.sin(), 0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn table_defaults() {
        let dh = DhTable::default();
        let off = (128.0_f64 / 24.0).atan();
        assert_eq!(dh.rows[1].theta_offset, off);
        assert_eq!(dh.rows[2].theta_offset, -off);
        assert!(dh.rows.iter().all(|r| r.a >= 0.0 && r.d >= 0.0));
    }

    #[test]
    fn config_overrides_rows() {
        let cfg = Config::parse("link4.a = 0.2\nlink1.d = 0.1").unwrap();
        let dh = DhTable::from_config(&cfg).unwrap();
        assert_eq!(dh.rows[3].a, 0.2);
        assert_eq!(dh.rows[0].d, 0.1);
        assert_eq!(dh.rows[1], DhTable::default().rows[1]);
        assert!(DhTable::is_config_key("link3.theta0"));
        assert!(!DhTable::is_config_key("link5.a"));
        assert!(!DhTable::is_config_key("link1.b"));
    }

    #[test]
    fn base_joint_rotates_about_world_z() {
        let dh = DhTable::default();
        let p0 = forward_kinematics(&dh, &Vector4::zeros())[4].translation;
        let p1 = forward_kinematics(&dh, &Vector4::new(FRAC_PI_2, 0.0, 0.0, 0.0))[4].translation;
        assert_relative_eq!(p1.x, -p0.y, epsilon = 1e-12);
        assert_relative_eq!(p1.y, p0.x, epsilon = 1e-12);
        assert_relative_eq!(p1.z, p0.z, epsilon = 1e-12);
    }

    #[test]
    fn base_column_at_home() {
        let j = geometric_jacobian(&DhTable::default(), &Vector4::zeros());
        assert_eq!(j.frame, Frame::World);
        assert_relative_eq!(
            Vector3::from(j.entries.fixed_view::<3, 1>(3, 0)),
            Vector3::z(),
            epsilon = 1e-15
        );
        assert_eq!(j.entries[(2, 0)], 0.0);
    }

    #[test]
    fn identity_camera_pose_leaves_jacobian_unchanged() {
        let j = geometric_jacobian(&DhTable::default(), &Vector4::new(0.3, -0.2, 0.4, 0.1));
        let mapped = map_to_camera_frame(&j, &RigidPose::identity()).unwrap();
        assert_eq!(mapped.entries, j.entries);
        assert_eq!(mapped.frame, Frame::Camera);
        assert!(matches!(
            map_to_camera_frame(&mapped, &RigidPose::identity()),
            Err(KinematicsError::FrameMismatch { .. })
        ));
    }

    #[test]
    fn zero_twist_gives_zero_rates() {
        let j = geometric_jacobian(&DhTable::default(), &Vector4::new(0.1, 0.2, 0.3, 0.4));
        let qdot = resolve_joint_rates(&j, &Vector6::zeros(), DEFAULT_DAMPING, None).unwrap();
        assert_eq!(qdot, Vector4::zeros());
    }

    #[test]
    fn singular_configuration_without_damping_errors() {
        // Every column is identical when all links collapse onto the base axis.
        let dh = DhTable {
            rows: [DhRow::new(0.0, 0.0, 0.0, 0.0); 4],
        };
        let j = geometric_jacobian(&dh, &Vector4::zeros());
        let twist = Vector6::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            resolve_joint_rates(&j, &twist, 0.0, None),
            Err(KinematicsError::Singular(_))
        ));
        let qdot = resolve_joint_rates(&j, &twist, 1e-3, None).unwrap();
        assert!(qdot.iter().all(|v| v.is_finite()));
        assert!(matches!(
            resolve_joint_rates(&j, &twist, -1.0, None),
            Err(KinematicsError::InvalidDamping(_))
        ));
    }

    #[test]
    fn rate_limit_scales_uniformly() {
        let j = geometric_jacobian(&DhTable::default(), &Vector4::new(0.0, 0.2, 0.3, -0.6));
        let twist = Vector6::new(5.0, -3.0, 2.0, 1.0, 4.0, -2.0);
        let free = resolve_joint_rates(&j, &twist, DEFAULT_DAMPING, None).unwrap();
        let limited = resolve_joint_rates(&j, &twist, DEFAULT_DAMPING, Some(PI)).unwrap();
        assert!(free.amax() > PI);
        assert_relative_eq!(limited.amax(), PI, epsilon = 1e-12);
        assert_relative_eq!(limited.normalize(), free.normalize(), epsilon = 1e-12);
    }

    #[test]
    fn default_mount_is_a_rotation() {
        let m = CameraMount::default().rotation;
        assert_relative_eq!(m.determinant(), 1.0, epsilon = 1e-15);
        let adjusted = CameraMount::with_adjustment(0.1, -0.2, 0.3).rotation;
        assert!(RigidPose::new(adjusted, Vector3::zeros()).orthonormality_error() < 1e-12);
    }
}
