//! Image-based visual servoing in simulation.
//!
//! Each loop iteration renders the target from the current camera pose,
//! computes the camera twist `V = λ L⁺ (p* − p)` from the stacked point
//! interaction matrices, maps it to joint rates through the camera-frame
//! arm Jacobian and Euler-integrates the joints.

pub mod plot;
pub mod scene;
pub mod trace;

use nalgebra::{DMatrix, DVector, Vector3, Vector4, Vector6};

use crate::camera::{self, CameraError, CameraIntrinsics, PixelPoint};
use crate::config::{Config, ConfigError};
use crate::kinematics::{
    camera_pose, geometric_jacobian, map_to_camera_frame, resolve_joint_rates, CameraMount,
    DhTable, KinematicsError, RigidPose, DEFAULT_DAMPING, DEFAULT_RATE_LIMIT,
};
use crate::linalg::{damped_least_squares, Singular};

pub use scene::TargetScene;
pub use trace::{ServoTrace, TraceRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServoError {
    #[error("current and desired feature sets differ in size ({current} vs {desired})")]
    FeatureCount { current: usize, desired: usize },
    #[error("feature set is empty")]
    NoFeatures,
    #[error("stacked interaction matrix is singular: {0}")]
    Singular(#[from] Singular),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("keypoint {index} is not visible: {source}")]
    NotVisible { index: usize, source: CameraError },
    #[error("goal features are not all inside the image")]
    GoalOutOfView,
    #[error("feature {feature} left the image at iteration {iteration}")]
    OutOfView {
        iteration: usize,
        feature: usize,
        trace: Box<ServoTrace>,
    },
    #[error("invalid servo configuration: {0}")]
    InvalidConfig(String),
}

/// Ordered pixel features with the depth used for each interaction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub points: Vec<PixelPoint>,
    pub depths: Vec<f64>,
}

impl FeatureSet {
    pub fn new(points: Vec<PixelPoint>, depths: Vec<f64>) -> Self {
        debug_assert_eq!(points.len(), depths.len());
        Self { points, depths }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same points, every depth replaced by `depth`.
    pub fn with_constant_depth(&self, depth: f64) -> Self {
        Self {
            points: self.points.clone(),
            depths: vec![depth; self.points.len()],
        }
    }
}

/// Camera velocity, translational then angular.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub v: Vector3<f64>,
    pub omega: Vector3<f64>,
}

impl Twist {
    pub fn from_vector(x: &Vector6<f64>) -> Self {
        Self {
            v: Vector3::new(x[0], x[1], x[2]),
            omega: Vector3::new(x[3], x[4], x[5]),
        }
    }

    pub fn to_vector(self) -> Vector6<f64> {
        Vector6::new(
            self.v.x,
            self.v.y,
            self.v.z,
            self.omega.x,
            self.omega.y,
            self.omega.z,
        )
    }
}

/// Depth fed to the interaction matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DepthMode {
    /// Ground-truth camera-frame depth of each keypoint.
    True,
    /// A single constant estimate for every keypoint.
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoConfig {
    /// Control gain (1/s).
    pub lambda: f64,
    /// Integration step (s).
    pub dt: f64,
    pub iterations: usize,
    /// Total pixel error below which an early stop is allowed.
    pub stop_tolerance: f64,
    /// Stop once the error falls below `stop_tolerance` instead of running
    /// the fixed number of iterations.
    pub early_stop: bool,
    /// Damping for both the twist and the joint-rate least-squares solves.
    pub damping: f64,
    pub rate_limit: Option<f64>,
    pub depth_mode: DepthMode,
}

impl Default for ServoConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            dt: 0.005,
            iterations: 1500,
            stop_tolerance: 0.5,
            early_stop: false,
            damping: DEFAULT_DAMPING,
            rate_limit: Some(DEFAULT_RATE_LIMIT),
            depth_mode: DepthMode::True,
        }
    }
}

impl ServoConfig {
    pub fn validate(&self) -> Result<(), ServoError> {
        let bad = |m: &str| Err(ServoError::InvalidConfig(m.to_string()));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if !(self.damping >= 0.0) {
            return bad("damping must be non-negative");
        }
        if let Some(limit) = self.rate_limit {
            if !(limit > 0.0) {
                return bad("rate limit must be positive");
            }
        }
        if let DepthMode::Constant(z) = self.depth_mode {
            if !(z > 0.0 && z.is_finite()) {
                return bad("constant depth must be positive");
            }
        }
        Ok(())
    }

    /// Reads the `servo.*` keys; `servo.rate_limit = none` disables clamping.
    pub fn from_config(cfg: &Config) -> Result<Self, ConfigError> {
        let d = Self::default();
        let rate_limit = match cfg.get("servo.rate_limit") {
            Some("none") => None,
            Some(_) => cfg.parsed("servo.rate_limit")?,
            None => d.rate_limit,
        };
        let depth_mode = match cfg.get("servo.depth_mode").unwrap_or("true") {
            "true" => DepthMode::True,
            "constant" => DepthMode::Constant(cfg.parsed("servo.z_star")?.ok_or_else(|| {
                ConfigError::Value {
                    key: "servo.z_star".into(),
                    value: String::new(),
                    reason: "required when servo.depth_mode = constant".into(),
                }
            })?),
            other => {
                return Err(ConfigError::Value {
                    key: "servo.depth_mode".into(),
                    value: other.into(),
                    reason: "expected `true` or `constant`".into(),
                })
            }
        };
        Ok(Self {
            lambda: cfg.parsed_or("servo.lambda", d.lambda)?,
            dt: cfg.parsed_or("servo.dt", d.dt)?,
            iterations: cfg.parsed_or("servo.iterations", d.iterations)?,
            stop_tolerance: cfg.parsed_or("servo.stop_tol", d.stop_tolerance)?,
            early_stop: cfg.parsed_or("servo.early_stop", d.early_stop)?,
            damping: cfg.parsed_or("servo.damping", d.damping)?,
            rate_limit,
            depth_mode,
        })
    }

    pub fn is_config_key(key: &str) -> bool {
        matches!(
            key,
            "servo.lambda"
                | "servo.dt"
                | "servo.iterations"
                | "servo.stop_tol"
                | "servo.early_stop"
                | "servo.damping"
                | "servo.rate_limit"
                | "servo.depth_mode"
                | "servo.z_star"
        )
    }
}

/// Arm, camera and target of one simulation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ServoRig {
    pub dh: DhTable,
    pub mount: CameraMount,
    pub intrinsics: CameraIntrinsics,
    pub scene: TargetScene,
}

impl ServoRig {
    pub fn camera_pose(&self, q: &Vector4<f64>) -> RigidPose {
        camera_pose(&self.dh, &self.mount, q)
    }

    pub fn render(&self, q: &Vector4<f64>) -> Result<FeatureSet, ServoError> {
        render_scene_features(&self.camera_pose(q), &self.scene, &self.intrinsics)
    }

    /// Renders at `q` and checks that every feature lands on the sensor.
    pub fn visible(&self, q: &Vector4<f64>) -> bool {
        self.render(q)
            .map(|f| f.points.iter().all(|p| self.intrinsics.contains(p)))
            .unwrap_or(false)
    }
}

/// `V = λ · L⁺ · (p* − p)` with `L` the stacked interaction matrices of the
/// current features (in feature order) and `L⁺` a damped pseudoinverse.
pub fn control_law(
    current: &FeatureSet,
    desired: &FeatureSet,
    k: &CameraIntrinsics,
    lambda: f64,
    damping: f64,
) -> Result<Twist, ServoError> {
    if current.len() != desired.len() {
        return Err(ServoError::FeatureCount {
            current: current.len(),
            desired: desired.len(),
        });
    }
    if current.is_empty() {
        return Err(ServoError::NoFeatures);
    }
    let n = current.len();
    let mut stacked = DMatrix::zeros(2 * n, 6);
    let mut error = DVector::zeros(2 * n);
    for (i, (p, z)) in current.points.iter().zip(&current.depths).enumerate() {
        let l = camera::interaction_matrix(p, *z, k)?;
        stacked.view_mut((2 * i, 0), (2, 6)).copy_from(&l.entries);
        error[2 * i] = desired.points[i].u - p.u;
        error[2 * i + 1] = desired.points[i].v - p.v;
    }
    let x = damped_least_squares(&stacked, &error, damping)?;
    Ok(Twist::from_vector(&Vector6::from_column_slice(
        (x * lambda).as_slice(),
    )))
}

/// Projects the target from `camera_pose`; depths are true camera-frame z.
pub fn render_scene_features(
    camera_pose: &RigidPose,
    scene: &TargetScene,
    k: &CameraIntrinsics,
) -> Result<FeatureSet, ServoError> {
    let mut points = Vec::with_capacity(scene.len());
    let mut depths = Vec::with_capacity(scene.len());
    for (index, pw) in scene.points().iter().enumerate() {
        let pc = camera_pose.inverse_transform_point(pw);
        let p = camera::project(&pc, k).map_err(|source| ServoError::NotVisible { index, source })?;
        points.push(p);
        depths.push(pc.z);
    }
    Ok(FeatureSet { points, depths })
}

/// Per-feature and stacked Euclidean pixel error norms.
pub fn error_norms(current: &FeatureSet, desired: &FeatureSet) -> (Vec<f64>, f64) {
    let per: Vec<f64> = current
        .points
        .iter()
        .zip(&desired.points)
        .map(|(p, d)| p.distance(d))
        .collect();
    let total = per.iter().map(|e| e * e).sum::<f64>().sqrt();
    (per, total)
}

/// Servo from `q_start` toward the image seen at `q_goal`.
pub fn run_servo(
    cfg: &ServoConfig,
    rig: &ServoRig,
    q_start: &Vector4<f64>,
    q_goal: &Vector4<f64>,
) -> Result<ServoTrace, ServoError> {
    let desired = rig.render(q_goal)?;
    if !desired.points.iter().all(|p| rig.intrinsics.contains(p)) {
        return Err(ServoError::GoalOutOfView);
    }
    run_servo_to_features(cfg, rig, q_start, &desired)
}

/// Servo from `q_start` toward explicit desired pixels.
pub fn run_servo_to_features(
    cfg: &ServoConfig,
    rig: &ServoRig,
    q_start: &Vector4<f64>,
    desired: &FeatureSet,
) -> Result<ServoTrace, ServoError> {
    cfg.validate()?;
    if desired.len() != rig.scene.len() {
        return Err(ServoError::FeatureCount {
            current: rig.scene.len(),
            desired: desired.len(),
        });
    }
    let mut trace = ServoTrace::new(desired.clone());
    let mut q = *q_start;
    for iteration in 0..cfg.iterations {
        let pose = rig.camera_pose(&q);
        let current = render_scene_features(&pose, &rig.scene, &rig.intrinsics)?;
        if let Some(feature) = current
            .points
            .iter()
            .position(|p| !rig.intrinsics.contains(p))
        {
            return Err(ServoError::OutOfView {
                iteration,
                feature,
                trace: Box::new(trace),
            });
        }
        let (per_feature, total) = error_norms(&current, desired);
        let control_features = match cfg.depth_mode {
            DepthMode::True => current.clone(),
            DepthMode::Constant(z) => current.with_constant_depth(z),
        };
        let twist = control_law(
            &control_features,
            desired,
            &rig.intrinsics,
            cfg.lambda,
            cfg.damping,
        )?;
        let jacobian = map_to_camera_frame(&geometric_jacobian(&rig.dh, &q), &pose)?;
        let qdot = resolve_joint_rates(&jacobian, &twist.to_vector(), cfg.damping, cfg.rate_limit)?;
        trace.records.push(TraceRecord {
            iteration,
            time: iteration as f64 * cfg.dt,
            q,
            qdot,
            pixels: current.points,
            depths: current.depths,
            feature_errors: per_feature,
            total_error: total,
            twist,
        });
        if cfg.early_stop && total < cfg.stop_tolerance {
            break;
        }
        q += qdot * cfg.dt;
    }
    Ok(trace)
}

/// Everything the `servo` command needs, read from one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ServoSetup {
    pub config: ServoConfig,
    pub rig: ServoRig,
    pub q_start: Vector4<f64>,
    pub q_goal: Vector4<f64>,
}

impl ServoSetup {
    /// `servo.q_start` defaults to the goal offset by (0.1, 0.1, -0.1, 0.1).
    pub fn from_config(cfg: &Config) -> Result<Self, ConfigError> {
        let q_goal = cfg
            .float_array::<4>("servo.q_goal")?
            .map(Vector4::from)
            .unwrap_or_else(scene::nominal_goal);
        let q_start = cfg
            .float_array::<4>("servo.q_start")?
            .map(Vector4::from)
            .unwrap_or_else(|| q_goal + Vector4::new(0.1, 0.1, -0.1, 0.1));
        Ok(Self {
            config: ServoConfig::from_config(cfg)?,
            rig: ServoRig {
                dh: DhTable::from_config(cfg)?,
                mount: CameraMount::from_config(cfg)?,
                intrinsics: CameraIntrinsics::from_config(cfg)?,
                scene: TargetScene::from_config(cfg)?,
            },
            q_start,
            q_goal,
        })
    }

    pub fn is_config_key(key: &str) -> bool {
        matches!(key, "servo.q_start" | "servo.q_goal")
            || ServoConfig::is_config_key(key)
            || DhTable::is_config_key(key)
            || CameraMount::is_config_key(key)
            || CameraIntrinsics::is_config_key(key)
            || TargetScene::is_config_key(key)
    }
}
