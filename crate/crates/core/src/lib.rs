//! Eye-in-hand image-based visual servoing in simulation, plus the tooling
//! around a corner-keypoint dataset: edge-based auto-annotation, label-aware
//! augmentation, seeded splits, per-corner error metrics and a shape checker
//! for the regression network.

pub mod archcheck;
pub mod camera;
pub mod config;
pub mod datapipe;
pub mod kinematics;
pub mod linalg;
pub mod rng;
pub mod servo;
pub mod vision;
