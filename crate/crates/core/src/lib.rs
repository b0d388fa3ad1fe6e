//! Polar-parametrized surround-view 3D detection primitives.
//!
//! Boxes are described around the ego vehicle by radial distance and an
//! azimuth `(sin, cos)` pair instead of cartesian `(x, y)`. This crate holds
//! the deterministic machinery that goes with that parametrization:
//!
//! - [`geometry`]: box encodings, polar/cartesian boxes, velocity decomposition.
//! - [`camera`]: pinhole cameras, symmetric surround-view rigs, pixel rays.
//! - [`sampling`]: bilinear feature sampling with the out-of-view zero rule.
//! - [`assignment`]: polar matching cost, perception range, Hungarian solver.
//! - [`loss`]: focal + polar L1 matching loss with analytic gradients.
//! - [`simulator`]: synthetic scenes and noisy detections.
//! - [`tracker`]: closest-distance tracking-by-detection.
//! - [`eval`]: TP errors, center-distance AP and NDS.
//! - [`io`]: the scene / detections JSON formats.
//!
//! Frame conventions used everywhere: the ego frame is right-handed with
//! x forward, y left, z up; azimuth is measured from +x counter-clockwise.
//! Camera frames use +z along the optical axis, +x right, +y down.

pub mod assignment;
pub mod camera;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod loss;
pub mod sampling;
pub mod simulator;
pub mod tracker;

pub use assignment::{Assignment, ClassCost, CostMatrix, PerceptionRange};
pub use camera::{CameraModel, EgoPose, Intrinsics, PixelPoint, Ray, Rig, RigidTransform};
pub use error::{Error, Result};
pub use eval::{NdsInput, TpErrors};
pub use geometry::{BoxEncoding, CartesianBox, CartesianVelocity, PolarBox, PolarVelocity, RangeConfig};
pub use loss::{Gradient, LossBreakdown, LossConfig};
pub use sampling::{FeatureMap, FeatureSample};
pub use simulator::{Detection, DetectionSet, NoiseModel, Scene, SceneConfig};
pub use tracker::{Track, TrackerConfig, TrackerState};
