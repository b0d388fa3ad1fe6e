//! Pinhole cameras, surround-view rigs and temporal projection.
//!
//! Extrinsics map ego coordinates into the camera frame (`p_cam = R p + t`).
//! The camera frame has +z along the optical axis, +x right and +y down.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::PolarBox;

/// Points closer than this to the image plane (or behind it) are culled.
pub const DEPTH_EPSILON: f64 = 1e-6;

const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let t = Self { rotation, translation };
        t.validate()?;
        Ok(t)
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::new(x, y, z) }
    }

    /// Pure rotation about +z by `yaw` radians.
    pub fn from_yaw(yaw: f64) -> Self {
        Self { rotation: rotation_z(yaw), translation: Vector3::zeros() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rotation.iter().chain(self.translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rigid transform"));
        }
        let gram = self.rotation.transpose() * self.rotation;
        let off = (gram - Matrix3::identity()).abs().max();
        let det = self.rotation.determinant();
        if off > ORTHONORMAL_TOL || (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidConfig(format!(
                "rotation is not a proper orthonormal matrix (|RᵀR - I| = {off:e}, det = {det})"
            )));
        }
        Ok(())
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn rotation_row_major(&self) -> [f64; 9] {
        let r = &self.rotation;
        [r[(0, 0)], r[(0, 1)], r[(0, 2)], r[(1, 0)], r[(1, 1)], r[(1, 2)], r[(2, 0)], r[(2, 1)], r[(2, 2)]]
    }
}

pub fn rotation_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn validate(&self) -> Result<()> {
        if [self.fx, self.fy, self.cx, self.cy].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("intrinsics"));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidConfig("focal lengths must be positive".into()));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub intrinsics: Intrinsics,
    /// Ego to camera.
    pub extrinsics: RigidTransform,
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    pub fn new(intrinsics: Intrinsics, extrinsics: RigidTransform, width: u32, height: u32) -> Result<Self> {
        let cam = Self { intrinsics, extrinsics, width, height };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        self.extrinsics.validate()?;
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig("image size must be positive".into()));
        }
        Ok(())
    }

    /// Optical center in the ego frame.
    pub fn center(&self) -> Vector3<f64> {
        self.extrinsics.inverse().translation
    }

    pub fn contains_pixel(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && u < self.width as f64 && v >= 0.0 && v < self.height as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rig {
    pub cameras: Vec<CameraModel>,
}

impl Rig {
    pub fn new(cameras: Vec<CameraModel>) -> Result<Self> {
        if cameras.is_empty() {
            return Err(Error::InvalidConfig("a rig needs at least one camera".into()));
        }
        for c in &cameras {
            c.validate()?;
        }
        Ok(Self { cameras })
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    /// Projects an ego-frame point into every view.
    pub fn project_all(&self, point: [f64; 3]) -> Result<Vec<Option<PixelPoint>>> {
        self.cameras.iter().enumerate().map(|(k, cam)| project_to_view(point, cam, k)).collect()
    }
}

/// Maps current-frame ego coordinates to a past frame's ego coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoPose {
    pub transform: RigidTransform,
    /// Seconds between the two frames.
    pub dt: f64,
}

impl EgoPose {
    pub fn identity() -> Self {
        Self { transform: RigidTransform::identity(), dt: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
    /// Distance along the optical axis.
    pub depth: f64,
    pub view: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    pub direction: Vector3<f64>,
}

impl Ray {
    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.origin + self.direction * t
    }

    pub fn distance_to(&self, p: &Vector3<f64>) -> f64 {
        let d = p - self.origin;
        (d - self.direction * d.dot(&self.direction)).norm()
    }
}

/// Projects an ego-frame point into view `view`. Returns `None` when the point
/// is behind the camera or lands outside `[0, W) x [0, H)`.
pub fn project_to_view(point: [f64; 3], cam: &CameraModel, view: usize) -> Result<Option<PixelPoint>> {
    if point.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("projected point"));
    }
    let pc = cam.extrinsics.apply(&Vector3::from(point));
    let depth = pc.z;
    if depth <= DEPTH_EPSILON {
        return Ok(None);
    }
    let k = &cam.intrinsics;
    let u = k.fx * pc.x / depth + k.cx;
    let v = k.fy * pc.y / depth + k.cy;
    if !cam.contains_pixel(u, v) {
        return Ok(None);
    }
    Ok(Some(PixelPoint { u, v, depth, view }))
}

/// Projects the geometric center of a polar box.
pub fn project_polar_center(b: &PolarBox, cam: &CameraModel, view: usize) -> Result<Option<PixelPoint>> {
    project_to_view(b.center_3d(), cam, view)
}

/// The ray from the optical center through pixel `(u, v)`, in ego coordinates.
pub fn pixel_ray(u: f64, v: f64, cam: &CameraModel) -> Result<Ray> {
    if !u.is_finite() || !v.is_finite() {
        return Err(Error::NonFinite("pixel"));
    }
    let k = &cam.intrinsics;
    let d_cam = Vector3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0).normalize();
    let cam_to_ego = cam.extrinsics.inverse();
    Ok(Ray { origin: cam_to_ego.translation, direction: cam_to_ego.apply_vector(&d_cam).normalize() })
}

/// Ego-to-camera rotation for a camera looking along ego +x
/// (camera x = -ego y, camera y = -ego z, camera z = ego x).
pub fn forward_camera_rotation() -> Matrix3<f64> {
    Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0)
}

/// Builds a rig of `count` identical cameras; camera `k` (0-based) is yawed by
/// `2πk/count` about ego z and mounted at `mount` rotated by the same yaw.
pub fn make_symmetric_rig(
    count: usize,
    intrinsics: Intrinsics,
    width: u32,
    height: u32,
    mount: [f64; 3],
) -> Result<Rig> {
    if count < 2 {
        return Err(Error::InvalidConfig(format!("a symmetric rig needs at least 2 cameras, got {count}")));
    }
    let base = forward_camera_rotation();
    let mount = Vector3::from(mount);
    let cameras = (0..count)
        .map(|k| {
            let yaw = TAU * k as f64 / count as f64;
            let rotation = base * rotation_z(-yaw);
            let center = rotation_z(yaw) * mount;
            let extrinsics = RigidTransform { rotation, translation: -(rotation * center) };
            CameraModel::new(intrinsics, extrinsics, width, height)
        })
        .collect::<Result<Vec<_>>>()?;
    Rig::new(cameras)
}

/// A six-camera rig with nuScenes-like 1600x900 images and ~70° horizontal FOV.
pub fn default_surround_rig() -> Rig {
    let intrinsics = Intrinsics { fx: 1260.0, fy: 1260.0, cx: 800.0, cy: 450.0 };
    make_symmetric_rig(6, intrinsics, 1600, 900, [1.0, 0.0, 1.5]).expect("static rig parameters are valid")
}

/// Projects a current-frame point into a past frame of view `view`.
pub fn temporal_project(point: [f64; 3], cam: &CameraModel, view: usize, pose: &EgoPose) -> Result<Option<PixelPoint>> {
    if point.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("projected point"));
    }
    let past = pose.transform.apply(&Vector3::from(point));
    project_to_view([past.x, past.y, past.z], cam, view)
}

/// Worst-case disagreement between projecting `p` into view `k` and projecting
/// `p` rotated by one rig step into view `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub points: usize,
    pub view_pairs: usize,
    /// View pairs where the rotated point fell outside the next view.
    pub lost_after_rotation: usize,
    pub max_pixel_discrepancy: f64,
    pub max_depth_discrepancy: f64,
}

/// Samples `points` ego-frame points visible in at least one camera and checks
/// that rotating them by `2π/len` about ego z moves each projection to the next view.
pub fn check_view_symmetry(rig: &Rig, points: usize, seed: u64) -> Result<SymmetryReport> {
    if rig.len() < 2 {
        return Err(Error::InvalidConfig("view symmetry needs at least 2 cameras".into()));
    }
    let step = rotation_z(TAU / rig.len() as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SymmetryReport {
        points: 0,
        view_pairs: 0,
        lost_after_rotation: 0,
        max_pixel_discrepancy: 0.0,
        max_depth_discrepancy: 0.0,
    };
    while report.points < points {
        let p = Vector3::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(-2.0..3.0));
        let q = step * p;
        let mut visible = false;
        for (k, cam) in rig.cameras.iter().enumerate() {
            let Some(a) = project_to_view([p.x, p.y, p.z], cam, k)? else {
                continue;
            };
            visible = true;
            report.view_pairs += 1;
            let next = (k + 1) % rig.len();
            match project_to_view([q.x, q.y, q.z], &rig.cameras[next], next)? {
                Some(b) => {
                    let px = (a.u - b.u).abs().max((a.v - b.v).abs());
                    report.max_pixel_discrepancy = report.max_pixel_discrepancy.max(px);
                    report.max_depth_discrepancy = report.max_depth_discrepancy.max((a.depth - b.depth).abs());
                }
                None => report.lost_after_rotation += 1,
            }
        }
        if visible {
            report.points += 1;
        }
    }
    Ok(report)
}
