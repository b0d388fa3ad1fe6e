//! Synthetic surround-view scenes and noisy detections.
//!
//! Objects move with constant world velocity; the ego vehicle follows a
//! configured trajectory. Every frame stores its objects in that frame's
//! ego coordinates together with the ego pose relative to frame 0.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::camera::{default_surround_rig, make_symmetric_rig, rotation_z, EgoPose, Intrinsics, Rig, RigidTransform};
use crate::error::{Error, Result};
use crate::geometry::{
    cartesian_to_polar, rotate_xy, velocity_cartesian_to_polar, wrap_angle, CartesianBox, CartesianVelocity, PolarBox,
    PolarVelocity,
};

/// Object classes produced by the simulator, indexed by class id.
pub const CLASS_NAMES: [&str; 4] = ["car", "truck", "pedestrian", "bicycle"];

/// Nominal `(length, width, height)` per class.
const CLASS_SIZES: [[f64; 3]; 4] = [[4.6, 1.9, 1.7], [7.0, 2.5, 3.0], [0.7, 0.7, 1.8], [1.8, 0.6, 1.3]];

/// Ground plane height in the ego frame.
const GROUND_Z: f64 = -0.5;

/// Objects are never placed closer than this to the ego origin.
pub const MIN_PLACEMENT_RADIUS: f64 = 2.0;

pub fn num_classes() -> usize {
    CLASS_NAMES.len()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtObject {
    pub id: u64,
    pub class: usize,
    pub bbox: CartesianBox,
    pub velocity: CartesianVelocity,
}

impl GtObject {
    pub fn polar(&self) -> Result<(PolarBox, PolarVelocity)> {
        let p = cartesian_to_polar(&self.bbox)?;
        let v = velocity_cartesian_to_polar(self.velocity, p.sin_azimuth, p.cos_azimuth)?;
        Ok((p, v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    /// Maps this frame's ego coordinates into frame 0's ego coordinates.
    pub ego_pose: RigidTransform,
    pub objects: Vec<GtObject>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub rig: Rig,
    pub frames: Vec<Frame>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        for w in self.frames.windows(2) {
            // written so that NaN timestamps are rejected too
            if w[1].t.partial_cmp(&w[0].t) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::InvalidConfig("frame timestamps must be strictly increasing".into()));
            }
        }
        for f in &self.frames {
            f.ego_pose.validate()?;
            let mut ids: Vec<u64> = f.objects.iter().map(|o| o.id).collect();
            ids.sort_unstable();
            if ids.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidConfig(format!("duplicate object id in frame at t={}", f.t)));
            }
            for o in &f.objects {
                o.bbox.validate()?;
            }
        }
        Ok(())
    }

    /// Transform from frame `n` ego coordinates into frame `n - 1`.
    pub fn motion_to_previous(&self, n: usize) -> Option<EgoPose> {
        let prev = self.frames.get(n.checked_sub(1)?)?;
        let cur = self.frames.get(n)?;
        Some(motion_between(&prev.ego_pose, cur.t - prev.t, &cur.ego_pose))
    }
}

/// Ego motion from the frame with pose `cur_pose` back to the one with `prev_pose`.
pub fn motion_between(prev_pose: &RigidTransform, dt: f64, cur_pose: &RigidTransform) -> EgoPose {
    EgoPose { transform: prev_pose.inverse().compose(cur_pose), dt }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EgoTrajectory {
    Static,
    Straight {
        speed: f64,
    },
    /// Constant speed and yaw rate (rad/s), counter-clockwise positive.
    Arc {
        speed: f64,
        yaw_rate: f64,
    },
}

impl EgoTrajectory {
    /// Ego pose at time `t` in frame-0 coordinates.
    pub fn pose_at(&self, t: f64) -> RigidTransform {
        match *self {
            EgoTrajectory::Static => RigidTransform::identity(),
            EgoTrajectory::Straight { speed } => RigidTransform::from_translation(speed * t, 0.0, 0.0),
            EgoTrajectory::Arc { speed, yaw_rate: 0.0 } => RigidTransform::from_translation(speed * t, 0.0, 0.0),
            EgoTrajectory::Arc { speed, yaw_rate } => {
                let yaw = yaw_rate * t;
                let radius = speed / yaw_rate;
                RigidTransform {
                    rotation: rotation_z(yaw),
                    translation: Vector3::new(radius * yaw.sin(), radius * (1.0 - yaw.cos()), 0.0),
                }
            }
        }
    }

    pub fn heading_at(&self, t: f64) -> f64 {
        match *self {
            EgoTrajectory::Arc { yaw_rate, .. } => yaw_rate * t,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub objects: usize,
    pub frames: usize,
    pub dt: f64,
    pub seed: u64,
    pub r_max: f64,
    pub min_speed: f64,
    pub max_speed: f64,
    pub cameras: usize,
    pub trajectory: EgoTrajectory,
    /// Omit objects outside `r_max` from the frames where that happens.
    pub clip_to_range: bool,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            objects: 10,
            frames: 20,
            dt: 0.5,
            seed: 0,
            r_max: 50.0,
            min_speed: 0.0,
            max_speed: 10.0,
            cameras: 6,
            trajectory: EgoTrajectory::Static,
            clip_to_range: true,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.frames == 0 {
            return bad("at least one frame is required");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.r_max.is_finite() && self.r_max > MIN_PLACEMENT_RADIUS) {
            return bad("r_max must exceed the minimum placement radius of 2 m");
        }
        if !(self.min_speed >= 0.0 && self.max_speed >= self.min_speed && self.max_speed.is_finite()) {
            return bad("speeds must satisfy 0 <= min_speed <= max_speed");
        }
        if self.cameras < 2 {
            return bad("a symmetric rig needs at least 2 cameras");
        }
        let traj_ok = match self.trajectory {
            EgoTrajectory::Static => true,
            EgoTrajectory::Straight { speed } => speed.is_finite(),
            EgoTrajectory::Arc { speed, yaw_rate } => speed.is_finite() && yaw_rate.is_finite(),
        };
        if !traj_ok {
            return bad("trajectory parameters must be finite");
        }
        Ok(())
    }
}

fn rig_for(cameras: usize) -> Result<Rig> {
    if cameras == 6 {
        return Ok(default_surround_rig());
    }
    let intrinsics = Intrinsics { fx: 1260.0, fy: 1260.0, cx: 800.0, cy: 450.0 };
    make_symmetric_rig(cameras, intrinsics, 1600, 900, [1.0, 0.0, 1.5])
}

struct WorldObject {
    id: u64,
    class: usize,
    position: [f64; 2],
    z: f64,
    size: [f64; 3],
    yaw: f64,
    velocity: [f64; 2],
}

/// Generates a deterministic scene for `cfg`.
pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let world: Vec<WorldObject> = (0..cfg.objects)
        .map(|i| {
            let class = rng.random_range(0..num_classes());
            let r = rng.random_range(MIN_PLACEMENT_RADIUS..cfg.r_max);
            let azimuth = rng.random_range(0.0..TAU);
            let scale = [rng.random_range(0.9..1.1), rng.random_range(0.9..1.1), rng.random_range(0.9..1.1)];
            let size =
                [CLASS_SIZES[class][0] * scale[0], CLASS_SIZES[class][1] * scale[1], CLASS_SIZES[class][2] * scale[2]];
            let speed = if cfg.max_speed > cfg.min_speed {
                rng.random_range(cfg.min_speed..cfg.max_speed)
            } else {
                cfg.min_speed
            };
            let heading = rng.random_range(0.0..TAU);
            WorldObject {
                id: i as u64,
                class,
                position: [r * azimuth.cos(), r * azimuth.sin()],
                z: GROUND_Z + size[2] / 2.0,
                size,
                yaw: wrap_angle(heading),
                velocity: [speed * heading.cos(), speed * heading.sin()],
            }
        })
        .collect();

    let frames = (0..cfg.frames)
        .map(|n| {
            let t = n as f64 * cfg.dt;
            let pose = cfg.trajectory.pose_at(t);
            let heading = cfg.trajectory.heading_at(t);
            let to_ego = pose.inverse();
            let objects = world
                .iter()
                .filter_map(|o| {
                    let pw = Vector3::new(o.position[0] + t * o.velocity[0], o.position[1] + t * o.velocity[1], o.z);
                    let pe = to_ego.apply(&pw);
                    let ve = to_ego.apply_vector(&Vector3::new(o.velocity[0], o.velocity[1], 0.0));
                    let r = pe.x.hypot(pe.y);
                    if r == 0.0 || (cfg.clip_to_range && r > cfg.r_max) {
                        return None;
                    }
                    Some(GtObject {
                        id: o.id,
                        class: o.class,
                        bbox: CartesianBox {
                            x: pe.x,
                            y: pe.y,
                            z: pe.z,
                            length: o.size[0],
                            width: o.size[1],
                            height: o.size[2],
                            yaw: wrap_angle(o.yaw - heading),
                        },
                        velocity: CartesianVelocity { vx: ve.x, vy: ve.y },
                    })
                })
                .collect();
            Frame { t, ego_pose: pose, objects }
        })
        .collect();

    Ok(Scene { rig: rig_for(cfg.cameras)?, frames })
}

/// Rotates the whole scene about frame 0's ego z axis by `phi`. Ego-frame
/// object positions, velocities and yaws rotate by `phi`; the rig is kept.
pub fn rotate_scene(scene: &Scene, phi: f64) -> Scene {
    let rz = RigidTransform::from_yaw(phi);
    let frames = scene
        .frames
        .iter()
        .map(|f| Frame {
            t: f.t,
            ego_pose: rz.compose(&f.ego_pose).compose(&rz.inverse()),
            objects: f
                .objects
                .iter()
                .map(|o| {
                    let [x, y] = rotate_xy([o.bbox.x, o.bbox.y], phi);
                    let [vx, vy] = rotate_xy([o.velocity.vx, o.velocity.vy], phi);
                    GtObject {
                        bbox: CartesianBox { x, y, yaw: wrap_angle(o.bbox.yaw + phi), ..o.bbox },
                        velocity: CartesianVelocity { vx, vy },
                        ..*o
                    }
                })
                .collect(),
        })
        .collect();
    Scene { rig: scene.rig.clone(), frames }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFrame {
    /// Radial and tangential-angle perturbations.
    #[default]
    Polar,
    /// Independent x/y perturbations with the radial standard deviation.
    Cartesian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Metres; also the per-axis std in the cartesian frame.
    pub sigma_radial: f64,
    /// Azimuth perturbation in radians.
    pub sigma_tangential: f64,
    pub sigma_z: f64,
    /// Relative std of each box dimension (multiplicative, floored at 1e-3).
    pub sigma_size: f64,
    /// Radians.
    pub sigma_yaw: f64,
    /// Metres per second, per velocity component.
    pub sigma_velocity: f64,
    pub drop_prob: f64,
    /// Expected number of false positives per frame.
    pub fp_rate: f64,
    /// False positives are placed uniformly over the disc of this radius.
    pub fp_range: f64,
    pub seed: u64,
    pub frame: NoiseFrame,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma_radial: 0.0,
            sigma_tangential: 0.0,
            sigma_z: 0.0,
            sigma_size: 0.0,
            sigma_yaw: 0.0,
            sigma_velocity: 0.0,
            drop_prob: 0.0,
            fp_rate: 0.0,
            fp_range: 50.0,
            seed: 0,
            frame: NoiseFrame::Polar,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let sigmas = [
            self.sigma_radial,
            self.sigma_tangential,
            self.sigma_z,
            self.sigma_size,
            self.sigma_yaw,
            self.sigma_velocity,
            self.fp_rate,
        ];
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidConfig("noise parameters must be finite and nonnegative".into()));
        }
        if !(self.fp_range.is_finite() && self.fp_range > 1.0) {
            return Err(Error::InvalidConfig("fp_range must exceed 1 m".into()));
        }
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::InvalidProbability(self.drop_prob));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub polar: PolarBox,
    pub class: usize,
    pub probs: Vec<f64>,
    pub velocity: PolarVelocity,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFrame {
    pub t: f64,
    pub ego_pose: RigidTransform,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionSet {
    pub frames: Vec<DetectionFrame>,
}

impl DetectionSet {
    pub fn motion_to_previous(&self, n: usize) -> Option<EgoPose> {
        let prev = self.frames.get(n.checked_sub(1)?)?;
        let cur = self.frames.get(n)?;
        Some(motion_between(&prev.ego_pose, cur.t - prev.t, &cur.ego_pose))
    }
}

/// Class probabilities with `score` on `class` and the rest spread evenly.
pub fn class_probs(class: usize, score: f64) -> Vec<f64> {
    let n = num_classes();
    let rest = (1.0 - score) / (n - 1) as f64;
    (0..n).map(|c| if c == class { score } else { rest }).collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn rotate_pair(s: f64, c: f64, delta: f64) -> (f64, f64) {
    if delta == 0.0 {
        return (s, c);
    }
    let (ds, dc) = delta.sin_cos();
    (s * dc + c * ds, c * dc - s * ds)
}

/// Perturbs every ground-truth object, drops some, and injects false
/// positives. Zero noise reproduces the ground truth exactly with score 1.
pub fn render_detections(scene: &Scene, noise: &NoiseModel) -> Result<DetectionSet> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let poisson = if noise.fp_rate > 0.0 {
        Some(Poisson::new(noise.fp_rate).map_err(|e| Error::InvalidConfig(e.to_string()))?)
    } else {
        None
    };

    let mut frames = Vec::with_capacity(scene.frames.len());
    for frame in &scene.frames {
        let mut detections = Vec::new();
        for obj in &frame.objects {
            // fixed draw count per object keeps streams aligned across settings
            let z: [f64; 9] = std::array::from_fn(|_| normal(&mut rng));
            let keep = rng.random::<f64>() >= noise.drop_prob;
            let (gt_polar, gt_vel) = obj.polar()?;
            if !keep {
                continue;
            }
            let (polar, velocity, position_error) = match noise.frame {
                NoiseFrame::Polar => {
                    let dr = noise.sigma_radial * z[0];
                    let da = noise.sigma_tangential * z[1];
                    let (sa, ca) = rotate_pair(gt_polar.sin_azimuth, gt_polar.cos_azimuth, da);
                    let polar =
                        PolarBox { r: (gt_polar.r + dr).max(1e-3), sin_azimuth: sa, cos_azimuth: ca, ..gt_polar };
                    let velocity = PolarVelocity {
                        radial: gt_vel.radial + noise.sigma_velocity * z[6],
                        tangential: gt_vel.tangential + noise.sigma_velocity * z[7],
                    };
                    (polar, velocity, dr.abs() + gt_polar.r * da.abs())
                }
                NoiseFrame::Cartesian => {
                    let dx = noise.sigma_radial * z[0];
                    let dy = noise.sigma_radial * z[1];
                    let moved = CartesianBox { x: obj.bbox.x + dx, y: obj.bbox.y + dy, ..obj.bbox };
                    let polar = cartesian_to_polar(&moved)?;
                    let v = CartesianVelocity {
                        vx: obj.velocity.vx + noise.sigma_velocity * z[6],
                        vy: obj.velocity.vy + noise.sigma_velocity * z[7],
                    };
                    let velocity = velocity_cartesian_to_polar(v, polar.sin_azimuth, polar.cos_azimuth)?;
                    (polar, velocity, dx.hypot(dy))
                }
            };
            let (sy, cy) = rotate_pair(gt_polar.sin_yaw, gt_polar.cos_yaw, noise.sigma_yaw * z[5]);
            let size_factor = |k: f64| (1.0 + noise.sigma_size * k).max(1e-3);
            let polar = PolarBox {
                z: polar.z + noise.sigma_z * z[2],
                length: polar.length * size_factor(z[3]),
                width: polar.width * size_factor(z[4]),
                height: polar.height * size_factor(z[8]),
                sin_yaw: sy,
                cos_yaw: cy,
                ..polar
            };
            let score = (-position_error / 2.0).exp();
            detections.push(Detection {
                polar,
                class: obj.class,
                probs: class_probs(obj.class, score),
                velocity,
                score,
            });
        }

        let n_fp = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
        for _ in 0..n_fp {
            let class = rng.random_range(0..num_classes());
            let r = (noise.fp_range * rng.random::<f64>().sqrt()).max(1.0);
            let (sa, ca) = rng.random_range(0.0..TAU).sin_cos();
            let (sy, cy) = rng.random_range(0.0..TAU).sin_cos();
            let size = CLASS_SIZES[class];
            let score = rng.random_range(0.05..0.5);
            detections.push(Detection {
                polar: PolarBox {
                    r,
                    sin_azimuth: sa,
                    cos_azimuth: ca,
                    z: GROUND_Z + size[2] / 2.0,
                    length: size[0],
                    width: size[1],
                    height: size[2],
                    sin_yaw: sy,
                    cos_yaw: cy,
                },
                class,
                probs: class_probs(class, score),
                velocity: PolarVelocity { radial: normal(&mut rng), tangential: normal(&mut rng) },
                score,
            });
        }
        frames.push(DetectionFrame { t: frame.t, ego_pose: frame.ego_pose, detections });
    }
    Ok(DetectionSet { frames })
}
