#![allow(dead_code)]

use std::f64::consts::PI;

use polar_core::assignment::{MatchCandidate, MatchTarget};
use polar_core::camera::default_surround_rig;
use polar_core::geometry::{CartesianBox, CartesianVelocity, PolarBox, RangeConfig};
use polar_core::simulator::{Frame, GtObject, Scene};
use polar_core::RigidTransform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn polar_at(r: f64, azimuth_deg: f64) -> PolarBox {
    let (s, c) = azimuth_deg.to_radians().sin_cos();
    PolarBox::from_array([r, s, c, 0.0, 4.0, 2.0, 1.5, 0.0, 1.0])
}

/// Valid box strictly inside the decode range, so encoding always succeeds.
pub fn random_interior_box(rng: &mut ChaCha8Rng, range: &RangeConfig) -> PolarBox {
    let a: f64 = rng.random_range(-PI..PI);
    let t: f64 = rng.random_range(-PI..PI);
    let margin = 1e-3;
    PolarBox {
        r: rng.random_range(margin * range.r_max..(1.0 - margin) * range.r_max),
        sin_azimuth: a.sin(),
        cos_azimuth: a.cos(),
        z: rng.random_range(range.z_min + margin..range.z_max - margin),
        length: rng.random_range(0.1..20.0),
        width: rng.random_range(0.1..5.0),
        height: rng.random_range(0.1..5.0),
        sin_yaw: t.sin(),
        cos_yaw: t.cos(),
    }
}

/// Two ground truths at nearly equal range and 10° apart, each predicted by a
/// box that has the right range of the other one and nearly the right
/// azimuth. Without azimuth scaling the radial mismatch dominates and the
/// predictions swap; the correct pairing is gt i <- pred i.
pub fn scaling_fixture() -> (Vec<MatchCandidate>, Vec<MatchTarget>) {
    let gts = vec![
        MatchTarget { polar: polar_at(30.0, 0.0), class: 0 },
        MatchTarget { polar: polar_at(31.0, 10.0), class: 0 },
    ];
    let preds = vec![
        MatchCandidate { polar: polar_at(31.0, 0.5), probs: vec![0.9, 0.1] },
        MatchCandidate { polar: polar_at(30.0, 9.5), probs: vec![0.9, 0.1] },
    ];
    (preds, gts)
}

pub fn cart(x: f64, y: f64) -> CartesianBox {
    CartesianBox { x, y, z: 0.0, length: 4.0, width: 2.0, height: 1.5, yaw: 0.0 }
}

/// Two objects at radial distance 48 m: one straight ahead, one on the
/// diagonal. A 35 x 50 m rectangle drops the first and keeps the second.
pub const RANGE_FIXTURE_RADIUS: f64 = 48.0;
pub const RANGE_FIXTURE_X_MAX: f64 = 35.0;
pub const RANGE_FIXTURE_Y_MAX: f64 = 50.0;

pub fn range_fixture() -> Vec<CartesianBox> {
    let d = RANGE_FIXTURE_RADIUS / 2f64.sqrt();
    vec![cart(RANGE_FIXTURE_RADIUS, 0.0), cart(d, d)]
}

/// Hand-built scene: objects given by world `(x, y, vx, vy)` with class 0,
/// ego either static or driving straight along +x at `ego_speed`.
pub fn constant_velocity_scene(objects: &[[f64; 4]], frames: usize, dt: f64, ego_speed: f64) -> Scene {
    let frames = (0..frames)
        .map(|n| {
            let t = n as f64 * dt;
            let ego_x = ego_speed * t;
            Frame {
                t,
                ego_pose: RigidTransform::from_translation(ego_x, 0.0, 0.0),
                objects: objects
                    .iter()
                    .enumerate()
                    .map(|(id, o)| GtObject {
                        id: id as u64,
                        class: 0,
                        bbox: CartesianBox {
                            x: o[0] + t * o[2] - ego_x,
                            y: o[1] + t * o[3],
                            z: 0.35,
                            length: 4.6,
                            width: 1.9,
                            height: 1.7,
                            yaw: o[3].atan2(o[2]),
                        },
                        velocity: CartesianVelocity { vx: o[2], vy: o[3] },
                    })
                    .collect(),
            }
        })
        .collect();
    Scene { rig: default_surround_rig(), frames }
}

/// Five slow objects spread around the ego at 20 m, far apart.
pub fn five_object_world() -> Vec<[f64; 4]> {
    (0..5)
        .map(|i| {
            let a = i as f64 * 72f64.to_radians() + 0.3;
            let v = 0.5;
            [20.0 * a.cos(), 20.0 * a.sin(), v * (a + 1.0).cos(), v * (a + 1.0).sin()]
        })
        .collect()
}

/// Reference (NDS, mAP, mATE, mASE, mAOE, mAVE, mAAE) rows, validation split.
pub const NDS_REFERENCE_VAL: [[f64; 7]; 14] = [
    [0.373, 0.302, 0.811, 0.282, 0.493, 0.979, 0.212],
    [0.372, 0.286, 0.724, 0.278, 0.590, 0.873, 0.247],
    [0.381, 0.304, 0.719, 0.272, 0.555, 0.903, 0.257],
    [0.409, 0.338, 0.768, 0.284, 0.443, 0.883, 0.221],
    [0.458, 0.354, 0.748, 0.277, 0.432, 0.539, 0.197],
    [0.372, 0.295, 0.806, 0.268, 0.511, 1.315, 0.170],
    [0.409, 0.335, 0.732, 0.263, 0.423, 1.285, 0.172],
    [0.425, 0.346, 0.773, 0.268, 0.383, 0.842, 0.216],
    [0.373, 0.288, 0.722, 0.269, 0.538, 0.911, 0.270],
    [0.389, 0.317, 0.704, 0.273, 0.531, 0.940, 0.250],
    [0.444, 0.365, 0.742, 0.269, 0.350, 0.829, 0.197],
    [0.488, 0.383, 0.707, 0.269, 0.344, 0.518, 0.196],
    [0.509, 0.445, 0.687, 0.261, 0.271, 0.727, 0.191],
    [0.532, 0.462, 0.628, 0.262, 0.263, 0.658, 0.180],
];

/// Same layout, test split.
pub const NDS_REFERENCE_TEST: [[f64; 7]; 5] = [
    [0.477, 0.418, 0.572, 0.249, 0.368, 1.014, 0.124],
    [0.479, 0.412, 0.641, 0.255, 0.394, 0.845, 0.133],
    [0.488, 0.424, 0.524, 0.242, 0.373, 0.950, 0.148],
    [0.488, 0.440, 0.534, 0.248, 0.391, 0.998, 0.146],
    [0.493, 0.431, 0.588, 0.253, 0.408, 0.845, 0.129],
];
