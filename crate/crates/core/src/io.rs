//! Scene and detections JSON documents.
//!
//! Scene:
//! `{schema_version, rig: [{intrinsics: [fx, fy, cx, cy], extrinsics: {rotation: [9 row-major], translation: [3]}, image_size: [w, h]}],
//!   frames: [{t, ego_pose: {rotation, translation}, objects: [{id, class, box: [x, y, z, l, w, h, yaw], velocity: [vx, vy]}]}]}`
//!
//! Detections mirror the frame layout with polar boxes
//! `[r, sin_a, cos_a, z, l, w, h, sin_t, cos_t]`, `score`, `probs` and
//! `velocity: [v_rad, v_tan]`.
//!
//! Every float is written with 17 significant digits so values round-trip
//! bit-exactly and output is byte-stable.

use std::io;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::camera::{CameraModel, Intrinsics, Rig, RigidTransform};
use crate::error::{Error, Result};
use crate::geometry::{CartesianBox, CartesianVelocity, PolarBox, PolarVelocity};
use crate::simulator::{Detection, DetectionFrame, DetectionSet, Frame, GtObject, Scene};

pub const SCHEMA_VERSION: u32 = 1;

/// Pretty JSON with floats in `d.dddddddddddddddde±x` form.
pub struct SignificantDigits17 {
    inner: PrettyFormatter<'static>,
}

impl Default for SignificantDigits17 {
    fn default() -> Self {
        Self { inner: PrettyFormatter::with_indent(b"  ") }
    }
}

impl Formatter for SignificantDigits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serializes any value with [`SignificantDigits17`], newline-terminated.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits17::default());
    value.serialize(&mut ser).map_err(|e| Error::Schema(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Schema(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformDoc {
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl From<&RigidTransform> for TransformDoc {
    fn from(t: &RigidTransform) -> Self {
        Self { rotation: t.rotation_row_major(), translation: [t.translation.x, t.translation.y, t.translation.z] }
    }
}

impl TryFrom<&TransformDoc> for RigidTransform {
    type Error = Error;

    fn try_from(d: &TransformDoc) -> Result<Self> {
        RigidTransform::new(Matrix3::from_row_slice(&d.rotation), Vector3::from(d.translation))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraDoc {
    pub intrinsics: [f64; 4],
    pub extrinsics: TransformDoc,
    pub image_size: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDoc {
    pub id: u64,
    pub class: usize,
    #[serde(rename = "box")]
    pub bbox: [f64; 7],
    pub velocity: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDoc {
    pub t: f64,
    pub ego_pose: TransformDoc,
    pub objects: Vec<ObjectDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDoc {
    pub schema_version: u32,
    pub rig: Vec<CameraDoc>,
    pub frames: Vec<FrameDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionDoc {
    pub class: usize,
    #[serde(rename = "box")]
    pub bbox: [f64; 9],
    pub score: f64,
    pub probs: Vec<f64>,
    pub velocity: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFrameDoc {
    pub t: f64,
    pub ego_pose: TransformDoc,
    pub detections: Vec<DetectionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionsDoc {
    pub schema_version: u32,
    pub frames: Vec<DetectionFrameDoc>,
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Schema(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}")));
    }
    Ok(())
}

impl From<&Scene> for SceneDoc {
    fn from(s: &Scene) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            rig: s
                .rig
                .cameras
                .iter()
                .map(|c| CameraDoc {
                    intrinsics: [c.intrinsics.fx, c.intrinsics.fy, c.intrinsics.cx, c.intrinsics.cy],
                    extrinsics: (&c.extrinsics).into(),
                    image_size: [c.width, c.height],
                })
                .collect(),
            frames: s
                .frames
                .iter()
                .map(|f| FrameDoc {
                    t: f.t,
                    ego_pose: (&f.ego_pose).into(),
                    objects: f
                        .objects
                        .iter()
                        .map(|o| ObjectDoc {
                            id: o.id,
                            class: o.class,
                            bbox: o.bbox.to_array(),
                            velocity: [o.velocity.vx, o.velocity.vy],
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&SceneDoc> for Scene {
    type Error = Error;

    fn try_from(d: &SceneDoc) -> Result<Self> {
        check_version(d.schema_version)?;
        let cameras = d
            .rig
            .iter()
            .map(|c| {
                let [fx, fy, cx, cy] = c.intrinsics;
                CameraModel::new(
                    Intrinsics { fx, fy, cx, cy },
                    (&c.extrinsics).try_into()?,
                    c.image_size[0],
                    c.image_size[1],
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let frames = d
            .frames
            .iter()
            .map(|f| {
                Ok(Frame {
                    t: f.t,
                    ego_pose: (&f.ego_pose).try_into()?,
                    objects: f
                        .objects
                        .iter()
                        .map(|o| GtObject {
                            id: o.id,
                            class: o.class,
                            bbox: CartesianBox::from_array(o.bbox),
                            velocity: CartesianVelocity { vx: o.velocity[0], vy: o.velocity[1] },
                        })
                        .collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scene = Scene { rig: Rig::new(cameras)?, frames };
        scene.validate()?;
        Ok(scene)
    }
}

impl From<&DetectionSet> for DetectionsDoc {
    fn from(s: &DetectionSet) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            frames: s
                .frames
                .iter()
                .map(|f| DetectionFrameDoc {
                    t: f.t,
                    ego_pose: (&f.ego_pose).into(),
                    detections: f
                        .detections
                        .iter()
                        .map(|d| DetectionDoc {
                            class: d.class,
                            bbox: d.polar.to_array(),
                            score: d.score,
                            probs: d.probs.clone(),
                            velocity: [d.velocity.radial, d.velocity.tangential],
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&DetectionsDoc> for DetectionSet {
    type Error = Error;

    fn try_from(d: &DetectionsDoc) -> Result<Self> {
        check_version(d.schema_version)?;
        let frames = d
            .frames
            .iter()
            .map(|f| {
                let detections = f
                    .detections
                    .iter()
                    .map(|det| {
                        let polar = PolarBox::from_array(det.bbox);
                        polar.validate()?;
                        if !(0.0..=1.0).contains(&det.score) {
                            return Err(Error::InvalidProbability(det.score));
                        }
                        if let Some(&p) = det.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                            return Err(Error::InvalidProbability(p));
                        }
                        Ok(Detection {
                            polar,
                            class: det.class,
                            probs: det.probs.clone(),
                            velocity: PolarVelocity { radial: det.velocity[0], tangential: det.velocity[1] },
                            score: det.score,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(DetectionFrame { t: f.t, ego_pose: (&f.ego_pose).try_into()?, detections })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DetectionSet { frames })
    }
}

pub fn scene_to_json(scene: &Scene) -> Result<String> {
    to_json_string(&SceneDoc::from(scene))
}

pub fn scene_from_json(text: &str) -> Result<Scene> {
    let doc: SceneDoc = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    Scene::try_from(&doc)
}

pub fn detections_to_json(set: &DetectionSet) -> Result<String> {
    to_json_string(&DetectionsDoc::from(set))
}

pub fn detections_from_json(text: &str) -> Result<DetectionSet> {
    let doc: DetectionsDoc = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    DetectionSet::try_from(&doc)
}
