//! Box parametrizations and the conversions between them.
//!
//! Azimuth and yaw are only ever stored as `(sin, cos)` pairs. Raw angles
//! appear only in [`CartesianBox::yaw`] and in [`wrap_angle`].

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sin^2 + cos^2 = 1` for stored pairs.
pub const UNIT_PAIR_TOL: f64 = 1e-9;

/// Pre-activation logits are clamped to this magnitude by the lenient encoder.
pub const LENIENT_LOGIT_LIMIT: f64 = 15.0;

/// Raw 9-value box head output before decoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxEncoding {
    pub radial: f64,
    pub sin_azimuth: f64,
    pub cos_azimuth: f64,
    pub z: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub sin_yaw: f64,
    pub cos_yaw: f64,
}

impl BoxEncoding {
    pub fn from_array(v: [f64; 9]) -> Self {
        Self {
            radial: v[0],
            sin_azimuth: v[1],
            cos_azimuth: v[2],
            z: v[3],
            length: v[4],
            width: v[5],
            height: v[6],
            sin_yaw: v[7],
            cos_yaw: v[8],
        }
    }

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.radial,
            self.sin_azimuth,
            self.cos_azimuth,
            self.z,
            self.length,
            self.width,
            self.height,
            self.sin_yaw,
            self.cos_yaw,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("box encoding"));
        }
        if self.sin_azimuth == 0.0 && self.cos_azimuth == 0.0 {
            return Err(Error::ZeroNormPair("azimuth encoding"));
        }
        if self.sin_yaw == 0.0 && self.cos_yaw == 0.0 {
            return Err(Error::ZeroNormPair("yaw encoding"));
        }
        Ok(())
    }
}

/// A 3D box in polar form: radial distance and azimuth pair of the center,
/// center height, size, and ego-frame yaw pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarBox {
    pub r: f64,
    pub sin_azimuth: f64,
    pub cos_azimuth: f64,
    pub z: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub sin_yaw: f64,
    pub cos_yaw: f64,
}

impl PolarBox {
    pub const FIELD_NAMES: [&'static str; 9] =
        ["r", "sin_azimuth", "cos_azimuth", "z", "length", "width", "height", "sin_yaw", "cos_yaw"];

    pub fn from_array(v: [f64; 9]) -> Self {
        Self {
            r: v[0],
            sin_azimuth: v[1],
            cos_azimuth: v[2],
            z: v[3],
            length: v[4],
            width: v[5],
            height: v[6],
            sin_yaw: v[7],
            cos_yaw: v[8],
        }
    }

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.r,
            self.sin_azimuth,
            self.cos_azimuth,
            self.z,
            self.length,
            self.width,
            self.height,
            self.sin_yaw,
            self.cos_yaw,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("polar box"));
        }
        if self.r < 0.0 {
            return Err(Error::InvalidConfig(format!("negative radial distance {}", self.r)));
        }
        check_unit_pair(self.sin_azimuth, self.cos_azimuth)?;
        check_unit_pair(self.sin_yaw, self.cos_yaw)?;
        if !(self.length > 0.0 && self.width > 0.0 && self.height > 0.0) {
            return Err(Error::InvalidConfig("box size must be positive".into()));
        }
        Ok(())
    }

    /// Ground-plane center `(x, y)` in the ego frame.
    pub fn center_xy(&self) -> [f64; 2] {
        [self.r * self.cos_azimuth, self.r * self.sin_azimuth]
    }

    pub fn center_3d(&self) -> [f64; 3] {
        let [x, y] = self.center_xy();
        [x, y, self.z]
    }

    /// Diagnostic only.
    pub fn azimuth(&self) -> f64 {
        self.sin_azimuth.atan2(self.cos_azimuth)
    }

    /// Diagnostic only.
    pub fn yaw(&self) -> f64 {
        wrap_angle(self.sin_yaw.atan2(self.cos_yaw))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianBox {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    /// Radians in (-pi, pi].
    pub yaw: f64,
}

impl CartesianBox {
    pub fn from_array(v: [f64; 7]) -> Self {
        Self { x: v[0], y: v[1], z: v[2], length: v[3], width: v[4], height: v[5], yaw: v[6] }
    }

    pub fn to_array(&self) -> [f64; 7] {
        [self.x, self.y, self.z, self.length, self.width, self.height, self.yaw]
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cartesian box"));
        }
        if !(self.length > 0.0 && self.width > 0.0 && self.height > 0.0) {
            return Err(Error::InvalidConfig("box size must be positive".into()));
        }
        if !(self.yaw > -PI && self.yaw <= PI) {
            return Err(Error::OutOfRange { field: "yaw", value: self.yaw, lo: -PI, hi: PI });
        }
        Ok(())
    }

    pub fn radial_distance(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Ego-frame planar velocity in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianVelocity {
    pub vx: f64,
    pub vy: f64,
}

/// Velocity split along the ego-to-object direction (`radial`, positive
/// away from the ego) and perpendicular to it (`tangential`, positive
/// counter-clockwise seen from +z).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PolarVelocity {
    pub radial: f64,
    pub tangential: f64,
}

impl CartesianVelocity {
    pub fn norm(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

impl PolarVelocity {
    pub fn norm(&self) -> f64 {
        self.radial.hypot(self.tangential)
    }
}

/// Perception range bounds and the azimuth scaling factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeConfig {
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub k_scaling: f64,
}

impl Default for RangeConfig {
    fn default() -> Self {
        Self { r_max: 50.0, z_min: -5.0, z_max: 3.0, k_scaling: 20.0 }
    }
}

impl RangeConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [self.r_max, self.z_min, self.z_max, self.k_scaling];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("range config"));
        }
        if self.r_max <= 0.0 {
            return Err(Error::InvalidConfig("r_max must be positive".into()));
        }
        if self.z_max <= self.z_min {
            return Err(Error::InvalidConfig("z_max must exceed z_min".into()));
        }
        if self.k_scaling < 1.0 {
            return Err(Error::InvalidConfig("k_scaling must be at least 1".into()));
        }
        Ok(())
    }

    pub fn z_span(&self) -> f64 {
        self.z_max - self.z_min
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// L2-normalizes a `(sin, cos)` pair.
pub fn normalize_pair(s: f64, c: f64) -> Result<(f64, f64)> {
    let n = s.hypot(c);
    if n == 0.0 {
        return Err(Error::ZeroNormPair("pair"));
    }
    Ok((s / n, c / n))
}

fn check_unit_pair(s: f64, c: f64) -> Result<()> {
    let n2 = s * s + c * c;
    if (n2 - 1.0).abs() > UNIT_PAIR_TOL {
        return Err(Error::NotNormalized(n2));
    }
    Ok(())
}

/// Decodes a raw head output into a polar box.
///
/// `r = sigmoid(b_r) * r_max`, `z = sigmoid(b_z) * (z_max - z_min) + z_min`,
/// both angle pairs are L2-normalized and sizes are exponentiated.
pub fn decode_box_encoding(enc: &BoxEncoding, range: &RangeConfig) -> Result<PolarBox> {
    enc.validate()?;
    let (sin_azimuth, cos_azimuth) =
        normalize_pair(enc.sin_azimuth, enc.cos_azimuth).map_err(|_| Error::ZeroNormPair("azimuth encoding"))?;
    let (sin_yaw, cos_yaw) =
        normalize_pair(enc.sin_yaw, enc.cos_yaw).map_err(|_| Error::ZeroNormPair("yaw encoding"))?;
    let decoded = PolarBox {
        r: sigmoid(enc.radial) * range.r_max,
        sin_azimuth,
        cos_azimuth,
        z: sigmoid(enc.z) * range.z_span() + range.z_min,
        length: enc.length.exp(),
        width: enc.width.exp(),
        height: enc.height.exp(),
        sin_yaw,
        cos_yaw,
    };
    // exp overflow or underflow to zero
    if ![decoded.length, decoded.width, decoded.height].iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(Error::NonFinite("decoded box size"));
    }
    Ok(decoded)
}

/// Inverse of [`decode_box_encoding`]. Rejects `r` or `z` on or outside the
/// open decode range, where the logit is undefined.
pub fn encode_polar_box(b: &PolarBox, range: &RangeConfig) -> Result<BoxEncoding> {
    b.validate()?;
    if !(b.r > 0.0 && b.r < range.r_max) {
        return Err(Error::OutOfRange { field: "r", value: b.r, lo: 0.0, hi: range.r_max });
    }
    if !(b.z > range.z_min && b.z < range.z_max) {
        return Err(Error::OutOfRange { field: "z", value: b.z, lo: range.z_min, hi: range.z_max });
    }
    Ok(encode_unchecked(b, range, f64::INFINITY))
}

/// Like [`encode_polar_box`] but clamps the `r` and `z` logits to
/// [`LENIENT_LOGIT_LIMIT`] instead of failing. Used for fixture generation.
pub fn encode_polar_box_lenient(b: &PolarBox, range: &RangeConfig) -> Result<BoxEncoding> {
    b.validate()?;
    Ok(encode_unchecked(b, range, LENIENT_LOGIT_LIMIT))
}

fn encode_unchecked(b: &PolarBox, range: &RangeConfig, limit: f64) -> BoxEncoding {
    let clamp = |v: f64| {
        if v.is_nan() {
            0.0
        } else {
            v.clamp(-limit, limit)
        }
    };
    BoxEncoding {
        radial: clamp(logit(b.r / range.r_max)),
        sin_azimuth: b.sin_azimuth,
        cos_azimuth: b.cos_azimuth,
        z: clamp(logit((b.z - range.z_min) / range.z_span())),
        length: b.length.ln(),
        width: b.width.ln(),
        height: b.height.ln(),
        sin_yaw: b.sin_yaw,
        cos_yaw: b.cos_yaw,
    }
}

pub fn cartesian_to_polar(b: &CartesianBox) -> Result<PolarBox> {
    b.validate()?;
    let r = b.x.hypot(b.y);
    if r == 0.0 {
        return Err(Error::DegenerateAzimuth);
    }
    let (sin_yaw, cos_yaw) = b.yaw.sin_cos();
    Ok(PolarBox {
        r,
        sin_azimuth: b.y / r,
        cos_azimuth: b.x / r,
        z: b.z,
        length: b.length,
        width: b.width,
        height: b.height,
        sin_yaw,
        cos_yaw,
    })
}

pub fn polar_to_cartesian(b: &PolarBox) -> Result<CartesianBox> {
    b.validate()?;
    let [x, y] = b.center_xy();
    Ok(CartesianBox { x, y, z: b.z, length: b.length, width: b.width, height: b.height, yaw: b.yaw() })
}

pub fn velocity_cartesian_to_polar(v: CartesianVelocity, sin_azimuth: f64, cos_azimuth: f64) -> Result<PolarVelocity> {
    check_unit_pair(sin_azimuth, cos_azimuth)?;
    Ok(PolarVelocity {
        radial: v.vx * cos_azimuth + v.vy * sin_azimuth,
        tangential: -v.vx * sin_azimuth + v.vy * cos_azimuth,
    })
}

pub fn velocity_polar_to_cartesian(v: PolarVelocity, sin_azimuth: f64, cos_azimuth: f64) -> Result<CartesianVelocity> {
    check_unit_pair(sin_azimuth, cos_azimuth)?;
    Ok(CartesianVelocity {
        vx: v.radial * cos_azimuth - v.tangential * sin_azimuth,
        vy: v.radial * sin_azimuth + v.tangential * cos_azimuth,
    })
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Rotates a planar point counter-clockwise by `phi`.
pub fn rotate_xy(p: [f64; 2], phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}
