//! Point feature sampling from per-view feature grids.
//!
//! Cell centers sit at integer cell coordinates; a pixel `(u, v)` maps to
//! cell coordinates `(u / stride, v / stride)`. Samples outside
//! `[0, W-1] x [0, H-1]` and points invisible in a view come back as
//! all-zero, invalid samples.

use crate::camera::{project_to_view, PixelPoint, Rig};
use crate::error::{Error, Result};

/// Context points per view used when none is configured.
pub const DEFAULT_CONTEXT_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    channels: usize,
    stride: f64,
    /// Row-major, channel-innermost.
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: usize, stride: f64, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::InvalidConfig("feature map dimensions must be positive".into()));
        }
        if !(stride.is_finite() && stride > 0.0) {
            return Err(Error::InvalidConfig("feature stride must be positive".into()));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: data.len() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature map"));
        }
        Ok(Self { width, height, channels, stride, data })
    }

    pub fn constant(width: usize, height: usize, channels: usize, stride: f64, value: f64) -> Result<Self> {
        Self::new(width, height, channels, stride, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn stride(&self) -> f64 {
        self.stride
    }

    pub fn cell(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSample {
    pub values: Vec<f64>,
    pub valid: bool,
}

impl FeatureSample {
    pub fn invalid(channels: usize) -> Self {
        Self { values: vec![0.0; channels], valid: false }
    }
}

fn lerp_bounded(a: f64, b: f64, t: f64) -> f64 {
    ((1.0 - t) * a + t * b).clamp(a.min(b), a.max(b))
}

/// Bilinear sample at pixel coordinates `(u, v)`.
pub fn bilinear_sample(map: &FeatureMap, u: f64, v: f64) -> FeatureSample {
    let x = u / map.stride;
    let y = v / map.stride;
    let max_x = (map.width - 1) as f64;
    let max_y = (map.height - 1) as f64;
    if !(x >= 0.0 && x <= max_x && y >= 0.0 && y <= max_y) {
        return FeatureSample::invalid(map.channels);
    }
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(map.width - 1);
    let y1 = (y0 + 1).min(map.height - 1);
    let tx = x - x0 as f64;
    let ty = y - y0 as f64;

    let (c00, c10, c01, c11) = (map.cell(x0, y0), map.cell(x1, y0), map.cell(x0, y1), map.cell(x1, y1));
    let values = (0..map.channels)
        .map(|c| {
            let top = lerp_bounded(c00[c], c10[c], tx);
            let bottom = lerp_bounded(c01[c], c11[c], tx);
            lerp_bounded(top, bottom, ty)
        })
        .collect();
    FeatureSample { values, valid: true }
}

/// Projects `center` into every view of `rig` and samples the matching map.
pub fn sample_center_features(center: [f64; 3], rig: &Rig, maps: &[FeatureMap]) -> Result<Vec<FeatureSample>> {
    if maps.len() != rig.len() {
        return Err(Error::DimensionMismatch { expected: rig.len(), got: maps.len() });
    }
    rig.cameras
        .iter()
        .zip(maps)
        .enumerate()
        .map(|(k, (cam, map))| {
            Ok(match project_to_view(center, cam, k)? {
                Some(px) => bilinear_sample(map, px.u, px.v),
                None => FeatureSample::invalid(map.channels),
            })
        })
        .collect()
}

/// Offsets a projected center by each `(du, dv)`; view and depth are kept.
pub fn context_points(center: &PixelPoint, offsets: &[(f64, f64)]) -> Result<Vec<PixelPoint>> {
    if offsets.iter().any(|(du, dv)| !du.is_finite() || !dv.is_finite()) {
        return Err(Error::NonFinite("context offsets"));
    }
    Ok(offsets.iter().map(|&(du, dv)| PixelPoint { u: center.u + du, v: center.v + dv, ..*center }).collect())
}
