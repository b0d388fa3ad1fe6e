//! Detection metrics: true-positive errors, center-distance average
//! precision, and the NDS composite.
//!
//! These are small-scale surrogates of the benchmark protocol: AP matching is
//! greedy by score on ground-plane center distance, and the attribute error
//! is taken as an input rather than computed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, PolarBox, PolarVelocity};

/// Center-distance thresholds (meters) averaged by [`mean_average_precision`].
pub const AP_THRESHOLDS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Center-distance threshold used to pick true positives for TP errors.
pub const TP_DISTANCE_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpErrors {
    pub ate: f64,
    pub ase: f64,
    pub aoe: f64,
    pub ave: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxState {
    pub polar: PolarBox,
    pub velocity: PolarVelocity,
}

impl BoxState {
    fn velocity_xy(&self) -> [f64; 2] {
        let (s, c) = (self.polar.sin_azimuth, self.polar.cos_azimuth);
        let v = &self.velocity;
        [v.radial * c - v.tangential * s, v.radial * s + v.tangential * c]
    }
}

/// IoU of two boxes sharing center and yaw.
pub fn aligned_iou(a: &PolarBox, b: &PolarBox) -> f64 {
    let inter = a.length.min(b.length) * a.width.min(b.width) * a.height.min(b.height);
    let va = a.length * a.width * a.height;
    let vb = b.length * b.width * b.height;
    inter / (va + vb - inter)
}

/// Mean TP errors over matched `(prediction, ground truth)` pairs.
pub fn tp_errors(pairs: &[(BoxState, BoxState)]) -> Result<TpErrors> {
    if pairs.is_empty() {
        return Err(Error::Empty("matched pairs"));
    }
    let n = pairs.len() as f64;
    let mut acc = [0.0; 4];
    for (p, g) in pairs {
        let [px, py] = p.polar.center_xy();
        let [gx, gy] = g.polar.center_xy();
        acc[0] += (px - gx).hypot(py - gy);
        acc[1] += 1.0 - aligned_iou(&p.polar, &g.polar);
        acc[2] += wrap_angle(p.polar.yaw() - g.polar.yaw()).abs();
        let [pvx, pvy] = p.velocity_xy();
        let [gvx, gvy] = g.velocity_xy();
        acc[3] += (pvx - gvx).hypot(pvy - gvy);
    }
    Ok(TpErrors { ate: acc[0] / n, ase: acc[1] / n, aoe: acc[2] / n, ave: acc[3] / n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredCenter {
    pub frame: usize,
    pub center: [f64; 2],
    pub class: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtCenter {
    pub frame: usize,
    pub center: [f64; 2],
    pub class: usize,
}

/// Greedy score-ordered matching: each prediction, highest score first
/// (ties by input order), takes the nearest unmatched same-class GT in its
/// frame whose distance is below `threshold`. Returns the matched GT index
/// per prediction, in the sorted order, together with that order.
pub fn greedy_center_matching(
    preds: &[ScoredCenter],
    gts: &[GtCenter],
    threshold: f64,
) -> (Vec<usize>, Vec<Option<usize>>) {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].score.total_cmp(&preds[a].score).then(a.cmp(&b)));
    let mut taken = vec![false; gts.len()];
    let matched = order
        .iter()
        .map(|&pi| {
            let p = &preds[pi];
            let best = gts
                .iter()
                .enumerate()
                .filter(|(gi, g)| !taken[*gi] && g.frame == p.frame && g.class == p.class)
                .map(|(gi, g)| (gi, (g.center[0] - p.center[0]).hypot(g.center[1] - p.center[1])))
                .filter(|(_, d)| *d < threshold)
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            best.map(|(gi, _)| {
                taken[gi] = true;
                gi
            })
        })
        .collect();
    (order, matched)
}

/// Area under the precision-recall curve at one distance threshold.
///
/// Precision is replaced by its envelope (running max from the right) and
/// integrated with the trapezoid rule over the achieved recall points, with
/// the first point extended flat to recall 0. Returns `None` without GTs.
pub fn average_precision_center_distance(preds: &[ScoredCenter], gts: &[GtCenter], threshold: f64) -> Option<f64> {
    if gts.is_empty() {
        return None;
    }
    let (_, matched) = greedy_center_matching(preds, gts, threshold);
    if matched.is_empty() {
        return Some(0.0);
    }
    let n_gt = gts.len() as f64;
    let mut tp = 0.0;
    let mut recall = Vec::with_capacity(matched.len());
    let mut precision = Vec::with_capacity(matched.len());
    for (i, m) in matched.iter().enumerate() {
        if m.is_some() {
            tp += 1.0;
        }
        recall.push(tp / n_gt);
        precision.push(tp / (i + 1) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut area = 0.0;
    let (mut prev_r, mut prev_p) = (0.0, precision[0]);
    for (&r, &p) in recall.iter().zip(&precision) {
        area += (r - prev_r) * (p + prev_p) / 2.0;
        prev_r = r;
        prev_p = p;
    }
    Some(area.clamp(0.0, 1.0))
}

/// AP averaged over [`AP_THRESHOLDS`] and over the classes present in `gts`.
pub fn mean_average_precision(preds: &[ScoredCenter], gts: &[GtCenter]) -> Option<f64> {
    let mut classes: Vec<usize> = gts.iter().map(|g| g.class).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.is_empty() {
        return None;
    }
    let mut sum = 0.0;
    let mut count = 0;
    for &c in &classes {
        let p: Vec<ScoredCenter> = preds.iter().filter(|p| p.class == c).copied().collect();
        let g: Vec<GtCenter> = gts.iter().filter(|g| g.class == c).copied().collect();
        for &t in &AP_THRESHOLDS {
            sum += average_precision_center_distance(&p, &g, t)?;
            count += 1;
        }
    }
    Some(sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NdsInput {
    pub map: f64,
    /// mATE, mASE, mAOE, mAVE, mAAE.
    pub tp: [f64; 5],
}

impl NdsInput {
    pub fn validate(&self) -> Result<()> {
        if !(self.map.is_finite() && (0.0..=1.0).contains(&self.map)) {
            return Err(Error::OutOfRange { field: "mAP", value: self.map, lo: 0.0, hi: 1.0 });
        }
        if let Some(&bad) = self.tp.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidConfig(format!("TP metric {bad} must be finite and nonnegative")));
        }
        Ok(())
    }
}

/// `(5 mAP + Σ (1 - min(1, mTP))) / 10`.
pub fn nds(input: &NdsInput) -> Result<f64> {
    input.validate()?;
    let tp_sum: f64 = input.tp.iter().map(|v| 1.0 - v.min(1.0)).sum();
    Ok((5.0 * input.map + tp_sum) / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn state(x: f64, y: f64, size: f64, yaw: f64) -> BoxState {
        let r = x.hypot(y);
        let (s, c) = yaw.sin_cos();
        BoxState {
            polar: PolarBox::from_array([r, y / r, x / r, 0.0, size, size, size, s, c]),
            velocity: PolarVelocity::default(),
        }
    }

    #[test]
    fn tp_error_examples() {
        let a = state(10.0, 5.0, 2.0, 0.3);
        let e = tp_errors(&[(a, a)]).unwrap();
        assert_eq!((e.ate, e.ase, e.aoe, e.ave), (0.0, 0.0, 0.0, 0.0));

        let e = tp_errors(&[(state(10.0, 0.0, 2.0, 0.0), state(10.0, 0.0, 4.0, 0.0))]).unwrap();
        assert!((e.ase - 0.875).abs() < 1e-15);

        let e = tp_errors(&[(state(10.0, 0.0, 2.0, 0.0), state(10.0, 0.0, 2.0, FRAC_PI_2))]).unwrap();
        assert!((e.aoe - FRAC_PI_2).abs() < 1e-15);

        assert_eq!(tp_errors(&[]), Err(Error::Empty("matched pairs")));
    }

    #[test]
    fn ap_trivial_cases() {
        let gts = vec![
            GtCenter { frame: 0, center: [10.0, 0.0], class: 0 },
            GtCenter { frame: 1, center: [0.0, 10.0], class: 0 },
        ];
        let perfect: Vec<ScoredCenter> =
            gts.iter().map(|g| ScoredCenter { frame: g.frame, center: g.center, class: 0, score: 1.0 }).collect();
        assert_eq!(average_precision_center_distance(&perfect, &gts, 0.5), Some(1.0));
        assert_eq!(average_precision_center_distance(&[], &gts, 0.5), Some(0.0));
        assert_eq!(average_precision_center_distance(&perfect, &[], 0.5), None);
        assert_eq!(mean_average_precision(&perfect, &gts), Some(1.0));
    }

    #[test]
    fn ap_respects_frames() {
        let gts = vec![GtCenter { frame: 0, center: [10.0, 0.0], class: 0 }];
        let wrong_frame = vec![ScoredCenter { frame: 1, center: [10.0, 0.0], class: 0, score: 1.0 }];
        assert_eq!(average_precision_center_distance(&wrong_frame, &gts, 2.0), Some(0.0));
    }

    #[test]
    fn nds_examples() {
        let v = nds(&NdsInput { map: 0.338, tp: [0.768, 0.284, 0.443, 0.883, 0.221] }).unwrap();
        assert!((v - 0.4091).abs() < 1e-12);
        let v = nds(&NdsInput { map: 0.346, tp: [0.773, 0.268, 0.383, 0.842, 0.216] }).unwrap();
        assert!((v - 0.4248).abs() < 1e-12);
        assert_eq!(nds(&NdsInput { map: 1.0, tp: [0.0; 5] }).unwrap(), 1.0);
        // mTP beyond 1 is clamped
        let a = nds(&NdsInput { map: 0.3, tp: [1.0, 0.2, 0.2, 0.2, 0.2] }).unwrap();
        let b = nds(&NdsInput { map: 0.3, tp: [3.0, 0.2, 0.2, 0.2, 0.2] }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nds_rejects_invalid_input() {
        assert!(nds(&NdsInput { map: 1.2, tp: [0.0; 5] }).is_err());
        assert!(nds(&NdsInput { map: 0.5, tp: [-0.1, 0.0, 0.0, 0.0, 0.0] }).is_err());
    }
}
