//! Bipartite matching loss: per-class sigmoid focal loss, polar box L1 with
//! scaled azimuth terms, and polar velocity L1.
//!
//! [`loss_gradient`] differentiates the box and velocity terms of one matched
//! pair through the decode chain (sigmoid, exp, pair normalization).
//! [`finite_difference_gradient`] is the numerical counterpart used to check it.

use serde::{Deserialize, Serialize};

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::geometry::{decode_box_encoding, sigmoid, BoxEncoding, PolarBox, PolarVelocity, RangeConfig};

/// Probabilities are clamped into `[PROB_EPS, 1 - PROB_EPS]` before logs.
pub const PROB_EPS: f64 = 1e-12;

/// Gradients are refused within this distance of an L1 kink.
pub const KINK_TOL: f64 = 1e-7;

/// Central-difference step used by the gradient checker.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub range: RangeConfig,
    pub gamma: f64,
    pub alpha: f64,
    pub class_weight: f64,
    pub box_weight: f64,
    pub velocity_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            range: RangeConfig::default(),
            gamma: 2.0,
            alpha: 0.25,
            class_weight: 1.0,
            box_weight: 1.0,
            velocity_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub class_term: f64,
    pub box_term: f64,
    pub velocity_term: f64,
    pub total: f64,
    /// Weighted class + box + velocity loss of the prediction matched to each gt
    /// (zero for unmatched gts).
    pub per_gt: Vec<f64>,
}

/// Partial derivatives w.r.t. the 9 encoding fields then `(v_rad, v_tan)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gradient(pub [f64; 11]);

impl Gradient {
    pub const FIELD_NAMES: [&'static str; 11] =
        ["b_r", "b_sin_a", "b_cos_a", "b_z", "b_l", "b_w", "b_h", "b_sin_t", "b_cos_t", "v_rad", "v_tan"];
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub encoding: BoxEncoding,
    pub probs: Vec<f64>,
    pub velocity: PolarVelocity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub polar: PolarBox,
    pub class: usize,
    pub velocity: PolarVelocity,
}

/// Binary focal loss of one probability.
pub fn focal_loss(prob: f64, is_positive: bool, gamma: f64, alpha: f64) -> f64 {
    let p = prob.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if is_positive {
        -alpha * (1.0 - p).powf(gamma) * p.ln()
    } else {
        -(1.0 - alpha) * p.powf(gamma) * (1.0 - p).ln()
    }
}

/// L1 over `(r, z, l, w, h, sin_yaw, cos_yaw)` plus `k_scaling` times the
/// azimuth-pair L1.
pub fn polar_box_l1(pred: &PolarBox, gt: &PolarBox, k_scaling: f64) -> f64 {
    let plain = (pred.r - gt.r).abs()
        + (pred.z - gt.z).abs()
        + (pred.length - gt.length).abs()
        + (pred.width - gt.width).abs()
        + (pred.height - gt.height).abs()
        + (pred.sin_yaw - gt.sin_yaw).abs()
        + (pred.cos_yaw - gt.cos_yaw).abs();
    plain + k_scaling * azimuth_l1(pred, gt)
}

/// Unscaled azimuth-pair L1.
pub fn azimuth_l1(pred: &PolarBox, gt: &PolarBox) -> f64 {
    (pred.sin_azimuth - gt.sin_azimuth).abs() + (pred.cos_azimuth - gt.cos_azimuth).abs()
}

pub fn velocity_l1(pred: &PolarVelocity, gt: &PolarVelocity) -> f64 {
    (pred.radial - gt.radial).abs() + (pred.tangential - gt.tangential).abs()
}

/// Focal class loss of one prediction: every class is an independent binary
/// target, positive only for `positive_class`.
pub fn class_focal(probs: &[f64], positive_class: Option<usize>, gamma: f64, alpha: f64) -> f64 {
    probs.iter().enumerate().map(|(c, &p)| focal_loss(p, Some(c) == positive_class, gamma, alpha)).sum()
}

/// Sums the matching loss over all predictions. Matched predictions pay the
/// class, box and velocity terms; unmatched ones only their negative-class
/// focal terms.
pub fn total_matching_loss(
    preds: &[Prediction],
    gts: &[GroundTruth],
    assignment: &Assignment,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    assignment.validate(gts.len(), preds.len())?;
    let mut matched_gt = vec![None; preds.len()];
    for &(g, p) in &assignment.pairs {
        matched_gt[p] = Some(g);
    }

    let mut out = LossBreakdown { per_gt: vec![0.0; gts.len()], ..Default::default() };
    for (pred, gt_idx) in preds.iter().zip(&matched_gt) {
        for &p in &pred.probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
        }
        let positive = gt_idx.map(|g| gts[g].class);
        if let Some(c) = positive {
            if c >= pred.probs.len() {
                return Err(Error::DimensionMismatch { expected: c + 1, got: pred.probs.len() });
            }
        }
        let cls = cfg.class_weight * class_focal(&pred.probs, positive, cfg.gamma, cfg.alpha);
        out.class_term += cls;

        if let Some(g) = *gt_idx {
            let gt = &gts[g];
            let decoded = decode_box_encoding(&pred.encoding, &cfg.range)?;
            let bx = cfg.box_weight * polar_box_l1(&decoded, &gt.polar, cfg.range.k_scaling);
            let vel = cfg.velocity_weight * velocity_l1(&pred.velocity, &gt.velocity);
            out.box_term += bx;
            out.velocity_term += vel;
            out.per_gt[g] = cls + bx + vel;
        }
    }
    out.total = out.class_term + out.box_term + out.velocity_term;
    Ok(out)
}

/// Box + velocity loss of a single matched pair as a function of the raw
/// encoding and predicted velocity.
pub fn pair_loss(enc: &BoxEncoding, velocity: &PolarVelocity, gt: &GroundTruth, range: &RangeConfig) -> Result<f64> {
    let decoded = decode_box_encoding(enc, range)?;
    Ok(polar_box_l1(&decoded, &gt.polar, range.k_scaling) + velocity_l1(velocity, &gt.velocity))
}

/// Jacobian of `(a, b) -> (a, b) / |(a, b)|`, rows = outputs.
pub fn normalize_pair_jacobian(a: f64, b: f64) -> [[f64; 2]; 2] {
    let n = a.hypot(b);
    let n3 = n * n * n;
    [[b * b / n3, -a * b / n3], [-a * b / n3, a * a / n3]]
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Analytic gradient of [`pair_loss`].
///
/// Fails with [`Error::Kink`] when any matched coordinate sits within
/// [`KINK_TOL`] of its target, where the L1 term is not differentiable.
pub fn loss_gradient(
    enc: &BoxEncoding,
    velocity: &PolarVelocity,
    gt: &GroundTruth,
    range: &RangeConfig,
) -> Result<Gradient> {
    let d = decode_box_encoding(enc, range)?;
    let pred = d.to_array();
    let target = gt.polar.to_array();
    let mut signs = [0.0; 9];
    for i in 0..9 {
        let gap = pred[i] - target[i];
        if gap.abs() < KINK_TOL {
            return Err(Error::Kink { field: PolarBox::FIELD_NAMES[i], gap: gap.abs() });
        }
        signs[i] = sign(gap);
    }
    let dv_rad = velocity.radial - gt.velocity.radial;
    let dv_tan = velocity.tangential - gt.velocity.tangential;
    if dv_rad.abs() < KINK_TOL {
        return Err(Error::Kink { field: "v_rad", gap: dv_rad.abs() });
    }
    if dv_tan.abs() < KINK_TOL {
        return Err(Error::Kink { field: "v_tan", gap: dv_tan.abs() });
    }

    let k = range.k_scaling;
    let sig_r = sigmoid(enc.radial);
    let sig_z = sigmoid(enc.z);
    let az = normalize_pair_jacobian(enc.sin_azimuth, enc.cos_azimuth);
    let yw = normalize_pair_jacobian(enc.sin_yaw, enc.cos_yaw);

    let mut g = [0.0; 11];
    g[0] = signs[0] * sig_r * (1.0 - sig_r) * range.r_max;
    g[1] = k * (signs[1] * az[0][0] + signs[2] * az[1][0]);
    g[2] = k * (signs[1] * az[0][1] + signs[2] * az[1][1]);
    g[3] = signs[3] * sig_z * (1.0 - sig_z) * range.z_span();
    g[4] = signs[4] * d.length;
    g[5] = signs[5] * d.width;
    g[6] = signs[6] * d.height;
    g[7] = signs[7] * yw[0][0] + signs[8] * yw[1][0];
    g[8] = signs[7] * yw[0][1] + signs[8] * yw[1][1];
    g[9] = sign(dv_rad);
    g[10] = sign(dv_tan);
    Ok(Gradient(g))
}

/// Central differences of [`pair_loss`] with step `h` on each of the 11 inputs.
pub fn finite_difference_gradient(
    enc: &BoxEncoding,
    velocity: &PolarVelocity,
    gt: &GroundTruth,
    range: &RangeConfig,
    h: f64,
) -> Result<Gradient> {
    let base = pack(enc, velocity);
    let eval = |x: &[f64; 11]| {
        let (e, v) = unpack(x);
        pair_loss(&e, &v, gt, range)
    };
    let mut g = [0.0; 11];
    for i in 0..11 {
        let mut plus = base;
        let mut minus = base;
        plus[i] += h;
        minus[i] -= h;
        g[i] = (eval(&plus)? - eval(&minus)?) / (2.0 * h);
    }
    Ok(Gradient(g))
}

fn pack(enc: &BoxEncoding, v: &PolarVelocity) -> [f64; 11] {
    let e = enc.to_array();
    let mut x = [0.0; 11];
    x[..9].copy_from_slice(&e);
    x[9] = v.radial;
    x[10] = v.tangential;
    x
}

fn unpack(x: &[f64; 11]) -> (BoxEncoding, PolarVelocity) {
    let mut e = [0.0; 9];
    e.copy_from_slice(&x[..9]);
    (BoxEncoding::from_array(e), PolarVelocity { radial: x[9], tangential: x[10] })
}

/// `|a - n| / max(|a|, |n|, 1e-8)`, the largest over all components.
pub fn max_relative_error(analytic: &Gradient, numeric: &Gradient) -> f64 {
    analytic.0.iter().zip(&numeric.0).map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8)).fold(0.0, f64::max)
}

/// One matched pair for gradient checking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradFixture {
    pub encoding: BoxEncoding,
    pub velocity: PolarVelocity,
    pub gt: GroundTruth,
}

/// Decoded coordinates of generated fixtures stay at least this far from
/// their targets, well beyond what an [`FD_STEP`] perturbation can move them.
pub const FIXTURE_KINK_MARGIN: f64 = 1e-3;

/// Deterministic random fixtures away from every L1 kink.
pub fn gradcheck_fixtures(count: usize, seed: u64, range: &RangeConfig) -> Result<Vec<GradFixture>> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    range.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let pair = |rng: &mut ChaCha8Rng| loop {
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            if f64::hypot(a, b) > 0.3 {
                return (a, b);
            }
        };
        let az = pair(&mut rng);
        let yaw = pair(&mut rng);
        let encoding = BoxEncoding {
            radial: rng.random_range(-2.0..2.0),
            sin_azimuth: az.0,
            cos_azimuth: az.1,
            z: rng.random_range(-2.0..2.0),
            length: rng.random_range(-1.0..2.0),
            width: rng.random_range(-1.0..2.0),
            height: rng.random_range(-1.0..2.0),
            sin_yaw: yaw.0,
            cos_yaw: yaw.1,
        };
        let (ga, gy): (f64, f64) = (rng.random_range(-3.2..3.2), rng.random_range(-3.2..3.2));
        let polar = PolarBox {
            r: rng.random_range(1.0..range.r_max),
            sin_azimuth: ga.sin(),
            cos_azimuth: ga.cos(),
            z: rng.random_range(range.z_min..range.z_max),
            length: rng.random_range(0.5..6.0),
            width: rng.random_range(0.5..3.0),
            height: rng.random_range(0.5..3.0),
            sin_yaw: gy.sin(),
            cos_yaw: gy.cos(),
        };
        let velocity =
            PolarVelocity { radial: rng.random_range(-10.0..10.0), tangential: rng.random_range(-10.0..10.0) };
        let gt = GroundTruth {
            polar,
            class: 0,
            velocity: PolarVelocity {
                radial: rng.random_range(-10.0..10.0),
                tangential: rng.random_range(-10.0..10.0),
            },
        };
        let decoded = decode_box_encoding(&encoding, range)?.to_array();
        let target = polar.to_array();
        let box_clear = decoded.iter().zip(&target).all(|(a, b)| (a - b).abs() > FIXTURE_KINK_MARGIN);
        let vel_clear = (velocity.radial - gt.velocity.radial).abs() > FIXTURE_KINK_MARGIN
            && (velocity.tangential - gt.velocity.tangential).abs() > FIXTURE_KINK_MARGIN;
        if box_clear && vel_clear {
            out.push(GradFixture { encoding, velocity, gt });
        }
    }
    Ok(out)
}

/// Max relative error between [`loss_gradient`] and central differences for
/// each fixture, in fixture order.
pub fn run_gradcheck(fixtures: &[GradFixture], range: &RangeConfig) -> Result<Vec<f64>> {
    fixtures
        .iter()
        .map(|f| {
            let analytic = loss_gradient(&f.encoding, &f.velocity, &f.gt, range)?;
            let numeric = finite_difference_gradient(&f.encoding, &f.velocity, &f.gt, range, FD_STEP)?;
            Ok(max_relative_error(&analytic, &numeric))
        })
        .collect()
}
