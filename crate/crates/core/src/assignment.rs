//! Polar matching cost, perception range filtering and optimal one-to-one
//! assignment between ground-truth objects (rows) and predictions (columns).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CartesianBox, PolarBox};
use crate::loss::focal_loss;

/// Largest `min(rows, cols)` the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_MIN_DIM: usize = 8;
/// Largest `max(rows, cols)` the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_MAX_DIM: usize = 12;

/// Row-major `rows x cols` matrix; rows are ground truths, columns predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, got: bad.len() });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        Self { rows: self.cols, cols: self.rows, data }
    }

    fn check_finite(&self) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cost matrix"));
        }
        Ok(())
    }
}

/// `(gt index, prediction index)` pairs sorted by gt index.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
}

impl Assignment {
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Sum of the assigned entries, accumulated in gt order.
    pub fn total_cost(&self, costs: &CostMatrix) -> f64 {
        self.pairs.iter().map(|&(g, p)| costs.get(g, p)).sum()
    }

    pub fn prediction_for(&self, gt: usize) -> Option<usize> {
        self.pairs.iter().find(|(g, _)| *g == gt).map(|(_, p)| *p)
    }

    pub fn gt_for(&self, pred: usize) -> Option<usize> {
        self.pairs.iter().find(|(_, p)| *p == pred).map(|(g, _)| *g)
    }

    /// Checks index ranges and injectivity for `num_gts x num_preds`.
    pub fn validate(&self, num_gts: usize, num_preds: usize) -> Result<()> {
        let mut seen_g = vec![false; num_gts];
        let mut seen_p = vec![false; num_preds];
        for &(g, p) in &self.pairs {
            if g >= num_gts || p >= num_preds {
                return Err(Error::InvalidAssignment(format!(
                    "pair ({g}, {p}) out of range for {num_gts} gts and {num_preds} predictions"
                )));
            }
            if seen_g[g] || seen_p[p] {
                return Err(Error::InvalidAssignment(format!("pair ({g}, {p}) reuses an index")));
            }
            seen_g[g] = true;
            seen_p[p] = true;
        }
        Ok(())
    }
}

/// Polar box matching term: radial L1 plus scaled azimuth-pair L1.
/// Height, size and yaw do not participate.
pub fn box_cost(pred: &PolarBox, gt: &PolarBox, k_scaling: f64) -> f64 {
    (pred.r - gt.r).abs()
        + k_scaling * ((pred.sin_azimuth - gt.sin_azimuth).abs() + (pred.cos_azimuth - gt.cos_azimuth).abs())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassCost {
    /// `-p(gt class)`.
    #[default]
    NegativeProbability,
    /// Focal-style cost: positive focal term minus negative focal term.
    Focal { alpha: f64, gamma: f64 },
}

pub fn class_cost(probs: &[f64], gt_class: usize, kind: ClassCost) -> Result<f64> {
    if let Some(&bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidProbability(bad));
    }
    let p = *probs.get(gt_class).ok_or(Error::DimensionMismatch { expected: gt_class + 1, got: probs.len() })?;
    Ok(match kind {
        ClassCost::NegativeProbability => -p,
        ClassCost::Focal { alpha, gamma } => focal_loss(p, true, gamma, alpha) - focal_loss(p, false, gamma, alpha),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerceptionRange {
    /// Keeps `sqrt(x^2 + y^2) <= r_max`.
    Circular { r_max: f64 },
    /// Keeps `|x| < x_max && |y| < y_max`.
    Rectangular { x_max: f64, y_max: f64 },
}

impl PerceptionRange {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            PerceptionRange::Circular { r_max } => x.hypot(y) <= r_max,
            PerceptionRange::Rectangular { x_max, y_max } => x.abs() < x_max && y.abs() < y_max,
        }
    }
}

/// Splits boxes into `(kept, dropped)`, preserving order.
pub fn filter_perception_range(gts: &[CartesianBox], range: PerceptionRange) -> (Vec<CartesianBox>, Vec<CartesianBox>) {
    gts.iter().partition(|b| range.contains(b.x, b.y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchCandidate {
    pub polar: PolarBox,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchTarget {
    pub polar: PolarBox,
    pub class: usize,
}

/// Entry `(j, i)` is `class_cost(pred i, gt j) + box_cost(pred i, gt j)`.
pub fn build_cost_matrix(
    preds: &[MatchCandidate],
    gts: &[MatchTarget],
    k_scaling: f64,
    class_kind: ClassCost,
) -> Result<CostMatrix> {
    let mut data = Vec::with_capacity(preds.len() * gts.len());
    for gt in gts {
        for pred in preds {
            data.push(class_cost(&pred.probs, gt.class, class_kind)? + box_cost(&pred.polar, &gt.polar, k_scaling));
        }
    }
    CostMatrix::new(gts.len(), preds.len(), data)
}

/// Minimum-cost assignment of size `min(rows, cols)`.
///
/// Rectangular inputs are padded to square with a sentinel that can never
/// beat a real pairing; padded pairs are dropped from the result.
pub fn hungarian(costs: &CostMatrix) -> Result<Assignment> {
    costs.check_finite()?;
    if costs.is_empty() {
        return Ok(Assignment::default());
    }
    let n = costs.rows.max(costs.cols);
    let max_abs = costs.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sentinel = max_abs * (costs.rows.min(costs.cols) + 1) as f64 + 1.0;
    let at = |r: usize, c: usize| {
        if r < costs.rows && c < costs.cols {
            costs.get(r, c)
        } else {
            sentinel
        }
    };

    // Shortest augmenting path with row/column potentials, 1-based with a
    // virtual column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let pairs = (1..=n).map(|j| (owner[j] - 1, j - 1)).filter(|&(r, c)| r < costs.rows && c < costs.cols).collect();
    Ok(Assignment::new(pairs))
}

/// Exhaustive minimum-cost assignment; a test oracle for [`hungarian`].
pub fn brute_force_assign(costs: &CostMatrix) -> Result<Assignment> {
    costs.check_finite()?;
    let (rows, cols) = (costs.rows, costs.cols);
    if rows.min(cols) > BRUTE_FORCE_MAX_MIN_DIM || rows.max(cols) > BRUTE_FORCE_MAX_MAX_DIM {
        return Err(Error::OracleLimit { rows, cols });
    }
    if costs.is_empty() {
        return Ok(Assignment::default());
    }
    // enumerate injections of the smaller side into the larger one
    let transposed = rows > cols;
    let m = if transposed { costs.transpose() } else { costs.clone() };
    let k = m.rows;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut chosen = Vec::with_capacity(k);
    let mut used = vec![false; m.cols];
    enumerate(&m, &mut chosen, &mut used, &mut best);
    let (_, cols_for_rows) = best.expect("non-empty matrix has at least one assignment");
    let pairs = cols_for_rows.into_iter().enumerate().map(|(r, c)| if transposed { (c, r) } else { (r, c) }).collect();
    Ok(Assignment::new(pairs))
}

fn enumerate(m: &CostMatrix, chosen: &mut Vec<usize>, used: &mut [bool], best: &mut Option<(f64, Vec<usize>)>) {
    if chosen.len() == m.rows {
        let pairs = chosen.iter().enumerate().map(|(r, &c)| (r, c)).collect::<Vec<_>>();
        let total = Assignment::new(pairs).total_cost(m);
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            *best = Some((total, chosen.clone()));
        }
        return;
    }
    for c in 0..m.cols {
        if used[c] {
            continue;
        }
        used[c] = true;
        chosen.push(c);
        enumerate(m, chosen, used, best);
        chosen.pop();
        used[c] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar(r: f64, s: f64, c: f64) -> PolarBox {
        PolarBox::from_array([r, s, c, 0.0, 4.0, 2.0, 1.5, 0.0, 1.0])
    }

    #[test]
    fn box_cost_examples() {
        let a = polar(10.0, 0.0, 1.0);
        assert_eq!(box_cost(&a, &a, 20.0), 0.0);
        let gt = polar(12.0, 0.1, 0.99499);
        let c = box_cost(&a, &gt, 20.0);
        assert!((c - 4.100).abs() < 1e-3, "{c}");
        // radial part unchanged, azimuth part linear in k
        let c1 = box_cost(&a, &gt, 1.0);
        assert!(((c - 2.0) - 20.0 * (c1 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn class_cost_examples() {
        let k = ClassCost::NegativeProbability;
        assert_eq!(class_cost(&[0.0, 1.0], 1, k).unwrap(), -1.0);
        assert_eq!(class_cost(&[0.0, 1.0], 0, k).unwrap(), -0.0);
        assert!((class_cost(&[0.1; 10], 3, k).unwrap() + 0.1).abs() < 1e-15);
        assert_eq!(class_cost(&[1.2], 0, k), Err(Error::InvalidProbability(1.2)));
        assert!(class_cost(&[0.5], 3, k).is_err());
    }

    #[test]
    fn focal_class_cost_orders_confidence() {
        let k = ClassCost::Focal { alpha: 0.25, gamma: 2.0 };
        let high = class_cost(&[0.9], 0, k).unwrap();
        let low = class_cost(&[0.1], 0, k).unwrap();
        assert!(high < low);
    }

    #[test]
    fn range_filter_examples() {
        let b = |x, y| CartesianBox::from_array([x, y, 0.0, 1.0, 1.0, 1.0, 0.0]);
        let circ = PerceptionRange::Circular { r_max: 50.0 };
        let rect = PerceptionRange::Rectangular { x_max: 50.0, y_max: 50.0 };
        let (kept, dropped) = filter_perception_range(&[b(40.0, 40.0)], circ);
        assert!(kept.is_empty() && dropped.len() == 1);
        let (kept, _) = filter_perception_range(&[b(40.0, 40.0)], rect);
        assert_eq!(kept.len(), 1);
        assert!(circ.contains(0.0, 0.0) && rect.contains(0.0, 0.0));
        // circular bound is inclusive, rectangular is strict
        assert!(circ.contains(50.0, 0.0));
        assert!(!rect.contains(50.0, 0.0));
    }

    #[test]
    fn cost_matrix_examples() {
        let p = polar(10.0, 0.0, 1.0);
        let m = build_cost_matrix(
            &[MatchCandidate { polar: p, probs: vec![1.0] }],
            &[MatchTarget { polar: p, class: 0 }],
            20.0,
            ClassCost::NegativeProbability,
        )
        .unwrap();
        assert_eq!((m.rows(), m.cols(), m.get(0, 0)), (1, 1, -1.0));

        let empty = build_cost_matrix(
            &[MatchCandidate { polar: p, probs: vec![1.0] }],
            &[],
            20.0,
            ClassCost::NegativeProbability,
        )
        .unwrap();
        assert_eq!((empty.rows(), empty.cols()), (0, 1));
        assert!(hungarian(&empty).unwrap().is_empty());
    }

    #[test]
    fn hungarian_small() {
        let m = CostMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap();
        let a = hungarian(&m).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(a.total_cost(&m), 2.0);
        assert_eq!(brute_force_assign(&m).unwrap().total_cost(&m), 2.0);
    }

    #[test]
    fn hungarian_identity_favoring() {
        let n = 5;
        let rows: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { 10.0 + (i * j) as f64 }).collect()).collect();
        let a = hungarian(&CostMatrix::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(a.pairs, (0..n).map(|i| (i, i)).collect::<Vec<_>>());
    }

    #[test]
    fn hungarian_rectangular_and_negative() {
        let m = CostMatrix::from_rows(&[vec![-1.0, -5.0, 0.0]]).unwrap();
        assert_eq!(hungarian(&m).unwrap().pairs, vec![(0, 1)]);
        let t = m.transpose();
        assert_eq!(hungarian(&t).unwrap().pairs, vec![(1, 0)]);
    }

    #[test]
    fn non_finite_rejected() {
        let m = CostMatrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(hungarian(&m).is_err());
        assert!(brute_force_assign(&m).is_err());
    }

    #[test]
    fn oracle_limits() {
        let m = CostMatrix::new(9, 9, vec![0.0; 81]).unwrap();
        assert_eq!(brute_force_assign(&m), Err(Error::OracleLimit { rows: 9, cols: 9 }));
        let one = CostMatrix::from_rows(&[vec![4.0]]).unwrap();
        assert_eq!(brute_force_assign(&one).unwrap().pairs, vec![(0, 0)]);
    }

    #[test]
    fn assignment_validation() {
        assert!(Assignment::new(vec![(0, 0), (1, 1)]).validate(2, 2).is_ok());
        assert!(Assignment::new(vec![(0, 0), (1, 0)]).validate(2, 2).is_err());
        assert!(Assignment::new(vec![(0, 3)]).validate(2, 2).is_err());
    }
}
