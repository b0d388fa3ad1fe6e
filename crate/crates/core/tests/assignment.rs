mod common;

use polar_core::assignment::{
    box_cost, brute_force_assign, build_cost_matrix, class_cost, filter_perception_range, hungarian, ClassCost,
    CostMatrix, PerceptionRange,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CostMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-5.0..20.0)).collect();
    CostMatrix::new(rows, cols, data).unwrap()
}

/// Minimum over all injections of the smaller side, enumerated recursively.
fn min_cost_by_enumeration(m: &CostMatrix) -> f64 {
    fn go(m: &CostMatrix, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == m.rows() {
            *best = best.min(acc);
            return;
        }
        for c in 0..m.cols() {
            if !used[c] {
                used[c] = true;
                go(m, row + 1, used, acc + m.get(row, c), best);
                used[c] = false;
            }
        }
    }
    let m = if m.rows() > m.cols() { m.transpose() } else { m.clone() };
    let mut best = f64::INFINITY;
    go(&m, 0, &mut vec![false; m.cols()], 0.0, &mut best);
    if m.rows() == 0 {
        0.0
    } else {
        best
    }
}

#[test]
fn hungarian_matches_exhaustive_search_on_small_matrices() {
    let mut rng = common::rng(21);
    for _ in 0..500 {
        let (rows, cols) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let m = random_matrix(&mut rng, rows, cols);
        let h = hungarian(&m).unwrap();
        h.validate(rows, cols).unwrap();
        assert_eq!(h.len(), rows.min(cols));
        let reference = min_cost_by_enumeration(&m);
        assert!((h.total_cost(&m) - reference).abs() < 1e-9);
        assert!((brute_force_assign(&m).unwrap().total_cost(&m) - reference).abs() < 1e-9);
    }
}

#[test]
fn hungarian_handles_larger_matrices() {
    let mut rng = common::rng(22);
    for (rows, cols) in [(6, 6), (7, 9), (10, 4), (8, 12)] {
        let m = random_matrix(&mut rng, rows, cols);
        let h = hungarian(&m).unwrap();
        assert!((h.total_cost(&m) - min_cost_by_enumeration(&m)).abs() < 1e-9);
    }
}

#[test]
fn integer_costs_give_exact_totals() {
    let mut rng = common::rng(23);
    for _ in 0..200 {
        let (rows, cols) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let data = (0..rows * cols).map(|_| rng.random_range(0..50) as f64).collect();
        let m = CostMatrix::new(rows, cols, data).unwrap();
        assert_eq!(hungarian(&m).unwrap().total_cost(&m), brute_force_assign(&m).unwrap().total_cost(&m));
    }
}

#[test]
fn three_by_three_by_hand() {
    let m = CostMatrix::from_rows(&[vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]]).unwrap();
    let a = hungarian(&m).unwrap();
    // the six permutations cost 6, 11, 5, 9, 7, 6
    assert_eq!(a.total_cost(&m), 5.0);
    assert_eq!(a.pairs, vec![(0, 1), (1, 0), (2, 2)]);
}

#[test]
fn permuting_rows_and_columns_permutes_the_assignment() {
    let mut rng = common::rng(24);
    for _ in 0..100 {
        let n = rng.random_range(2..=6);
        let m = random_matrix(&mut rng, n, n);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let rows: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|c| m.get(perm[r], perm[c])).collect()).collect();
        let pm = CostMatrix::from_rows(&rows).unwrap();
        let a = hungarian(&m).unwrap();
        let b = hungarian(&pm).unwrap();
        assert!((a.total_cost(&m) - b.total_cost(&pm)).abs() < 1e-9);
    }
}

#[test]
fn wide_and_tall_matrices_are_transposes() {
    let mut rng = common::rng(25);
    for _ in 0..100 {
        let m = random_matrix(&mut rng, 3, 6);
        let a = hungarian(&m).unwrap().total_cost(&m);
        let t = m.transpose();
        let b = hungarian(&t).unwrap().total_cost(&t);
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn scaling_fixture_needs_azimuth_weight() {
    let (preds, gts) = common::scaling_fixture();
    let correct = vec![(0, 0), (1, 1)];

    let weak = build_cost_matrix(&preds, &gts, 1.0, ClassCost::NegativeProbability).unwrap();
    let a = hungarian(&weak).unwrap();
    assert_eq!(a.pairs, vec![(0, 1), (1, 0)]);
    assert_eq!(a, brute_force_assign(&weak).unwrap());

    let strong = build_cost_matrix(&preds, &gts, 20.0, ClassCost::NegativeProbability).unwrap();
    let a = hungarian(&strong).unwrap();
    assert_eq!(a.pairs, correct);
    assert_eq!(a, brute_force_assign(&strong).unwrap());
}

#[test]
fn equal_radii_make_the_pairing_independent_of_scaling() {
    // every pairing pays the same radial cost, so only azimuth decides
    let gts = [common::polar_at(30.0, 0.0), common::polar_at(30.0, 10.0)];
    let preds = [common::polar_at(30.0, 9.0), common::polar_at(30.0, 1.0)];
    for k in [0.5, 1.0, 20.0, 100.0] {
        let rows: Vec<Vec<f64>> = gts.iter().map(|g| preds.iter().map(|p| box_cost(p, g, k)).collect()).collect();
        let m = CostMatrix::from_rows(&rows).unwrap();
        assert_eq!(hungarian(&m).unwrap().pairs, vec![(0, 1), (1, 0)]);
    }
}

#[test]
fn box_cost_is_a_pseudometric() {
    let range = Default::default();
    let mut rng = common::rng(26);
    for _ in 0..500 {
        let a = common::random_interior_box(&mut rng, &range);
        let b = common::random_interior_box(&mut rng, &range);
        let c = common::random_interior_box(&mut rng, &range);
        assert_eq!(box_cost(&a, &a, 20.0), 0.0);
        assert_eq!(box_cost(&a, &b, 20.0), box_cost(&b, &a, 20.0));
        assert!(box_cost(&a, &c, 20.0) <= box_cost(&a, &b, 20.0) + box_cost(&b, &c, 20.0) + 1e-9);
    }
}

#[test]
fn box_cost_is_affine_in_scaling() {
    let a = common::polar_at(20.0, 3.0);
    let b = common::polar_at(25.0, 40.0);
    let c0 = box_cost(&a, &b, 0.0);
    let c1 = box_cost(&a, &b, 1.0);
    for k in [2.0, 7.5, 20.0] {
        assert!((box_cost(&a, &b, k) - (c0 + k * (c1 - c0))).abs() < 1e-12);
    }
}

#[test]
fn class_costs() {
    assert_eq!(class_cost(&[0.2, 0.7, 0.1], 1, ClassCost::NegativeProbability).unwrap(), -0.7);
    let focal = ClassCost::Focal { alpha: 0.25, gamma: 2.0 };
    let p: f64 = 0.7;
    let expected = 0.25 * (1.0 - p).powi(2) * -p.ln() - 0.75 * p.powi(2) * -(1.0 - p).ln();
    assert!((class_cost(&[0.3, p], 1, focal).unwrap() - expected).abs() < 1e-12);
    assert!(class_cost(&[0.3, 0.7], 2, ClassCost::NegativeProbability).is_err());
    assert!(class_cost(&[1.3, 0.7], 0, ClassCost::NegativeProbability).is_err());
}

#[test]
fn perception_range_fixture() {
    let objs = common::range_fixture();
    for o in &objs {
        assert!((o.radial_distance() - common::RANGE_FIXTURE_RADIUS).abs() < 1e-12);
    }
    let rect = PerceptionRange::Rectangular { x_max: common::RANGE_FIXTURE_X_MAX, y_max: common::RANGE_FIXTURE_Y_MAX };
    let (kept, dropped) = filter_perception_range(&objs, rect);
    assert_eq!(kept, vec![objs[1]]);
    assert_eq!(dropped, vec![objs[0]]);

    let (kept, dropped) = filter_perception_range(&objs, PerceptionRange::Circular { r_max: 50.0 });
    assert_eq!(kept, objs);
    assert!(dropped.is_empty());
}

#[test]
fn circular_range_includes_its_boundary() {
    let on_edge = [common::cart(50.0, 0.0)];
    let (kept, _) = filter_perception_range(&on_edge, PerceptionRange::Circular { r_max: 50.0 });
    assert_eq!(kept.len(), 1);
}

#[test]
fn oracle_refuses_large_inputs() {
    let m = CostMatrix::new(9, 9, vec![0.0; 81]).unwrap();
    assert!(brute_force_assign(&m).is_err());
    assert_eq!(hungarian(&m).unwrap().len(), 9);
}

#[test]
fn empty_and_non_finite_matrices() {
    let empty = CostMatrix::new(0, 3, vec![]).unwrap();
    assert!(hungarian(&empty).unwrap().is_empty());
    let bad = CostMatrix::new(1, 2, vec![1.0, f64::NAN]);
    assert!(bad.is_err() || hungarian(&bad.unwrap()).is_err());
}

proptest! {
    #[test]
    fn assignment_is_injective_and_optimal(
        rows in 1usize..5,
        cols in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mut rng = common::rng(seed);
        let m = random_matrix(&mut rng, rows, cols);
        let a = hungarian(&m).unwrap();
        prop_assert!(a.validate(rows, cols).is_ok());
        prop_assert_eq!(a.len(), rows.min(cols));
        prop_assert!((a.total_cost(&m) - min_cost_by_enumeration(&m)).abs() < 1e-9);
    }

    #[test]
    fn adding_a_constant_to_a_row_keeps_the_optimum(seed in any::<u64>(), shift in -10.0f64..10.0) {
        let mut rng = common::rng(seed);
        let m = random_matrix(&mut rng, 4, 4);
        let mut rows: Vec<Vec<f64>> = (0..4).map(|r| (0..4).map(|c| m.get(r, c)).collect()).collect();
        for v in rows[2].iter_mut() {
            *v += shift;
        }
        let shifted = CostMatrix::from_rows(&rows).unwrap();
        let a = hungarian(&m).unwrap().total_cost(&m);
        let b = hungarian(&shifted).unwrap().total_cost(&shifted);
        prop_assert!((b - a - shift).abs() < 1e-9);
    }
}
