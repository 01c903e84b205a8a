use lqig_core::belief::{forward_bayes_pass, softmax_rows, SignalingPolicy};
use lqig_core::linalg::{Mat, Vector};
use lqig_core::scenarios::{random_game, RandomGameShape};
use proptest::prelude::*;

fn shape(num_types: usize, horizon: usize) -> RandomGameShape {
    RandomGameShape {
        num_types,
        horizon,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn children_average_back_to_the_parent(seed in any::<u64>(), num_types in 2usize..=4, horizon in 1usize..=3, scale in 0.0f64..6.0) {
        let spec = random_game::<f64>(shape(num_types, horizon), seed).unwrap();
        let policy = SignalingPolicy::random(num_types, horizon, scale, seed).unwrap();
        let tree = forward_bayes_pass(&policy, &spec).unwrap();
        let l = &tree.layout;
        for node in 0..l.internal_count() {
            let mut avg = tree.beliefs[node].clone() * 0.0;
            for a in 0..l.branching() {
                avg += &tree.beliefs[l.child(node, a)] * tree.lambda[l.edge(node, a)];
            }
            prop_assert!((avg - &tree.beliefs[node]).amax() < 1e-10);
        }
        prop_assert!(tree.martingale_residual() < 1e-10);
        for p in &tree.beliefs {
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn row_shifts_leave_the_tree_unchanged(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let spec = random_game::<f64>(shape(3, 2), seed).unwrap();
        let policy = SignalingPolicy::random(3, 2, 2.0, seed).unwrap();
        let shifted_logits = policy
            .logits()
            .iter()
            .map(|m| Mat::from_fn(3, 3, |i, j| m[(i, j)] + shift * (i as f64 + 1.0)))
            .collect();
        let shifted = SignalingPolicy::from_logits(3, 2, shifted_logits).unwrap();
        let a = forward_bayes_pass(&policy, &spec).unwrap();
        let b = forward_bayes_pass(&shifted, &spec).unwrap();
        for (p, q) in a.beliefs.iter().zip(&b.beliefs) {
            prop_assert!((p - q).amax() < 1e-13);
        }
        for (x, y) in a.lambda.iter().zip(&b.lambda) {
            prop_assert!((x - y).abs() < 1e-13);
        }
    }
}

#[test]
fn type_independent_signaling_keeps_the_prior() {
    let spec = random_game::<f64>(shape(3, 3), 4).unwrap();
    let base = SignalingPolicy::<f64>::random(3, 3, 3.0, 4).unwrap();
    // Every type uses the first type's row.
    let logits = base
        .logits()
        .iter()
        .map(|m| Mat::from_fn(3, 3, |_, j| m[(0, j)]))
        .collect();
    let policy = SignalingPolicy::from_logits(3, 3, logits).unwrap();
    let tree = forward_bayes_pass(&policy, &spec).unwrap();
    for p in &tree.beliefs {
        assert!((p - &spec.prior).amax() < 1e-15);
    }
}

#[test]
fn softmax_survives_huge_logits() {
    let phi = Mat::from_row_slice(2, 3, &[1000.0, 999.0, -1000.0, 1e300, 0.0, -1e300]);
    let alpha = softmax_rows(&phi).unwrap();
    let e = (-1.0f64).exp();
    assert!((alpha[(0, 0)] - 1.0 / (1.0 + e)).abs() < 1e-15);
    assert_eq!(alpha[(0, 2)], 0.0);
    assert_eq!(alpha[(1, 0)], 1.0);
    assert!(softmax_rows(&Mat::from_row_slice(1, 2, &[f64::NAN, 0.0])).is_err());
}

#[test]
fn bayes_update_by_hand() {
    // Prior (0.3, 0.7); type 1 sends branch 1 w.p. 0.8, type 2 w.p. 0.4.
    let mut spec = random_game::<f64>(shape(2, 1), 0).unwrap();
    spec.prior = Vector::from_vec(vec![0.3, 0.7]);
    let logit = |p: f64| (p / (1.0 - p)).ln();
    let phi = Mat::from_row_slice(2, 2, &[logit(0.8), 0.0, logit(0.4), 0.0]);
    let policy = SignalingPolicy::from_logits(2, 1, vec![phi]).unwrap();
    let tree = forward_bayes_pass(&policy, &spec).unwrap();
    let lambda1 = 0.3 * 0.8 + 0.7 * 0.4;
    assert!((tree.lambda[0] - lambda1).abs() < 1e-15);
    assert!((tree.beliefs[1][0] - 0.24 / lambda1).abs() < 1e-15);
    assert!((tree.beliefs[2][0] - 0.06 / (1.0 - lambda1)).abs() < 1e-15);
}
