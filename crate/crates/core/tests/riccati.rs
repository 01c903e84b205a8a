use lqig_core::belief::{forward_bayes_pass, SignalingPolicy};
use lqig_core::game::{separable_split, tau_star, GameSpec};
use lqig_core::linalg::{max_abs_asymmetry, min_eigenvalue, spectral_norm, Mat, Vector};
use lqig_core::oracle::nested_saddle_root_value;
use lqig_core::riccati::{
    aggregate_node, backward_pass, complete_info_solve, evaluate_value, leaf_value, solve_edge,
    QuadraticValue,
};
use lqig_core::scenarios::{
    case_study_x0, hexner_scenario, random_game, random_state, RandomGameShape,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn backward_pass_matches_nested_saddle_oracle() {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        for horizon in [1, 2] {
            for separable in [false, true] {
                let shape = RandomGameShape {
                    horizon,
                    separable,
                    ..Default::default()
                };
                let spec = random_game::<f64>(shape, seed).unwrap();
                let policy = SignalingPolicy::random(2, horizon, 1.5, seed).unwrap();
                let tree = forward_bayes_pass(&policy, &spec).unwrap();
                let x0 = random_state(spec.n(), seed);
                let values = backward_pass(&tree, &spec).unwrap();
                let v = evaluate_value(values.root(), &x0);
                let oracle = nested_saddle_root_value(&spec, &tree, &x0).unwrap();
                worst = worst.max((v - oracle).abs() / (1.0 + oracle.abs()));
            }
        }
    }
    assert!(worst < 1e-8, "worst relative gap {worst:e}");
}

/// One textbook LQR step `min_u tau u'Ru/2 + V+(Ax + Bu)`.
fn lqr_step(p: &Mat<f64>, r: &Mat<f64>, a: &Mat<f64>, b: &Mat<f64>) -> (Mat<f64>, Mat<f64>) {
    let k = (r + b.transpose() * p * b).try_inverse().unwrap() * b.transpose() * p * a;
    let next = a.transpose() * p * a - a.transpose() * p * b * &k;
    (next, -k)
}

#[test]
fn edge_without_p2_input_is_an_lqr_step() {
    let mut spec = random_game::<f64>(RandomGameShape::default(), 2).unwrap();
    spec.dynamics.b2.fill(0.0);
    let m1 = spec.m1();
    spec.dynamics.b.columns_mut(m1, spec.m2()).fill(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = Mat::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
    let child = QuadraticValue {
        p: &g * g.transpose(),
        r: Vector::zeros(4),
        c: 0.0,
    };
    let tau = spec.tau();
    let r = &spec.types[0].r;
    let s = &spec.types[0].s;
    let edge = solve_edge(&child, r, s, &spec.dynamics).unwrap();
    let (p_ref, k_ref) = lqr_step(&child.p, &(r * tau), &spec.dynamics.a, &spec.dynamics.b1);
    assert!((&edge.value.p - p_ref).amax() < 1e-12);
    assert!((edge.ku() - k_ref).amax() < 1e-12);
    assert_eq!(edge.kv().amax(), 0.0);
}

/// Edge objective `tau(u'Ru - v'Sv)/2 + V+(Ax + B1u + B2v)`.
fn edge_objective(
    spec: &GameSpec<f64>,
    child: &QuadraticValue<f64>,
    r: &Mat<f64>,
    s: &Mat<f64>,
    x: &Vector<f64>,
    u: &Vector<f64>,
    v: &Vector<f64>,
) -> f64 {
    let tau = spec.tau();
    0.5 * tau * (u.dot(&(r * u)) - v.dot(&(s * v)))
        + evaluate_value(child, &spec.dynamics.step(x, u, v))
}

#[test]
fn edge_controls_are_saddle_points() {
    let delta = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..5u64 {
        let spec = random_game::<f64>(
            RandomGameShape {
                horizon: 2,
                ..Default::default()
            },
            seed,
        )
        .unwrap();
        let policy = SignalingPolicy::random(2, 2, 1.0, seed).unwrap();
        let tree = forward_bayes_pass(&policy, &spec).unwrap();
        let values = backward_pass(&tree, &spec).unwrap();
        let l = &tree.layout;
        for node in 0..l.internal_count() {
            for a in 0..2 {
                let e = l.edge(node, a);
                let child = &values.nodes[l.child(node, a)];
                let sol = values.edge(node, a);
                let x = random_state(spec.n(), rng.random());
                let (u, v) = sol.controls(&x);
                let (r, s) = (&tree.avg_r[e], &tree.avg_s[e]);
                let f0 = edge_objective(&spec, child, r, s, &x, &u, &v);
                let tol = 10.0 * delta * delta;
                for j in 0..spec.m1() {
                    for sign in [-1.0, 1.0] {
                        let mut up = u.clone();
                        up[j] += sign * delta;
                        assert!(edge_objective(&spec, child, r, s, &x, &up, &v) >= f0 - tol);
                    }
                }
                for j in 0..spec.m2() {
                    for sign in [-1.0, 1.0] {
                        let mut vp = v.clone();
                        vp[j] += sign * delta;
                        assert!(edge_objective(&spec, child, r, s, &x, &u, &vp) <= f0 + tol);
                    }
                }
            }
        }
    }
}

#[test]
fn separable_games_keep_the_sign_structure() {
    let mut specs: Vec<_> = (0..5)
        .map(|seed| {
            random_game::<f64>(
                RandomGameShape {
                    separable: true,
                    horizon: 3,
                    ..Default::default()
                },
                seed,
            )
            .unwrap()
        })
        .collect();
    specs.push(hexner_scenario());
    for (idx, spec) in specs.iter().enumerate() {
        let split = separable_split(spec).unwrap();
        let policy = SignalingPolicy::random(2, spec.horizon, 1.0, idx as u64).unwrap();
        let tree = forward_bayes_pass(&policy, spec).unwrap();
        let values = backward_pass(&tree, spec).unwrap();
        let n = spec.n();
        for node in &values.nodes {
            let p1 = node.p.view((0, 0), (split, split)).into_owned();
            let p2 = -node
                .p
                .view((split, split), (n - split, n - split))
                .into_owned();
            assert!(min_eigenvalue(&p1) >= -1e-10);
            assert!(min_eigenvalue(&p2) >= -1e-10);
            assert!(max_abs_asymmetry(&node.p) < 1e-10);
        }
        for edge in &values.edges {
            let h_uv = edge
                .h
                .view((0, 0), (spec.m1(), spec.m1() + spec.m2()))
                .columns(spec.m1(), spec.m2())
                .amax();
            assert!(h_uv < 1e-12, "H_uv = {h_uv}");
        }
    }
}

#[test]
fn node_value_is_weighted_edge_value() {
    let spec = random_game::<f64>(RandomGameShape::default(), 6).unwrap();
    let policy = SignalingPolicy::random(2, spec.horizon, 1.0, 6).unwrap();
    let tree = forward_bayes_pass(&policy, &spec).unwrap();
    let values = backward_pass(&tree, &spec).unwrap();
    let l = &tree.layout;
    for node in 0..l.internal_count() {
        let edges: Vec<_> = (0..2)
            .map(|a| (tree.weights[l.edge(node, a)], &values.edge(node, a).value))
            .collect();
        let agg = aggregate_node(edges.iter().copied());
        let x = random_state(spec.n(), node as u64);
        let direct: f64 = edges.iter().map(|(w, v)| w * evaluate_value(v, &x)).sum();
        assert!((evaluate_value(&agg, &x) - direct).abs() < 1e-10);
        assert!((evaluate_value(&values.nodes[node], &x) - direct).abs() < 1e-10);
    }
}

#[test]
fn evaluate_value_matches_reordered_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let g = Mat::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
        let v = QuadraticValue {
            p: &g + g.transpose(),
            r: Vector::from_fn(5, |_, _| rng.random_range(-1.0..1.0)),
            c: rng.random_range(-1.0..1.0),
        };
        let x = Vector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
        let mut s: f64 = v.c;
        for j in (0..5).rev() {
            s += v.r[j] * x[j];
            for i in (0..5).rev() {
                s += 0.5 * x[i] * v.p[(i, j)] * x[j];
            }
        }
        assert!((evaluate_value(&v, &x) - s).abs() < 1e-12);
    }
}

#[test]
fn hexner_leaf_at_uniform_belief() {
    let spec = hexner_scenario::<f64>();
    let leaf = leaf_value(&Vector::from_vec(vec![0.5, 0.5]), &spec);
    assert_eq!(leaf.p, spec.types[0].q);
    assert_eq!(leaf.r.amax(), 0.0);
    assert_eq!(leaf.c, 0.0);
    let vertex = leaf_value(&Vector::from_vec(vec![0.0, 1.0]), &spec);
    assert_eq!(vertex.r, spec.types[1].q_lin);
}

#[test]
fn complete_info_equals_single_type_tree() {
    let spec = random_game::<f64>(RandomGameShape::default(), 8).unwrap();
    for i in 0..2 {
        let ci = complete_info_solve(&spec, i).unwrap();
        let single = spec.restrict_to_type(i).unwrap();
        let policy = SignalingPolicy::zeros(1, single.horizon).unwrap();
        let tree = forward_bayes_pass(&policy, &single).unwrap();
        let values = backward_pass(&tree, &single).unwrap();
        assert!((&ci.values[0].p - &values.root().p).amax() < 1e-12);
        assert!((&ci.values[0].r - &values.root().r).amax() < 1e-12);
    }
    let mut flat = spec.clone();
    for t in &mut flat.types {
        t.q.fill(0.0);
        t.q_lin.fill(0.0);
        t.c = 0.0;
    }
    let ci = complete_info_solve(&flat, 0).unwrap();
    assert!(ci
        .stages
        .iter()
        .all(|s| s.gain.amax() == 0.0 && s.offset.amax() == 0.0));
    assert_eq!(ci.values[0].c, 0.0);
}

#[test]
fn hexner_tau_star_from_computed_values() {
    // The bound is conservative: with the largest value-matrix norm over the
    // tree it falls well below the case-study step, which is admissible
    // because the game is player-separable and every edge factorizes.
    let spec = hexner_scenario::<f64>();
    let policy = SignalingPolicy::zeros(2, spec.horizon).unwrap();
    let tree = forward_bayes_pass(&policy, &spec).unwrap();
    let values = backward_pass(&tree, &spec).unwrap();
    let p_bar = values
        .nodes
        .iter()
        .map(|v| spectral_norm(&v.p))
        .fold(0.0, f64::max);
    let tau0 = 1.0;
    let t = tau_star(&spec, p_bar, tau0).unwrap();
    // ||B_jc|| = 1 and ||A_c B_jc|| = 1 for the double integrators.
    let beta_sq = (1.0 + 0.5 * tau0) * (1.0f64 + 0.5 * tau0);
    let expected = (0.025 / (p_bar * beta_sq))
        .min(0.05 / (p_bar * beta_sq))
        .min(tau0);
    assert!((t - expected).abs() < 1e-12 * expected);
    assert!(t < spec.tau());
    assert!(separable_split(&spec).is_some());
    assert!(evaluate_value(values.root(), &case_study_x0()).is_finite());
}
