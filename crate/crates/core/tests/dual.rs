use lqig_core::dual::{
    column_generation, deterministic_cost_vector, dual_node_value, finite_set_dual_value,
    finite_set_node_value, fixed_tree_dual_value, lambda_lp, support_function,
    typewise_backward_pass, CostVectorSet, DualTree, NodeQuadratics, SimplexSearch,
};
use lqig_core::linalg::{Mat, Vector};
use lqig_core::oracle::{child_label_lp_value, direct_cost_vector, joint_branch_cost, ActionGrid};
use lqig_core::riccati::QuadraticValue;
use lqig_core::scenarios::{random_game, random_state, RandomGameShape};
use lqig_core::GameSpec64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn terminal_continuations(spec: &GameSpec64) -> Vec<QuadraticValue<f64>> {
    spec.types
        .iter()
        .map(|t| QuadraticValue {
            p: t.q.clone(),
            r: t.q_lin.clone(),
            c: t.c,
        })
        .collect()
}

fn scalar_v_instance(seed: u64) -> (GameSpec64, Vector<f64>, Vec<QuadraticValue<f64>>) {
    let shape = RandomGameShape {
        m2: 1,
        horizon: 1,
        ..Default::default()
    };
    let spec = random_game::<f64>(shape, seed).unwrap();
    let x = random_state(spec.n(), seed);
    let cont = terminal_continuations(&spec);
    (spec, x, cont)
}

fn random_label(rng: &mut ChaCha8Rng, ni: usize) -> Vector<f64> {
    Vector::from_fn(ni, |_, _| rng.random_range(-0.5..0.5))
}

#[test]
fn fixed_tree_value_matches_child_label_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let shape = RandomGameShape {
        horizon: 2,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    for probe in 0..50u64 {
        let spec = random_game::<f64>(shape, probe % 10).unwrap();
        let tree = DualTree::random(2, 2, spec.m2(), 1.0, probe).unwrap();
        let costs = typewise_backward_pass(&tree, &spec).unwrap();
        let x = random_state(spec.n(), 100 + probe);
        let p_hat = random_label(&mut rng, 2);
        for node in [0, 1, 3] {
            let id = tree.layout().node_id(node);
            let w = fixed_tree_dual_value(&costs, &id, &x, &p_hat)
                .unwrap()
                .value;
            let lp = child_label_lp_value(&spec, &tree, node, &x, &p_hat).unwrap();
            worst = worst.max((w - lp).abs());
        }
    }
    assert!(worst < 1e-8, "worst gap {worst:e}");
}

#[test]
fn typewise_costs_match_joint_minimization() {
    for seed in 0..5 {
        for ni in [1, 2] {
            let shape = RandomGameShape {
                num_types: ni,
                horizon: 2,
                ..Default::default()
            };
            let spec = random_game::<f64>(shape, seed).unwrap();
            let tree = DualTree::random(ni, 2, spec.m2(), 1.0, seed + 7).unwrap();
            let costs = typewise_backward_pass(&tree, &spec).unwrap();
            let x = random_state(spec.n(), seed);
            for i in 0..ni {
                let direct: f64 = (0..=ni)
                    .map(|a| {
                        tree.weight(0, a) * joint_branch_cost(&spec, &tree, i, 0, a, &x).unwrap()
                    })
                    .sum();
                let j = costs.node_cost(i, 0).evaluate(&x);
                assert!(
                    (j - direct).abs() < 1e-9 * (1.0 + direct.abs()),
                    "type {i}: {j} vs {direct}"
                );
            }
        }
    }
}

#[test]
fn fixed_tree_value_is_translation_equivariant() {
    let spec = random_game::<f64>(RandomGameShape::default(), 4).unwrap();
    let tree = DualTree::random(2, spec.horizon, spec.m2(), 1.0, 4).unwrap();
    let costs = typewise_backward_pass(&tree, &spec).unwrap();
    let x = random_state(spec.n(), 4);
    let p = Vector::from_vec(vec![0.1, -0.3]);
    let root = tree.layout().node_id(0);
    let base = fixed_tree_dual_value(&costs, &root, &x, &p).unwrap();
    for t in [-2.0, 0.5, 3.0] {
        let shifted = fixed_tree_dual_value(&costs, &root, &x, &p.add_scalar(t)).unwrap();
        assert!((shifted.value - base.value - t).abs() < 1e-12);
        assert_eq!(shifted.argmax, base.argmax);
    }
    // Tied labels report both types and pick the first.
    let j = base.costs.clone();
    let tied = fixed_tree_dual_value(&costs, &root, &x, &j).unwrap();
    assert_eq!(tied.argmax, 0);
    assert_eq!(tied.active, vec![0, 1]);
}

#[test]
fn lambda_lp_primal_equals_simplex_dual() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let ni = rng.random_range(1..5);
        let na = rng.random_range(1..7);
        let costs = Mat::from_fn(ni, na, |_, _| rng.random_range(-2.0..2.0));
        let p = random_label(&mut rng, ni);
        let primal = lambda_lp(&p, &costs).unwrap();
        let dual = finite_set_dual_value(&p, &costs).unwrap();
        assert!((primal.value - dual).abs() < 1e-9);
        assert!((primal.lambda.sum() - 1.0).abs() < 1e-12);
        assert!((primal.q.sum() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn closed_form_cost_vector_matches_direct_minimization() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..50u64 {
        let spec = random_game::<f64>(RandomGameShape::default(), trial % 7).unwrap();
        let cont = terminal_continuations(&spec);
        let x = random_state(spec.n(), trial);
        let v = Vector::from_fn(spec.m2(), |_, _| rng.random_range(-2.0..2.0));
        let closed = deterministic_cost_vector(&x, &v, &cont, &spec).unwrap();
        let direct = direct_cost_vector(&x, &v, &cont, &spec).unwrap();
        assert!((closed - direct).amax() < 1e-9);
    }
    let (spec, x, cont) = scalar_v_instance(0);
    let quads = NodeQuadratics::new(&x, &cont, &spec).unwrap();
    assert_eq!(
        quads.cost_vector(&Vector::zeros(1)),
        Vector::from_vec(quads.a.clone())
    );
}

#[test]
fn support_function_matches_grid_search() {
    for seed in 0..50u64 {
        let (spec, x, cont) = scalar_v_instance(seed);
        let grid = ActionGrid::new(-10.0, 10.0, 1e-3, &x, &cont, &spec).unwrap();
        for t in [0.0, 0.3, 0.5, 1.0] {
            let q = Vector::from_vec(vec![t, 1.0 - t]);
            let (sigma, v) = support_function(&q, &x, &cont, &spec).unwrap();
            let (g, gv) = grid.support(&q);
            assert!(v[0].abs() < 10.0);
            assert!(
                (sigma - g).abs() < 1e-5,
                "seed {seed} t {t}: {sigma} vs {g}"
            );
            assert!((v[0] - gv).abs() < 1e-2);
        }
    }
}

#[test]
fn vertex_support_is_single_type_maximum() {
    let (spec, x, cont) = scalar_v_instance(3);
    for i in 0..2 {
        let mut q = Vector::zeros(2);
        q[i] = 1.0;
        let (sigma, v) = support_function(&q, &x, &cont, &spec).unwrap();
        let at = direct_cost_vector(&x, &v, &cont, &spec).unwrap()[i];
        assert!((sigma - at).abs() < 1e-12);
        for dv in [-1e-3, 1e-3] {
            let near = direct_cost_vector(&x, &v.add_scalar(dv), &cont, &spec).unwrap()[i];
            assert!(near <= at);
        }
    }
}

#[test]
fn node_value_with_one_type_is_label_minus_continuation_max() {
    let shape = RandomGameShape {
        num_types: 1,
        m2: 1,
        horizon: 1,
        ..Default::default()
    };
    let spec = random_game::<f64>(shape, 2).unwrap();
    let x = random_state(spec.n(), 2);
    let cont = terminal_continuations(&spec);
    let p = Vector::from_element(1, 0.7);
    let psi = dual_node_value(&x, &p, &cont, &spec, &SimplexSearch::default()).unwrap();
    let grid = ActionGrid::new(-10.0, 10.0, 1e-3, &x, &cont, &spec).unwrap();
    let best = grid
        .costs
        .iter()
        .map(|c| c[0])
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((psi.value - (0.7 - best)).abs() < 1e-5);
}

#[test]
fn node_value_over_finite_set_equals_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (spec, x, cont) = scalar_v_instance(8);
    let quads = NodeQuadratics::new(&x, &cont, &spec).unwrap();
    for _ in 0..20 {
        let actions: Vec<_> = (0..rng.random_range(1..6))
            .map(|_| Vector::from_element(1, rng.random_range(-3.0..3.0)))
            .collect();
        let set = CostVectorSet::from_actions(&quads, actions);
        let p = random_label(&mut rng, 2);
        let searched = finite_set_node_value(&p, &set, &SimplexSearch::default()).unwrap();
        let lp = finite_set_dual_value(&p, &set.cost_matrix()).unwrap();
        assert!((searched - lp).abs() < 1e-9, "{searched} vs {lp}");
    }
}

#[test]
fn node_value_is_translation_equivariant() {
    let (spec, x, cont) = scalar_v_instance(9);
    let p = Vector::from_vec(vec![0.2, -0.1]);
    let s = SimplexSearch::default();
    let base = dual_node_value(&x, &p, &cont, &spec, &s).unwrap().value;
    for t in [-1.0, 0.25, 2.0] {
        let shifted = dual_node_value(&x, &p.add_scalar(t), &cont, &spec, &s)
            .unwrap()
            .value;
        assert!((shifted - base - t).abs() < 1e-9);
    }
}

#[test]
fn column_generation_matches_grid_with_few_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for seed in 0..50u64 {
        let (spec, x, cont) = scalar_v_instance(seed);
        let quads = NodeQuadratics::new(&x, &cont, &spec).unwrap();
        let p = random_label(&mut rng, 2);
        let start = CostVectorSet::from_actions(&quads, [Vector::zeros(1)]);
        let cg = column_generation(&x, &p, start, &cont, &spec, 5).unwrap();
        let grid = ActionGrid::new(-10.0, 10.0, 1e-3, &x, &cont, &spec).unwrap();
        let oracle = grid.node_value_two_types(&p);
        assert!(cg.candidates.len() <= 5);
        assert!(
            (cg.value - oracle).abs() < 1e-5,
            "seed {seed}: {} vs {oracle}",
            cg.value
        );
        for w in cg.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let psi = dual_node_value(&x, &p, &cont, &spec, &SimplexSearch::default())
            .unwrap()
            .value;
        assert!(cg.value >= psi - 1e-8);
        if cg.converged {
            assert!((cg.value - psi).abs() < 1e-8);
        }
    }
}

#[test]
fn column_generation_stops_when_optimum_is_present() {
    let (spec, x, cont) = scalar_v_instance(12);
    let p = Vector::from_vec(vec![0.05, -0.05]);
    let psi = dual_node_value(&x, &p, &cont, &spec, &SimplexSearch::default()).unwrap();
    let quads = NodeQuadratics::new(&x, &cont, &spec).unwrap();
    let start =
        CostVectorSet::from_actions(&quads, [psi.v_star.clone(), Vector::from_element(1, 5.0)]);
    let cg = column_generation(&x, &p, start, &cont, &spec, 10).unwrap();
    assert!(cg.converged);
    assert_eq!(cg.iterations(), 1);
}

#[test]
fn interior_cost_vectors_do_not_change_the_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (spec, x, cont) = scalar_v_instance(13);
    let quads = NodeQuadratics::new(&x, &cont, &spec).unwrap();
    let set =
        CostVectorSet::from_actions(&quads, [-2.0, 0.0, 1.5].map(|v| Vector::from_element(1, v)));
    let costs = set.cost_matrix();
    let p = Vector::from_vec(vec![0.1, 0.0]);
    let base = lambda_lp(&p, &costs).unwrap().value;
    let mut augmented = costs.clone();
    for _ in 0..4 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum();
        let interior =
            Vector::from_fn(2, |i, _| (0..3).map(|s| w[s] / total * costs[(i, s)]).sum());
        let col = augmented.ncols();
        augmented = augmented.insert_column(col, 0.0);
        augmented.set_column(col, &interior);
    }
    let with_interior = lambda_lp(&p, &augmented).unwrap().value;
    assert!((base - with_interior).abs() < 1e-12);
}
