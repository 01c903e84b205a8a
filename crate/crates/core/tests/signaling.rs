use lqig_core::belief::SignalingPolicy;
use lqig_core::linalg::Mat;
use lqig_core::scenarios::{random_game, random_state, RandomGameShape};
use lqig_core::signaling::{
    evaluate_policy, grad_fd, grad_loss, grad_norm, loss, optimize, revelation_step, Objective,
    OptimizerConfig,
};
use lqig_core::Error;

fn small(seed: u64) -> (lqig_core::GameSpec64, lqig_core::linalg::Vector<f64>) {
    let spec = random_game::<f64>(RandomGameShape::default(), seed).unwrap();
    let x0 = random_state(spec.n(), seed);
    (spec, x0)
}

#[test]
fn gradient_rows_sum_to_zero() {
    for seed in 0..5 {
        let (spec, x0) = small(seed);
        let policy = SignalingPolicy::random(2, spec.horizon, 2.0, seed).unwrap();
        for block in grad_loss(&policy, &x0, &spec).unwrap() {
            for row in block.row_iter() {
                assert!(row.sum().abs() < 1e-12 * (1.0 + row.amax()));
            }
        }
    }
}

#[test]
fn single_type_gradient_is_zero() {
    let spec = random_game::<f64>(
        RandomGameShape {
            num_types: 1,
            ..Default::default()
        },
        3,
    )
    .unwrap();
    let x0 = random_state(spec.n(), 3);
    let policy = SignalingPolicy::random(1, spec.horizon, 1.0, 3).unwrap();
    let g = grad_loss(&policy, &x0, &spec).unwrap();
    assert!(g.iter().all(|b| b.amax() == 0.0));
}

#[test]
fn zero_fd_step_is_rejected() {
    let (spec, x0) = small(1);
    let policy = SignalingPolicy::zeros(2, spec.horizon).unwrap();
    assert!(matches!(
        grad_fd(&policy, &x0, &spec, 0.0),
        Err(Error::Domain(_))
    ));
}

#[test]
fn small_step_against_the_gradient_decreases_the_loss() {
    for seed in 0..5 {
        let (spec, x0) = small(seed);
        let policy = SignalingPolicy::random(2, spec.horizon, 1.0, seed).unwrap();
        let g = grad_loss(&policy, &x0, &spec).unwrap();
        let step = 1e-3 / (1.0 + grad_norm(&g));
        let next = policy.axpy(-step, &g);
        assert!(loss(&next, &x0, &spec).unwrap() < loss(&policy, &x0, &spec).unwrap());
    }
}

#[test]
fn optimizer_is_deterministic_and_monotone() {
    let (spec, x0) = small(2);
    let cfg = OptimizerConfig {
        max_iters: 60,
        ..Default::default()
    };
    let a = optimize(&spec, &x0, &cfg).unwrap();
    let b = optimize(&spec, &x0, &cfg).unwrap();
    assert_eq!(a.signaling, b.signaling);
    assert_eq!(a.root_value, b.root_value);
    assert!(a.trace.windows(2).all(|w| w[1].loss <= w[0].loss));
    let start = evaluate_policy(
        &spec,
        &x0,
        SignalingPolicy::random(2, spec.horizon, cfg.init_scale, cfg.seed).unwrap(),
    )
    .unwrap();
    assert_eq!(a.trace[0].loss, start.root_value);
    assert!(a.root_value <= start.root_value);
}

#[test]
fn zero_budget_returns_the_initial_policy() {
    let (spec, x0) = small(4);
    let cfg = OptimizerConfig {
        max_iters: 0,
        init_scale: 0.0,
        ..Default::default()
    };
    let solved = optimize(&spec, &x0, &cfg).unwrap();
    assert_eq!(solved.iterations, 0);
    // The uniform policy is a stationary point of the loss.
    assert!(solved.grad_norm_final < 1e-12);
    assert!(solved.signaling.logits().iter().all(|m| m.amax() == 0.0));
}

#[test]
fn bad_optimizer_settings_are_rejected() {
    let (spec, x0) = small(5);
    for cfg in [
        OptimizerConfig {
            step_size: 0.0,
            ..Default::default()
        },
        OptimizerConfig {
            step_growth: 0.5,
            ..Default::default()
        },
        OptimizerConfig {
            init_scale: -1.0,
            ..Default::default()
        },
    ] {
        assert!(optimize(&spec, &x0, &cfg).is_err());
    }
}

#[test]
fn objective_value_matches_evaluated_policy() {
    let (spec, x0) = small(6);
    let policy = SignalingPolicy::random(2, spec.horizon, 1.0, 6).unwrap();
    let solved = evaluate_policy(&spec, &x0, policy.clone()).unwrap();
    let obj = Objective::new(&spec, &x0).unwrap();
    assert_eq!(obj.loss(&policy).unwrap(), solved.root_value);
}

#[test]
fn revelation_step_finds_the_first_split() {
    let mut policy = SignalingPolicy::<f64>::zeros(2, 4).unwrap();
    let l = policy.layout().clone();
    for node in l.level(2) {
        policy.logits_mut()[node] = Mat::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 4.0]);
    }
    assert_eq!(revelation_step(&policy, 0.5).unwrap(), Some(2));
    assert_eq!(
        revelation_step(&SignalingPolicy::<f64>::zeros(2, 4).unwrap(), 0.5).unwrap(),
        None
    );
    assert!(revelation_step(&policy, 1.0).is_err());
}
