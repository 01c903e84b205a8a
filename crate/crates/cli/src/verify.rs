//! `lqig verify`: oracle suites comparing the solver against independent
//! computations. Each suite reports its worst error against a fixed
//! tolerance and, on failure, the first failing case in replayable form.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use lqig_core::belief::{forward_bayes_pass, SignalingPolicy};
use lqig_core::dual::{
    finite_set_dual_value, fixed_tree_dual_value, lambda_lp, typewise_backward_pass, DualTree,
};
use lqig_core::io::{rows_of, to_json_text};
use lqig_core::linalg::{Mat, Vector};
use lqig_core::oracle::{child_label_lp_value, nested_saddle_root_value};
use lqig_core::riccati::{backward_pass, evaluate_value};
use lqig_core::scenarios::{random_game, random_state, RandomGameShape};
use lqig_core::signaling::{grad_fd, grad_loss};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::manifest::{Invocation, OutDir};
use crate::Status;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Adjoint gradient vs central differences.
    Grad,
    /// Backward pass vs brute-force nested saddle.
    Saddle,
    /// λ LP vs its simplex dual.
    Lp,
    /// Fixed-tree dual value vs explicit child-label LP.
    Dual,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Grad, Suite::Saddle, Suite::Lp, Suite::Dual];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Grad => "grad",
            Suite::Saddle => "saddle",
            Suite::Lp => "lp",
            Suite::Dual => "dual",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Suite::Grad => 1e-6,
            Suite::Saddle => 1e-8,
            Suite::Lp => 1e-9,
            Suite::Dual => 1e-8,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Suites to run (repeatable); all of them when omitted.
    #[arg(long, value_enum)]
    pub suite: Vec<Suite>,
    /// Offsets every instance seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `verify_report.json` and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Perturb the solver side of one suite (negative control).
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Suite>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub worst_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub elapsed_ms: f64,
    pub first_failure: Option<Value>,
}

/// Size of the injected perturbation.
const FAULT: f64 = 1e-3;

struct Tally {
    suite: Suite,
    cases: usize,
    worst: f64,
    first_failure: Option<Value>,
}

impl Tally {
    fn new(suite: Suite) -> Self {
        Self {
            suite,
            cases: 0,
            worst: 0.0,
            first_failure: None,
        }
    }

    fn record(&mut self, error: f64, case: impl FnOnce() -> Value) {
        self.cases += 1;
        if error > self.worst || error.is_nan() {
            self.worst = error;
        }
        let failed = error > self.suite.tolerance() || error.is_nan();
        if failed && self.first_failure.is_none() {
            let mut c = case();
            c["suite"] = json!(self.suite.name());
            c["error"] = json!(error);
            c["tolerance"] = json!(self.suite.tolerance());
            self.first_failure = Some(c);
        }
    }
}

fn grad_suite(t: &mut Tally, seed: u64, fault: bool) -> lqig_core::Result<()> {
    let shape = RandomGameShape {
        n: 4,
        m1: 2,
        m2: 2,
        num_types: 2,
        horizon: 3,
        ..Default::default()
    };
    for s in seed..seed + 10 {
        let spec = random_game::<f64>(shape, s)?;
        let x0 = random_state(4, s);
        let policy = SignalingPolicy::random(2, 3, 1.0, s + 100)?;
        let mut g = grad_loss(&policy, &x0, &spec)?;
        if fault {
            g[0][0] += FAULT;
        }
        let fd = grad_fd(&policy, &x0, &spec, 1e-5)?;
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for (a, b) in g.iter().zip(&fd) {
            err = err.max((a - b).amax());
            scale = scale.max(b.amax());
        }
        t.record(err / (1.0 + scale), || {
            json!({ "game_seed": s, "x0_seed": s, "policy_seed": s + 100, "policy_scale": 1.0,
                    "shape": { "n": 4, "m1": 2, "m2": 2, "num_types": 2, "horizon": 3 }, "fd_step": 1e-5 })
        });
    }
    Ok(())
}

fn saddle_suite(t: &mut Tally, seed: u64, fault: bool) -> lqig_core::Result<()> {
    for s in seed..seed + 10 {
        for horizon in [1, 2] {
            for separable in [false, true] {
                let shape = RandomGameShape {
                    horizon,
                    separable,
                    ..Default::default()
                };
                let spec = random_game::<f64>(shape, s)?;
                let policy = SignalingPolicy::random(2, horizon, 1.5, s)?;
                let tree = forward_bayes_pass(&policy, &spec)?;
                let x0 = random_state(spec.n(), s);
                let mut v = evaluate_value(backward_pass(&tree, &spec)?.root(), &x0);
                if fault {
                    v += FAULT;
                }
                let oracle = nested_saddle_root_value(&spec, &tree, &x0)?;
                t.record((v - oracle).abs() / (1.0 + oracle.abs()), || {
                    json!({ "game_seed": s, "policy_seed": s, "x0_seed": s, "horizon": horizon,
                            "separable": separable, "value": v, "oracle": oracle })
                });
            }
        }
    }
    Ok(())
}

fn lp_suite(t: &mut Tally, seed: u64, fault: bool) -> lqig_core::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let ni = rng.random_range(1..5);
        let na = rng.random_range(1..7);
        let costs = Mat::from_fn(ni, na, |_, _| rng.random_range(-2.0..2.0));
        let p = Vector::from_fn(ni, |_, _| rng.random_range(-0.5..0.5));
        let mut primal = lambda_lp(&p, &costs)?.value;
        if fault {
            primal += FAULT;
        }
        let dual = finite_set_dual_value(&p, &costs)?;
        t.record((primal - dual).abs(), || {
            json!({ "costs": rows_of(&costs), "p_hat": p.as_slice(), "primal": primal, "dual": dual })
        });
    }
    Ok(())
}

fn dual_suite(t: &mut Tally, seed: u64, fault: bool) -> lqig_core::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let shape = RandomGameShape {
        horizon: 2,
        ..Default::default()
    };
    for probe in seed..seed + 50 {
        let spec = random_game::<f64>(shape, probe % 10)?;
        let tree = DualTree::random(2, 2, spec.m2(), 1.0, probe)?;
        let costs = typewise_backward_pass(&tree, &spec)?;
        let x = random_state(spec.n(), 100 + probe);
        let p_hat = Vector::from_fn(2, |_, _| rng.random_range(-0.5..0.5));
        for node in [0, 1, 3] {
            let id = tree.layout().node_id(node);
            let mut w = fixed_tree_dual_value(&costs, &id, &x, &p_hat)?.value;
            if fault {
                w += FAULT;
            }
            let lp = child_label_lp_value(&spec, &tree, node, &x, &p_hat)?;
            t.record((w - lp).abs(), || {
                json!({ "game_seed": probe % 10, "tree_seed": probe, "x_seed": 100 + probe,
                        "node": id.omega_string(), "k": id.k, "p_hat": p_hat.as_slice(), "W": w, "oracle": lp })
            });
        }
    }
    Ok(())
}

pub fn run_suite(suite: Suite, seed: u64, fault: bool) -> SuiteReport {
    let started = Instant::now();
    let mut t = Tally::new(suite);
    let res = match suite {
        Suite::Grad => grad_suite(&mut t, seed, fault),
        Suite::Saddle => saddle_suite(&mut t, seed, fault),
        Suite::Lp => lp_suite(&mut t, seed, fault),
        Suite::Dual => dual_suite(&mut t, seed, fault),
    };
    if let Err(e) = res {
        t.worst = f64::INFINITY;
        t.first_failure
            .get_or_insert_with(|| json!({ "suite": suite.name(), "solver_error": e.to_string() }));
    }
    SuiteReport {
        suite,
        cases: t.cases,
        worst_error: t.worst,
        tolerance: suite.tolerance(),
        passed: t.first_failure.is_none(),
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        first_failure: t.first_failure,
    }
}

pub fn run(args: &VerifyArgs, inv: &Invocation) -> anyhow::Result<Status> {
    let suites: Vec<Suite> = if args.suite.is_empty() {
        Suite::ALL.to_vec()
    } else {
        Suite::ALL
            .into_iter()
            .filter(|s| args.suite.contains(s))
            .collect()
    };
    let mut reports = Vec::new();
    for s in suites {
        let r = run_suite(s, args.seed, args.inject_fault == Some(s));
        println!(
            "{:<7} {}  {:>4} cases  worst {:.2e} (tol {:.0e})  {:.0} ms",
            s.name(),
            if r.passed { "PASS" } else { "FAIL" },
            r.cases,
            r.worst_error,
            r.tolerance,
            r.elapsed_ms
        );
        reports.push(r);
    }
    if let Some(dir) = &args.out {
        let mut out = OutDir::create(dir)?;
        out.write("verify_report.json", to_json_text(&reports))?;
        let echo = json!({ "suites": reports.iter().map(|r| r.suite.name()).collect::<Vec<_>>() });
        out.finish("verify", inv, None, echo, Some(args.seed))?;
    }
    match reports.iter().find(|r| !r.passed) {
        Some(r) => {
            eprintln!(
                "verify: suite {} failed; first failing case:",
                r.suite.name()
            );
            eprintln!(
                "{}",
                serde_json::to_string(r.first_failure.as_ref().unwrap_or(&Value::Null))?
            );
            Ok(Status::VerifyFailed)
        }
        None => Ok(Status::Success),
    }
}
