//! `lqig solve`: optimize the signaling policy of a game from one initial state.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::Args;
use lqig_core::belief::SignalingPolicy;
use lqig_core::io::{belief_tree_json, save_policy, to_json_text, trace_csv, value_tree_json};
use lqig_core::linalg::Vector;
use lqig_core::signaling::{evaluate_policy, optimize, revelation_time, OptimizerConfig};
use serde_json::json;

use crate::manifest::{Invocation, OutDir};
use crate::{read_spec, Status};

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Game spec (JSON).
    pub spec: PathBuf,
    /// Initial state, comma separated; zeros when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    /// Initial line-search step.
    #[arg(long, default_value_t = 0.1)]
    pub step_size: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub loss_tol: f64,
    /// Seeds the random initial logits.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of the initial logits; 0 starts from uniform signaling.
    #[arg(long, default_value_t = 0.1)]
    pub init_scale: f64,
}

impl SolveArgs {
    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            step_size: self.step_size,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            loss_tol: self.loss_tol,
            seed: self.seed,
            init_scale: self.init_scale,
            ..OptimizerConfig::default()
        }
    }
}

pub fn run(args: &SolveArgs, inv: &Invocation) -> anyhow::Result<Status> {
    let spec = read_spec(&args.spec)?;
    let x0 = match &args.x0 {
        Some(v) if v.len() != spec.n() => bail!(
            "--x0 has {} entries, the game has n = {}",
            v.len(),
            spec.n()
        ),
        Some(v) => Vector::from_column_slice(v),
        None => Vector::zeros(spec.n()),
    };
    let config = args.optimizer();
    config.check()?;
    let started = Instant::now();
    // A zero budget returns the uniform policy whatever the initialization.
    let solved = if config.max_iters == 0 {
        evaluate_policy(
            &spec,
            &x0,
            SignalingPolicy::zeros(spec.num_types(), spec.horizon)?,
        )?
    } else {
        optimize(&spec, &x0, &config)?
    };
    let solve_s = started.elapsed().as_secs_f64();
    let reveal = revelation_time(&solved.signaling, 0.5, spec.tau())?;

    let mut out = OutDir::create(&args.out)?;
    out.write("policy.json", save_policy(&solved, &spec))?;
    out.write("trace.csv", trace_csv(&solved.trace))?;
    out.write(
        "beliefs.json",
        to_json_text(&belief_tree_json(&solved.beliefs)),
    )?;
    out.write(
        "values.json",
        to_json_text(&value_tree_json(&solved.value_tree)),
    )?;
    let echo = json!({
        "x0": x0.iter().collect::<Vec<_>>(),
        "max_iters": config.max_iters,
        "step_size": config.step_size,
        "grad_tol": config.grad_tol,
        "loss_tol": config.loss_tol,
        "init_scale": config.init_scale,
        "step_growth": config.step_growth,
        "max_step_size": config.max_step_size,
        "max_backtracks": config.max_backtracks,
        "reach_scaling": config.reach_scaling,
    });
    out.finish("solve", inv, Some(&args.spec), echo, Some(args.seed))
        .context("writing manifest")?;

    println!("root value      {:.6}", solved.root_value);
    println!(
        "iterations      {} ({})",
        solved.iterations,
        solved.stop_reason.as_str()
    );
    println!("grad norm       {:.3e}", solved.grad_norm_final);
    match reveal {
        Some(t) => println!("revelation time {t:.2} (threshold 0.5)"),
        None => println!("revelation time none (threshold 0.5)"),
    }
    println!("solve time      {solve_s:.2} s");
    Ok(if solved.converged {
        Status::Success
    } else {
        Status::NotConverged
    })
}
