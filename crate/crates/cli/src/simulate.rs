//! `lqig simulate`: roll out a solved policy, optionally against receding-horizon
//! re-solving on the same seeds.

use std::path::PathBuf;

use anyhow::bail;
use clap::Args;
use lqig_core::io::{load_policy, to_json_text};
use lqig_sim::{batch_experiment, load_noise, rollout, ResolverConfig, Trajectory};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::manifest::{Invocation, OutDir};
use crate::{read_spec, read_text, Status};

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub spec: PathBuf,
    /// Disturbance covariance document; noiseless when omitted.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Pair every offline run with a re-solving run on the same seed.
    #[arg(long)]
    pub resolve: bool,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Run `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gradient steps per re-solve.
    #[arg(long, default_value_t = 200)]
    pub resolve_iters: usize,
    /// Re-solve the noiseless subgame even when noise is present.
    #[arg(long)]
    pub noise_unaware: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Statistics of offline-only runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostStats {
    pub n_runs: usize,
    pub n_failed: usize,
    pub mean_cost: f64,
    pub std_cost: Option<f64>,
    pub ci95: Option<(f64, f64)>,
}

impl CostStats {
    pub fn from_runs(runs: &[Trajectory]) -> Self {
        let costs: Vec<f64> = runs
            .iter()
            .filter(|t| t.is_complete())
            .map(|t| t.realized_cost)
            .collect();
        let n = costs.len();
        let mean = costs.iter().sum::<f64>() / n.max(1) as f64;
        let std = (n >= 2).then(|| {
            (costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        let ci95 = std.map(|s| {
            let half = 1.96 * s / (n as f64).sqrt();
            (mean - half, mean + half)
        });
        Self {
            n_runs: n,
            n_failed: runs.len() - n,
            mean_cost: mean,
            std_cost: std,
            ci95,
        }
    }
}

fn jsonl(runs: &[&Trajectory]) -> anyhow::Result<String> {
    let mut s = String::new();
    for t in runs {
        s.push_str(&serde_json::to_string(t)?);
        s.push('\n');
    }
    Ok(s)
}

pub fn run(args: &SimulateArgs, inv: &Invocation) -> anyhow::Result<Status> {
    let spec = read_spec(&args.spec)?;
    let policy = load_policy(&read_text(&args.policy)?, &spec)?;
    let noise = match &args.noise {
        Some(path) => Some(load_noise(&read_text(path)?)?),
        None => None,
    };
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let resolver = ResolverConfig {
        optimizer: lqig_core::signaling::OptimizerConfig {
            max_iters: args.resolve_iters,
            ..ResolverConfig::default().optimizer
        },
        noise_aware: !args.noise_unaware,
    };
    resolver.optimizer.check()?;
    let x0 = policy.x0.clone();

    let mut out = OutDir::create(&args.out)?;
    if args.resolve {
        let exp = batch_experiment(
            &policy,
            &spec,
            &x0,
            noise.as_ref(),
            &resolver,
            args.runs,
            args.seed,
        )?;
        let interleaved: Vec<&Trajectory> = exp
            .offline
            .iter()
            .zip(&exp.resolved)
            .flat_map(|(o, r)| [o, r])
            .collect();
        out.write("trajectories.jsonl", jsonl(&interleaved)?)?;
        out.write("stats.json", to_json_text(&exp.stats))?;
        let s = &exp.stats;
        println!("runs            {} ({} failed)", s.n_runs, s.n_failed);
        println!("mean delta cost {:.4}", s.mean_delta_cost);
        match (s.std_delta_cost, s.ci95) {
            (Some(sd), Some((lo, hi))) => {
                println!("std delta cost  {sd:.4}");
                println!("95% CI          [{lo:.4}, {hi:.4}]");
            }
            _ => println!("std / CI        undefined (fewer than two runs)"),
        }
        println!(
            "re-solve time   {:.2} ms mean, {:.2} ms median",
            s.mean_resolve_ms, s.median_resolve_ms
        );
    } else {
        let runs = (0..args.runs as u64)
            .into_par_iter()
            .map(|i| {
                rollout(
                    &policy,
                    &spec,
                    &x0,
                    noise.as_ref(),
                    false,
                    &resolver,
                    args.seed.wrapping_add(i),
                )
            })
            .collect::<lqig_core::Result<Vec<_>>>()?;
        out.write(
            "trajectories.jsonl",
            jsonl(&runs.iter().collect::<Vec<_>>())?,
        )?;
        let stats = CostStats::from_runs(&runs);
        out.write("stats.json", to_json_text(&stats))?;
        println!(
            "runs            {} ({} failed)",
            stats.n_runs, stats.n_failed
        );
        println!("mean cost       {:.4}", stats.mean_cost);
    }
    let echo = json!({
        "policy": args.policy.display().to_string(),
        "noise": args.noise.as_ref().map(|p| p.display().to_string()),
        "resolve": args.resolve,
        "runs": args.runs,
        "resolve_iters": args.resolve_iters,
        "noise_aware": resolver.noise_aware,
    });
    out.finish("simulate", inv, Some(&args.spec), echo, Some(args.seed))?;
    Ok(Status::Success)
}
