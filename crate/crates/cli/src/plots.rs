//! `lqig export-plots-data`: flatten a run directory into the CSV tables the
//! plotting scripts read.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use lqig_sim::export::{read_jsonl, trajectory_csv};
use serde_json::json;

use crate::manifest::{Invocation, OutDir};
use crate::{read_text, Status};

#[derive(Debug, Clone, Args)]
pub struct PlotsArgs {
    /// Output directory of `solve` or `simulate`.
    #[arg(long)]
    pub run_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &PlotsArgs, inv: &Invocation) -> anyhow::Result<Status> {
    let dir = &args.run_dir;
    if !dir.is_dir() {
        bail!("run directory {} does not exist", dir.display());
    }
    let mut out = OutDir::create(&args.out)?;
    let traj_path = dir.join("trajectories.jsonl");
    let mut exported = 0;
    if traj_path.exists() {
        let runs = read_jsonl(&read_text(&traj_path)?)
            .with_context(|| format!("invalid trajectories in {}", traj_path.display()))?;
        // seed -> (type, offline cost, resolved cost)
        let mut pairs: BTreeMap<u64, (usize, Option<f64>, Option<f64>)> = BTreeMap::new();
        for t in &runs {
            let arm = if t.resolve { "resolved" } else { "offline" };
            let name = format!(
                "trajectories/run{:06}_{arm}_type{}.csv",
                t.seed, t.type_drawn
            );
            out.write(&name, trajectory_csv(t))?;
            exported += 1;
            if t.is_complete() {
                let e = pairs.entry(t.seed).or_insert((t.type_drawn, None, None));
                if t.resolve {
                    e.2 = Some(t.realized_cost);
                } else {
                    e.1 = Some(t.realized_cost);
                }
            }
        }
        if runs.iter().any(|t| t.resolve) {
            let mut csv = String::from("seed,type,cost_offline,cost_resolved,delta_cost\n");
            for (seed, (ty, off, res)) in &pairs {
                if let (Some(o), Some(r)) = (off, res) {
                    csv.push_str(&format!("{seed},{ty},{o},{r},{}\n", r - o));
                }
            }
            out.write("delta_cost.csv", csv)?;
        }
    }
    for name in ["stats.json", "trace.csv"] {
        let src = dir.join(name);
        if src.exists() {
            out.write(name, read_text(&src)?)?;
        }
    }
    if exported == 0 && !dir.join("trace.csv").exists() {
        bail!(
            "{} has neither trajectories.jsonl nor trace.csv",
            dir.display()
        );
    }
    let echo = json!({ "run_dir": dir.display().to_string() });
    out.finish("export-plots-data", inv, None, echo, None)?;
    println!("exported {exported} trajectories to {}", args.out.display());
    Ok(Status::Success)
}
