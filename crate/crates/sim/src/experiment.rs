use lqig_core::game::GameSpec;
use lqig_core::linalg::Vector;
use lqig_core::signaling::SolvedPolicy;
use lqig_core::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::noise::NoiseModel;
use crate::rollout::{rollout_with_root, ResolverConfig, RootPlan, Trajectory};

const Z95: f64 = 1.96;

/// Paired re-solve vs offline statistics. `delta = cost_resolved - cost_offline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub n_runs: usize,
    /// Pairs dropped because either arm was truncated by a solver error.
    pub n_failed: usize,
    pub mean_delta_cost: f64,
    /// Sample standard deviation; `None` with fewer than two pairs.
    pub std_delta_cost: Option<f64>,
    /// `mean -/+ 1.96 std / sqrt(n)`.
    pub ci95: Option<(f64, f64)>,
    pub mean_resolve_ms: f64,
    pub std_resolve_ms: Option<f64>,
    pub median_resolve_ms: f64,
    pub mean_cost_offline: f64,
    pub mean_cost_resolved: f64,
}

impl ExperimentStats {
    pub fn standard_error(&self) -> Option<f64> {
        self.std_delta_cost.map(|s| s / (self.n_runs as f64).sqrt())
    }

    pub fn from_pairs(offline: &[Trajectory], resolved: &[Trajectory]) -> Self {
        let pairs: Vec<(&Trajectory, &Trajectory)> = offline
            .iter()
            .zip(resolved)
            .filter(|(o, r)| o.is_complete() && r.is_complete())
            .collect();
        let deltas: Vec<f64> = pairs
            .iter()
            .map(|(o, r)| r.realized_cost - o.realized_cost)
            .collect();
        let (mean, std) = mean_std(&deltas);
        let n = deltas.len();
        let ci95 = std.map(|s| {
            let half = Z95 * s / (n as f64).sqrt();
            (mean - half, mean + half)
        });
        let mut times: Vec<f64> = pairs
            .iter()
            .flat_map(|(_, r)| r.resolve_times_ms.iter().copied())
            .collect();
        let (mean_ms, std_ms) = mean_std(&times);
        times.sort_by(f64::total_cmp);
        let offline_costs: Vec<f64> = pairs.iter().map(|(o, _)| o.realized_cost).collect();
        let resolved_costs: Vec<f64> = pairs.iter().map(|(_, r)| r.realized_cost).collect();
        Self {
            n_runs: n,
            n_failed: offline.len().min(resolved.len()) - n,
            mean_delta_cost: mean,
            std_delta_cost: std,
            ci95,
            mean_resolve_ms: mean_ms,
            std_resolve_ms: std_ms,
            median_resolve_ms: median(&times),
            mean_cost_offline: mean_std(&offline_costs).0,
            mean_cost_resolved: mean_std(&resolved_costs).0,
        }
    }
}

fn mean_std(xs: &[f64]) -> (f64, Option<f64>) {
    if xs.is_empty() {
        return (f64::NAN, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub stats: ExperimentStats,
    pub offline: Vec<Trajectory>,
    pub resolved: Vec<Trajectory>,
}

/// Offline and re-solving rollouts on the same seeds, one pair per seed.
/// The step-0 re-solve is shared by all runs (see [`RootPlan`]).
pub fn paired_runs(
    policy: &SolvedPolicy<f64>,
    spec: &GameSpec<f64>,
    x0: &Vector<f64>,
    noise: Option<&NoiseModel>,
    resolver: &ResolverConfig,
    seeds: &[u64],
) -> Result<Experiment> {
    let root = RootPlan::solve(policy, spec, x0, noise, resolver).ok();
    let results: Vec<Result<(Trajectory, Trajectory)>> = seeds
        .par_iter()
        .map(|&seed| {
            let offline = rollout_with_root(policy, spec, x0, noise, false, resolver, seed, None)?;
            let resolved =
                rollout_with_root(policy, spec, x0, noise, true, resolver, seed, root.as_ref())?;
            Ok((offline, resolved))
        })
        .collect();
    let (offline, resolved): (Vec<_>, Vec<_>) = results
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(Experiment {
        stats: ExperimentStats::from_pairs(&offline, &resolved),
        offline,
        resolved,
    })
}

/// [`paired_runs`] on seeds `base_seed + i`, `i < n_runs`.
pub fn batch_experiment(
    policy: &SolvedPolicy<f64>,
    spec: &GameSpec<f64>,
    x0: &Vector<f64>,
    noise: Option<&NoiseModel>,
    resolver: &ResolverConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<Experiment> {
    if n_runs == 0 {
        return Err(Error::Domain("an experiment needs at least one run".into()));
    }
    let seeds: Vec<u64> = (0..n_runs as u64)
        .map(|i| base_seed.wrapping_add(i))
        .collect();
    paired_runs(policy, spec, x0, noise, resolver, &seeds)
}
