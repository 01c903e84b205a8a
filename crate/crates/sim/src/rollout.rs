use std::time::Instant;

use lqig_core::belief::{BeliefTree, SignalingPolicy};
use lqig_core::game::GameSpec;
use lqig_core::linalg::Vector;
use lqig_core::riccati::ValueTree;
use lqig_core::signaling::{optimize_from, Objective, OptimizerConfig, SolvedPolicy};
use lqig_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::noise::NoiseModel;

/// Settings of the per-step re-solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolverConfig {
    /// Warm-started gradient descent; `max_iters` is the per-step budget.
    pub optimizer: OptimizerConfig,
    /// Charge the disturbance's expected cost inside the re-solved subgame.
    pub noise_aware: bool,
}

impl Default for ResolverConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig {
                max_iters: 200,
                init_scale: 0.0,
                ..OptimizerConfig::default()
            },
            noise_aware: true,
        }
    }
}

/// One realized play of the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub resolve: bool,
    pub type_drawn: usize,
    pub states: Vec<Vec<f64>>,
    pub u_actions: Vec<Vec<f64>>,
    pub v_actions: Vec<Vec<f64>>,
    pub branch_choices: Vec<usize>,
    pub beliefs: Vec<Vec<f64>>,
    pub realized_cost: f64,
    pub resolve_times_ms: Vec<f64>,
    pub resolve_iterations: Vec<usize>,
    /// `None` for a complete run; otherwise the error that truncated it.
    pub error: Option<String>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }

    pub fn steps(&self) -> usize {
        self.branch_choices.len()
    }

    /// Running plus terminal cost of the drawn type, recomputed from the
    /// stored actions and final state.
    pub fn recompute_cost(&self, spec: &GameSpec<f64>) -> f64 {
        let t = &spec.types[self.type_drawn];
        let mut total = 0.0;
        for (u, v) in self.u_actions.iter().zip(&self.v_actions) {
            total += spec.tau()
                * t.running_cost(&Vector::from_column_slice(u), &Vector::from_column_slice(v));
        }
        if let Some(x) = self.states.last() {
            total += t.terminal_cost(&Vector::from_column_slice(x));
        }
        total
    }
}

/// The tree a decision is read from: node `node` of `beliefs`/`values`.
struct Cursor<'a> {
    beliefs: &'a BeliefTree<f64>,
    values: &'a ValueTree<f64>,
    node: usize,
}

struct Decision {
    branch: usize,
    u: Vector<f64>,
    v: Vector<f64>,
    belief: Vector<f64>,
}

impl Cursor<'_> {
    fn decide(&self, type_drawn: usize, x: &Vector<f64>, uniform: f64) -> Decision {
        let layout = &self.beliefs.layout;
        let alpha = &self.beliefs.alphas[self.node];
        let mut branch = layout.branching() - 1;
        let mut acc = 0.0;
        for a in 0..layout.branching() {
            acc += alpha[(type_drawn, a)];
            if uniform < acc {
                branch = a;
                break;
            }
        }
        let (u, v) = self.values.edge(self.node, branch).controls(x);
        let belief = self.beliefs.beliefs[layout.child(self.node, branch)].clone();
        Decision {
            branch,
            u,
            v,
            belief,
        }
    }
}

fn draw_type(prior: &Vector<f64>, uniform: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in prior.iter().enumerate() {
        acc += p;
        if uniform < acc {
            return i;
        }
    }
    prior.len() - 1
}

/// Plays `policy` once. The type and every branch are drawn from one
/// ChaCha8 stream and the disturbance from another, both keyed by `seed`, so
/// runs with the same seed share their randomness whether or not they
/// re-solve.
///
/// With `resolve`, each step re-optimizes the subgame at the current state
/// and belief, warm-started from the previous policy restricted to the
/// realized subtree, and acts on the re-solved root.
pub fn rollout(
    policy: &SolvedPolicy<f64>,
    spec: &GameSpec<f64>,
    x0: &Vector<f64>,
    noise: Option<&NoiseModel>,
    resolve: bool,
    resolver: &ResolverConfig,
    seed: u64,
) -> Result<Trajectory> {
    rollout_with_root(policy, spec, x0, noise, resolve, resolver, seed, None)
}

/// Re-solve of the root subgame, which is the same for every run from a
/// given `x0`: the solution and the wall-clock time it took.
#[derive(Debug, Clone)]
pub struct RootPlan {
    pub solved: SolvedPolicy<f64>,
    pub time_ms: f64,
}

impl RootPlan {
    pub fn solve(
        policy: &SolvedPolicy<f64>,
        spec: &GameSpec<f64>,
        x0: &Vector<f64>,
        noise: Option<&NoiseModel>,
        resolver: &ResolverConfig,
    ) -> Result<Self> {
        let sigma = if resolver.noise_aware {
            noise.map(|w| &w.sigma)
        } else {
            None
        };
        let started = Instant::now();
        let solved = resolve_step(spec, policy, 0, None, 0, x0, &spec.prior, sigma, resolver)?;
        Ok(Self {
            solved,
            time_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }
}

/// [`rollout`] taking the step-0 re-solve from `root` when given. The result
/// is identical to solving it in place apart from the recorded time, which is
/// the time `root` took.
#[allow(clippy::too_many_arguments)]
pub fn rollout_with_root(
    policy: &SolvedPolicy<f64>,
    spec: &GameSpec<f64>,
    x0: &Vector<f64>,
    noise: Option<&NoiseModel>,
    resolve: bool,
    resolver: &ResolverConfig,
    seed: u64,
    root: Option<&RootPlan>,
) -> Result<Trajectory> {
    let layout = spec.layout();
    if policy.beliefs.layout != layout {
        return Err(Error::Dimension(
            "policy was not solved on this game tree".into(),
        ));
    }
    if x0.len() != spec.n() {
        return Err(Error::Dimension(format!(
            "x0 has {} entries, expected {}",
            x0.len(),
            spec.n()
        )));
    }
    if let Some(w) = noise {
        if w.dim() != spec.n() {
            return Err(Error::Dimension(format!(
                "noise is {}-dimensional, expected {}",
                w.dim(),
                spec.n()
            )));
        }
    }
    let mut play_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(1 + noise.map_or(0, |w| w.seed));

    let type_drawn = draw_type(&spec.prior, play_rng.random());
    let mut x = x0.clone();
    let mut p = spec.prior.clone();
    let mut traj = Trajectory {
        seed,
        resolve,
        type_drawn,
        states: vec![x.as_slice().to_vec()],
        u_actions: Vec::new(),
        v_actions: Vec::new(),
        branch_choices: Vec::new(),
        beliefs: vec![p.as_slice().to_vec()],
        realized_cost: 0.0,
        resolve_times_ms: Vec::new(),
        resolve_iterations: Vec::new(),
        error: None,
    };
    let data = &spec.types[type_drawn];
    let sigma = if resolver.noise_aware {
        noise.map(|w| &w.sigma)
    } else {
        None
    };
    let mut offline_node = 0;
    let mut warm: Option<SignalingPolicy<f64>> = None;

    for k in 0..spec.horizon {
        let uniform: f64 = play_rng.random();
        let decision = if resolve {
            let cached = if k == 0 { root } else { None };
            let owned;
            let solved = match cached {
                Some(plan) => {
                    traj.resolve_times_ms.push(plan.time_ms);
                    &plan.solved
                }
                None => {
                    let started = Instant::now();
                    let step = resolve_step(
                        spec,
                        policy,
                        offline_node,
                        warm.take(),
                        k,
                        &x,
                        &p,
                        sigma,
                        resolver,
                    );
                    owned = match step {
                        Ok(s) => s,
                        Err(e) => {
                            traj.error = Some(format!("re-solve at step {k} failed: {e}"));
                            return Ok(traj);
                        }
                    };
                    traj.resolve_times_ms
                        .push(started.elapsed().as_secs_f64() * 1e3);
                    &owned
                }
            };
            traj.resolve_iterations.push(solved.iterations);
            let cursor = Cursor {
                beliefs: &solved.beliefs,
                values: &solved.value_tree,
                node: 0,
            };
            let d = cursor.decide(type_drawn, &x, uniform);
            if k + 1 < spec.horizon {
                let next = solved.beliefs.layout.child(0, d.branch);
                warm = Some(solved.signaling.subtree(next)?);
            }
            d
        } else {
            Cursor {
                beliefs: &policy.beliefs,
                values: &policy.value_tree,
                node: offline_node,
            }
            .decide(type_drawn, &x, uniform)
        };
        offline_node = layout.child(offline_node, decision.branch);

        traj.realized_cost += spec.tau() * data.running_cost(&decision.u, &decision.v);
        x = spec.dynamics.step(&x, &decision.u, &decision.v);
        if let Some(w) = noise {
            x += w.sample(&mut noise_rng);
        }
        p = decision.belief;
        traj.states.push(x.as_slice().to_vec());
        traj.u_actions.push(decision.u.as_slice().to_vec());
        traj.v_actions.push(decision.v.as_slice().to_vec());
        traj.branch_choices.push(decision.branch);
        traj.beliefs.push(p.as_slice().to_vec());
    }
    traj.realized_cost += data.terminal_cost(&x);
    Ok(traj)
}

#[allow(clippy::too_many_arguments)]
fn resolve_step(
    spec: &GameSpec<f64>,
    policy: &SolvedPolicy<f64>,
    offline_node: usize,
    warm: Option<SignalingPolicy<f64>>,
    k: usize,
    x: &Vector<f64>,
    p: &Vector<f64>,
    sigma: Option<&lqig_core::linalg::Mat<f64>>,
    resolver: &ResolverConfig,
) -> Result<SolvedPolicy<f64>> {
    let sub = spec.subgame(k, p.clone())?;
    let init = match warm {
        Some(w) => w,
        None => policy.signaling.subtree(offline_node)?,
    };
    let obj = Objective::new(&sub, x)?.with_noise(sigma);
    optimize_from(&obj, init, &resolver.optimizer)
}
