//! Monte-Carlo harness for solved one-sided information LQ games: seeded
//! rollouts with optional additive disturbance, receding-horizon re-solving
//! on the realized subgame, and paired offline-vs-re-solve experiments.

pub mod experiment;
pub mod export;
pub mod noise;
pub mod rollout;

pub use experiment::{batch_experiment, paired_runs, Experiment, ExperimentStats};
pub use noise::{load_noise, save_noise, stochastic_value_correction, NoiseModel};
pub use rollout::{rollout, rollout_with_root, ResolverConfig, RootPlan, Trajectory};

pub use lqig_core;
