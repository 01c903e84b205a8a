//! Solver for discrete-time zero-sum linear-quadratic games in which one
//! player privately knows the payoff type.
//!
//! The informed player's play is reparameterized as a signaling policy on an
//! `I`-ary public belief tree. For fixed signaling the game reduces to a tree
//! of edge saddle problems solved by a Riccati-type backward pass; the
//! signaling logits are then optimized by gradient descent using exact
//! reverse-mode derivatives of that pass. A dual module evaluates the
//! uninformed player's reformulation via typewise Riccati recursions, small
//! LPs, and support-function node solves.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod dual;
pub mod error;
pub mod game;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod riccati;
pub mod scalar;
pub mod scenarios;
pub mod signaling;
pub mod tree;

pub use error::{Error, Result};
pub use scalar::Real;
pub use tree::{NodeId, TreeLayout};

pub type GameSpec64 = game::GameSpec<f64>;
pub type GameSpec32 = game::GameSpec<f32>;
