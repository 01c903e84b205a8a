//! Subcommands of the `lqig` binary. Each one reads JSON inputs, calls into
//! `lqig-core` / `lqig-sim`, and writes its artifacts plus a `manifest.json`
//! into an output directory.

pub mod dual;
pub mod manifest;
pub mod plots;
pub mod simulate;
pub mod solve;
pub mod verify;

use std::path::Path;

use anyhow::Context;
use lqig_core::game::GameSpec;
use lqig_core::io::load_spec;

/// Exit status of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// The optimizer stopped without meeting its tolerances.
    NotConverged,
    /// A verification suite failed.
    VerifyFailed,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::NotConverged => 2,
            Status::VerifyFailed => 3,
        }
    }
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn read_spec(path: &Path) -> anyhow::Result<GameSpec<f64>> {
    let text = read_text(path)?;
    load_spec(&text).with_context(|| format!("invalid game spec {}", path.display()))
}
