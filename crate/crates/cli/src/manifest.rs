//! Run manifests and the output directory that collects them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use lqig_core::io::to_json_text;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Record of one invocation. Running `lqig` again with `args` regenerates
/// every file in `outputs`; `wall_clock_s` and measured solve times differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub spec: Option<String>,
    pub config: Value,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
    pub version: String,
    pub commit: String,
}

/// The command line as given, without the program name, and when it started.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub args: Vec<String>,
    pub started: Instant,
}

impl Invocation {
    pub fn new(args: Vec<String>) -> Self {
        Self {
            args,
            started: Instant::now(),
        }
    }
}

/// Output directory that remembers what was written to it.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("cannot create {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Writes `name` (relative, may contain subdirectories).
    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
        std::fs::write(&path, contents)
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn finish(
        mut self,
        command: &str,
        inv: &Invocation,
        spec: Option<&Path>,
        config: Value,
        seed: Option<u64>,
    ) -> anyhow::Result<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            args: inv.args.clone(),
            spec: spec.map(|p| p.display().to_string()),
            config,
            seed,
            outputs: self.written.clone(),
            wall_clock_s: inv.started.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            commit: option_env!("LQIG_COMMIT").unwrap_or("unknown").to_string(),
        };
        self.write("manifest.json", to_json_text(&manifest))?;
        Ok(manifest)
    }
}
