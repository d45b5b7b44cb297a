use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FORMAT: &str = "scenid-manifest";
pub const MANIFEST_VERSION: u32 = 1;

/// Record of one run. `config` is the fully resolved configuration and
/// `inputs` the files read, which together determine every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub subcommand: String,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    /// Wall-clock seconds per stage.
    pub timings_s: BTreeMap<String, f64>,
    /// Subcommand-specific results (loss curve, accuracies, ...).
    #[serde(default)]
    pub results: serde_json::Value,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: serde_json::Value) -> Self {
        Self {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config_path: None,
            seed: None,
            threads: None,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timings_s: BTreeMap::new(),
            results: serde_json::Value::Null,
        }
    }

    /// Runs `f` and records its wall-clock time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings_s.insert(stage.into(), start.elapsed().as_secs_f64());
        out
    }

    pub fn input(&self, name: &str) -> Result<&Path> {
        match self.inputs.get(name) {
            Some(p) => Ok(p),
            None => bail!("manifest has no input named {name:?}"),
        }
    }

    pub fn output(&self, name: &str) -> Result<&Path> {
        match self.outputs.get(name) {
            Some(p) => Ok(p),
            None => bail!("manifest has no output named {name:?}"),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").with_context(|| format!("writing manifest {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let m: Self = serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            bail!("{}: unsupported manifest format {} v{}", path.display(), m.format, m.version);
        }
        Ok(m)
    }
}

/// `<output>.manifest.json`, next to the primary output.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
