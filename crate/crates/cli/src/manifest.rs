use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;

use crate::util::atomic_write;

/// Sidecar recording exactly how an output was produced: the subcommand,
/// the tool version, every resolved parameter (defaults included), and the
/// input/output paths. It contains nothing volatile — no timestamps, no
/// hostnames — so rerunning a command yields a byte-identical manifest, and
/// any result can be re-derived from its manifest alone.
#[derive(Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub tool_version: &'static str,
    pub inputs: BTreeMap<&'static str, String>,
    pub outputs: BTreeMap<&'static str, String>,
    pub parameters: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &'static str, parameters: serde_json::Value) -> Self {
        Self {
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            parameters,
        }
    }

    pub fn input(mut self, name: &'static str, path: &Path) -> Self {
        self.inputs.insert(name, path.display().to_string());
        self
    }

    pub fn output(mut self, name: &'static str, path: &Path) -> Self {
        self.outputs.insert(name, path.display().to_string());
        self
    }

    /// Write the sidecar next to the command's primary output.
    pub fn write_beside(&self, primary_output: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        atomic_write(&manifest_path(primary_output), text.as_bytes())
    }
}

/// `<output>.manifest.json`
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
