//! Run manifests written next to every output file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io::write_atomic, CliError, Command};

/// Everything needed to regenerate an output: the fully resolved command,
/// the effective seed and sample count, and the tool version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Command,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub version: String,
    /// Covariance rates the run used, after resolving models and files.
    pub covariance: Option<[[f64; 3]; 3]>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("cannot encode manifest: {e}")))?;
        json.push('\n');
        write_atomic(path, json.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: invalid manifest: {e}", path.display())))
    }
}
