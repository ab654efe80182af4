use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use spectral_search::evaluators::EvaluationHistory;

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifies the run that produced an artifact.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    /// Hashes the canonical JSON form of `config` followed by any input
    /// file contents the run depends on.
    pub fn new(
        command: &'static str,
        config: &impl Serialize,
        inputs: &[&[u8]],
        seed: u64,
    ) -> CliResult<Self> {
        let mut h = Sha256::new();
        let text =
            serde_json::to_vec(config).map_err(|e| CliError::Config(format!("serializing config: {e}")))?;
        h.update(&text);
        for bytes in inputs {
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(bytes);
        }
        Ok(Self {
            tool: "spectral-search",
            version: VERSION,
            command,
            config_sha256: hex::encode(h.finalize()),
            seed,
        })
    }

    /// One comment line for text artifacts.
    pub fn header(&self) -> String {
        format!(
            "# {} {} command={} config_sha256={} seed={}\n",
            self.tool, self.version, self.command, self.config_sha256, self.seed
        )
    }
}

/// Artifacts are written into a hidden sibling directory that is renamed to
/// the requested path only once everything has been written.
pub struct OutputDir {
    staging: PathBuf,
    dest: PathBuf,
    provenance: Provenance,
    committed: bool,
}

/// Fails early if `dest` is already taken.
pub fn check_free(dest: &Path) -> CliResult<()> {
    if dest.exists() {
        return Err(CliError::Config(format!(
            "output directory {} already exists",
            dest.display()
        )));
    }
    Ok(())
}

impl OutputDir {
    pub fn create(dest: &Path, provenance: Provenance) -> CliResult<Self> {
        check_free(dest)?;
        let name = dest
            .file_name()
            .ok_or_else(|| CliError::Config(format!("bad output path {}", dest.display())))?
            .to_string_lossy()
            .into_owned();
        let parent = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(CliError::io(format!("creating {}", parent.display())))?;
        let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(CliError::io(format!("clearing {}", staging.display())))?;
        }
        fs::create_dir(&staging).map_err(CliError::io(format!("creating {}", staging.display())))?;
        Ok(Self {
            staging,
            dest: dest.to_path_buf(),
            provenance,
            committed: false,
        })
    }

    fn write(&self, name: &str, body: &[u8]) -> CliResult<()> {
        let path = self.staging.join(name);
        fs::write(&path, body).map_err(CliError::io(format!("writing {}", path.display())))
    }

    /// Text with a leading `#` provenance line.
    pub fn text(&self, name: &str, body: &str) -> CliResult<()> {
        self.write(name, format!("{}{body}", self.provenance.header()).as_bytes())
    }

    /// A JSON object with a `provenance` member added.
    pub fn json(&self, name: &str, payload: &impl Serialize) -> CliResult<()> {
        let mut value =
            serde_json::to_value(payload).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        let prov = json!(self.provenance);
        match &mut value {
            Value::Object(map) => {
                map.insert("provenance".into(), prov);
            }
            other => value = json!({ "provenance": prov, "data": other.take() }),
        }
        let mut text =
            serde_json::to_string_pretty(&value).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn history(&self, name: &str, history: &EvaluationHistory) -> CliResult<()> {
        let mut buf = self.provenance.header().into_bytes();
        history.write_to(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn commit(mut self) -> CliResult<PathBuf> {
        fs::rename(&self.staging, &self.dest)
            .map_err(CliError::io(format!("moving results to {}", self.dest.display())))?;
        self.committed = true;
        Ok(self.dest.clone())
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}
