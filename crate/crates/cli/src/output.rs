use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{input_error, Category, CliError, CliResult};

/// Writes `path` through a temporary sibling that is renamed into place, so
/// an interrupted run never leaves a partial file under the final name.
pub fn write_atomic(
    path: &Path,
    fill: impl FnOnce(&mut dyn Write) -> simplexslice::Result<()>,
) -> CliResult<()> {
    let io =
        |e: std::io::Error| CliError::new(Category::Io, format!("writing {}: {e}", path.display()));
    let name = path
        .file_name()
        .ok_or_else(|| CliError::usage(format!("{} is not a file path", path.display())))?
        .to_string_lossy()
        .into_owned();
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp).map_err(io)?);
        fill(&mut w).map_err(|e| match e {
            simplexslice::Error::Io(e) => io(e),
            other => CliError::from(other),
        })?;
        let file = w.into_inner().map_err(|e| io(e.into_error()))?;
        file.sync_all().map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn digest(path: &Path) -> CliResult<InputDigest> {
    let bytes = std::fs::read(path).map_err(|e| input_error(path, e))?;
    let hash = Sha256::digest(&bytes);
    Ok(InputDigest {
        path: path.display().to_string(),
        bytes: bytes.len() as u64,
        sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub simplexslice: &'static str,
    pub cli: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Running,
    Complete,
    Failed,
}

/// Everything needed to rerun a command: the resolved arguments, seed and
/// input digests.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after merging the config file; rerunning them reproduces
    /// the outputs.
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub seed_generated: bool,
    pub threads: Option<usize>,
    pub versions: Versions,
    pub started_unix: u64,
    pub wall_time_seconds: Option<f64>,
    pub status: Status,
    pub error: Option<String>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        argv: Vec<String>,
        config: serde_json::Value,
        seed: u64,
        seed_generated: bool,
        threads: Option<usize>,
    ) -> Self {
        RunManifest {
            command: command.into(),
            argv,
            config,
            seed,
            seed_generated,
            threads,
            versions: Versions {
                simplexslice: simplexslice::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
            },
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_time_seconds: None,
            status: Status::Running,
            error: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }
}

/// Output locations of one run.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: PathBuf) -> Self {
        OutDir { root }
    }

    /// Relative paths are placed under the output directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}
