//! Run manifest: effective configuration, seeds, engine version, and a hash
//! of every artifact. Reruns with the same master seed must produce a
//! byte-identical manifest, so nothing location- or time-dependent goes in.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pmu_sentinel::models::ModelName;
use pmu_sentinel::neuralnet::ENGINE_VERSION;

use crate::artifacts::{self, MANIFEST_JSON};
use crate::config::{cell_dir_name, RunConfig};
use crate::error::{io_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub engine: String,
    pub config: RunConfig,
    pub cells: Vec<String>,
    pub artifacts: Vec<ArtifactHash>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHash {
    pub path: String,
    pub sha256: String,
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path
                .strip_prefix(root)
                .expect("walk stays under root")
                .to_string_lossy()
                .replace('\\', "/");
            if rel != MANIFEST_JSON {
                out.push(rel);
            }
        }
    }
    Ok(())
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex::encode(hasher.finalize()))
}

/// Writes `manifest.json` covering every file under `dir` except the
/// manifest itself, sorted by path.
pub fn write_manifest(cfg: &RunConfig, dir: &Path, cells: &[(ModelName, bool)]) -> Result<()> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort_unstable();
    let mut hashes = Vec::with_capacity(files.len());
    for rel in files {
        let sha256 = hash_file(&dir.join(&rel))?;
        hashes.push(ArtifactHash { path: rel, sha256 });
    }
    // The output directory is invocation-specific; keep it out of the echo
    // so reruns in different directories compare byte-identical.
    let mut config_echo = cfg.clone();
    config_echo.output_dir = None;
    let manifest = Manifest {
        engine: ENGINE_VERSION.to_string(),
        config: config_echo,
        cells: cells
            .iter()
            .map(|&(model, filt)| cell_dir_name(model, filt))
            .collect(),
        artifacts: hashes,
    };
    artifacts::write_json(&dir.join(MANIFEST_JSON), &manifest)
}
