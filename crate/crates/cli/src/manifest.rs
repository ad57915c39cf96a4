//! Run manifests: config echo, input hashes and versions, written next to
//! a command's outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use constprobe::hash::sha256_hex;
use serde::Serialize;

#[derive(Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    inputs: Vec<InputHash>,
    outputs: Vec<String>,
}

/// SHA-256 of a file, or of a directory's `manifest.json` when present
/// (containers), else of its files in name order.
pub fn hash_input(path: &Path) -> anyhow::Result<String> {
    if path.is_dir() {
        let m = path.join(constprobe::activations::MANIFEST_FILE);
        if m.is_file() {
            return hash_input(&m);
        }
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        let mut joined = String::new();
        for e in entries {
            joined.push_str(&hash_input(&e)?);
        }
        return Ok(sha256_hex(joined.as_bytes()));
    }
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// `FILE.run.json` for a file output, `DIR/run.json` for a directory.
pub fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("run.json")
    } else {
        let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        out.with_file_name(format!("{}.run.json", name))
    }
}

pub fn write_manifest<C: Serialize>(
    command: &str,
    config: &C,
    inputs: &[&Path],
    outputs: &[PathBuf],
    primary: &Path,
) -> anyhow::Result<()> {
    let inputs = inputs
        .iter()
        .map(|p| {
            Ok(InputHash {
                path: p.display().to_string(),
                sha256: hash_input(p)?,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let m = RunManifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        inputs,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let path = manifest_path(primary);
    fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}
