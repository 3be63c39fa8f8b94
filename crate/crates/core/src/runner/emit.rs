//! Run manifests and on-disk records.
//!
//! A run writes `<command>-<id>.json` (manifest and record, deterministic),
//! one `<command>-<id>-<label>.csv` per sampled curve, and a
//! `<command>-<id>.timing.json` sidecar holding the wall time, which is kept
//! out of the record so that records are byte-reproducible.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::solver::Orientation;
use crate::trig_spectral::GridFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    /// Digest of the config together with command arguments; names the files.
    pub record_id: String,
    pub seed: u64,
    #[serde(rename = "J")]
    pub order: usize,
    #[serde(rename = "N")]
    pub grid: usize,
    pub orientation: Orientation,
    pub tool_version: String,
    #[serde(skip)]
    pub wall_time_ms: u128,
}

impl RunManifest {
    pub fn stem(&self) -> String {
        format!("{}-{}", self.command, &self.record_id[..8])
    }
}

#[derive(Serialize)]
struct RecordFile<'a> {
    manifest: &'a RunManifest,
    record: &'a serde_json::Value,
}

/// Pretty JSON of manifest plus record, newline-terminated.
pub fn record_json(manifest: &RunManifest, record: &serde_json::Value) -> String {
    let mut s =
        serde_json::to_string_pretty(&RecordFile { manifest, record }).expect("record serializes");
    s.push('\n');
    s
}

/// Writes the record, curves and timing sidecar into `dir`; returns the paths written.
pub fn emit_record(
    dir: &Path,
    manifest: &RunManifest,
    record: &serde_json::Value,
    grids: &[(String, GridFunction)],
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let stem = manifest.stem();
    let mut written = Vec::new();

    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, record_json(manifest, record))?;
    written.push(path);

    for (label, grid) in grids {
        let path = dir.join(format!("{stem}-{label}.csv"));
        fs::write(&path, grid.to_csv_string())?;
        written.push(path);
    }

    let path = dir.join(format!("{stem}.timing.json"));
    fs::write(
        &path,
        format!("{{\"wall_time_ms\": {}}}\n", manifest.wall_time_ms),
    )?;
    written.push(path);
    Ok(written)
}
