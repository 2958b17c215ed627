//! Files belonging to one run: the grid, its manifest and its history.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sparsetrig::adaptive::{IterationRecord, StateMetadata};
use sparsetrig::models::ModelSpec;
use sparsetrig::sparse_grid::write_atomic;
use sparsetrig::{RefinementStateF64, SparseGridF64};

use crate::error::{CliError, CliResult};

/// Metadata stored inside every grid file written by the tool.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridMetadata {
    pub model: ModelSpec,
    pub state: StateMetadata,
    pub seed: u64,
    pub l0: f64,
}

/// Summary written next to the grid by `build`.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool_version: &'static str,
    pub command: &'static str,
    pub grid: &'a Path,
    pub history: &'a Path,
    pub model: &'a ModelSpec,
    pub space: sparsetrig::Space,
    pub l0: f64,
    pub budget: usize,
    pub seed: u64,
    pub min_new_nodes: usize,
    pub initial_nodes: usize,
}

pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn manifest_path(grid: &Path) -> PathBuf {
    with_suffix(grid, ".manifest.json")
}

pub fn history_path(grid: &Path) -> PathBuf {
    with_suffix(grid, ".history.jsonl")
}

/// Default directory for external request/response files.
pub fn io_dir(grid: &Path) -> PathBuf {
    with_suffix(grid, ".io")
}

pub fn save_state(path: &Path, state: &RefinementStateF64, meta: &GridMetadata) -> CliResult<()> {
    let meta = GridMetadata {
        state: state.metadata(),
        ..meta.clone()
    };
    let value = serde_json::to_value(&meta).map_err(sparsetrig::Error::from)?;
    state.grid.save(path, value)?;
    Ok(())
}

pub fn load_state(path: &Path) -> CliResult<(RefinementStateF64, GridMetadata)> {
    let (grid, value) = SparseGridF64::load(path)?;
    let meta: GridMetadata = serde_json::from_value(value)
        .map_err(|e| CliError::input(format!("{}: grid file lacks run metadata: {e}", path.display())))?;
    let state = RefinementStateF64::from_parts(grid, meta.state.clone(), Vec::new())?;
    Ok((state, meta))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(sparsetrig::Error::from)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(())
}

/// Appends one JSON line per record.
pub fn append_history(path: &Path, records: &[IterationRecord]) -> CliResult<()> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(CliError::io(format!("cannot open {}", path.display())))?;
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).map_err(sparsetrig::Error::from)?);
        text.push('\n');
    }
    file.write_all(text.as_bytes())
        .and_then(|_| file.sync_data())
        .map_err(CliError::io(format!("cannot write {}", path.display())))
}
