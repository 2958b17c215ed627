//! File-based protocol for black-box models.
//!
//! A request is a headerless ASCII CSV with one point per row, `d` columns,
//! each value printed with 17 significant digits and rows separated by `\n`.
//! The backend answers with a CSV holding one value per row in the same
//! order. Two transports are supported:
//!
//! * command: the backend is run as `command... request.csv response.csv`;
//! * exchange directory: `request-<id>.csv` is dropped into a directory and
//!   the backend is expected to create `response-<id>.csv` next to it
//!   (atomically, e.g. by rename).
//!
//! Rows whose value cannot be parsed as a finite number are retried on their
//! own, up to the configured retry count.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Domain, Model, OracleError};
use crate::{Error, Result};

pub const TIMEOUT_ENV: &str = "SPARSETRIG_MODEL_TIMEOUT";

const POLL_INTERVAL: Duration = Duration::from_millis(5);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalModelSpec {
    /// Program and leading arguments; the request and response paths are
    /// appended.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Vec<String>>,
    /// Directory polled for responses instead of running a command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exchange_dir: Option<PathBuf>,
    /// Where request/response files are written in command mode.
    pub work_dir: PathBuf,
    pub domain: Domain,
    pub batch_size: usize,
    pub timeout_secs: f64,
    pub retries: u32,
    #[serde(default)]
    pub keep_io: bool,
    #[serde(default = "one")]
    pub jobs: usize,
}

fn one() -> usize {
    1
}

impl ExternalModelSpec {
    pub fn command(command: Vec<String>, domain: Domain, work_dir: PathBuf) -> Self {
        ExternalModelSpec {
            command: Some(command),
            exchange_dir: None,
            work_dir,
            domain,
            batch_size: 1024,
            timeout_secs: 600.0,
            retries: 2,
            keep_io: false,
            jobs: 1,
        }
    }

    /// Timeout honoring the environment override.
    pub fn effective_timeout(&self) -> Duration {
        let secs = std::env::var(TIMEOUT_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s > 0.0)
            .unwrap_or(self.timeout_secs);
        Duration::from_secs_f64(secs)
    }
}

/// Writes a request CSV.
pub fn write_request(path: &Path, points: &[Vec<f64>]) -> std::io::Result<()> {
    let mut out = String::with_capacity(points.len() * 26 * points.first().map_or(1, Vec::len));
    for p in points {
        for (k, x) in p.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format!("{x:.16e}"));
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    f.sync_all()
}

/// Parses a request CSV back into points (used by test backends and `eval`).
pub fn read_points(text: &str, dim: usize) -> Result<Vec<Vec<f64>>, OracleError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(row, line)| {
            let values = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| OracleError::new(format!("row {}: non-numeric value in {line:?}", row + 1)))?;
            if values.len() != dim {
                return Err(OracleError::new(format!(
                    "row {}: expected {dim} columns, got {}",
                    row + 1,
                    values.len()
                )));
            }
            Ok(values)
        })
        .collect()
}

/// Parses a response CSV; unparsable or non-finite rows come back as `Err`
/// carrying the raw text.
pub fn read_response(text: &str, expected: usize) -> Result<Vec<Result<f64, String>>, OracleError> {
    let rows: Vec<&str> = text.lines().collect();
    let rows: &[&str] = match rows.last() {
        Some(last) if last.trim().is_empty() && rows.len() == expected + 1 => &rows[..expected],
        _ => &rows,
    };
    if rows.len() != expected {
        return Err(OracleError::new(format!(
            "response row count mismatch: expected {expected}, got {}",
            rows.len()
        )));
    }
    Ok(rows
        .iter()
        .map(|r| match r.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(r.trim().to_string()),
        })
        .collect())
}

pub struct ExternalModel {
    spec: ExternalModelSpec,
    sequence: AtomicUsize,
    rows_requested: AtomicUsize,
}

impl ExternalModel {
    pub fn new(spec: ExternalModelSpec) -> Result<Self> {
        if spec.command.is_none() == spec.exchange_dir.is_none() {
            return Err(Error::InvalidArgument(
                "external model needs exactly one of a command or an exchange directory".into(),
            ));
        }
        if spec.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        let dir = spec.exchange_dir.as_ref().unwrap_or(&spec.work_dir);
        fs::create_dir_all(dir)?;
        Ok(ExternalModel {
            spec,
            sequence: AtomicUsize::new(0),
            rows_requested: AtomicUsize::new(0),
        })
    }

    pub fn spec(&self) -> &ExternalModelSpec {
        &self.spec
    }

    /// Total rows written to request files so far, retries included.
    pub fn rows_requested(&self) -> usize {
        self.rows_requested.load(Ordering::SeqCst)
    }

    fn io_paths(&self) -> (PathBuf, PathBuf) {
        let id = format!(
            "{}-{}",
            std::process::id(),
            self.sequence.fetch_add(1, Ordering::SeqCst)
        );
        let dir = self.spec.exchange_dir.as_ref().unwrap_or(&self.spec.work_dir);
        (
            dir.join(format!("request-{id}.csv")),
            dir.join(format!("response-{id}.csv")),
        )
    }

    /// One round trip: write, run or wait, read.
    fn exchange(&self, points: &[Vec<f64>]) -> Result<Vec<Result<f64, String>>, OracleError> {
        let (request, response) = self.io_paths();
        let io_err = |e: std::io::Error| OracleError::new(format!("{}: {e}", request.display()));
        write_request(&request, points).map_err(io_err)?;
        self.rows_requested.fetch_add(points.len(), Ordering::SeqCst);
        let timeout = self.spec.effective_timeout();

        let outcome = match &self.spec.command {
            Some(command) => self.run_command(command, &request, &response, timeout),
            None => wait_for_file(&response, timeout),
        }
        .and_then(|_| {
            let text =
                fs::read_to_string(&response).map_err(|e| OracleError::new(format!("{}: {e}", response.display())))?;
            read_response(&text, points.len())
        });
        if !self.spec.keep_io {
            let _ = fs::remove_file(&request);
            let _ = fs::remove_file(&response);
        }
        outcome
    }

    fn run_command(
        &self,
        command: &[String],
        request: &Path,
        response: &Path,
        timeout: Duration,
    ) -> Result<(), OracleError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| OracleError::new("empty backend command"))?;
        let mut child = Command::new(program)
            .args(args)
            .arg(request)
            .arg(response)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .spawn()
            .map_err(|e| OracleError::new(format!("cannot start backend {program:?}: {e}")))?;
        let start = Instant::now();
        loop {
            match child.try_wait() {
                Ok(Some(status)) if status.success() => return Ok(()),
                Ok(Some(status)) => return Err(OracleError::new(format!("backend exited with {status}"))),
                Ok(None) if start.elapsed() > timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(OracleError::new(format!(
                        "backend timed out after {:.1} s",
                        timeout.as_secs_f64()
                    )));
                }
                Ok(None) => std::thread::sleep(POLL_INTERVAL),
                Err(e) => return Err(OracleError::new(format!("waiting for backend: {e}"))),
            }
        }
    }

    /// Evaluates one batch, retrying failed rows individually.
    fn evaluate_chunk(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, OracleError> {
        let mut values: Vec<Option<f64>> = vec![None; points.len()];
        let mut pending: Vec<usize> = (0..points.len()).collect();
        let mut last_bad: Vec<(usize, String)> = Vec::new();
        let mut last_error = None;
        for _attempt in 0..=self.spec.retries {
            if pending.is_empty() {
                break;
            }
            let request: Vec<Vec<f64>> = pending.iter().map(|&i| points[i].clone()).collect();
            let rows = match self.exchange(&request) {
                Ok(rows) => rows,
                Err(e) if e.message.contains("row count mismatch") => return Err(e),
                Err(e) => {
                    last_error = Some(e);
                    continue;
                }
            };
            last_error = None;
            last_bad.clear();
            let mut still = Vec::new();
            for (&i, row) in pending.iter().zip(rows) {
                match row {
                    Ok(v) => values[i] = Some(v),
                    Err(raw) => {
                        last_bad.push((i, raw));
                        still.push(i);
                    }
                }
            }
            pending = still;
        }
        if let Some(e) = last_error {
            return Err(e);
        }
        if let Some((i, raw)) = last_bad.first().filter(|_| !pending.is_empty()) {
            return Err(OracleError::new(format!(
                "row {}: non-numeric value {raw:?} after {} retries",
                i + 1,
                self.spec.retries
            ))
            .at(&points[*i]));
        }
        Ok(values.into_iter().map(|v| v.expect("all rows resolved")).collect())
    }
}

fn wait_for_file(path: &Path, timeout: Duration) -> Result<(), OracleError> {
    let start = Instant::now();
    while !path.exists() {
        if start.elapsed() > timeout {
            return Err(OracleError::new(format!(
                "no response at {} after {:.1} s",
                path.display(),
                timeout.as_secs_f64()
            )));
        }
        std::thread::sleep(POLL_INTERVAL);
    }
    Ok(())
}

impl Model for ExternalModel {
    fn dim(&self) -> usize {
        self.spec.domain.dim()
    }

    fn evaluate_batch(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, OracleError> {
        if points.is_empty() {
            return Ok(Vec::new());
        }
        let chunks: Vec<&[Vec<f64>]> = points.chunks(self.spec.batch_size).collect();
        let mut out = Vec::with_capacity(points.len());
        for group in chunks.chunks(self.spec.jobs.max(1)) {
            let results: Vec<Result<Vec<f64>, OracleError>> = std::thread::scope(|s| {
                let handles: Vec<_> = group
                    .iter()
                    .map(|chunk| s.spawn(move || self.evaluate_chunk(chunk)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        h.join()
                            .unwrap_or_else(|_| Err(OracleError::new("backend worker panicked")))
                    })
                    .collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}
