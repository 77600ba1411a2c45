use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use padic_qft::io::atomic_write;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    AcceptanceFailed,
}

impl Status {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Ok
        } else {
            Status::AcceptanceFailed
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::AcceptanceFailed => 3,
        }
    }
}

/// Output directory, global settings and the files written so far.
pub struct Run {
    pub out_dir: PathBuf,
    pub command: String,
    pub seed: u64,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(out_dir: PathBuf, command: &str, seed: u64, tol: Option<f64>, threads: Option<usize>) -> Self {
        Self { out_dir, command: command.to_string(), seed, tol, threads, outputs: Vec::new() }
    }

    /// Writes to `explicit` or to `<out-dir>/<default_name>`.
    pub fn write(&mut self, explicit: Option<&Path>, default_name: &str, contents: &str) -> Result<PathBuf> {
        let path = explicit.map_or_else(|| self.out_dir.join(default_name), Path::to_path_buf);
        atomic_write(&path, contents.as_bytes())?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    /// Writes `<out-dir>/<command>.manifest.json`.
    pub fn finish(&mut self, config: Value, specs: Value, report: Value, status: Status) -> Result<Status> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp_unix": timestamp,
            "seed": self.seed,
            "tol": self.tol,
            "threads": self.threads,
            "config": config,
            "specs": specs,
            "outputs": self.outputs,
            "status": status,
            "report": report,
        });
        let path = self.out_dir.join(format!("{}.manifest.json", self.command));
        atomic_write(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        Ok(status)
    }
}
