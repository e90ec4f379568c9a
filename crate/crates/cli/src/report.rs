//! Artifact emission: data files, the configuration echo and run metadata.

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Serialize)]
struct Metadata<'a> {
    experiment: &'a str,
    seed: u64,
    threads: usize,
    cli_version: &'static str,
    core_version: &'static str,
    started_unix: u64,
    wall_clock_seconds: f64,
    config: BTreeMap<String, BTreeMap<String, String>>,
    outputs: &'a [String],
    summary: &'a serde_json::Value,
}

/// Collects the files of one run under its output directory.
pub struct Reporter {
    dir: PathBuf,
    outputs: Vec<String>,
    started: Instant,
    started_unix: u64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

impl Reporter {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(io_err(&path))?;
        log::info!("wrote {}", path.display());
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).expect("report values serialize");
        self.write(name, &(text + "\n"))
    }

    /// Write `config.ini` and `metadata.json`.
    pub fn finish(mut self, cfg: &RunConfig, summary: &serde_json::Value) -> CliResult<()> {
        self.write("config.ini", &cfg.to_ini_string())?;
        let outputs = {
            let mut o = self.outputs.clone();
            o.push("metadata.json".into());
            o
        };
        let meta = Metadata {
            experiment: cfg.experiment.as_str(),
            seed: cfg.seed,
            threads: cfg.threads,
            cli_version: env!("CARGO_PKG_VERSION"),
            core_version: bhlab::VERSION,
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            config: cfg.to_map(),
            outputs: &outputs,
            summary,
        };
        self.write_json("metadata.json", &meta)
    }
}
