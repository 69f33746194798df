//! Run configuration, output files and the command line.
//!
//! A run is described by a [`RunConfig`], a TOML file with a strict schema:
//!
//! ```toml
//! output_dir = "out/solve"
//! workers = 1
//!
//! [job]
//! kind = "solve"
//! grid = { kind = "uniform", horizon = 5.0, dt = 0.01 }
//! gamma = { paths = 100000, seed = { root = 1 }, control_variate = true }
//! intensity = { family = "travelling_wave", v = 1.0 }
//! ```
//!
//! Every data file starts with three comment lines: the schema version, the
//! whole configuration as one line of JSON, and the seed. A `manifest.json`
//! lists the files with their SHA-256 digests. Seeds are written as TOML
//! integers, so roots must fit in an `i64`.

mod args;
mod jobs;

pub use args::cli_main;
pub use jobs::{execute, GridSpec, Job, RunOutput, SimulateJob, SolveJob, CriticalJob};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sampling::SeedSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable read when `--workers` is not given.
pub const WORKERS_ENV: &str = "SUPERCOOL_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Worker threads; the flag or environment decides when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    pub job: Job,
}

/// Reads a run configuration. Parse errors carry the line and the field.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::config(e.to_string()))
}

pub fn config_to_toml(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::config(format!("cannot write config: {e}")))
}

pub fn save_config(path: &Path, cfg: &RunConfig) -> Result<()> {
    fs::write(path, config_to_toml(cfg)?)?;
    Ok(())
}

/// A file written by a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config: RunConfig,
    pub files: Vec<FileEntry>,
}

/// Writes `manifest.json` in `dir` listing `files` (names relative to `dir`).
pub fn save_manifest(dir: &Path, config: &RunConfig, files: &[String]) -> Result<PathBuf> {
    let mut entries = Vec::with_capacity(files.len());
    for name in files {
        let data = fs::read(dir.join(name))?;
        let digest = Sha256::digest(&data);
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        entries.push(FileEntry { name: name.clone(), bytes: data.len() as u64, sha256 });
    }
    let m = Manifest { schema_version: SCHEMA_VERSION, config: config.clone(), files: entries };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(path)
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Writes data files with the common header into one directory and keeps
/// the list for the manifest.
pub struct OutputDir {
    dir: PathBuf,
    config_line: String,
    seed_line: String,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(cfg: &RunConfig, seed: Option<SeedSpec>) -> Result<Self> {
        fs::create_dir_all(&cfg.output_dir)?;
        Ok(Self {
            dir: cfg.output_dir.clone(),
            config_line: serde_json::to_string(cfg)?,
            seed_line: match seed {
                Some(s) => serde_json::to_string(&s)?,
                None => "none".into(),
            },
            files: Vec::new(),
        })
    }

    fn header(&self) -> String {
        format!("# schema_version={SCHEMA_VERSION}\n# config={}\n# seed={}\n", self.config_line, self.seed_line)
    }

    /// CSV with the header comments, then `columns`, then `rows`.
    pub fn csv<I, R>(&mut self, name: &str, columns: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut text = self.header();
        text.push_str(&columns.join(","));
        text.push('\n');
        for row in rows {
            let cells: Vec<String> = row.into_iter().collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.write(name, text)
    }

    /// JSON object `{schema_version, config, seed, data}`.
    pub fn json(&mut self, name: &str, data: &impl Serialize) -> Result<()> {
        let doc = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "config": serde_json::from_str::<serde_json::Value>(&self.config_line)?,
            "seed": serde_json::from_str::<serde_json::Value>(&self.seed_line).unwrap_or(serde_json::Value::Null),
            "data": data,
        });
        self.write(name, serde_json::to_string_pretty(&doc)? + "\n")
    }

    fn write(&mut self, name: &str, text: String) -> Result<()> {
        fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish(self, cfg: &RunConfig) -> Result<Vec<String>> {
        save_manifest(&self.dir, cfg, &self.files)?;
        Ok(self.files)
    }
}

/// Formats a float for CSV: shortest round-trip form, `inf` for infinities.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Worker count: the flag, else the environment, else the machine.
pub fn resolve_workers(flag: Option<usize>, cfg: Option<usize>) -> usize {
    flag.or(cfg)
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1)
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}
