//! Output files. CSV and report bodies depend only on the config and seed;
//! timings and the environment go to the `.meta.json` sidecar.

use std::path::{Path, PathBuf};
use std::time::Instant;

use pec_core::rng::PRNG_ID;
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("PEC_VERSION");

/// Shortest round-trip decimal; `inf`, `-inf` and `NaN` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub struct Run<'a> {
    pub subcommand: &'static str,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub budget: u64,
    pub threads: usize,
    pub config: &'a ExperimentConfig,
    started: Instant,
}

impl<'a> Run<'a> {
    pub fn new(
        subcommand: &'static str,
        out_dir: &Path,
        seed: u64,
        budget: u64,
        threads: usize,
        config: &'a ExperimentConfig,
    ) -> Result<Self, CliError> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Output(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Run {
            subcommand,
            out_dir: out_dir.to_path_buf(),
            seed,
            budget,
            threads,
            config,
            started: Instant::now(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }

    /// Sidecar with the config echo, seed, PRNG, version and timings.
    pub fn finish(&self, outputs: &[PathBuf], extra: serde_json::Value) -> Result<(), CliError> {
        let files: Vec<String> = outputs
            .iter()
            .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
            .collect();
        let meta = json!({
            "subcommand": self.subcommand,
            "version": VERSION,
            "prng": PRNG_ID,
            "seed": self.seed,
            "budget": self.budget,
            "threads": self.threads,
            "config": self.config,
            "outputs": files,
            "wall_clock_seconds": self.started.elapsed().as_secs_f64(),
            "extra": extra,
        });
        self.write_json(&format!("{}.meta.json", self.subcommand), &meta)?;
        Ok(())
    }
}
