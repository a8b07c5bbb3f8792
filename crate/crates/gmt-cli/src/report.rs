//! Report bundles: named artifacts, stage verdicts, and a hashed manifest.
//!
//! A bundle is a directory of artifacts written by one pipeline run. Every
//! artifact byte feeds a 64-bit FNV-1a hash recorded in `manifest.json`,
//! and the bundle hash folds the per-artifact hashes together, so two runs
//! agree exactly when their artifact bytes agree. Wall-clock data lives in
//! `timing.json`, which stays outside the hashed set.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gmt_core::{invalid_input, GmtError, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// Outcome of one pipeline stage, ordered worst-last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    /// The stage ran but lacked the data or power to decide.
    Indeterminate,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Pass => "pass",
            Verdict::Indeterminate => "indeterminate",
            Verdict::Fail => "fail",
        };
        f.write_str(s)
    }
}

/// One stage's verdict with a human-readable summary.
#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub verdict: Verdict,
    pub details: String,
}

/// Accumulates artifacts and verdicts for one pipeline run.
pub struct ReportBundle {
    dir: PathBuf,
    pipeline: String,
    seed: u64,
    config_echo: Value,
    artifacts: Vec<(String, usize, String)>,
    stages: Vec<StageReport>,
    timings: Vec<(String, f64)>,
    started: Instant,
    quiet: bool,
}

/// 64-bit FNV-1a over a byte slice.
pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// FNV-1a digest as fixed-width lowercase hex.
pub fn fnv64_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv64(bytes))
}

impl ReportBundle {
    /// Creates the output directory and an empty bundle.
    pub fn new(dir: &Path, pipeline: &str, seed: u64, config_echo: Value) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(ReportBundle {
            dir: dir.to_path_buf(),
            pipeline: pipeline.to_string(),
            seed,
            config_echo,
            artifacts: Vec::new(),
            stages: Vec::new(),
            timings: Vec::new(),
            started: Instant::now(),
            quiet: false,
        })
    }

    /// Suppresses the per-stage stdout lines (used by tests).
    pub fn quiet(mut self) -> Self {
        self.quiet = true;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        if self.artifacts.iter().any(|(n, _, _)| n == name) {
            return Err(invalid_input!("duplicate artifact name {name}"));
        }
        self.artifacts
            .push((name.to_string(), bytes.len(), fnv64_hex(bytes)));
        Ok(())
    }

    /// Writes raw bytes as a named artifact and hashes them.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.record(name, bytes)
    }

    /// Serializes a value to pretty JSON and stores it as an artifact.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Writes a CSV artifact from a header and stringified rows.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(header)?;
        for row in rows {
            wtr.write_record(row)?;
        }
        let bytes = wtr
            .into_inner()
            .map_err(|e| GmtError::Io(e.into_error()))?;
        self.write_bytes(name, &bytes)
    }

    /// Ingests a file already written into the bundle directory by a
    /// library writer, hashing its bytes.
    pub fn ingest_file(&mut self, name: &str) -> Result<()> {
        let bytes = fs::read(self.dir.join(name))?;
        self.record(name, &bytes)
    }

    /// Absolute path for an artifact a library writer should produce.
    pub fn artifact_path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Records a stage verdict and prints the stage line.
    pub fn stage(&mut self, name: &str, verdict: Verdict, details: impl Into<String>) {
        let details = details.into();
        if !self.quiet {
            println!("stage {name}: {verdict} ({details})");
        }
        self.stages.push(StageReport {
            stage: name.to_string(),
            verdict,
            details,
        });
    }

    /// Records one stage's wall-clock seconds (unhashed output).
    pub fn timing(&mut self, name: &str, seconds: f64) {
        self.timings.push((name.to_string(), seconds));
    }

    /// Worst verdict recorded so far; `Pass` while empty.
    pub fn overall(&self) -> Verdict {
        self.stages
            .iter()
            .map(|s| s.verdict)
            .max()
            .unwrap_or(Verdict::Pass)
    }

    /// Writes verdicts, timing, and the manifest; returns the overall
    /// verdict. The manifest hash covers every artifact including the
    /// verdict list; timing and the manifest itself stay outside it.
    pub fn finish(mut self) -> Result<Verdict> {
        let overall = self.overall();
        let verdicts = json!({
            "overall": overall,
            "stages": self.stages,
        });
        self.write_json("verdicts.json", &verdicts)?;

        let timing: Vec<Value> = self
            .timings
            .iter()
            .map(|(n, s)| json!({"stage": n, "seconds": s}))
            .collect();
        let mut timing_bytes = serde_json::to_vec_pretty(&timing)?;
        timing_bytes.push(b'\n');
        fs::write(self.dir.join("timing.json"), &timing_bytes)?;

        let mut fold = String::new();
        for (name, _, hash) in &self.artifacts {
            fold.push_str(name);
            fold.push(':');
            fold.push_str(hash);
            fold.push('\n');
        }
        let manifest = json!({
            "pipeline": self.pipeline,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": self.config_echo,
            "wall_clock_s": self.started.elapsed().as_secs_f64(),
            "artifacts": self
                .artifacts
                .iter()
                .map(|(n, b, h)| json!({"name": n, "bytes": b, "fnv64": h}))
                .collect::<Vec<_>>(),
            "bundle_fnv64": fnv64_hex(fold.as_bytes()),
            "verdict": overall,
        });
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.dir.join("manifest.json"), &bytes)?;
        if !self.quiet {
            println!("verdict: {overall}");
        }
        Ok(overall)
    }
}
