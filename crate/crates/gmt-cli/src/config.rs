//! Pipeline configuration: the JSON schema shared by all `gmt` pipelines.
//!
//! A config names the pipeline, the domain, how the target set is carved
//! out, and the stage parameters. Relative file references resolve against
//! the config file's directory, and `load` checks that every referenced
//! file exists before the run starts.

use std::fs;
use std::path::{Path, PathBuf};

use gmt_core::domain::DomainSpec;
use gmt_core::porosity::PorosityConfig;
use gmt_core::{invalid_input, Result};
use serde::{Deserialize, Serialize};

/// How the target set E is carved out of the boundary cloud.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "select", rename_all = "snake_case")]
pub enum SetSelect {
    /// Indices into the cloud, one per line in a text file.
    Indices { path: String },
    /// Cloud points inside the axis-aligned box [lo, hi].
    InBox { lo: Vec<f64>, hi: Vec<f64> },
    /// The whole cloud.
    All,
}

impl Default for SetSelect {
    fn default() -> Self {
        SetSelect::All
    }
}

/// Metric cube-tree parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CubeParams {
    pub c0: f64,
    pub depth: usize,
}

impl Default for CubeParams {
    fn default() -> Self {
        CubeParams { c0: 0.25, depth: 4 }
    }
}

/// Porosity and refinement parameters with usable defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PorosityParams {
    pub m_factor: f64,
    pub delta: f64,
    pub beta: f64,
    pub tau: f64,
    pub t: f64,
    pub rho: f64,
    /// Scale fractions (of the region radius) probed by the doubling stage.
    pub doubling_scales: Vec<f64>,
}

impl Default for PorosityParams {
    fn default() -> Self {
        PorosityParams {
            m_factor: 2.0,
            delta: 0.05,
            beta: 2.1,
            tau: 0.1,
            t: 0.02,
            rho: 0.01,
            doubling_scales: vec![1.0, 0.5, 0.25, 0.125],
        }
    }
}

impl PorosityParams {
    pub fn to_core(&self) -> PorosityConfig {
        PorosityConfig {
            m_factor: self.m_factor,
            delta: self.delta,
            beta: self.beta,
            tau: self.tau,
            t: self.t,
            rho: self.rho,
        }
    }
}

/// Sawtooth construction parameters for both envelope kinds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SawtoothCfg {
    /// Whitney dilation for the base-domain forest (inner envelope).
    pub forest_k: f64,
    /// Cube-selection dilation: cubes whose c0-dilate meets E join.
    pub c0_factor: f64,
    /// Hop budget for path completion between selected cubes.
    pub c_tilde: usize,
    /// Dilation applied to each kept cube when forming the union.
    pub lambda: f64,
    /// Whitney dilation for the complement forest (outer envelope).
    pub k_factor: f64,
    /// Finest dyadic level kept by the forests.
    pub n_min: i32,
    /// Localization radius; inferred from E when absent.
    pub r0: Option<f64>,
    /// Localization center; inferred from E when absent.
    pub xi0: Option<Vec<f64>>,
}

impl Default for SawtoothCfg {
    fn default() -> Self {
        SawtoothCfg {
            forest_k: 4.0,
            c0_factor: 7.0,
            c_tilde: 8,
            lambda: 1.125,
            k_factor: 12.0,
            n_min: -9,
            r0: None,
            xi0: None,
        }
    }
}

/// Walk-on-spheres stage parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct WosCfg {
    pub n_walks: u64,
    /// Interior pole; inferred for gallery domains when absent.
    pub z0: Option<Vec<f64>>,
    /// Number of contiguous chunks of E' probed by the sandwich stage.
    pub n_f_sets: usize,
    /// Cube-tree level whose cells the scatter stage compares against.
    pub ainfty_level: usize,
    pub ainfty_radii: Vec<f64>,
    pub eps_grid: Vec<f64>,
}

impl Default for WosCfg {
    fn default() -> Self {
        WosCfg {
            n_walks: 50_000,
            z0: None,
            n_f_sets: 10,
            ainfty_level: 2,
            ainfty_radii: vec![0.5, 0.25, 0.125],
            eps_grid: vec![0.5, 0.2, 0.1],
        }
    }
}

/// Flatness-energy ladder parameters for the in-and-out pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BetaCfg {
    /// Flatness threshold defining a bad cell.
    pub epsilon: f64,
    /// Coarsest scale; inferred from the cloud extent when absent.
    pub r0: Option<f64>,
    /// Ladder base; inferred as the cloud point nearest the centroid.
    pub xi0: Option<Vec<f64>>,
    /// Scale octaves below r0 in the first ladder level.
    pub j_base: usize,
    /// Number of ladder refinements (each adds one octave).
    pub levels: usize,
    /// Energy growth beyond this factor per refinement reads as non-flat.
    pub growth_margin: f64,
    /// Content dimension; inferred as ambient minus one when absent.
    pub d: Option<usize>,
}

impl Default for BetaCfg {
    fn default() -> Self {
        BetaCfg {
            epsilon: 0.25,
            r0: None,
            xi0: None,
            j_base: 3,
            levels: 3,
            growth_margin: 1.05,
            d: None,
        }
    }
}

/// Corkscrew and uniformity probe parameters for verify-nta.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NtaCfg {
    /// Corkscrew gauge: balls of radius r / c_factor are required.
    pub c_factor: f64,
    pub radii: Vec<f64>,
    pub n_centers: usize,
    pub forest_k: f64,
    pub n_min: i32,
    /// Random cube pairs probed by the uniformity fit.
    pub n_pairs: usize,
}

impl Default for NtaCfg {
    fn default() -> Self {
        NtaCfg {
            c_factor: 4.0,
            radii: vec![0.5, 0.25, 0.125, 0.0625],
            n_centers: 8,
            forest_k: 4.0,
            n_min: -6,
            n_pairs: 64,
        }
    }
}

/// Full configuration for one pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// One of "main-theorem", "in-and-out", "verify-nta".
    pub pipeline: String,
    pub domain: Option<DomainSpec>,
    /// Boundary sampling mesh; also sets the trace tolerance scale.
    #[serde(default = "default_h")]
    pub h: f64,
    /// Input cloud CSV (required by in-and-out).
    #[serde(default)]
    pub cloud: Option<String>,
    #[serde(default)]
    pub e_set: SetSelect,
    #[serde(default)]
    pub cubes: CubeParams,
    #[serde(default)]
    pub porosity: PorosityParams,
    #[serde(default)]
    pub sawtooth: SawtoothCfg,
    #[serde(default)]
    pub wos: WosCfg,
    #[serde(default)]
    pub beta: BetaCfg,
    #[serde(default)]
    pub nta: NtaCfg,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory; the CLI --out flag overrides it.
    #[serde(default)]
    pub out: Option<String>,
}

fn default_h() -> f64 {
    1.0 / 64.0
}

fn default_seed() -> u64 {
    42
}

const PIPELINES: [&str; 3] = ["main-theorem", "in-and-out", "verify-nta"];

impl PipelineConfig {
    /// Parses a config file, resolves relative file references against
    /// its directory, and checks that every referenced file exists.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path)?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| invalid_input!("config {path:?}: {e}"))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if let Some(cloud) = &cfg.cloud {
            cfg.cloud = Some(resolve(base, cloud)?);
        }
        if let SetSelect::Indices { path } = &cfg.e_set {
            cfg.e_set = SetSelect::Indices {
                path: resolve(base, path)?,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks shared by file and in-memory configs.
    pub fn validate(&self) -> Result<()> {
        if !PIPELINES.contains(&self.pipeline.as_str()) {
            return Err(invalid_input!(
                "unknown pipeline {:?}; expected one of {PIPELINES:?}",
                self.pipeline
            ));
        }
        if !(self.h > 0.0) {
            return Err(invalid_input!("mesh h must be positive"));
        }
        match self.pipeline.as_str() {
            "in-and-out" => {
                if self.cloud.is_none() {
                    return Err(invalid_input!("in-and-out needs an input cloud CSV"));
                }
            }
            _ => {
                if self.domain.is_none() {
                    return Err(invalid_input!("pipeline {} needs a domain", self.pipeline));
                }
            }
        }
        Ok(())
    }

    /// Reads an index-selection file: one nonnegative index per line.
    pub fn read_indices(path: &str) -> Result<Vec<usize>> {
        let text = fs::read_to_string(path)?;
        let mut out = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let idx: usize = line
                .parse()
                .map_err(|_| invalid_input!("bad index {line:?} on line {}", ln + 1))?;
            out.push(idx);
        }
        Ok(out)
    }
}

fn resolve(base: &Path, rel: &str) -> Result<String> {
    let p = PathBuf::from(rel);
    let full = if p.is_absolute() { p } else { base.join(p) };
    if !full.is_file() {
        return Err(invalid_input!("referenced file {full:?} does not exist"));
    }
    Ok(full.to_string_lossy().into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: PipelineConfig = serde_json::from_str(
            r#"{"pipeline": "main-theorem", "domain": {"name": "half_space"}}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.cubes.depth, 4);
        assert!((cfg.porosity.tau - 0.1).abs() < 1e-12);
        assert_eq!(cfg.sawtooth.n_min, -9);
        assert!(matches!(cfg.e_set, SetSelect::All));
    }

    #[test]
    fn load_rejects_missing_referenced_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        let mut f = fs::File::create(&path).unwrap();
        write!(
            f,
            r#"{{"pipeline": "in-and-out", "cloud": "nope.csv"}}"#
        )
        .unwrap();
        drop(f);
        assert!(PipelineConfig::load(&path).is_err());
    }

    #[test]
    fn load_resolves_relative_cloud_paths() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("e.csv"), "x0,x1,weight\n0,0,1\n").unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(
            &path,
            r#"{"pipeline": "in-and-out", "cloud": "e.csv"}"#,
        )
        .unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert!(PathBuf::from(cfg.cloud.unwrap()).is_file());
    }
}
