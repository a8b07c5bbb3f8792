//! `gmt`: geometric measure theory toolkit front end.
//!
//! Library subcommands expose single constructions (Whitney forests, cube
//! trees, refinement, sawtooths, flatness, harmonic measure); the three
//! pipeline subcommands run staged analyses into a report bundle directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use gmt_cli::pipeline::{self, run_pipeline};
use gmt_cli::{PipelineConfig, SetSpec};
use gmt_core::cubetree::{build_cube_tree, CubeTree};
use gmt_core::domain::{gallery_domain, DomainSpec};
use gmt_core::geom::Aabb;
use gmt_core::measure::DiscreteMeasure;
use gmt_core::porosity::{refine_set, PorosityConfig};
use gmt_core::sawtooth::{boundary_sum_sweep, build_inner_sawtooth, build_outer_sawtooth, SawtoothDomain};
use gmt_core::whitney::whitney_decompose;
use gmt_core::wos::{ainfty_scatter, harmonic_measure_batch_with, WosSettings};
use gmt_core::{beta, ImplicitDomain, PointCloud};

#[derive(Parser)]
#[command(name = "gmt", version, about = "Geometric measure theory toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Whitney decomposition of a domain as JSON cube records
    Whitney {
        /// Gallery domain: inline JSON, a file path, or a bare name
        #[arg(long)]
        domain: String,
        /// Certification factor: the K-dilate of each cube must be inside
        #[arg(long = "K", default_value_t = 4.0)]
        k: f64,
        /// Truncation level: cubes stop subdividing at side 2^nmin
        #[arg(long, default_value_t = -6, allow_hyphen_values = true)]
        nmin: i32,
        /// Search box as comma-separated lo then hi coordinates
        #[arg(long = "box", allow_hyphen_values = true)]
        bbox: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metric cube tree over a point cloud as JSON
    Cubes {
        /// Point cloud CSV (x0..,weight)
        #[arg(long)]
        cloud: PathBuf,
        /// Separation constant of the net at each level
        #[arg(long, default_value_t = 0.25)]
        c0: f64,
        /// Number of refinement levels below the root
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Porosity-driven set surgery
    Porosity {
        #[command(subcommand)]
        cmd: PorosityCmd,
    },
    /// Inner and outer sawtooth domains over a boundary set
    Sawtooth {
        #[command(subcommand)]
        cmd: SawtoothCmd,
    },
    /// Bilateral flatness numbers and their energy
    Beta {
        #[command(subcommand)]
        cmd: BetaCmd,
    },
    /// Walk-on-spheres harmonic measure of a boundary set
    Wos {
        #[arg(long)]
        domain: String,
        /// Pole (comma-separated coordinates)
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// Boundary set: inline JSON or a file ({"kind": ...})
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 100_000)]
        walks: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Capture shell width (defaults to a fraction of the domain box)
        #[arg(long = "eps-shell")]
        eps_shell: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Harmonic measure versus surface content scatter as CSV
    Ainfty {
        #[arg(long)]
        domain: String,
        /// Boundary cloud CSV carrying the cube tree
        #[arg(long = "E")]
        e: PathBuf,
        /// Grid spec JSON: {"c0", "depth", "level", "radii", "eps"}
        #[arg(long)]
        grid: Option<String>,
        /// Pole (comma-separated coordinates)
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// Mesh width used for membership tolerance
        #[arg(long, default_value_t = 0.015625)]
        h: f64,
        #[arg(long, default_value_t = 100_000)]
        walks: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full analysis: refinement, sawtooths, sums, harmonic sandwich
    MainTheorem(PipelineArgs),
    /// Flatness certification first, then the sawtooth analysis
    InAndOut(PipelineArgs),
    /// Corkscrew sweep and Whitney uniformity fit
    VerifyNta(PipelineArgs),
}

#[derive(Subcommand)]
enum PorosityCmd {
    /// Excise shallow shells and porous windows from E
    Refine {
        /// Cube tree JSON produced by `gmt cubes`
        #[arg(long)]
        tree: PathBuf,
        /// Point cloud CSV carrying the measure (x0..,weight)
        #[arg(long)]
        measure: PathBuf,
        /// Index file for E: one cloud index per line
        #[arg(long = "E")]
        e: PathBuf,
        /// Mass fraction of E the refinement may give up
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        /// Dilation factor of the porosity windows
        #[arg(long = "M", default_value_t = 2.0)]
        m: f64,
        /// Porosity depth as a fraction of the window side
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Shell depth as a fraction of the cube length
        #[arg(long, default_value_t = 0.02)]
        t: f64,
        /// Packing exponent of the porous-window family
        #[arg(long, default_value_t = 2.1)]
        beta: f64,
        /// Fraction of shell mass that may remain per step
        #[arg(long, default_value_t = 0.01)]
        rho: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SawtoothParamsArgs {
    /// inner or outer
    #[arg(long)]
    kind: String,
    /// Gallery domain: inline JSON, a file path, or a bare name
    #[arg(long)]
    domain: String,
    /// Boundary set E as a point cloud CSV
    #[arg(long = "E")]
    e: PathBuf,
    /// Inner: forest certification factor (default 4). Outer: window
    /// dilation factor (default 12).
    #[arg(long = "K")]
    k: Option<f64>,
    /// Inner cube selection: accept Q with C0 * side >= dist(xi0, Q)
    #[arg(long, default_value_t = 7.0)]
    c0_factor: f64,
    /// Inner cube selection: accept Q within C_tilde * side of E
    #[arg(long, default_value_t = 8)]
    c_tilde: usize,
    /// Dilation applied to every selected cube
    #[arg(long, default_value_t = 1.125)]
    lambda: f64,
    /// Whitney truncation level
    #[arg(long, default_value_t = -9, allow_hyphen_values = true)]
    nmin: i32,
    /// Localization center (comma-separated); defaults near the E centroid
    #[arg(long, allow_hyphen_values = true)]
    xi0: Option<String>,
    /// Localization radius; defaults to just covering E
    #[arg(long)]
    r0: Option<f64>,
}

#[derive(Subcommand)]
enum SawtoothCmd {
    /// Build a sawtooth and print it as JSON
    Build {
        #[command(flatten)]
        args: SawtoothParamsArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boundary cube sums over a radius grid as CSV
    Sums {
        #[command(flatten)]
        args: SawtoothParamsArgs,
        /// Sum center (comma-separated coordinates)
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        /// Radius grid (comma-separated)
        #[arg(long = "r-grid")]
        r_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BetaCmd {
    /// Flatness records over a centers-by-scales grid as CSV
    Sweep {
        #[arg(long)]
        cloud: PathBuf,
        /// Centers as a point cloud CSV
        #[arg(long)]
        centers: PathBuf,
        /// Scales (comma-separated)
        #[arg(long)]
        scales: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Carleson energy of non-flat scale-location cells as JSON
    Energy {
        #[arg(long)]
        cloud: PathBuf,
        /// Flatness threshold
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        /// Top-ball center (comma-separated); defaults near the centroid
        #[arg(long, allow_hyphen_values = true)]
        xi0: Option<String>,
        /// Top scale; defaults to half the cloud diameter
        #[arg(long)]
        r0: Option<f64>,
        /// Finest dyadic scale index (scales r0 * 2^-j, j = 0..=jmax)
        #[arg(long, default_value_t = 3)]
        jmax: usize,
        /// Net spacing for centers; defaults to the finest scale
        #[arg(long = "net-h")]
        net_h: Option<f64>,
        /// Expected intrinsic dimension; defaults to ambient minus one
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline configuration JSON
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed recorded in the config
    #[arg(long)]
    seed: Option<u64>,
    /// Report bundle directory (defaults to the config's, then gmt-<pipeline>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plot-oriented CSV artifacts
    #[arg(long = "emit-plots")]
    emit_plots: bool,
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Whitney {
            domain,
            k,
            nmin,
            bbox,
            out,
        } => {
            let dom = load_domain(&domain)?;
            let search = match bbox {
                Some(text) => {
                    let vals = parse_floats(&text)?;
                    if vals.len() != 2 * dom.dim {
                        bail!(
                            "--box needs {} coordinates (lo then hi), got {}",
                            2 * dom.dim,
                            vals.len()
                        );
                    }
                    Aabb::new(vals[..dom.dim].to_vec(), vals[dom.dim..].to_vec())
                }
                None => dom.bbox.clone(),
            };
            let forest = whitney_decompose(&dom, k, &search, nmin)?;
            emit(out.as_deref(), &pretty(&forest.to_records())?)
        }
        Cmd::Cubes {
            cloud,
            c0,
            depth,
            out,
        } => {
            let cloud = PointCloud::read_csv(&cloud)?;
            let tree = build_cube_tree(&cloud, c0, depth)?;
            emit(out.as_deref(), &pretty(&tree.to_json())?)
        }
        Cmd::Porosity {
            cmd:
                PorosityCmd::Refine {
                    tree,
                    measure,
                    e,
                    tau,
                    m,
                    delta,
                    t,
                    beta,
                    rho,
                    out,
                },
        } => {
            let cloud = PointCloud::read_csv(&measure)?;
            let tree_json: serde_json::Value =
                serde_json::from_str(&fs::read_to_string(&tree).context("reading --tree")?)?;
            let tree = CubeTree::from_json(&cloud, &tree_json)?;
            let mu = DiscreteMeasure::from_cloud(&cloud)?;
            let e_idx = PipelineConfig::read_indices(
                e.to_str().context("--E path is not valid UTF-8")?,
            )?;
            let cfg = PorosityConfig {
                m_factor: m,
                delta,
                beta,
                tau,
                t,
                rho,
            };
            let rr = refine_set(&tree, &e_idx, &mu, &cfg)?;
            emit(out.as_deref(), &pretty(&rr.to_json())?)
        }
        Cmd::Sawtooth { cmd } => match cmd {
            SawtoothCmd::Build { args, out } => {
                let (_, _, saw) = build_sawtooth(&args)?;
                emit(out.as_deref(), &pretty(&saw.to_json())?)
            }
            SawtoothCmd::Sums {
                args,
                xi,
                r_grid,
                out,
            } => {
                let (_, _, saw) = build_sawtooth(&args)?;
                let center = parse_floats(&xi)?;
                let radii = parse_floats(&r_grid)?;
                let sweep = boundary_sum_sweep(&saw, &[center], &radii)?;
                let (header, rows) = pipeline::sweep_csv(&sweep);
                emit(out.as_deref(), &csv_string(&header, &rows)?)
            }
        },
        Cmd::Beta { cmd } => match cmd {
            BetaCmd::Sweep {
                cloud,
                centers,
                scales,
                out,
            } => {
                let cloud = PointCloud::read_csv(&cloud)?;
                let centers = PointCloud::read_csv(&centers)?.to_vecs();
                let scales = parse_floats(&scales)?;
                let records = beta::bbeta_sweep(&cloud, &centers, &scales)?;
                let (header, rows) = beta_csv(&records);
                emit(out.as_deref(), &csv_string(&header, &rows)?)
            }
            BetaCmd::Energy {
                cloud,
                epsilon,
                xi0,
                r0,
                jmax,
                net_h,
                d,
                out,
            } => {
                let cloud = PointCloud::read_csv(&cloud)?;
                let xi0 = match xi0 {
                    Some(text) => parse_floats(&text)?,
                    None => pipeline::nearest_to_centroid(&cloud),
                };
                let r0 = match r0 {
                    Some(v) => v,
                    None => 0.5 * cloud_diameter(&cloud),
                };
                let net_h = net_h.unwrap_or(r0 * 0.5f64.powi(jmax as i32));
                let d = d.unwrap_or(cloud.dim().saturating_sub(1));
                let rep = beta::carleson_energy(&cloud, &xi0, r0, epsilon, jmax, net_h, d)?;
                emit(out.as_deref(), &pretty(&rep)?)
            }
        },
        Cmd::Wos {
            domain,
            z,
            set,
            walks,
            seed,
            eps_shell,
            out,
        } => {
            let dom = load_domain(&domain)?;
            let z = parse_floats(&z)?;
            let ind = SetSpec::parse(&set)?.to_indicator()?;
            let mut settings = WosSettings::for_domain(&dom);
            if let Some(eps) = eps_shell {
                settings = settings.with_eps_shell(eps);
            }
            let est = harmonic_measure_batch_with(&dom, &z, &[ind.as_ref()], walks, seed, &settings)?
                .remove(0);
            emit(out.as_deref(), &pretty(&est)?)
        }
        Cmd::Ainfty {
            domain,
            e,
            grid,
            z,
            h,
            walks,
            seed,
            out,
        } => {
            let dom = load_domain(&domain)?;
            let cloud = PointCloud::read_csv(&e)?;
            let grid: AinftyGrid = match grid {
                Some(text) => serde_json::from_str(&read_arg_text(&text)?)?,
                None => AinftyGrid::default(),
            };
            let z0 = parse_floats(&z)?;
            let tree = build_cube_tree(&cloud, grid.c0, grid.depth)?;
            let level = grid.level.min(tree.depth.saturating_sub(1));
            let centers = pipeline::pick_evenly_points(&cloud, grid.centers);
            let scatter = ainfty_scatter(
                &dom, &tree, level, &centers, &grid.radii, &z0, h, walks, seed, &grid.eps,
            )?;
            let (header, rows) = pipeline::scatter_csv(&scatter, dom.dim);
            emit(out.as_deref(), &csv_string(&header, &rows)?)
        }
        Cmd::MainTheorem(args) => pipeline_cmd("main-theorem", args),
        Cmd::InAndOut(args) => pipeline_cmd("in-and-out", args),
        Cmd::VerifyNta(args) => pipeline_cmd("verify-nta", args),
    }
}

/// Scatter grid parameters for the `ainfty` subcommand.
#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AinftyGrid {
    c0: f64,
    depth: usize,
    level: usize,
    centers: usize,
    radii: Vec<f64>,
    eps: Vec<f64>,
}

impl Default for AinftyGrid {
    fn default() -> Self {
        AinftyGrid {
            c0: 0.25,
            depth: 4,
            level: 2,
            centers: 4,
            radii: vec![0.5, 0.25, 0.125],
            eps: vec![0.5, 0.2, 0.1],
        }
    }
}

fn pipeline_cmd(name: &str, args: PipelineArgs) -> Result<()> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    if cfg.pipeline != name {
        bail!(
            "config declares pipeline '{}' but the subcommand is '{name}'",
            cfg.pipeline
        );
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out_dir = args
        .out
        .or_else(|| cfg.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("gmt-{name}")));
    run_pipeline(&cfg, &out_dir, args.emit_plots)?;
    println!("bundle: {}", out_dir.display());
    Ok(())
}

fn build_sawtooth(
    args: &SawtoothParamsArgs,
) -> Result<(ImplicitDomain, PointCloud, SawtoothDomain)> {
    let dom = load_domain(&args.domain)?;
    let e = PointCloud::read_csv(&args.e)?;
    let xi0 = match &args.xi0 {
        Some(text) => Some(parse_floats(text)?),
        None => None,
    };
    let saw = match args.kind.as_str() {
        "inner" => {
            let k = args.k.unwrap_or(4.0);
            let forest = whitney_decompose(&dom, k, &dom.bbox, args.nmin)?;
            let (xi0, r0) = pipeline::localization(xi0, args.r0, &e);
            build_inner_sawtooth(
                &dom,
                &forest,
                &e,
                args.c0_factor,
                args.c_tilde,
                args.lambda,
                &xi0,
                r0,
            )?
        }
        "outer" => build_outer_sawtooth(&dom, &e, args.k.unwrap_or(12.0), args.lambda, args.nmin)?,
        other => bail!("--kind must be inner or outer, got '{other}'"),
    };
    Ok((dom, e, saw))
}

/// Flatness records as CSV header and rows (matches the file writer).
fn beta_csv(records: &[beta::BetaRecord]) -> (Vec<String>, Vec<Vec<String>>) {
    let dim = records.first().map_or(0, |r| r.xi.len());
    let mut header: Vec<String> = (0..dim).map(|k| format!("xi{k}")).collect();
    header.extend(["r", "bbeta", "cloud_to_plane", "plane_to_cloud"].map(String::from));
    header.extend((0..dim).map(|k| format!("normal{k}")));
    header.push("degenerate".into());
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|rec| {
            let mut row: Vec<String> = rec.xi.iter().map(|v| format!("{v}")).collect();
            row.push(format!("{}", rec.r));
            row.push(format!("{}", rec.value));
            row.push(format!("{}", rec.term_cloud_to_plane));
            row.push(format!("{}", rec.term_plane_to_cloud));
            row.extend(rec.normal.iter().map(|v| format!("{v}")));
            row.push(format!("{}", rec.degenerate));
            row
        })
        .collect();
    (header, rows)
}

/// Domain argument: inline JSON, a spec file, or a bare gallery name.
fn load_domain(text: &str) -> Result<ImplicitDomain> {
    let trimmed = text.trim();
    let spec = if trimmed.starts_with('{') {
        DomainSpec::parse(trimmed)?
    } else if Path::new(trimmed).is_file() {
        DomainSpec::parse(&fs::read_to_string(trimmed)?)?
    } else {
        DomainSpec {
            name: trimmed.to_string(),
            params: serde_json::Map::new(),
        }
    };
    Ok(gallery_domain(&spec)?)
}

/// Inline JSON (starts with '{') or the contents of a file.
fn read_arg_text(text: &str) -> Result<String> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        Ok(trimmed.to_string())
    } else {
        Ok(fs::read_to_string(trimmed).with_context(|| format!("reading {trimmed}"))?)
    }
}

fn parse_floats(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("parsing '{}' as a number", s.trim()))
        })
        .collect()
}

fn cloud_diameter(cloud: &PointCloud) -> f64 {
    let dim = cloud.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in cloud.iter_points() {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    lo.iter()
        .zip(&hi)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE)
}

fn pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))?,
        None => {
            print!("{content}");
            if !content.ends_with('\n') {
                println!();
            }
        }
    }
    Ok(())
}
