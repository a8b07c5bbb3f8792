//! Pipeline drivers: staged library runs with artifacts and verdicts.
//!
//! Each stage runs one library call, writes its artifacts into the report
//! bundle, and records pass, indeterminate, or fail. A failing stage stops
//! the run; the bundle still closes with a manifest, so failures ship
//! diagnostics instead of partial silence. All randomness is keyed off the
//! config seed through fixed per-stage substreams, which keeps rerun
//! artifacts byte-identical.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::time::Instant;

use gmt_core::bvh::PointSet;
use gmt_core::cloud::sample_boundary;
use gmt_core::cubetree::{build_cube_tree, verify_cube_axioms, CubeTree};
use gmt_core::domain::{complement_of_points, gallery_domain};
use gmt_core::geom::{dist, Aabb, Ball};
use gmt_core::measure::DiscreteMeasure;
use gmt_core::porosity::{estimate_doubling, refine_set, shell_decay};
use gmt_core::sawtooth::{
    boundary_sum_sweep, build_inner_sawtooth, build_outer_sawtooth, check_trace,
    localization_constant, regularity_profile, sandwich_check, SawtoothDomain, SweepReport,
};
use gmt_core::util::splitmix64;
use gmt_core::whitney::{find_corkscrew, fit_uniformity, whitney_decompose, CorkscrewSide};
use gmt_core::wos::{ainfty_scatter, harmonic_measure_batch_with, Indicator, WosSettings};
use gmt_core::{beta, invalid_input, ImplicitDomain, PointCloud, Result};
use serde_json::json;

use crate::config::{PipelineConfig, SetSelect};
use crate::report::{ReportBundle, Verdict};

/// Unwraps a stage computation inside a `Result<()>` driver; an error
/// records a fail verdict and ends the run (the bundle still closes).
macro_rules! stage_try {
    ($bundle:expr, $name:expr, $expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(e) => {
                $bundle.stage($name, Verdict::Fail, e.to_string());
                return Ok(());
            }
        }
    };
}

/// Same as `stage_try` for helpers returning `Result<bool>` (`false`
/// tells the caller the run stopped).
macro_rules! stage_try_flow {
    ($bundle:expr, $name:expr, $expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(e) => {
                $bundle.stage($name, Verdict::Fail, e.to_string());
                return Ok(false);
            }
        }
    };
}

/// Runs the configured pipeline into `out_dir` and returns the overall
/// verdict. A produced bundle means the run succeeded as a process even
/// when the verdict is fail.
pub fn run_pipeline(cfg: &PipelineConfig, out_dir: &Path, emit_plots: bool) -> Result<Verdict> {
    cfg.validate()?;
    let echo = serde_json::to_value(cfg)?;
    let mut bundle = ReportBundle::new(out_dir, &cfg.pipeline, cfg.seed, echo)?;
    match cfg.pipeline.as_str() {
        "main-theorem" => main_theorem(cfg, &mut bundle, emit_plots)?,
        "in-and-out" => in_and_out(cfg, &mut bundle, emit_plots)?,
        "verify-nta" => verify_nta(cfg, &mut bundle)?,
        other => return Err(invalid_input!("unknown pipeline {other}")),
    }
    bundle.finish()
}

fn main_theorem(cfg: &PipelineConfig, bundle: &mut ReportBundle, emit_plots: bool) -> Result<()> {
    let spec = cfg.domain.as_ref().expect("validated: main-theorem has a domain");
    let t0 = Instant::now();
    let domain = stage_try!(bundle, "domain", gallery_domain(spec));
    bundle.write_json(
        "domain.json",
        &json!({
            "name": domain.name,
            "dim": domain.dim,
            "bbox": domain.bbox,
            "diam_boundary": domain.diam_boundary,
        }),
    )?;
    bundle.timing("domain", t0.elapsed().as_secs_f64());
    bundle.stage(
        "domain",
        Verdict::Pass,
        format!("{} in R^{}", domain.name, domain.dim),
    );

    let t0 = Instant::now();
    let cloud = stage_try!(bundle, "boundary_cloud", sample_boundary(&domain, cfg.h));
    let e_idx = stage_try!(bundle, "boundary_cloud", carve_e(&cloud, &cfg.e_set));
    if e_idx.is_empty() {
        bundle.stage("boundary_cloud", Verdict::Fail, "target set E is empty");
        return Ok(());
    }
    stage_try!(
        bundle,
        "boundary_cloud",
        cloud.write_csv(&bundle.artifact_path("boundary_cloud.csv"))
    );
    bundle.ingest_file("boundary_cloud.csv")?;
    bundle.write_json("e_indices.json", &e_idx)?;
    let mu = stage_try!(bundle, "boundary_cloud", DiscreteMeasure::from_cloud(&cloud));
    let mass_e = mu.mass_of(&e_idx);
    bundle.timing("boundary_cloud", t0.elapsed().as_secs_f64());
    bundle.stage(
        "boundary_cloud",
        Verdict::Pass,
        format!(
            "{} points at h = {}, |E| = {}, mu(E) = {:.6}",
            cloud.len(),
            cfg.h,
            e_idx.len(),
            mass_e
        ),
    );

    let t0 = Instant::now();
    let tree = stage_try!(
        bundle,
        "cube_tree",
        build_cube_tree(&cloud, cfg.cubes.c0, cfg.cubes.depth)
    );
    let axioms = verify_cube_axioms(&tree);
    bundle.write_json("cube_tree.json", &tree.to_json())?;
    bundle.write_json(
        "cube_axioms.json",
        &json!({
            "partition_ok": axioms.partition_ok,
            "nesting_ok": axioms.nesting_ok,
            "sandwich_ok": axioms.sandwich_ok,
            "c1_achieved": axioms.c1_achieved,
            "witnesses": axioms.witnesses,
        }),
    )?;
    bundle.timing("cube_tree", t0.elapsed().as_secs_f64());
    if !axioms.all_ok() {
        bundle.stage(
            "cube_tree",
            Verdict::Fail,
            format!("cube axioms violated: {:?}", axioms.witnesses),
        );
        return Ok(());
    }
    bundle.stage(
        "cube_tree",
        Verdict::Pass,
        format!("depth {}, c1 = {:.4}", tree.depth, axioms.c1_achieved),
    );

    let t0 = Instant::now();
    let e_cloud = stage_try!(bundle, "doubling", subcloud(&cloud, &e_idx));
    let center = nearest_to_centroid(&e_cloud);
    let radius = e_cloud
        .iter_points()
        .map(|p| dist(p, &center))
        .fold(0.0f64, f64::max)
        .max(4.0 * cfg.h);
    let region = Ball {
        center: center.clone(),
        radius,
    };
    let scales: Vec<f64> = cfg
        .porosity
        .doubling_scales
        .iter()
        .map(|s| s * radius)
        .collect();
    let prof = stage_try!(
        bundle,
        "doubling",
        estimate_doubling(&mu, &cloud, &region, &scales)
    );
    bundle.write_json(
        "doubling.json",
        &json!({
            "c_mu": prof.c_mu,
            "beta0": prof.beta0,
            "skipped": prof.skipped,
            "region": region,
            "scales": scales,
        }),
    )?;
    bundle.timing("doubling", t0.elapsed().as_secs_f64());
    if prof.c_mu.is_finite() {
        bundle.stage(
            "doubling",
            Verdict::Pass,
            format!("C_mu = {:.4} over {} scales", prof.c_mu, scales.len()),
        );
    } else {
        bundle.stage(
            "doubling",
            Verdict::Indeterminate,
            "no scale pair carried mass on both balls",
        );
    }

    let t0 = Instant::now();
    let rr = match refine_set(&tree, &e_idx, &mu, &cfg.porosity.to_core()) {
        Ok(rr) => rr,
        Err(e) => {
            bundle.write_json("refinement.json", &json!({ "error": e.to_string() }))?;
            bundle.stage("refinement", Verdict::Fail, e.to_string());
            return Ok(());
        }
    };
    bundle.write_json("refinement.json", &rr.to_json())?;
    if emit_plots {
        let t_grid = [0.02, 0.03, 0.05, 0.08, 0.12, 0.2, 0.3, 0.5];
        let fit = stage_try!(bundle, "refinement", shell_decay(&tree, &mu, &t_grid));
        let rows: Vec<Vec<String>> = fit
            .envelope
            .iter()
            .map(|&(t, v)| vec![format!("{t}"), format!("{v}")])
            .collect();
        bundle.write_csv("shell_decay.csv", &["t", "sup_shell_ratio"], &rows)?;
        bundle.write_json(
            "shell_fit.json",
            &json!({
                "t0_hat": fit.t0_hat,
                "alpha_hat": fit.alpha_hat,
                "max_residual": fit.max_residual,
                "defined": fit.defined,
            }),
        )?;
    }
    let e_all: HashSet<usize> = e_idx.iter().copied().collect();
    let e_n: HashSet<usize> = rr.e_n.iter().copied().collect();
    let nested = rr.e_prime.iter().all(|i| e_n.contains(i)) && e_n.iter().all(|i| e_all.contains(i));
    let mass_ok = rr.mass_ratio + 1e-12 >= 1.0 - cfg.porosity.tau;
    bundle.timing("refinement", t0.elapsed().as_secs_f64());
    if !(nested && mass_ok) {
        bundle.stage(
            "refinement",
            Verdict::Fail,
            format!(
                "refinement invariants violated: nested = {nested}, mass ratio = {:.6}",
                rr.mass_ratio
            ),
        );
        return Ok(());
    }
    bundle.stage(
        "refinement",
        Verdict::Pass,
        format!(
            "|E'| = {}, mass ratio {:.4} >= {:.4}, N = {}, t = {}",
            rr.e_prime.len(),
            rr.mass_ratio,
            1.0 - cfg.porosity.tau,
            rr.n_bound,
            rr.t_used
        ),
    );

    let t0 = Instant::now();
    let e_prime_cloud = stage_try!(bundle, "sawtooth_inner", subcloud(&cloud, &rr.e_prime));
    stage_try!(
        bundle,
        "sawtooth_inner",
        e_prime_cloud.write_csv(&bundle.artifact_path("e_prime.csv"))
    );
    bundle.ingest_file("e_prime.csv")?;
    let (xi0, r0) = localization(cfg.sawtooth.xi0.clone(), cfg.sawtooth.r0, &e_prime_cloud);
    let forest = stage_try!(
        bundle,
        "sawtooth_inner",
        whitney_decompose(&domain, cfg.sawtooth.forest_k, &domain.bbox, cfg.sawtooth.n_min)
    );
    let inner = stage_try!(
        bundle,
        "sawtooth_inner",
        build_inner_sawtooth(
            &domain,
            &forest,
            &e_prime_cloud,
            cfg.sawtooth.c0_factor,
            cfg.sawtooth.c_tilde,
            cfg.sawtooth.lambda,
            &xi0,
            r0,
        )
    );
    bundle.write_json("sawtooth_inner.json", &inner.to_json())?;
    let loc = localization_constant(&inner).unwrap_or(f64::NAN);
    bundle.timing("sawtooth_inner", t0.elapsed().as_secs_f64());
    bundle.stage(
        "sawtooth_inner",
        Verdict::Pass,
        format!(
            "{} core cubes from a {}-cube forest, localization {:.3}",
            inner.cube_core.len(),
            forest.len(),
            loc
        ),
    );

    let t0 = Instant::now();
    let outer = stage_try!(
        bundle,
        "sawtooth_outer",
        build_outer_sawtooth(
            &domain,
            &e_prime_cloud,
            cfg.sawtooth.k_factor,
            cfg.sawtooth.lambda,
            cfg.sawtooth.n_min,
        )
    );
    bundle.write_json("sawtooth_outer.json", &outer.to_json())?;
    bundle.timing("sawtooth_outer", t0.elapsed().as_secs_f64());
    bundle.stage(
        "sawtooth_outer",
        Verdict::Pass,
        format!(
            "{} core cubes, {} truncated",
            outer.cube_core.len(),
            outer.truncated_core.len()
        ),
    );

    let env = EnvelopeInput {
        base: &domain,
        inner: &inner,
        outer: Some(&outer),
        e: &e_prime_cloud,
        tree: &tree,
        r0,
    };
    envelope_stages(cfg, bundle, &env)?;
    Ok(())
}

/// Shared tail of main-theorem and in-and-out: envelope checks, boundary
/// sums, regularity, and the harmonic-measure stages.
struct EnvelopeInput<'a> {
    base: &'a ImplicitDomain,
    inner: &'a SawtoothDomain,
    /// None when the outer envelope coincides with the base domain, as it
    /// does when E is the entire boundary; outer checks then collapse
    /// onto the base.
    outer: Option<&'a SawtoothDomain>,
    /// The traced boundary set (E' or the full input cloud).
    e: &'a PointCloud,
    tree: &'a CubeTree,
    r0: f64,
}

fn envelope_stages(
    cfg: &PipelineConfig,
    bundle: &mut ReportBundle,
    env: &EnvelopeInput,
) -> Result<bool> {
    let t0 = Instant::now();
    let n_samples = 20_000;
    let si = sandwich_check(env.inner, n_samples, splitmix64(cfg.seed, 801));
    let so = env
        .outer
        .map(|o| sandwich_check(o, n_samples, splitmix64(cfg.seed, 802)));
    bundle.write_json(
        "sandwich.json",
        &json!({
            "inner": {"checked": si.checked, "violations": si.violations, "witness": si.witness},
            "outer": so.as_ref().map(|s| json!({
                "checked": s.checked, "violations": s.violations, "witness": s.witness,
            })),
        }),
    )?;
    bundle.timing("sandwich", t0.elapsed().as_secs_f64());
    let outer_violations = so.as_ref().map_or(0, |s| s.violations);
    if si.violations + outer_violations > 0 {
        bundle.stage(
            "sandwich",
            Verdict::Fail,
            format!(
                "{} inner and {} outer inclusion violations",
                si.violations, outer_violations
            ),
        );
        return Ok(false);
    }
    bundle.stage(
        "sandwich",
        Verdict::Pass,
        format!("no violations in {} samples per side", n_samples),
    );

    let t0 = Instant::now();
    let ti = stage_try_flow!(bundle, "trace", check_trace(env.inner, env.e, cfg.h));
    let tb = match env.outer {
        Some(o) => Some(stage_try_flow!(bundle, "trace", check_trace(o, env.e, cfg.h))),
        None => None,
    };
    let trace_json = |t: &gmt_core::sawtooth::TraceReport| {
        json!({
            "ok": t.ok,
            "max_e_to_boundary": t.max_e_to_boundary,
            "max_boundary_to_e": t.max_boundary_to_e,
            "checked": t.checked,
            "witness": t.witness,
        })
    };
    bundle.write_json(
        "trace.json",
        &json!({
            "inner": trace_json(&ti),
            "outer": tb.as_ref().map(trace_json),
        }),
    )?;
    bundle.timing("trace", t0.elapsed().as_secs_f64());
    if !(ti.ok && tb.as_ref().is_none_or(|t| t.ok)) {
        bundle.stage(
            "trace",
            Verdict::Fail,
            format!(
                "inner ok = {}, outer ok = {:?}",
                ti.ok,
                tb.as_ref().map(|t| t.ok)
            ),
        );
        return Ok(false);
    }
    bundle.stage(
        "trace",
        Verdict::Pass,
        format!(
            "max offset {:.2e} within 2h",
            tb.as_ref().map_or(0.0f64, |t| {
                t.max_e_to_boundary.max(t.max_boundary_to_e)
            })
            .max(ti.max_e_to_boundary.max(ti.max_boundary_to_e))
        ),
    );

    let t0 = Instant::now();
    let centers = pick_evenly_points(env.e, 8);
    let radii: Vec<f64> = (1..=6).map(|k| env.r0 * 0.5f64.powi(k)).collect();
    let swi = stage_try_flow!(
        bundle,
        "boundary_sums",
        boundary_sum_sweep(env.inner, &centers, &radii)
    );
    let swo = match env.outer {
        Some(o) => Some(stage_try_flow!(
            bundle,
            "boundary_sums",
            boundary_sum_sweep(o, &centers, &radii)
        )),
        None => None,
    };
    write_sweep_csv(bundle, "boundary_sums_inner.csv", &swi)?;
    if let Some(s) = &swo {
        write_sweep_csv(bundle, "boundary_sums_outer.csv", s)?;
    }
    bundle.write_json(
        "boundary_sums.json",
        &json!({
            "inner_sup_ratio": swi.sup_ratio,
            "outer_sup_ratio": swo.as_ref().map(|s| s.sup_ratio),
            "max_truncated_tail": swo
                .as_ref()
                .map_or(0.0f64, |s| s.max_truncated_tail)
                .max(swi.max_truncated_tail),
        }),
    )?;
    bundle.timing("boundary_sums", t0.elapsed().as_secs_f64());
    if !(swi.sup_ratio.is_finite() && swo.as_ref().is_none_or(|s| s.sup_ratio.is_finite())) {
        bundle.stage("boundary_sums", Verdict::Fail, "packing ratio diverged");
        return Ok(false);
    }
    bundle.stage(
        "boundary_sums",
        Verdict::Pass,
        match &swo {
            Some(s) => format!(
                "sup sum/r^d = {:.4} (inner), {:.4} (outer)",
                swi.sup_ratio, s.sup_ratio
            ),
            None => format!("sup sum/r^d = {:.4} (inner)", swi.sup_ratio),
        },
    );

    let t0 = Instant::now();
    // Balls below about three mesh widths may miss every surface sample;
    // probe regularity at the resolvable radii only.
    let radii_reg: Vec<f64> = {
        let kept: Vec<f64> = radii
            .iter()
            .copied()
            .filter(|&r| r >= 3.0 * cfg.h)
            .collect();
        if kept.is_empty() {
            vec![4.0 * cfg.h, 8.0 * cfg.h]
        } else {
            kept
        }
    };
    let surf_i = stage_try_flow!(
        bundle,
        "regularity",
        sample_boundary(&env.inner.as_implicit(), cfg.h)
    );
    // Without a distinct outer envelope the outer boundary is E itself.
    let surf_o = match env.outer {
        Some(o) => stage_try_flow!(
            bundle,
            "regularity",
            sample_boundary(&o.as_implicit(), cfg.h)
        ),
        None => env.e.clone(),
    };
    let rp_i = stage_try_flow!(
        bundle,
        "regularity",
        regularity_profile(&surf_i, &radii_reg, &centers)
    );
    let rp_o = stage_try_flow!(
        bundle,
        "regularity",
        regularity_profile(&surf_o, &radii_reg, &centers)
    );
    bundle.write_json(
        "regularity.json",
        &json!({
            "radii": radii_reg,
            "inner": {"a_upper": rp_i.a_upper, "a_lower": rp_i.a_lower, "d": rp_i.d,
                      "zero_mass": rp_i.zero_mass.len()},
            "outer": {"a_upper": rp_o.a_upper, "a_lower": rp_o.a_lower, "d": rp_o.d,
                      "zero_mass": rp_o.zero_mass.len()},
        }),
    )?;
    bundle.timing("regularity", t0.elapsed().as_secs_f64());
    let reg_ok = rp_i.a_upper.is_finite()
        && rp_i.a_lower.is_finite()
        && rp_o.a_upper.is_finite()
        && rp_o.a_lower.is_finite();
    if !reg_ok {
        bundle.stage(
            "regularity",
            Verdict::Fail,
            format!(
                "{} inner and {} outer zero-mass balls",
                rp_i.zero_mass.len(),
                rp_o.zero_mass.len()
            ),
        );
        return Ok(false);
    }
    bundle.stage(
        "regularity",
        Verdict::Pass,
        format!(
            "A_upper/A_lower = {:.3}/{:.3} (inner), {:.3}/{:.3} (outer)",
            rp_i.a_upper, rp_i.a_lower, rp_o.a_upper, rp_o.a_lower
        ),
    );

    let t0 = Instant::now();
    let z0 = cfg
        .wos
        .z0
        .clone()
        .unwrap_or_else(|| interior_pole(env.inner));
    let n_chunks = cfg.wos.n_f_sets.min(env.e.len()).max(1);
    let chunks = chunk_points(env.e, n_chunks);
    let tol = 2.0 * cfg.h;
    let sets: Vec<Box<Indicator<'static>>> = chunks
        .iter()
        .map(|pts| {
            let ps = PointSet::build(pts.clone());
            Box::new(move |x: &[f64]| ps.dist_to(x) <= tol) as Box<Indicator<'static>>
        })
        .collect();
    let refs: Vec<&Indicator> = sets.iter().map(|b| b.as_ref()).collect();
    let inner_impl = env.inner.as_implicit();
    let mut s_in = WosSettings::for_domain(&inner_impl);
    s_in.eps_shell = s_in.eps_shell.min(env.inner.min_cube_side() / 32.0);
    let s_base = WosSettings::for_domain(env.base);
    let est_i = stage_try_flow!(
        bundle,
        "wos_sandwich",
        harmonic_measure_batch_with(
            &inner_impl,
            &z0,
            &refs,
            cfg.wos.n_walks,
            splitmix64(cfg.seed, 120),
            &s_in
        )
    );
    let est_b = stage_try_flow!(
        bundle,
        "wos_sandwich",
        harmonic_measure_batch_with(
            env.base,
            &z0,
            &refs,
            cfg.wos.n_walks,
            splitmix64(cfg.seed, 121),
            &s_base
        )
    );
    let est_o = match env.outer {
        Some(o) => {
            let outer_impl = o.as_implicit();
            let mut s_out = WosSettings::for_domain(&outer_impl);
            s_out.eps_shell = s_out.eps_shell.min(o.min_cube_side() / 32.0);
            Some(stage_try_flow!(
                bundle,
                "wos_sandwich",
                harmonic_measure_batch_with(
                    &outer_impl,
                    &z0,
                    &refs,
                    cfg.wos.n_walks,
                    splitmix64(cfg.seed, 122),
                    &s_out
                )
            ))
        }
        None => None,
    };
    let mut rows = Vec::new();
    let mut violations = 0usize;
    for k in 0..chunks.len() {
        let lo_margin = est_b[k].value - est_i[k].value;
        let lo_sigma = (est_b[k].std_err.powi(2) + est_i[k].std_err.powi(2)).sqrt();
        let hi = est_o.as_ref().map(|eo| {
            (
                eo[k].value - est_b[k].value,
                (eo[k].std_err.powi(2) + est_b[k].std_err.powi(2)).sqrt(),
            )
        });
        let ok = lo_margin + 3.0 * lo_sigma >= 0.0
            && hi.is_none_or(|(m, s)| m + 3.0 * s >= 0.0);
        if !ok {
            violations += 1;
        }
        rows.push(json!({
            "chunk": k,
            "n_points": chunks[k].len(),
            "omega_inner": est_i[k].value,
            "se_inner": est_i[k].std_err,
            "omega_base": est_b[k].value,
            "se_base": est_b[k].std_err,
            "omega_outer": est_o.as_ref().map(|eo| eo[k].value),
            "se_outer": est_o.as_ref().map(|eo| eo[k].std_err),
            "ok": ok,
        }));
    }
    bundle.write_json(
        "wos_sandwich.json",
        &json!({
            "z0": z0,
            "n_walks": cfg.wos.n_walks,
            "rows": rows,
            "violations": violations,
        }),
    )?;
    bundle.timing("wos_sandwich", t0.elapsed().as_secs_f64());
    if violations > 0 {
        bundle.stage(
            "wos_sandwich",
            Verdict::Fail,
            format!("{violations} of {} sets broke the sandwich beyond 3 sigma", chunks.len()),
        );
        return Ok(false);
    }
    bundle.stage(
        "wos_sandwich",
        Verdict::Pass,
        format!(
            "omega_inner <= omega <= omega_outer on {} sets within 3 sigma",
            chunks.len()
        ),
    );

    let t0 = Instant::now();
    let centers_a = pick_evenly_points(env.e, 4);
    let level = cfg.wos.ainfty_level.min(env.tree.depth.saturating_sub(1));
    let scatter = stage_try_flow!(
        bundle,
        "ainfty",
        ainfty_scatter(
            env.base,
            env.tree,
            level,
            &centers_a,
            &cfg.wos.ainfty_radii,
            &z0,
            cfg.h,
            cfg.wos.n_walks,
            splitmix64(cfg.seed, 130),
            &cfg.wos.eps_grid,
        )
    );
    let (header, rows) = scatter_csv(&scatter, env.base.dim);
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    bundle.write_csv("ainfty.csv", &header_refs, &rows)?;
    bundle.write_json(
        "ainfty_moduli.json",
        &json!({
            "moduli": scatter.moduli,
            "dropped": scatter.dropped,
            "rows": scatter.rows.len(),
        }),
    )?;
    bundle.timing("ainfty", t0.elapsed().as_secs_f64());
    let mut any_none = scatter.moduli.is_empty();
    let mut any_zero = false;
    for m in &scatter.moduli {
        match (m.delta_measure_to_content, m.delta_content_to_measure) {
            (Some(a), Some(b)) => any_zero = any_zero || a <= 0.0 || b <= 0.0,
            _ => any_none = true,
        }
    }
    if any_zero {
        bundle.stage(
            "ainfty",
            Verdict::Fail,
            "a modulus collapsed to zero: measure and content decouple",
        );
        return Ok(false);
    }
    if any_none {
        bundle.stage(
            "ainfty",
            Verdict::Indeterminate,
            "some thresholds had no qualifying scatter rows",
        );
        return Ok(true);
    }
    bundle.stage(
        "ainfty",
        Verdict::Pass,
        format!(
            "both moduli positive at {} thresholds ({} rows)",
            scatter.moduli.len(),
            scatter.rows.len()
        ),
    );
    Ok(true)
}

fn in_and_out(cfg: &PipelineConfig, bundle: &mut ReportBundle, emit_plots: bool) -> Result<()> {
    let path = cfg.cloud.as_ref().expect("validated: in-and-out has a cloud");
    let t0 = Instant::now();
    let cloud = stage_try!(bundle, "input_cloud", PointCloud::read_csv(Path::new(path)));
    if cloud.dim() < 2 {
        bundle.stage(
            "input_cloud",
            Verdict::Fail,
            "ambient dimension must be at least 2",
        );
        return Ok(());
    }
    let raw = stage_try!(
        bundle,
        "input_cloud",
        fs::read(path).map_err(gmt_core::GmtError::Io)
    );
    bundle.write_bytes("input_cloud.csv", &raw)?;
    bundle.timing("input_cloud", t0.elapsed().as_secs_f64());
    bundle.stage(
        "input_cloud",
        Verdict::Pass,
        format!(
            "{} points in R^{}, mass {:.6}",
            cloud.len(),
            cloud.dim(),
            cloud.total_weight()
        ),
    );

    let t0 = Instant::now();
    let xi0 = cfg
        .beta
        .xi0
        .clone()
        .unwrap_or_else(|| nearest_to_centroid(&cloud));
    let diam = cloud_diameter(&cloud);
    let r0 = cfg.beta.r0.unwrap_or(0.5 * diam).max(f64::MIN_POSITIVE);
    let d = cfg.beta.d.unwrap_or(cloud.dim() - 1);
    let mut ladder = Vec::new();
    for k in 0..cfg.beta.levels.max(1) {
        let j_max = cfg.beta.j_base + k;
        let net_h = r0 * 0.5f64.powi(j_max as i32);
        let rep = stage_try!(
            bundle,
            "beta_energy",
            beta::carleson_energy(&cloud, &xi0, r0, cfg.beta.epsilon, j_max, net_h, d)
        );
        ladder.push(rep);
    }
    bundle.write_json(
        "beta_energy.json",
        &json!({
            "epsilon": cfg.beta.epsilon,
            "xi0": xi0,
            "r0": r0,
            "d": d,
            "levels": ladder
                .iter()
                .map(|rep| json!({
                    "j_max": rep.scales.len() - 1,
                    "net_h": rep.net_h,
                    "n_centers": rep.n_centers,
                    "bad_counts": rep.bad_counts,
                    "estimate": rep.estimate,
                    "c_ur_emp": rep.c_ur_emp,
                }))
                .collect::<Vec<_>>(),
        }),
    )?;
    if emit_plots {
        let centers = pick_evenly_points(&cloud, 16);
        let scales: Vec<f64> = (0..=cfg.beta.j_base + cfg.beta.levels)
            .map(|j| r0 * 0.5f64.powi(j as i32))
            .collect();
        let records = stage_try!(
            bundle,
            "beta_energy",
            beta::bbeta_sweep(&cloud, &centers, &scales)
        );
        stage_try!(
            bundle,
            "beta_energy",
            beta::write_beta_csv(&records, &bundle.artifact_path("beta_records.csv"))
        );
        bundle.ingest_file("beta_records.csv")?;
    }
    // Self-similar clouds make the ladder oscillate log-periodically, so
    // growth is judged first-to-last rather than on consecutive steps.
    let vals: Vec<f64> = ladder.iter().map(|rep| rep.c_ur_emp).collect();
    let last = *vals.last().expect("nonempty ladder");
    let growing = vals.len() >= 2
        && last > 0.0
        && last > cfg.beta.growth_margin.powi(vals.len() as i32 - 1) * vals[0];
    bundle.timing("beta_energy", t0.elapsed().as_secs_f64());
    let ladder_str = vals
        .iter()
        .map(|v| format!("{v:.4}"))
        .collect::<Vec<_>>()
        .join(" -> ");
    if growing {
        bundle.stage(
            "beta_energy",
            Verdict::Fail,
            format!("flatness energy grows under refinement ({ladder_str}); cloud reads as non-flat"),
        );
        return Ok(());
    }
    bundle.stage(
        "beta_energy",
        Verdict::Pass,
        format!("flatness energy stable under refinement ({ladder_str})"),
    );

    let t0 = Instant::now();
    let tree = stage_try!(
        bundle,
        "cube_tree",
        build_cube_tree(&cloud, cfg.cubes.c0, cfg.cubes.depth)
    );
    let axioms = verify_cube_axioms(&tree);
    bundle.write_json("cube_tree.json", &tree.to_json())?;
    bundle.timing("cube_tree", t0.elapsed().as_secs_f64());
    if !axioms.all_ok() {
        bundle.stage(
            "cube_tree",
            Verdict::Fail,
            format!("cube axioms violated: {:?}", axioms.witnesses),
        );
        return Ok(());
    }
    bundle.stage(
        "cube_tree",
        Verdict::Pass,
        format!("depth {}, c1 = {:.4}", tree.depth, axioms.c1_achieved),
    );

    let t0 = Instant::now();
    let pad = (0.75 * diam).max(1.0);
    let bb = points_aabb(&cloud).inflate(pad);
    let comp = stage_try!(
        bundle,
        "sawtooth_outer",
        complement_of_points(cloud.to_vecs(), bb)
    );
    bundle.write_json(
        "domain.json",
        &json!({
            "name": comp.name,
            "dim": comp.dim,
            "bbox": comp.bbox,
        }),
    )?;
    // The cloud is the entire boundary here, so every superdomain of the
    // complement agrees with it up to measure zero: the outer envelope is
    // the base domain itself and the outer checks collapse onto it.
    bundle.write_json(
        "sawtooth_outer.json",
        &json!({
            "kind": "outer",
            "coincides_with_base": true,
        }),
    )?;
    bundle.timing("sawtooth_outer", t0.elapsed().as_secs_f64());
    bundle.stage(
        "sawtooth_outer",
        Verdict::Pass,
        "coincides with the base domain: E is the entire boundary",
    );

    let t0 = Instant::now();
    let (xi0_s, r0_s) = localization(cfg.sawtooth.xi0.clone(), cfg.sawtooth.r0, &cloud);
    let forest = stage_try!(
        bundle,
        "sawtooth_inner",
        whitney_decompose(&comp, cfg.sawtooth.forest_k, &comp.bbox, cfg.sawtooth.n_min)
    );
    let inner = stage_try!(
        bundle,
        "sawtooth_inner",
        build_inner_sawtooth(
            &comp,
            &forest,
            &cloud,
            cfg.sawtooth.c0_factor,
            cfg.sawtooth.c_tilde,
            cfg.sawtooth.lambda,
            &xi0_s,
            r0_s,
        )
    );
    bundle.write_json("sawtooth_inner.json", &inner.to_json())?;
    bundle.timing("sawtooth_inner", t0.elapsed().as_secs_f64());
    bundle.stage(
        "sawtooth_inner",
        Verdict::Pass,
        format!(
            "{} core cubes from a {}-cube forest",
            inner.cube_core.len(),
            forest.len()
        ),
    );

    let env = EnvelopeInput {
        base: &comp,
        inner: &inner,
        outer: None,
        e: &cloud,
        tree: &tree,
        r0: r0_s,
    };
    envelope_stages(cfg, bundle, &env)?;
    Ok(())
}

fn verify_nta(cfg: &PipelineConfig, bundle: &mut ReportBundle) -> Result<()> {
    let spec = cfg.domain.as_ref().expect("validated: verify-nta has a domain");
    let t0 = Instant::now();
    let domain = stage_try!(bundle, "domain", gallery_domain(spec));
    bundle.write_json(
        "domain.json",
        &json!({
            "name": domain.name,
            "dim": domain.dim,
            "bbox": domain.bbox,
            "diam_boundary": domain.diam_boundary,
        }),
    )?;
    bundle.timing("domain", t0.elapsed().as_secs_f64());
    bundle.stage(
        "domain",
        Verdict::Pass,
        format!("{} in R^{}", domain.name, domain.dim),
    );

    let t0 = Instant::now();
    let cloud = stage_try!(bundle, "corkscrew", sample_boundary(&domain, cfg.h));
    let centers = pick_evenly_points(&cloud, cfg.nta.n_centers);
    let dim = domain.dim;
    let mut header: Vec<String> = (0..dim).map(|k| format!("xi{k}")).collect();
    header.extend(["r", "side", "found"].map(String::from));
    header.extend((0..dim).map(|k| format!("ball{k}")));
    header.push("ball_radius".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut missing: Option<String> = None;
    for xi in &centers {
        for &r in &cfg.nta.radii {
            for (side, label) in [
                (CorkscrewSide::Interior, "interior"),
                (CorkscrewSide::Exterior, "exterior"),
            ] {
                let found = stage_try!(
                    bundle,
                    "corkscrew",
                    find_corkscrew(&domain, xi, r, side, cfg.nta.c_factor)
                );
                let mut row: Vec<String> = xi.iter().map(|v| format!("{v}")).collect();
                row.push(format!("{r}"));
                row.push(label.to_string());
                row.push(format!("{}", found.is_some()));
                match &found {
                    Some(ball) => {
                        row.extend(ball.center.iter().map(|v| format!("{v}")));
                        row.push(format!("{}", ball.radius));
                    }
                    None => {
                        row.extend((0..=dim).map(|_| String::new()));
                    }
                }
                rows.push(row);
                if found.is_none() && missing.is_none() {
                    missing = Some(format!(
                        "no {label} corkscrew at xi = {}, r = {r}",
                        fmt_point(xi)
                    ));
                }
            }
        }
    }
    bundle.write_csv("corkscrew.csv", &header_refs, &rows)?;
    bundle.timing("corkscrew", t0.elapsed().as_secs_f64());
    if let Some(witness) = missing {
        bundle.stage("corkscrew", Verdict::Fail, witness);
        return Ok(());
    }
    bundle.stage(
        "corkscrew",
        Verdict::Pass,
        format!("{} probes satisfied", rows.len()),
    );

    let t0 = Instant::now();
    let forest = stage_try!(
        bundle,
        "uniformity",
        whitney_decompose(&domain, cfg.nta.forest_k, &domain.bbox, cfg.nta.n_min)
    );
    if forest.len() < 2 {
        bundle.stage(
            "uniformity",
            Verdict::Indeterminate,
            format!("forest of {} cubes is too small for a fit", forest.len()),
        );
        return Ok(());
    }
    let mut pairs = Vec::new();
    let len = forest.len() as u64;
    for i in 0..cfg.nta.n_pairs as u64 {
        let a = (splitmix64(cfg.seed, 900 + 2 * i) % len) as usize;
        let b = (splitmix64(cfg.seed, 901 + 2 * i) % len) as usize;
        if a != b {
            pairs.push((a, b));
        }
    }
    if pairs.is_empty() {
        bundle.stage("uniformity", Verdict::Indeterminate, "no usable cube pairs");
        return Ok(());
    }
    let fit = stage_try!(bundle, "uniformity", fit_uniformity(&forest, &pairs));
    bundle.write_json("uniformity.json", &fit)?;
    bundle.timing("uniformity", t0.elapsed().as_secs_f64());
    if fit.consistent {
        bundle.stage(
            "uniformity",
            Verdict::Pass,
            format!(
                "envelope slope {:.3} consistent over {} pairs",
                fit.slope,
                pairs.len()
            ),
        );
    } else {
        bundle.stage(
            "uniformity",
            Verdict::Fail,
            format!(
                "envelope inconsistent: slope {:.3}, residual {:.3}",
                fit.slope, fit.max_residual
            ),
        );
    }
    Ok(())
}

fn write_sweep_csv(bundle: &mut ReportBundle, name: &str, sweep: &SweepReport) -> Result<()> {
    let (header, rows) = sweep_csv(sweep);
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    bundle.write_csv(name, &header_refs, &rows)
}

/// Boundary-sum sweep as CSV header and rows.
pub fn sweep_csv(sweep: &SweepReport) -> (Vec<String>, Vec<Vec<String>>) {
    let dim = sweep.rows.first().map_or(0, |row| row.xi.len());
    let mut header: Vec<String> = (0..dim).map(|k| format!("xi{k}")).collect();
    header.extend(["r", "sum", "sum_over_r_d", "truncated_tail", "clipped"].map(String::from));
    let rows: Vec<Vec<String>> = sweep
        .rows
        .iter()
        .map(|row| {
            let mut out: Vec<String> = row.xi.iter().map(|v| format!("{v}")).collect();
            out.push(format!("{}", row.r));
            out.push(format!("{}", row.sum_d));
            out.push(format!("{}", row.ratio));
            out.push(format!("{}", row.truncated_tail));
            out.push(format!("{}", row.clipped));
            out
        })
        .collect();
    (header, rows)
}

/// Measure-versus-content scatter as CSV header and rows.
pub fn scatter_csv(
    scatter: &gmt_core::wos::AinftyScatter,
    dim: usize,
) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = (0..dim).map(|k| format!("xi{k}")).collect();
    header.extend(
        [
            "r",
            "cube_level",
            "cube_idx",
            "omega_f",
            "se_f",
            "omega_ball",
            "se_ball",
            "omega_ratio",
            "hd_ratio",
        ]
        .map(String::from),
    );
    let rows: Vec<Vec<String>> = scatter
        .rows
        .iter()
        .map(|row| {
            let mut out: Vec<String> = row.xi.iter().map(|v| format!("{v}")).collect();
            out.push(format!("{}", row.r));
            out.push(format!("{}", row.cube.level));
            out.push(format!("{}", row.cube.idx));
            out.push(format!("{}", row.omega_f));
            out.push(format!("{}", row.se_f));
            out.push(format!("{}", row.omega_ball));
            out.push(format!("{}", row.se_ball));
            out.push(format!("{}", row.omega_ratio));
            out.push(format!("{}", row.hd_ratio));
            out
        })
        .collect();
    (header, rows)
}

/// Picks E out of the sampled boundary cloud.
fn carve_e(cloud: &PointCloud, sel: &SetSelect) -> Result<Vec<usize>> {
    match sel {
        SetSelect::All => Ok((0..cloud.len()).collect()),
        SetSelect::Indices { path } => {
            let mut idx = PipelineConfig::read_indices(path)?;
            idx.sort_unstable();
            idx.dedup();
            if let Some(&bad) = idx.iter().find(|&&i| i >= cloud.len()) {
                return Err(invalid_input!(
                    "E index {bad} is out of range ({} cloud points)",
                    cloud.len()
                ));
            }
            Ok(idx)
        }
        SetSelect::InBox { lo, hi } => {
            if lo.len() != cloud.dim() || hi.len() != cloud.dim() {
                return Err(invalid_input!(
                    "E box dimension {} does not match the cloud ({})",
                    lo.len(),
                    cloud.dim()
                ));
            }
            Ok((0..cloud.len())
                .filter(|&i| {
                    cloud
                        .point(i)
                        .iter()
                        .zip(lo)
                        .zip(hi)
                        .all(|((x, l), h)| x >= l && x <= h)
                })
                .collect())
        }
    }
}

fn subcloud(cloud: &PointCloud, idx: &[usize]) -> Result<PointCloud> {
    let pts: Vec<Vec<f64>> = idx.iter().map(|&i| cloud.point(i).to_vec()).collect();
    let w: Vec<f64> = idx.iter().map(|&i| cloud.weight(i)).collect();
    PointCloud::from_points(&pts, w)
}

fn centroid(cloud: &PointCloud) -> Vec<f64> {
    let dim = cloud.dim();
    let mut c = vec![0.0; dim];
    for p in cloud.iter_points() {
        for k in 0..dim {
            c[k] += p[k];
        }
    }
    let n = cloud.len() as f64;
    c.iter_mut().for_each(|v| *v /= n);
    c
}

pub fn nearest_to_centroid(cloud: &PointCloud) -> Vec<f64> {
    let c = centroid(cloud);
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, p) in cloud.iter_points().enumerate() {
        let d = dist(p, &c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    cloud.point(best).to_vec()
}

/// At most n points taken at an even index stride.
pub fn pick_evenly_points(cloud: &PointCloud, n: usize) -> Vec<Vec<f64>> {
    let len = cloud.len();
    let n = n.min(len).max(1);
    let stride = len / n;
    (0..n)
        .map(|k| cloud.point((k * stride).min(len - 1)).to_vec())
        .collect()
}

/// Contiguous chunks of the cloud's points in lexicographic order.
fn chunk_points(cloud: &PointCloud, n: usize) -> Vec<Vec<Vec<f64>>> {
    let mut pts = cloud.to_vecs();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    let size = pts.len().div_ceil(n.max(1));
    pts.chunks(size.max(1)).map(|c| c.to_vec()).collect()
}

/// Localization ball for the inner sawtooth: the given values, or the
/// E point nearest the centroid with a radius just covering E.
pub fn localization(xi0: Option<Vec<f64>>, r0: Option<f64>, e: &PointCloud) -> (Vec<f64>, f64) {
    let xi0 = xi0.unwrap_or_else(|| nearest_to_centroid(e));
    let r0 = r0.unwrap_or_else(|| {
        let worst = e
            .iter_points()
            .map(|p| dist(p, &xi0))
            .fold(0.0f64, f64::max);
        (1.05 * worst).max(1e-6)
    });
    (xi0, r0)
}

/// A point strictly inside the inner sawtooth (and so inside the base
/// and outer domains): the center of the largest core cube.
fn interior_pole(inner: &SawtoothDomain) -> Vec<f64> {
    inner
        .cube_core
        .iter()
        .max_by(|a, b| a.side().partial_cmp(&b.side()).expect("finite sides"))
        .map(|q| q.center())
        .unwrap_or_else(|| inner.params.xi0.clone())
}

fn points_aabb(cloud: &PointCloud) -> Aabb {
    let dim = cloud.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in cloud.iter_points() {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    Aabb::new(lo, hi)
}

fn cloud_diameter(cloud: &PointCloud) -> f64 {
    let bb = points_aabb(cloud);
    dist(&bb.lo, &bb.hi).max(f64::MIN_POSITIVE)
}

fn fmt_point(p: &[f64]) -> String {
    let inner: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
    format!("[{}]", inner.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_cloud(n: usize) -> PointCloud {
        let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64, 0.0]).collect();
        PointCloud::from_points(&pts, vec![1.0 / n as f64; n]).unwrap()
    }

    #[test]
    fn chunks_cover_the_cloud_in_order() {
        let cloud = line_cloud(10);
        let chunks = chunk_points(&cloud, 3);
        let total: usize = chunks.iter().map(|c| c.len()).sum();
        assert_eq!(total, 10);
        assert!(chunks.len() <= 3);
        // Lexicographic order means chunk maxima increase.
        let maxima: Vec<f64> = chunks.iter().map(|c| c.last().unwrap()[0]).collect();
        assert!(maxima.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn carve_in_box_selects_the_segment() {
        let cloud = line_cloud(32);
        let sel = SetSelect::InBox {
            lo: vec![0.25, -0.1],
            hi: vec![0.5, 0.1],
        };
        let idx = carve_e(&cloud, &sel).unwrap();
        assert!(!idx.is_empty());
        for &i in &idx {
            let x = cloud.point(i)[0];
            assert!((0.25..=0.5).contains(&x));
        }
    }

    #[test]
    fn localization_covers_the_set() {
        let cloud = line_cloud(16);
        let (xi0, r0) = localization(None, None, &cloud);
        for p in cloud.iter_points() {
            assert!(dist(p, &xi0) <= r0);
        }
    }
}
