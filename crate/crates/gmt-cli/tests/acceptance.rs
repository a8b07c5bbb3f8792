//! Release acceptance suite: fifteen checks, one per gate criterion.
//!
//! Every test prints a single `criterion NN <name>: pass (...)` line with
//! its measured figures (visible under --nocapture; the harness result line
//! is the pass/fail signal). Grids, seeds, and tolerances are pinned as
//! constants so a run either reproduces the recorded behavior or fails.
//! A shared gate serializes the tests: several assert wall-clock budgets
//! and all of them lean on rayon, so they must not compete for cores.

use std::collections::{BTreeSet, HashSet};
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gmt_core::beta::{bbeta, carleson_energy};
use gmt_core::bvh::PointSet;
use gmt_core::cloud::sample_boundary;
use gmt_core::cubetree::{build_cube_tree, verify_cube_axioms, CubeTree};
use gmt_core::domain::gallery_by_name;
use gmt_core::error::GmtError;
use gmt_core::geom::dist;
use gmt_core::porosity::{
    carleson_norm, porous_cubes, refine_set, shell_decay, PorosityConfig, RefinementResult,
};
use gmt_core::sawtooth::{
    boundary_sum_sweep, build_inner_sawtooth, build_outer_sawtooth, check_trace,
    regularity_profile, sandwich_check, SawtoothDomain,
};
use gmt_core::util::splitmix64;
use gmt_core::whitney::whitney_decompose;
use gmt_core::wos::{
    ainfty_scatter, disk_poisson_arc_mass, doubling_profile_omega, halfplane_interval_mass,
    harmonic_measure_batch_with, harmonic_measure_with, Indicator, WosSettings,
};
use gmt_core::{Aabb, DiscreteMeasure, ImplicitDomain, PointCloud, WhitneyForest};
use gmt_cli::pipeline::{localization, nearest_to_centroid, pick_evenly_points};

/// Common seed; every stochastic check derives its stream from it.
const SEED: u64 = 42;
/// Statistical acceptance band, in standard errors.
const SIGMA: f64 = 3.0;
/// Relative band for quantities compared across mesh refinement.
const MESH_BAND: f64 = 0.25;
/// Shell width for Monte Carlo exits: 2^-15.
const EPS_SHELL: f64 = 0.000030517578125;
/// Shell widths tried by the refinement, largest first.
const T_LADDER: [f64; 7] = [0.02, 0.01, 0.005, 0.0025, 0.00125, 0.000625, 0.0003125];

static GATE: Mutex<()> = Mutex::new(());

/// Serializes the suite; a poisoned lock (earlier test failed) still runs.
fn gate() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn max_abs(a: f64, b: f64) -> f64 {
    a.abs().max(b.abs())
}

/// |a - b| within the mesh band of their magnitude.
fn mesh_stable(a: f64, b: f64) -> bool {
    (a - b).abs() <= MESH_BAND * max_abs(a, b)
}

/// n equally spaced points on the unit circle carrying arclength mass.
fn circle_cloud(n: usize) -> PointCloud {
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / n as f64;
            vec![th.cos(), th.sin()]
        })
        .collect();
    PointCloud::uniform(&pts, 2.0 * PI).expect("circle cloud")
}

fn standard_porosity(tau: f64, t: f64) -> PorosityConfig {
    PorosityConfig {
        m_factor: 2.0,
        delta: 0.05,
        beta: 2.1,
        tau,
        t,
        rho: 0.01,
    }
}

/// Refines E stepping the shell width down the ladder until the mass
/// budget holds; a small enough width always exists because shells thinner
/// than the point spacing are empty.
fn refine_with_budget(
    tree: &CubeTree,
    e_idx: &[usize],
    mu: &DiscreteMeasure,
    tau: f64,
) -> (RefinementResult, f64) {
    for &t in &T_LADDER {
        match refine_set(tree, e_idx, mu, &standard_porosity(tau, t)) {
            Ok(r) => return (r, t),
            Err(GmtError::RefinementShortfall { .. }) => continue,
            Err(e) => panic!("refinement failed: {e}"),
        }
    }
    panic!("no shell width in the ladder met the tau = {tau} budget");
}

/// One fully built boundary study: sampled boundary, cube tree, refined
/// set, and the two sawtooth domains over it.
struct BoundaryCase {
    domain: ImplicitDomain,
    boundary: PointCloud,
    mu: DiscreteMeasure,
    tree: CubeTree,
    e_idx: Vec<usize>,
    e_prime_idx: Vec<usize>,
    e_prime: PointCloud,
    inner: SawtoothDomain,
    outer: SawtoothDomain,
    xi0: Vec<f64>,
    r0: f64,
    h: f64,
}

fn boundary_case(
    domain: ImplicitDomain,
    pick_e: &dyn Fn(&[f64]) -> bool,
    h: f64,
    n_min: i32,
) -> BoundaryCase {
    let boundary = sample_boundary(&domain, h).expect("boundary cloud");
    let mu = DiscreteMeasure::from_cloud(&boundary).expect("boundary measure");
    let tree = build_cube_tree(&boundary, 0.25, 4).expect("cube tree");
    let e_idx: Vec<usize> = (0..boundary.len())
        .filter(|&i| pick_e(boundary.point(i)))
        .collect();
    let (refined, _) = refine_with_budget(&tree, &e_idx, &mu, 0.1);
    let pts: Vec<Vec<f64>> = refined
        .e_prime
        .iter()
        .map(|&i| boundary.point(i).to_vec())
        .collect();
    let weights: Vec<f64> = refined.e_prime.iter().map(|&i| boundary.weight(i)).collect();
    let e_prime = PointCloud::from_points(&pts, weights).expect("refined cloud");
    let (xi0, r0) = localization(None, None, &e_prime);
    let forest = whitney_decompose(&domain, 4.0, &domain.bbox.clone(), n_min).expect("forest");
    let inner = build_inner_sawtooth(&domain, &forest, &e_prime, 7.0, 8, 1.125, &xi0, r0)
        .expect("inner sawtooth");
    let outer =
        build_outer_sawtooth(&domain, &e_prime, 12.0, 1.125, n_min).expect("outer sawtooth");
    BoundaryCase {
        domain,
        boundary,
        mu,
        tree,
        e_idx,
        e_prime_idx: refined.e_prime,
        e_prime,
        inner,
        outer,
        xi0,
        r0,
        h,
    }
}

/// Upper half plane with E the unit boundary segment [0,1] x {0}.
fn half_plane_case(h: f64, n_min: i32) -> BoundaryCase {
    let domain = gallery_by_name("half_space", "").expect("half_space");
    boundary_case(domain, &|p| (0.0..=1.0).contains(&p[0]), h, n_min)
}

/// Unit disk with E the boundary arc |theta| <= pi/4.
fn disk_case(h: f64, n_min: i32) -> BoundaryCase {
    let domain = gallery_by_name("ball", "").expect("ball");
    boundary_case(domain, &|p| p[1].atan2(p[0]).abs() <= PI / 4.0, h, n_min)
}

/// Center of the largest core cube: an interior point of the sawtooth,
/// its base, and any domain containing the base.
fn interior_pole(saw: &SawtoothDomain) -> Vec<f64> {
    saw.cube_core
        .iter()
        .max_by(|a, b| a.side().total_cmp(&b.side()))
        .expect("nonempty core")
        .center()
}

// --- criterion 1: Whitney forests against a brute-force oracle ----------

/// Enumerates the maximal accepted dyadic cubes of a search box by the
/// same top-down rule the decomposition uses, with `accept` an exact
/// integer predicate for "the K-dilate misses the complement". Valid for
/// domains where no scanned cube is certified disjoint (both oracle
/// domains keep every in-box cube within reach of the interior).
fn oracle_forest(
    bbox: &Aabb,
    n_min: i32,
    accept: &dyn Fn(i32, &[i64]) -> bool,
) -> BTreeSet<(i32, Vec<i64>)> {
    let dim = bbox.dim();
    let n_cap = (bbox.max_side().log2().ceil() as i32) + 1;
    let range = |level: i32| -> Option<Vec<(i64, i64)>> {
        let side = 2f64.powi(level);
        (0..dim)
            .map(|k| {
                let a_min = (bbox.lo[k] / side - 1e-9).ceil() as i64;
                let a_max = (bbox.hi[k] / side + 1e-9).floor() as i64 - 1;
                (a_max >= a_min).then_some((a_min, a_max))
            })
            .collect()
    };
    let in_box = |level: i32, a: &[i64]| -> bool {
        range(level).is_some_and(|rs| {
            rs.iter()
                .zip(a)
                .all(|(&(lo, hi), &ak)| ak >= lo && ak <= hi)
        })
    };
    let mut forest = BTreeSet::new();
    let mut live: Vec<Vec<i64>> = Vec::new();
    for level in (n_min..=n_cap).rev() {
        let mut visited: Vec<Vec<i64>> = Vec::new();
        // Roots: in the box at this level while the parent is not.
        if let Some(rs) = range(level) {
            let mut cur: Vec<i64> = rs.iter().map(|r| r.0).collect();
            'lattice: loop {
                let parent: Vec<i64> = cur.iter().map(|&a| a >> 1).collect();
                if !in_box(level + 1, &parent) {
                    visited.push(cur.clone());
                }
                let mut k = dim;
                loop {
                    if k == 0 {
                        break 'lattice;
                    }
                    k -= 1;
                    cur[k] += 1;
                    if cur[k] <= rs[k].1 {
                        break;
                    }
                    cur[k] = rs[k].0;
                }
            }
        }
        // Children of every coarser cube that failed acceptance.
        for p in &live {
            for mask in 0..1u32 << dim {
                let child: Vec<i64> = (0..dim)
                    .map(|k| 2 * p[k] + ((mask >> (dim - 1 - k)) & 1) as i64)
                    .collect();
                visited.push(child);
            }
        }
        live.clear();
        for a in visited {
            if accept(level, &a) {
                forest.insert((level, a));
            } else {
                live.push(a);
            }
        }
    }
    forest
}

/// Checks the defining cube properties for one forest: every point of
/// every cube at the right distance from the complement (via exact per-cube
/// bounds), no cube nested in another, points clear of the truncation zone
/// covered exactly once, and touching cubes within two levels.
fn check_whitney_properties(
    forest: &WhitneyForest,
    bbox: &Aabb,
    k_factor: f64,
    n_min: i32,
    dist_range: &dyn Fn(i32, &[i64]) -> (f64, f64),
    dist_complement: &dyn Fn(&[f64]) -> f64,
) {
    let dim = bbox.dim();
    assert_eq!(dim, 2, "oracle domains are planar");
    let set: HashSet<(i32, i64, i64)> = forest
        .cubes
        .iter()
        .map(|q| (q.level, q.anchor[0], q.anchor[1]))
        .collect();
    let n_cap = (bbox.max_side().log2().ceil() as i32) + 1;

    // Distance bounds, checked on the exact extremes over each cube.
    for q in &forest.cubes {
        let s = q.side();
        let (dmin, dmax) = dist_range(q.level, &q.anchor);
        let diam = s * (dim as f64).sqrt();
        assert!(
            dmin >= 0.5 * (k_factor - 1.0) * s - 1e-12 * s,
            "cube {:?} too close to the complement: {dmin}",
            q
        );
        assert!(
            dmax <= (1.0 + k_factor) * diam + 1e-12,
            "cube {:?} too deep inside: {dmax}",
            q
        );
    }

    // Disjoint interiors: no cube may be an ancestor of another.
    for q in &forest.cubes {
        let mut a = (q.anchor[0], q.anchor[1]);
        for lvl in (q.level + 1)..=n_cap {
            a = (a.0 >> 1, a.1 >> 1);
            assert!(
                !set.contains(&(lvl, a.0, a.1)),
                "cube {:?} sits inside a coarser forest cube",
                q
            );
        }
    }

    // Coverage: interior samples clear of the truncation zone lie in
    // exactly one cube. Uncovered points can only sit in truncated cells,
    // all within sqrt(2)/2 * (K+1) * 2^n_min of the complement.
    let clearance = 0.75 * (k_factor + 1.0) * 2f64.powi(n_min);
    let step = 2f64.powi(-7);
    let nx = ((bbox.hi[0] - bbox.lo[0]) / step) as usize;
    let ny = ((bbox.hi[1] - bbox.lo[1]) / step) as usize;
    let mut covered = 0usize;
    for ix in 0..nx {
        for iy in 0..ny {
            let x = [
                bbox.lo[0] + (ix as f64 + 0.5) * step,
                bbox.lo[1] + (iy as f64 + 0.5) * step,
            ];
            if dist_complement(&x) < clearance {
                continue;
            }
            let mut hits = 0usize;
            for lvl in n_min..=n_cap {
                let side = 2f64.powi(lvl);
                let a = ((x[0] / side).floor() as i64, (x[1] / side).floor() as i64);
                if set.contains(&(lvl, a.0, a.1)) {
                    hits += 1;
                }
            }
            assert_eq!(hits, 1, "point {x:?} covered {hits} times");
            covered += 1;
        }
    }
    assert!(covered > 0, "coverage grid missed the domain entirely");

    // Touching cubes differ by at most two levels (side ratio <= 4).
    let boxes: Vec<(i32, [f64; 4])> = forest
        .cubes
        .iter()
        .map(|q| {
            let s = q.side();
            (
                q.level,
                [
                    q.anchor[0] as f64 * s,
                    (q.anchor[0] + 1) as f64 * s,
                    q.anchor[1] as f64 * s,
                    (q.anchor[1] + 1) as f64 * s,
                ],
            )
        })
        .collect();
    for i in 0..boxes.len() {
        for j in (i + 1)..boxes.len() {
            let (la, a) = boxes[i];
            let (lb, b) = boxes[j];
            let touch = a[0] <= b[1] && b[0] <= a[1] && a[2] <= b[3] && b[2] <= a[3];
            if touch {
                assert!(
                    (la - lb).abs() <= 2,
                    "touching cubes {i} and {j} differ by {} levels",
                    (la - lb).abs()
                );
            }
        }
    }
}

#[test]
fn criterion_01_whitney_oracle() {
    let _g = gate();
    let start = Instant::now();
    let k = 3.0;
    let n_min = -6;

    // Upper half plane scanned over [0,8]^2: the 3-dilate of a level-n
    // cube with y-anchor j spans y in [(j-1) 2^n, (j+2) 2^n], so it misses
    // {y <= 0} exactly when j >= 2.
    let hp = gallery_by_name("half_space", "").expect("half_space");
    let hp_box = Aabb::new(vec![0.0, 0.0], vec![8.0, 8.0]);
    let hp_forest = whitney_decompose(&hp, k, &hp_box, n_min).expect("half plane forest");
    let hp_got: BTreeSet<(i32, Vec<i64>)> = hp_forest
        .cubes
        .iter()
        .map(|q| (q.level, q.anchor.clone()))
        .collect();
    let hp_want = oracle_forest(&hp_box, n_min, &|_, a| a[1] >= 2);
    assert_eq!(hp_got, hp_want, "half plane forest differs from the oracle");
    check_whitney_properties(
        &hp_forest,
        &hp_box,
        k,
        n_min,
        &|level, a| {
            let s = 2f64.powi(level);
            (a[1] as f64 * s, (a[1] + 1) as f64 * s)
        },
        &|x| x[1],
    );

    // Punctured plane on [-2,2]^2: the complement is the origin, and the
    // 3-dilate misses it exactly when some axis clears it by a full cube.
    let pp = ImplicitDomain::new(
        2,
        "punctured_plane",
        |x| -dist(x, &[0.0, 0.0]),
        Aabb::cube(2, -2.0, 2.0),
        None,
    );
    let pp_box = Aabb::cube(2, -2.0, 2.0);
    let pp_forest = whitney_decompose(&pp, k, &pp_box, n_min).expect("punctured forest");
    let pp_got: BTreeSet<(i32, Vec<i64>)> = pp_forest
        .cubes
        .iter()
        .map(|q| (q.level, q.anchor.clone()))
        .collect();
    let pp_want = oracle_forest(&pp_box, n_min, &|_, a| {
        a.iter().any(|&ak| ak >= 2 || ak <= -3)
    });
    assert_eq!(pp_got, pp_want, "punctured forest differs from the oracle");
    check_whitney_properties(
        &pp_forest,
        &pp_box,
        k,
        n_min,
        &|level, a| {
            let s = 2f64.powi(level);
            let mut near = 0.0;
            let mut far = 0.0;
            for &ak in a {
                let lo = ak as f64 * s;
                let hi = (ak + 1) as f64 * s;
                let gap = lo.max(-hi).max(0.0);
                near += gap * gap;
                let reach = lo.abs().max(hi.abs());
                far += reach * reach;
            }
            (near.sqrt(), far.sqrt())
        },
        &|x| dist(x, &[0.0, 0.0]),
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "oracle comparison took {elapsed:.1}s");
    println!(
        "criterion 01 whitney_oracle: pass ({} + {} cubes match the oracle exactly, {elapsed:.2}s)",
        hp_forest.len(),
        pp_forest.len()
    );
}

// --- criterion 2: metric cube tree axioms on random clouds ---------------

#[test]
fn criterion_02_cube_tree_axioms() {
    let _g = gate();
    let start = Instant::now();
    let c0 = 0.25;
    let depth = 4;
    let c1_floor = c0 * c0 / 2.0;
    let mut worst_c1 = f64::INFINITY;
    for trial in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(SEED, 7000 + trial));
        let n = 64 + (rng.gen::<u64>() % 1985) as usize;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        let cloud = PointCloud::uniform(&pts, 1.0).expect("random cloud");
        let tree = build_cube_tree(&cloud, c0, depth).expect("cube tree");
        let report = verify_cube_axioms(&tree);
        assert!(report.all_ok(), "witnesses: {:?}", report.witnesses);

        // Independent partition check: each level splits 0..n exactly.
        for level in 0..tree.depth {
            let mut seen: Vec<usize> = tree.levels[level]
                .iter()
                .flat_map(|c| c.members.iter().copied())
                .collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..n).collect::<Vec<_>>(), "level {level} partition");
        }
        // Independent nesting check: a cube's members share one parent.
        for level in 1..tree.depth {
            for cube in &tree.levels[level] {
                let parent = tree.cube_of_point(level - 1, cube.members[0]);
                for &p in &cube.members {
                    assert_eq!(
                        tree.cube_of_point(level - 1, p),
                        parent,
                        "straddling cube at level {level}"
                    );
                }
            }
        }
        // Independent sandwich check: members inside the outer ball, and
        // everything inside the reported inner ball a member.
        let c1 = tree.c1_achieved;
        for level in 0..tree.depth {
            let len = tree.lengths[level];
            for cube in &tree.levels[level] {
                let zeta = cloud.point(cube.center);
                for &p in &cube.members {
                    assert!(dist(zeta, cloud.point(p)) < len + 1e-12, "outer ball");
                }
                for q in 0..n {
                    if dist(zeta, cloud.point(q)) < c1 * len * (1.0 - 1e-12) {
                        assert!(cube.members.binary_search(&q).is_ok(), "inner ball");
                    }
                }
            }
        }
        assert!(
            c1 >= c1_floor,
            "trial {trial}: c1 {c1} below the c0^2/2 floor"
        );
        worst_c1 = worst_c1.min(c1);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "20 clouds took {elapsed:.1}s");
    println!(
        "criterion 02 cube_tree_axioms: pass (20 clouds, worst c1 {worst_c1:.4} >= {c1_floor}, {elapsed:.1}s)"
    );
}

// --- criterion 3: boundary shell decay on the circle ---------------------

#[test]
fn criterion_03_shell_decay() {
    let _g = gate();
    let cloud = circle_cloud(4096);
    let mu = DiscreteMeasure::from_cloud(&cloud).expect("measure");
    let tree = build_cube_tree(&cloud, 0.25, 4).expect("tree");
    let t_grid = [0.02, 0.03, 0.05, 0.08, 0.12, 0.2, 0.3, 0.5];
    let fit = shell_decay(&tree, &mu, &t_grid).expect("shell fit");
    assert!(fit.defined, "shell masses all vanished");
    assert!(fit.alpha_hat >= 0.8, "decay exponent {}", fit.alpha_hat);
    assert!(fit.max_residual <= 0.1, "envelope residual {}", fit.max_residual);
    println!(
        "criterion 03 shell_decay: pass (alpha {:.3}, envelope residual {:.3})",
        fit.alpha_hat, fit.max_residual
    );
}

// --- criterion 4: porous-family Carleson norm stability -------------------

#[test]
fn criterion_04_porosity_carleson_norm() {
    let _g = gate();
    let mut sups = Vec::new();
    for n in [4096usize, 8192] {
        let cloud = circle_cloud(n);
        let mu = DiscreteMeasure::from_cloud(&cloud).expect("measure");
        let tree = build_cube_tree(&cloud, 0.25, 4).expect("tree");
        let e_idx: Vec<usize> = (0..n).filter(|&i| cloud.point(i)[0] >= 0.0).collect();
        let family = porous_cubes(&tree, &e_idx, 2.0, 0.05).expect("porous family");
        assert!(!family.is_empty(), "no porous cubes at n = {n}");
        let report = carleson_norm(&tree, &family, &mu).expect("norm");
        assert!(report.sup.is_finite() && report.sup >= 0.0);
        sups.push(report.sup);
    }
    assert!(
        mesh_stable(sups[0], sups[1]),
        "sup moved {} -> {} under doubling",
        sups[0],
        sups[1]
    );
    println!(
        "criterion 04 porosity_carleson_norm: pass (sup {:.4} at 4096, {:.4} at 8192)",
        sups[0], sups[1]
    );
}

// --- criterion 5: refinement mass budget and membership bound ------------

#[test]
fn criterion_05_refinement_budget() {
    let _g = gate();
    let n = 4096usize;
    let cloud = circle_cloud(n);
    let mu = DiscreteMeasure::from_cloud(&cloud).expect("measure");
    let tree = build_cube_tree(&cloud, 0.25, 4).expect("tree");
    let e_idx: Vec<usize> = (0..n).filter(|&i| cloud.point(i)[0] >= 0.0).collect();
    let e_set: HashSet<usize> = e_idx.iter().copied().collect();
    let mass_e = mu.mass_of(&e_idx);
    let mut line = String::new();
    for &tau in &[0.5, 0.1, 0.01] {
        let (res, t) = refine_with_budget(&tree, &e_idx, &mu, tau);
        // Mass budget, recomputed from the measure itself.
        let kept = mu.mass_of(&res.e_prime);
        assert!(
            kept >= (1.0 - tau) * mass_e - 1e-9,
            "tau {tau}: kept {kept} of {mass_e}"
        );
        // Chain E' subset of E_N subset of E.
        let en_set: HashSet<usize> = res.e_n.iter().copied().collect();
        assert!(res.e_prime.iter().all(|p| en_set.contains(p)), "E' in E_N");
        assert!(res.e_n.iter().all(|p| e_set.contains(p)), "E_N in E");
        // Membership bound over the excised family, recounted per point.
        for &p in &res.e_prime {
            let count = res
                .t_cubes
                .iter()
                .filter(|&&id| tree.cube(id).members.binary_search(&p).is_ok())
                .count();
            assert!(
                count <= res.n_bound,
                "point {p} meets {count} cubes, bound {}",
                res.n_bound
            );
        }
        line.push_str(&format!(
            " tau {tau}: ratio {:.4} (t {t}, N {});",
            res.mass_ratio, res.n_bound
        ));
    }
    println!("criterion 05 refinement_budget: pass ({})", line.trim());
}

// --- criterion 6: sawtooth sandwich inclusions ----------------------------

#[test]
fn criterion_06_sawtooth_sandwich() {
    let _g = gate();
    let n_samples = 100_000usize;
    let mut checked = 0usize;
    for (name, case, key) in [
        ("half_plane", half_plane_case(1.0 / 64.0, -9), 801u64),
        ("disk", disk_case(1.0 / 64.0, -9), 803),
    ] {
        let inner = sandwich_check(&case.inner, n_samples, splitmix64(SEED, key));
        assert_eq!(
            inner.violations, 0,
            "{name} inner violations, witness {:?}",
            inner.witness
        );
        let outer = sandwich_check(&case.outer, n_samples, splitmix64(SEED, key + 1));
        assert_eq!(
            outer.violations, 0,
            "{name} outer violations, witness {:?}",
            outer.witness
        );
        checked += inner.checked + outer.checked;
    }
    println!(
        "criterion 06 sawtooth_sandwich: pass ({checked} samples, zero inclusion violations)"
    );
}

// --- criterion 7: boundary trace at fine mesh -----------------------------

#[test]
fn criterion_07_boundary_trace() {
    let _g = gate();
    let h = 2f64.powi(-8);
    let n_min = -11;
    let mut detail = String::new();
    for (name, case) in [
        ("half_plane", half_plane_case(h, n_min)),
        ("disk", disk_case(h, n_min)),
    ] {
        for (side, saw) in [("inner", &case.inner), ("outer", &case.outer)] {
            let trace = check_trace(saw, &case.e_prime, h).expect("trace check");
            assert!(
                trace.ok,
                "{name} {side} trace failed: witness {:?}",
                trace.witness
            );
            detail.push_str(&format!(
                " {name}/{side} {:.4}/{:.4};",
                trace.max_e_to_boundary, trace.max_boundary_to_e
            ));
        }
    }
    println!(
        "criterion 07 boundary_trace: pass (max distances vs 2h = {:.4}:{})",
        2.0 * h,
        detail.trim_end_matches(';')
    );
}

// --- criterion 8: boundary cube sums over a center/radius grid -----------

#[test]
fn criterion_08_boundary_cube_sums() {
    let _g = gate();
    let mut inner_sups = Vec::new();
    let mut outer_sups = Vec::new();
    for (h, n_min) in [(1.0 / 64.0, -9), (1.0 / 128.0, -10)] {
        let case = half_plane_case(h, n_min);
        let centers = pick_evenly_points(&case.e_prime, 20);
        let radii: Vec<f64> = (1..=8).map(|k| case.r0 * 2f64.powi(-k)).collect();
        let sweep = boundary_sum_sweep(&case.inner, &centers, &radii).expect("inner sweep");
        assert!(sweep.sup_ratio.is_finite(), "inner sup at h {h}");
        inner_sups.push(sweep.sup_ratio);
        let sweep = boundary_sum_sweep(&case.outer, &centers, &radii).expect("outer sweep");
        assert!(sweep.sup_ratio.is_finite(), "outer sup at h {h}");
        outer_sups.push(sweep.sup_ratio);
    }
    assert!(
        mesh_stable(inner_sups[0], inner_sups[1]),
        "inner sup moved {} -> {}",
        inner_sups[0],
        inner_sups[1]
    );
    println!(
        "criterion 08 boundary_cube_sums: pass (inner sup {:.4} -> {:.4}, outer {:.4} -> {:.4})",
        inner_sups[0], inner_sups[1], outer_sups[0], outer_sups[1]
    );
}

// --- criterion 9: surface regularity of the sawtooth boundaries ----------

#[test]
fn criterion_09_surface_regularity() {
    let _g = gate();
    let case = half_plane_case(1.0 / 64.0, -9);
    let radii: Vec<f64> = (1..=6).map(|k| case.r0 * 2f64.powi(-k)).collect();
    let centers = pick_evenly_points(&case.e_prime, 8);
    // The profile only uses balls around E', so the surfaces are sampled
    // in a window that contains all of them; the outer domain's full box
    // would waste a large grid on faraway boundary.
    let window = Aabb::new(vec![-1.0, -0.75], vec![2.0, 0.75]);
    let mut profiles: Vec<[f64; 2]> = Vec::new();
    for h_s in [2f64.powi(-9), 2f64.powi(-10)] {
        for saw in [&case.inner, &case.outer] {
            let mut impl_dom = saw.as_implicit();
            impl_dom.bbox = window.clone();
            let surface = sample_boundary(&impl_dom, h_s).expect("surface cloud");
            let prof = regularity_profile(&surface, &radii, &centers).expect("profile");
            assert!(
                prof.a_upper.is_finite() && prof.a_lower.is_finite(),
                "profile degenerate at h_s {h_s}: {} / {}",
                prof.a_upper,
                prof.a_lower
            );
            profiles.push([prof.a_upper, prof.a_lower]);
        }
    }
    // Order: [inner@h, outer@h, inner@h/2, outer@h/2].
    for (coarse, fine, what) in [
        (profiles[0], profiles[2], "inner"),
        (profiles[1], profiles[3], "outer"),
    ] {
        for k in 0..2 {
            assert!(
                mesh_stable(coarse[k], fine[k]),
                "{what} profile component {k} moved {} -> {}",
                coarse[k],
                fine[k]
            );
        }
    }
    println!(
        "criterion 09 surface_regularity: pass (inner A {:.3}/{:.3}, outer A {:.3}/{:.3}, stable under mesh halving)",
        profiles[0][0], profiles[0][1], profiles[1][0], profiles[1][1]
    );
}

// --- criterion 10: walk-on-spheres calibration ----------------------------

#[test]
fn criterion_10_wos_calibration() {
    let _g = gate();
    let n_walks = 1_000_000u64;

    let start = Instant::now();
    let disk = gallery_by_name("ball", "").expect("ball");
    let settings = WosSettings::for_domain(&disk).with_eps_shell(EPS_SHELL);
    let arc: &Indicator = &|p: &[f64]| p[1].atan2(p[0]).abs() <= PI / 6.0;
    let est = harmonic_measure_with(&disk, &[0.0, 0.0], arc, n_walks, SEED, &settings)
        .expect("disk estimate");
    let exact = 1.0 / 6.0;
    let quad = disk_poisson_arc_mass(&[0.0, 0.0], -PI / 6.0, PI / 6.0);
    assert!((quad - exact).abs() < 1e-9, "quadrature oracle {quad}");
    assert!(
        (est.value - exact).abs() <= SIGMA * est.std_err,
        "disk arc {} vs 1/6, se {}",
        est.value,
        est.std_err
    );
    assert!(est.std_err < 5e-4, "disk se {}", est.std_err);
    let disk_s = start.elapsed().as_secs_f64();
    assert!(disk_s < 60.0, "disk calibration took {disk_s:.1}s");

    let start = Instant::now();
    let hp = gallery_by_name("half_space", "").expect("half_space");
    let settings = WosSettings::for_domain(&hp).with_eps_shell(EPS_SHELL);
    let seg: &Indicator = &|p: &[f64]| p[0].abs() <= 1.0;
    let est_hp = harmonic_measure_with(&hp, &[0.0, 1.0], seg, n_walks, SEED, &settings)
        .expect("half plane estimate");
    let exact_hp = halfplane_interval_mass(&[0.0, 1.0], -1.0, 1.0);
    assert!((exact_hp - 0.5).abs() < 1e-12, "interval oracle {exact_hp}");
    assert!(
        (est_hp.value - 0.5).abs() <= SIGMA * est_hp.std_err,
        "half plane {} vs 1/2, se {}",
        est_hp.value,
        est_hp.std_err
    );
    let hp_s = start.elapsed().as_secs_f64();
    assert!(hp_s < 60.0, "half plane calibration took {hp_s:.1}s");

    println!(
        "criterion 10 wos_calibration: pass (disk {:.6} vs {:.6} se {:.1e} in {disk_s:.1}s; half plane {:.6} vs 0.5 se {:.1e} in {hp_s:.1}s)",
        est.value, exact, est.std_err, est_hp.value, est_hp.std_err
    );
}

// --- criterion 11: local doubling of harmonic measure ---------------------

#[test]
fn criterion_11_local_doubling() {
    let _g = gate();
    let hp = gallery_by_name("half_space", "").expect("half_space");
    let settings = WosSettings::for_domain(&hp).with_eps_shell(EPS_SHELL);
    let z0 = [0.0, 4.0];
    let centers: Vec<Vec<f64>> = [-1.0, -0.5, 0.0, 0.5, 1.0]
        .iter()
        .map(|&x| vec![x, 0.0])
        .collect();
    let radii = [0.125, 0.25, 0.5, 1.0];
    let table = doubling_profile_omega(&hp, &z0, &centers, &radii, 1_000_000, SEED, &settings)
        .expect("doubling table");
    assert_eq!(table.rows.len(), 20);
    assert_eq!(table.indeterminate, 0, "indeterminate ratios");
    for row in &table.rows {
        assert!(row.admissible, "row at {:?} r {} inadmissible", row.xi, row.r);
        // Exit heights are within the shell of the boundary, so the exact
        // boundary interval mass is the oracle for both ball masses.
        let m1 = halfplane_interval_mass(&z0, row.xi[0] - row.r, row.xi[0] + row.r);
        let m2 = halfplane_interval_mass(&z0, row.xi[0] - 2.0 * row.r, row.xi[0] + 2.0 * row.r);
        assert!(
            (row.mass_single - m1).abs() <= SIGMA * row.se_single,
            "xi {:?} r {}: {} vs exact {m1} (se {})",
            row.xi,
            row.r,
            row.mass_single,
            row.se_single
        );
        assert!(
            (row.mass_double - m2).abs() <= SIGMA * row.se_double,
            "xi {:?} 2r {}: {} vs exact {m2} (se {})",
            row.xi,
            row.r,
            row.mass_double,
            row.se_double
        );
    }
    let sup = table.sup_ratio.expect("sup over determinate rows");
    assert!(sup <= 4.0, "doubling sup {sup}");
    println!(
        "criterion 11 local_doubling: pass (20 rows within {SIGMA} se of exact, sup ratio {sup:.3} <= 4)"
    );
}

// --- criterion 12: harmonic measure sandwich across the sawtooths --------

#[test]
fn criterion_12_wos_sandwich() {
    let _g = gate();
    let case = half_plane_case(1.0 / 64.0, -9);
    let n_walks = 1_000_000u64;
    let n_sets = 10usize;

    // Ten contiguous chunks of E', each thickened by 2h for the exits.
    let n = case.e_prime_idx.len();
    assert!(n >= n_sets, "refined set too small to chunk");
    let tol = 2.0 * case.h;
    let base_sz = n / n_sets;
    let rem = n % n_sets;
    let mut sets: Vec<Box<Indicator<'static>>> = Vec::new();
    let mut lo = 0usize;
    for k in 0..n_sets {
        let hi = lo + base_sz + usize::from(k < rem);
        let pts: Vec<Vec<f64>> = case.e_prime_idx[lo..hi]
            .iter()
            .map(|&i| case.boundary.point(i).to_vec())
            .collect();
        let ps = PointSet::build(pts);
        sets.push(Box::new(move |x: &[f64]| ps.dist_to(x) <= tol) as Box<Indicator<'static>>);
        lo = hi;
    }
    let refs: Vec<&Indicator> = sets.iter().map(|b| b.as_ref()).collect();

    let z0 = interior_pole(&case.inner);
    let inner_impl = case.inner.as_implicit();
    let outer_impl = case.outer.as_implicit();
    assert!(inner_impl.inside(&z0) && case.domain.inside(&z0) && outer_impl.inside(&z0));

    let run = |dom: &ImplicitDomain, key: u64| {
        let settings = WosSettings::for_domain(dom).with_eps_shell(EPS_SHELL);
        harmonic_measure_batch_with(dom, &z0, &refs, n_walks, splitmix64(SEED, key), &settings)
            .expect("ensemble")
    };
    let inner_est = run(&inner_impl, 120);
    let base_est = run(&case.domain, 121);
    let outer_est = run(&outer_impl, 122);

    let mut worst_lo = f64::INFINITY;
    let mut worst_hi = f64::INFINITY;
    for k in 0..n_sets {
        let lo_margin = base_est[k].value - inner_est[k].value
            + SIGMA * base_est[k].std_err.hypot(inner_est[k].std_err);
        let hi_margin = outer_est[k].value - base_est[k].value
            + SIGMA * outer_est[k].std_err.hypot(base_est[k].std_err);
        assert!(
            lo_margin >= 0.0,
            "set {k}: inner {} above base {} beyond {SIGMA} se",
            inner_est[k].value,
            base_est[k].value
        );
        assert!(
            hi_margin >= 0.0,
            "set {k}: base {} above outer {} beyond {SIGMA} se",
            base_est[k].value,
            outer_est[k].value
        );
        worst_lo = worst_lo.min(lo_margin);
        worst_hi = worst_hi.min(hi_margin);
    }
    println!(
        "criterion 12 wos_sandwich: pass ({n_sets} sets x {n_walks} walks, worst slack lo {worst_lo:.2e} hi {worst_hi:.2e})"
    );
}

// --- criterion 13: absolute-continuity trend in both regimes -------------

#[test]
fn criterion_13_ainfty_trend() {
    let _g = gate();

    // Positive direction: on the half plane both comparison moduli are
    // strictly positive at every threshold.
    let case = half_plane_case(1.0 / 64.0, -9);
    let centers = pick_evenly_points(&case.e_prime, 4);
    let scatter = ainfty_scatter(
        &case.domain,
        &case.tree,
        2,
        &centers,
        &[0.5, 0.25, 0.125],
        &[0.5, 0.5],
        case.h,
        200_000,
        splitmix64(SEED, 130),
        &[0.5, 0.2, 0.1],
    )
    .expect("scatter");
    assert!(!scatter.rows.is_empty(), "no scatter rows");
    for row in &scatter.moduli {
        let fwd = row
            .delta_measure_to_content
            .unwrap_or_else(|| panic!("eps {}: measure->content indeterminate", row.epsilon));
        let bwd = row
            .delta_content_to_measure
            .unwrap_or_else(|| panic!("eps {}: content->measure indeterminate", row.epsilon));
        assert!(
            fwd > 0.0 && bwd > 0.0,
            "eps {}: moduli {fwd} / {bwd} not strictly positive",
            row.epsilon
        );
    }

    // Degenerating direction: each perforation generation strictly lowers
    // the measure the plane portion of the boundary receives.
    let z0 = [0.3, 0.3, 0.4];
    let plane: &Indicator = &|p: &[f64]| p[2] <= 0.01;
    let mut vals: Vec<(f64, f64)> = Vec::new();
    for m in 1..=3u32 {
        let dom = gallery_by_name("perforated_half_space", &format!("{{\"m\": {m}}}"))
            .expect("perforated domain");
        let settings = WosSettings::for_domain(&dom).with_eps_shell(EPS_SHELL);
        let est = harmonic_measure_with(&dom, &z0, plane, 1_000_000, SEED, &settings)
            .expect("perforated estimate");
        vals.push((est.value, est.std_err));
    }
    for w in vals.windows(2) {
        let (a, sa) = w[0];
        let (b, sb) = w[1];
        assert!(
            a - b > SIGMA * sa.hypot(sb),
            "perforation did not lower the plane mass: {a} -> {b}"
        );
    }
    println!(
        "criterion 13 ainfty_trend: pass (moduli positive at eps 0.5/0.2/0.1; plane mass {:.4} > {:.4} > {:.4})",
        vals[0].0, vals[1].0, vals[2].0
    );
}

// --- criterion 14: bilateral flatness and its Carleson energy -------------

#[test]
fn criterion_14_flatness_energy() {
    let _g = gate();

    // Flat set: a segment sampled on a dyadic lattice is exactly flat at
    // aligned centers and scales, and its energy has no bad cells at all.
    let seg_pts: Vec<Vec<f64>> = (0..=256).map(|i| vec![i as f64 / 256.0, 0.0]).collect();
    let segment = PointCloud::uniform(&seg_pts, 1.0).expect("segment");
    for r in [0.125, 0.0625] {
        let rec = bbeta(&segment, &[0.5, 0.0], r).expect("flat record");
        assert!(!rec.degenerate);
        assert_eq!(rec.value, 0.0, "flat deviation at r {r}: {}", rec.value);
    }
    let energy = carleson_energy(&segment, &[0.5, 0.0], 0.25, 0.25, 3, 0.03125, 1)
        .expect("flat energy");
    assert!(energy.bad_counts.iter().all(|&c| c == 0));
    assert_eq!(energy.estimate, 0.0, "flat energy {}", energy.estimate);

    // Circle: the two-sided deviation scales linearly, so value/r is
    // constant across dyadic radii up to discretization.
    let circle = circle_cloud(1 << 17);
    let mut ratios = Vec::new();
    for k in 3..=6 {
        let r = 2f64.powi(-k);
        let rec = bbeta(&circle, &[1.0, 0.0], r).expect("circle record");
        ratios.push(rec.value / r);
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    assert!(
        hi <= 1.2 * lo,
        "curvature ratio drifts: {ratios:?} (spread {:.3})",
        hi / lo
    );

    // Cantor dust: refining the scale ladder keeps finding non-flat cells,
    // so the empirical energy density grows from first to last.
    let mut dust_pts = vec![vec![0.0, 0.0]];
    for k in 0..5 {
        let step = 0.75 * 0.25f64.powi(k);
        dust_pts = dust_pts
            .iter()
            .flat_map(|p| {
                [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
                    .iter()
                    .map(|&(bx, by)| vec![p[0] + bx * step, p[1] + by * step])
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    assert_eq!(dust_pts.len(), 1024);
    let dust = PointCloud::uniform(&dust_pts, 1.0).expect("dust");
    let xi0 = nearest_to_centroid(&dust);
    let diam = dust_pts
        .iter()
        .flat_map(|p| dust_pts.iter().map(move |q| dist(p, q)))
        .fold(0.0f64, f64::max);
    let r0 = 0.5 * diam;
    let growth = 1.05f64;
    let mut densities = Vec::new();
    for j_max in [2usize, 3, 4] {
        let net_h = r0 * 2f64.powi(-(j_max as i32));
        let rep = carleson_energy(&dust, &xi0, r0, 0.25, j_max, net_h, 1).expect("dust energy");
        assert!(rep.c_ur_emp.is_finite() && rep.c_ur_emp > 0.0);
        densities.push(rep.c_ur_emp);
    }
    assert!(
        densities[2] > growth.powi(2) * densities[0],
        "energy density did not grow: {densities:?}"
    );

    println!(
        "criterion 14 flatness_energy: pass (flat exactly 0, circle spread {:.3} <= 1.2, dust density {:.3} -> {:.3} -> {:.3})",
        hi / lo, densities[0], densities[1], densities[2]
    );
}

// --- criterion 15: byte-identical pipeline reruns --------------------------

#[test]
fn criterion_15_reproducibility() {
    let _g = gate();
    let exe = env!("CARGO_BIN_EXE_gmt");
    let tmp = tempfile::tempdir().expect("tempdir");
    let cfg = tmp.path().join("case.json");
    fs::write(
        &cfg,
        r#"{
  "pipeline": "main-theorem",
  "domain": {"name": "half_space"},
  "h": 0.015625,
  "e_set": {"select": "in_box", "lo": [0.0, -0.001], "hi": [1.0, 0.001]},
  "seed": 42
}"#,
    )
    .expect("config");
    let out_a = tmp.path().join("run_a");
    let out_b = tmp.path().join("run_b");
    for out in [&out_a, &out_b] {
        let status = Command::new(exe)
            .args(["main-theorem", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .expect("pipeline run");
        assert!(status.success(), "pipeline exited with {status}");
    }

    let listing = |dir: &Path| -> Vec<String> {
        let mut names: Vec<String> = fs::read_dir(dir)
            .expect("bundle dir")
            .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    };
    let names_a = listing(&out_a);
    assert_eq!(names_a, listing(&out_b), "bundles hold different files");
    assert!(names_a.contains(&"manifest.json".to_string()));

    let mut compared = 0usize;
    for name in &names_a {
        // Timing varies by run; the manifest embeds it, so it is compared
        // structurally below instead of byte-wise.
        if name == "manifest.json" || name == "timing.json" {
            continue;
        }
        let a = fs::read(out_a.join(name)).expect("artifact a");
        let b = fs::read(out_b.join(name)).expect("artifact b");
        assert_eq!(a, b, "artifact {name} differs between identical runs");
        compared += 1;
    }
    let manifest = |dir: &Path| -> serde_json::Value {
        serde_json::from_slice(&fs::read(dir.join("manifest.json")).expect("manifest"))
            .expect("manifest json")
    };
    let ma = manifest(&out_a);
    let mb = manifest(&out_b);
    for key in ["artifacts", "bundle_fnv64", "verdict", "pipeline", "seed"] {
        assert_eq!(ma.get(key), mb.get(key), "manifest field {key} differs");
    }
    assert_eq!(
        ma.get("verdict").and_then(|v| v.as_str()),
        Some("pass"),
        "pipeline verdict"
    );
    println!(
        "criterion 15 reproducibility: pass ({compared} artifacts byte-identical, digests {} == {})",
        ma["bundle_fnv64"], mb["bundle_fnv64"]
    );
}
