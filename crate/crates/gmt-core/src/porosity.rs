//! Doubling-measure analytics over cube trees: empirical doubling
//! constants, complement Whitney cubes, packing coefficients, porous-cube
//! detection, Carleson sums, shell-mass decay fits, and the
//! porosity-driven refinement that excises thin shells while keeping a
//! prescribed fraction of the mass.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::bvh::PointSet;
use crate::cloud::PointCloud;
use crate::cubetree::{CubeId, CubeTree};
use crate::error::{GmtError, Result};
use crate::geom::{dist, Ball};
use crate::invalid_input;
use crate::measure::DiscreteMeasure;
use crate::util::{compensated_sum, linear_fit};

/// Empirical local doubling data for a measure on a region.
#[derive(Debug, Clone)]
pub struct DoublingProfile {
    /// max over sampled (xi, r) of mass(B(xi,2r)) / mass(B(xi,r)).
    pub c_mu: f64,
    /// log2 of c_mu; exponents above this are summable for packing.
    pub beta0: f64,
    pub region: Ball,
    pub scale_range: (f64, f64),
    /// Sample pairs skipped because the denominator ball had no mass.
    pub skipped: usize,
}

/// Parameters for the porosity refinement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PorosityConfig {
    /// Ball dilation factor for complement Whitney cubes and witnesses.
    pub m_factor: f64,
    /// Porosity depth: a witness must sit delta * length from the set.
    pub delta: f64,
    /// Packing exponent; must exceed beta0 of the measure for summability.
    pub beta: f64,
    /// Mass fraction the refinement may lose.
    pub tau: f64,
    /// Shell thickness excised around every selected cube.
    pub t: f64,
    /// Lower bound on mass(E)/mass(root cube), part of the input contract.
    pub rho: f64,
}

/// Output of `refine_set`: the kept subset with its certificates.
#[derive(Debug, Clone)]
pub struct RefinementResult {
    pub e_prime: Vec<usize>,
    pub e_n: Vec<usize>,
    pub t_cubes: Vec<CubeId>,
    /// Membership bound: every kept point lies in at most this many
    /// cubes of `t_cubes`.
    pub n_bound: usize,
    pub t_used: f64,
    pub mass_ratio: f64,
    /// Smallest cube containing E, or None when E straddles top cubes
    /// and the whole cloud acts as the root.
    pub root: Option<CubeId>,
    /// Empirical Carleson norm of the porous family used to pick n_bound.
    pub carleson_c1: f64,
}

impl RefinementResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "E_prime_idx": self.e_prime,
            "E_N_idx": self.e_n,
            "T": self.t_cubes,
            "N": self.n_bound,
            "t_used": self.t_used,
            "mass_ratio": self.mass_ratio,
            "carleson_c1": self.carleson_c1,
        })
    }
}

fn check_same_ground(tree: &CubeTree, mu: &DiscreteMeasure) -> Result<()> {
    if mu.len() != tree.n_points() {
        return Err(invalid_input!(
            "measure has {} atoms but the tree cloud has {} points",
            mu.len(),
            tree.n_points()
        ));
    }
    Ok(())
}

fn checked_index_set(n: usize, e_idx: &[usize]) -> Result<Vec<usize>> {
    if let Some(&bad) = e_idx.iter().find(|&&p| p >= n) {
        return Err(invalid_input!("set index {bad} out of range (n = {n})"));
    }
    let mut e: Vec<usize> = e_idx.to_vec();
    e.sort_unstable();
    e.dedup();
    Ok(e)
}

/// Estimates the doubling constant of `mu` by scanning support points of
/// the cloud inside `region` over the given scales.
pub fn estimate_doubling(
    mu: &DiscreteMeasure,
    cloud: &PointCloud,
    region: &Ball,
    scales: &[f64],
) -> Result<DoublingProfile> {
    if mu.len() != cloud.len() {
        return Err(invalid_input!(
            "measure and cloud sizes differ: {} vs {}",
            mu.len(),
            cloud.len()
        ));
    }
    if scales.is_empty() || scales.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(invalid_input!("scales must be positive finite reals"));
    }
    if region.center.len() != cloud.dim() {
        return Err(invalid_input!("region dimension does not match the cloud"));
    }
    let candidates: Vec<usize> = (0..cloud.len())
        .filter(|&p| cloud.weight(p) > 0.0 && region.contains(cloud.point(p)))
        .collect();
    if candidates.is_empty() {
        return Err(GmtError::Empty(
            "no support points inside the doubling region".into(),
        ));
    }
    let mut c_mu = 1.0f64;
    let mut skipped = 0usize;
    for &p in &candidates {
        let xi = cloud.point(p);
        for &r in scales {
            let m1 = mu.ball_mass(xi, r);
            if m1 <= 0.0 {
                skipped += 1;
                continue;
            }
            let m2 = mu.ball_mass(xi, 2.0 * r);
            c_mu = c_mu.max(m2 / m1);
        }
    }
    let (lo, hi) = scales
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    Ok(DoublingProfile {
        c_mu,
        beta0: c_mu.log2(),
        region: region.clone(),
        scale_range: (lo, hi),
        skipped,
    })
}

/// Explicit packing constant relating length ratios to mass ratios for a
/// doubling measure: c_mu ^ log2(4 m / c1).
pub fn k0_constant(c_mu: f64, m_factor: f64, c1_achieved: f64) -> f64 {
    c_mu.powf((4.0 * m_factor / c1_achieved).log2())
}

/// Maximal cubes whose m-dilated containment ball misses the set.
pub fn complement_whitney(
    tree: &CubeTree,
    e_idx: &[usize],
    m_factor: f64,
) -> Result<Vec<CubeId>> {
    if m_factor <= 1.0 {
        return Err(invalid_input!("dilation factor must exceed 1, got {m_factor}"));
    }
    let e = checked_index_set(tree.n_points(), e_idx)?;
    if e.is_empty() {
        return Ok(tree.top_ids());
    }
    let eset = PointSet::build(e.iter().map(|&p| tree.cloud.point(p).to_vec()).collect());
    let mut out = Vec::new();
    let mut stack: Vec<CubeId> = tree.top_ids().into_iter().rev().collect();
    while let Some(id) = stack.pop() {
        let clear = eset.dist_to(tree.center_point(id)) > m_factor * tree.length(id);
        if clear {
            out.push(id);
        } else {
            for child in tree.children_of(id).into_iter().rev() {
                stack.push(child);
            }
        }
    }
    // Coarse-to-fine level order, matching the tree's id enumeration.
    out.sort();
    Ok(out)
}

/// Packing coefficient: sum over complement Whitney cubes inside the
/// m-dilated ball of `delta` of (length ratio)^beta; 0 for empty sums.
pub fn lambda_coefficient(
    tree: &CubeTree,
    e_idx: &[usize],
    delta: CubeId,
    m_factor: f64,
    beta: f64,
) -> Result<f64> {
    if beta <= 0.0 {
        return Err(invalid_input!("packing exponent must be positive"));
    }
    let whitney = complement_whitney(tree, e_idx, m_factor)?;
    let zeta = tree.center_point(delta);
    let radius = m_factor * tree.length(delta);
    let len_delta = tree.length(delta);
    let terms = whitney.iter().filter_map(|&w| {
        let inside = tree
            .cube(w)
            .members
            .iter()
            .all(|&p| dist(tree.cloud.point(p), zeta) <= radius);
        inside.then(|| (tree.length(w) / len_delta).powf(beta))
    });
    Ok(compensated_sum(terms))
}

/// Cubes meeting the set that see a witness point far from it: some
/// xi in the m-dilated ball with dist(xi, E) >= delta * length.
pub fn porous_cubes(
    tree: &CubeTree,
    e_idx: &[usize],
    m_factor: f64,
    delta: f64,
) -> Result<Vec<CubeId>> {
    if m_factor <= 1.0 {
        return Err(invalid_input!("dilation factor must exceed 1, got {m_factor}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid_input!("porosity depth must lie in (0,1), got {delta}"));
    }
    let e = checked_index_set(tree.n_points(), e_idx)?;
    if e.is_empty() {
        return Ok(Vec::new());
    }
    let n = tree.n_points();
    let eset = PointSet::build(e.iter().map(|&p| tree.cloud.point(p).to_vec()).collect());
    let dist_e: Vec<f64> = (0..n).map(|p| eset.dist_to(tree.cloud.point(p))).collect();
    let mut in_e = vec![false; n];
    for &p in &e {
        in_e[p] = true;
    }
    let all = PointSet::build(tree.cloud.to_vecs());
    let mut out = Vec::new();
    for id in tree.ids() {
        let cube = tree.cube(id);
        if !cube.members.iter().any(|&p| in_e[p]) {
            continue;
        }
        let len = tree.length(id);
        let witnesses = all.indices_in_ball(tree.center_point(id), m_factor * len);
        if witnesses.iter().any(|&p| dist_e[p] >= delta * len) {
            out.push(id);
        }
    }
    Ok(out)
}

fn cube_mass(tree: &CubeTree, mu: &DiscreteMeasure, id: CubeId) -> f64 {
    mu.mass_of(&tree.cube(id).members)
}

/// Mass of family members inside `delta_prime`, relative to its mass.
pub fn carleson_sum(
    tree: &CubeTree,
    family: &[CubeId],
    mu: &DiscreteMeasure,
    delta_prime: CubeId,
) -> Result<f64> {
    check_same_ground(tree, mu)?;
    let denom = cube_mass(tree, mu, delta_prime);
    if denom <= 0.0 {
        return Err(GmtError::Empty(
            "denominator cube carries no mass".into(),
        ));
    }
    let mut fam: Vec<CubeId> = family.to_vec();
    fam.sort_unstable();
    let total = compensated_sum(
        fam.iter()
            .filter(|&&id| tree.is_descendant(id, delta_prime))
            .map(|&id| cube_mass(tree, mu, id)),
    );
    Ok(total / denom)
}

/// Per-cube Carleson ratios and their sup (the empirical Carleson norm).
#[derive(Debug, Clone)]
pub struct CarlesonReport {
    pub sup: f64,
    pub sup_cube: Option<CubeId>,
    pub rows: Vec<(CubeId, f64)>,
    /// Cubes excluded from the sup because they carry no mass.
    pub zero_mass: Vec<CubeId>,
}

/// Evaluates `carleson_sum` against every positive-mass cube.
pub fn carleson_norm(
    tree: &CubeTree,
    family: &[CubeId],
    mu: &DiscreteMeasure,
) -> Result<CarlesonReport> {
    check_same_ground(tree, mu)?;
    let mut fam: Vec<CubeId> = family.to_vec();
    fam.sort_unstable();
    let fam_masses: Vec<f64> = fam.iter().map(|&id| cube_mass(tree, mu, id)).collect();
    let mut rows = Vec::new();
    let mut zero_mass = Vec::new();
    let mut sup = 0.0f64;
    let mut sup_cube = None;
    for id in tree.ids() {
        let denom = cube_mass(tree, mu, id);
        if denom <= 0.0 {
            zero_mass.push(id);
            continue;
        }
        let total = compensated_sum(
            fam.iter()
                .zip(&fam_masses)
                .filter(|(&f, _)| tree.is_descendant(f, id))
                .map(|(_, &m)| m),
        );
        let ratio = total / denom;
        if ratio > sup {
            sup = ratio;
            sup_cube = Some(id);
        }
        rows.push((id, ratio));
    }
    Ok(CarlesonReport {
        sup,
        sup_cube,
        rows,
        zero_mass,
    })
}

/// Upper-envelope fit of shell mass ratios against shell thickness.
#[derive(Debug, Clone)]
pub struct ShellDecayFit {
    /// Envelope bound: ratios <= t0_hat * t^alpha_hat on the grid.
    pub t0_hat: f64,
    pub alpha_hat: f64,
    /// Largest absolute log-log regression residual.
    pub max_residual: f64,
    /// False when fewer than two grid points had positive shell mass.
    pub defined: bool,
    /// (t, max over cubes of shell ratio) per grid value.
    pub envelope: Vec<(f64, f64)>,
}

/// Computes shell mass ratios mass(members within t*length of the cube
/// complement) / mass(cube) and fits their upper envelope in log-log.
pub fn shell_decay(tree: &CubeTree, mu: &DiscreteMeasure, t_grid: &[f64]) -> Result<ShellDecayFit> {
    check_same_ground(tree, mu)?;
    if t_grid.len() < 4 {
        return Err(invalid_input!(
            "shell fit needs at least 4 grid values, got {}",
            t_grid.len()
        ));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(invalid_input!("shell grid values must lie in (0, 1]"));
    }
    let mut ts: Vec<f64> = t_grid.to_vec();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut env = vec![0.0f64; ts.len()];
    for id in tree.ids() {
        let mass = cube_mass(tree, mu, id);
        if mass <= 0.0 {
            continue;
        }
        let members = &tree.cube(id).members;
        let dists = tree.member_complement_distances(id);
        let len = tree.length(id);
        for (slot, &t) in ts.iter().enumerate() {
            let cutoff = t * len;
            let shell = compensated_sum(
                members
                    .iter()
                    .zip(&dists)
                    .filter(|(_, &d)| d <= cutoff)
                    .map(|(&m, _)| mu.weight(m)),
            );
            env[slot] = env[slot].max(shell / mass);
        }
    }
    let envelope: Vec<(f64, f64)> = ts.iter().copied().zip(env.iter().copied()).collect();
    let positive: Vec<(f64, f64)> = envelope
        .iter()
        .filter(|&&(_, e)| e > 0.0)
        .copied()
        .collect();
    if positive.len() < 2 {
        return Ok(ShellDecayFit {
            t0_hat: f64::NAN,
            alpha_hat: f64::NAN,
            max_residual: f64::NAN,
            defined: false,
            envelope,
        });
    }
    let xs: Vec<f64> = positive.iter().map(|&(t, _)| t.ln()).collect();
    let ys: Vec<f64> = positive.iter().map(|&(_, e)| e.ln()).collect();
    let (a, b, max_residual) = linear_fit(&xs, &ys);
    // Shift the intercept so the fitted power law dominates the envelope.
    let shift = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| y - (a + b * x))
        .fold(0.0f64, f64::max);
    Ok(ShellDecayFit {
        t0_hat: (a + shift).exp(),
        alpha_hat: b,
        max_residual,
        defined: true,
        envelope,
    })
}

/// Smallest cube containing all the given points, or None when they
/// straddle several top cubes.
pub fn containing_cube(tree: &CubeTree, e_idx: &[usize]) -> Option<CubeId> {
    if e_idx.is_empty() {
        return None;
    }
    for level in (0..tree.depth).rev() {
        let first = tree.cube_of_point(level, e_idx[0]);
        if e_idx
            .iter()
            .all(|&p| tree.cube_of_point(level, p) == first)
        {
            return Some(first);
        }
    }
    None
}

/// Refines E by excising points buried under too many porous cubes and
/// the t-shells of the selected cubes, keeping mass ratio >= 1 - tau.
pub fn refine_set(
    tree: &CubeTree,
    e_idx: &[usize],
    mu: &DiscreteMeasure,
    cfg: &PorosityConfig,
) -> Result<RefinementResult> {
    check_same_ground(tree, mu)?;
    if cfg.m_factor <= 1.0 {
        return Err(invalid_input!("dilation factor must exceed 1"));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(invalid_input!("porosity depth must lie in (0,1)"));
    }
    if !(cfg.tau > 0.0 && cfg.tau < 1.0) {
        return Err(invalid_input!("mass-loss budget tau must lie in (0,1)"));
    }
    if !(cfg.t > 0.0 && cfg.t < 1.0) {
        return Err(invalid_input!("shell thickness t must lie in (0,1)"));
    }
    if !(cfg.rho > 0.0 && cfg.rho <= 1.0) {
        return Err(invalid_input!("mass floor rho must lie in (0,1]"));
    }
    let e = checked_index_set(tree.n_points(), e_idx)?;
    if e.is_empty() {
        return Err(GmtError::Empty("refinement input set".into()));
    }
    let mass_e = mu.mass_of(&e);
    let root = containing_cube(tree, &e);
    let root_mass = match root {
        Some(id) => cube_mass(tree, mu, id),
        None => mu.total(),
    };
    if !(mass_e > 0.0) || mass_e / root_mass < cfg.rho {
        return Err(invalid_input!(
            "set mass fraction {} under its root is below rho = {}",
            mass_e / root_mass,
            cfg.rho
        ));
    }

    let porous = porous_cubes(tree, &e, cfg.m_factor, cfg.delta)?;
    let in_p: HashSet<CubeId> = porous.iter().copied().collect();
    let c1 = if porous.is_empty() {
        0.0
    } else {
        carleson_norm(tree, &porous, mu)?.sup
    };
    // Least integer strictly above 2 c1 / (tau rho).
    let n_bound = (2.0 * c1 / (cfg.tau * cfg.rho)).floor() as usize + 1;

    // A point is excised when the porous cubes properly containing its
    // finest cube (strict ancestors in the chain) number at least n_bound.
    let finest = tree.depth - 1;
    let chain_p_count = |p: usize| -> usize {
        (0..tree.depth)
            .filter(|&lvl| in_p.contains(&tree.cube_of_point(lvl, p)))
            .count()
    };
    let proper_count = |p: usize| -> usize {
        (0..finest)
            .filter(|&lvl| in_p.contains(&tree.cube_of_point(lvl, p)))
            .count()
    };
    let e_n: Vec<usize> = e
        .iter()
        .copied()
        .filter(|&p| proper_count(p) < n_bound)
        .collect();

    let mut in_en = vec![false; tree.n_points()];
    for &p in &e_n {
        in_en[p] = true;
    }
    let t_cubes: Vec<CubeId> = porous
        .iter()
        .copied()
        .filter(|&id| {
            let under_root = match root {
                Some(r) => tree.is_descendant(id, r),
                None => true,
            };
            under_root && tree.cube(id).members.iter().any(|&p| in_en[p])
        })
        .collect();

    // Excise the t-shell of every selected cube.
    let mut in_shell = vec![false; tree.n_points()];
    for &id in &t_cubes {
        let cutoff = cfg.t * tree.length(id);
        let dists = tree.member_complement_distances(id);
        for (&m, &d) in tree.cube(id).members.iter().zip(&dists) {
            if d <= cutoff {
                in_shell[m] = true;
            }
        }
    }
    let e_prime: Vec<usize> = e_n.iter().copied().filter(|&p| !in_shell[p]).collect();

    let mass_ratio = mu.mass_of(&e_prime) / mass_e;
    if mass_ratio < 1.0 - cfg.tau {
        return Err(GmtError::RefinementShortfall {
            achieved: mass_ratio,
            required: 1.0 - cfg.tau,
            t_used: cfg.t,
        });
    }
    // Exact invariant checks: subset chain and the membership bound.
    let e_set: HashSet<usize> = e.iter().copied().collect();
    debug_assert!(e_n.iter().all(|p| e_set.contains(p)));
    let en_set: HashSet<usize> = e_n.iter().copied().collect();
    if !e_prime.iter().all(|p| en_set.contains(p)) || !e_n.iter().all(|p| e_set.contains(p)) {
        return Err(invalid_input!("refinement subset chain violated"));
    }
    let t_set: HashSet<CubeId> = t_cubes.iter().copied().collect();
    for &p in &e_prime {
        let count = (0..tree.depth)
            .filter(|&lvl| t_set.contains(&tree.cube_of_point(lvl, p)))
            .count();
        if count > n_bound {
            return Err(invalid_input!(
                "point {p} lies in {count} selected cubes, above the bound {n_bound}"
            ));
        }
        let _ = chain_p_count(p);
    }

    Ok(RefinementResult {
        e_prime,
        e_n,
        t_cubes,
        n_bound,
        t_used: cfg.t,
        mass_ratio,
        root,
        carleson_c1: c1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubetree::build_cube_tree;

    fn circle_cloud(n: usize) -> PointCloud {
        let w = 2.0 * std::f64::consts::PI / n as f64;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let a = w * i as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        PointCloud::uniform(&pts, 2.0 * std::f64::consts::PI).unwrap()
    }

    fn circle_measure(n: usize) -> (PointCloud, DiscreteMeasure) {
        let cloud = circle_cloud(n);
        let mu = DiscreteMeasure::from_cloud(&cloud).unwrap();
        (cloud, mu)
    }

    fn semicircle(n: usize) -> Vec<usize> {
        // Points with nonnegative x coordinate.
        let cloud = circle_cloud(n);
        (0..n).filter(|&i| cloud.point(i)[0] >= 0.0).collect()
    }

    #[test]
    fn point_mass_doubling_is_one() {
        let cloud = PointCloud::from_points(&[vec![0.0, 0.0]], vec![1.0]).unwrap();
        let mu = DiscreteMeasure::from_cloud(&cloud).unwrap();
        let region = Ball::new(vec![0.0, 0.0], 1.0);
        let prof = estimate_doubling(&mu, &cloud, &region, &[0.1, 0.5]).unwrap();
        assert_eq!(prof.c_mu, 1.0);
        assert_eq!(prof.beta0, 0.0);
    }

    #[test]
    fn circle_arclength_doubling_near_two() {
        let (cloud, mu) = circle_measure(256);
        let region = Ball::new(vec![0.0, 0.0], 1.5);
        let scales = [0.15, 0.2, 0.3, 0.4, 0.5];
        let prof = estimate_doubling(&mu, &cloud, &region, &scales).unwrap();
        assert!(
            prof.c_mu >= 2.0 && prof.c_mu <= 2.2,
            "c_mu = {}",
            prof.c_mu
        );
        assert_eq!(prof.skipped, 0);
    }

    #[test]
    fn grid_doubling_near_four() {
        let m = 101;
        let step = 1.0 / (m - 1) as f64;
        let pts: Vec<Vec<f64>> = (0..m * m)
            .map(|k| vec![(k % m) as f64 * step, (k / m) as f64 * step])
            .collect();
        let cloud = PointCloud::uniform(&pts, 1.0).unwrap();
        let mu = DiscreteMeasure::from_cloud(&cloud).unwrap();
        let region = Ball::new(vec![0.5, 0.5], 0.02);
        let prof = estimate_doubling(&mu, &cloud, &region, &[0.12, 0.18]).unwrap();
        assert!(
            (prof.c_mu - 4.0).abs() <= 0.4,
            "c_mu = {} not within 10% of 4",
            prof.c_mu
        );
    }

    #[test]
    fn lambda_zero_cases() {
        let (cloud, _) = circle_measure(64);
        let tree = build_cube_tree(&cloud, 0.25, 4).unwrap();
        let all: Vec<usize> = (0..64).collect();
        // E = everything: the complement family is empty.
        let top = tree.top_ids()[0];
        assert_eq!(
            lambda_coefficient(&tree, &all, top, 2.0, 2.0).unwrap(),
            0.0
        );
        // Complement Whitney of an empty set is the top level.
        assert_eq!(complement_whitney(&tree, &[], 2.0).unwrap(), tree.top_ids());
    }

    #[test]
    fn lambda_matches_direct_enumeration() {
        let (cloud, _) = circle_measure(64);
        let tree = build_cube_tree(&cloud, 0.25, 4).unwrap();
        let e = semicircle(64);
        let m = 2.0;
        let beta = 2.5;
        // Independent maximality scan: a cube is in W(E^c) iff its dilated
        // ball misses E while the parent's does not.
        let misses = |id: CubeId| -> bool {
            let z = tree.center_point(id);
            let r = m * tree.length(id);
            !e.iter().any(|&p| dist(tree.cloud.point(p), z) <= r)
        };
        let w_oracle: Vec<CubeId> = tree
            .ids()
            .into_iter()
            .filter(|&id| {
                misses(id)
                    && match tree.parent_of(id) {
                        Some(pa) => !misses(pa),
                        None => true,
                    }
            })
            .collect();
        assert_eq!(complement_whitney(&tree, &e, m).unwrap(), w_oracle);
        // Pick a cube near the edge of E and compare the packing sum.
        let delta = tree.cube_of_point(tree.depth - 1, e[0]);
        let zeta = tree.center_point(delta);
        let expected: f64 = w_oracle
            .iter()
            .filter(|&&wid| {
                tree.cube(wid)
                    .members
                    .iter()
                    .all(|&p| dist(tree.cloud.point(p), zeta) <= m * tree.length(delta))
            })
            .map(|&wid| (tree.length(wid) / tree.length(delta)).powf(beta))
            .sum();
        let got = lambda_coefficient(&tree, &e, delta, m, beta).unwrap();
        assert!((got - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }

    #[test]
    fn porous_cube_scan_matches_definition() {
        let (cloud, _) = circle_measure(64);
        let tree = build_cube_tree(&cloud, 0.25, 4).unwrap();
        let all: Vec<usize> = (0..64).collect();
        assert!(porous_cubes(&tree, &all, 2.0, 0.1).unwrap().is_empty());

        let e = vec![0usize];
        let got = porous_cubes(&tree, &e, 2.0, 0.1).unwrap();
        let expected: Vec<CubeId> = tree
            .ids()
            .into_iter()
            .filter(|&id| {
                let meets = tree.cube(id).members.contains(&0);
                let len = tree.length(id);
                let z = tree.center_point(id);
                let witness = (0..64).any(|p| {
                    dist(tree.cloud.point(p), z) <= 2.0 * len
                        && dist(tree.cloud.point(p), tree.cloud.point(0)) >= 0.1 * len
                });
                meets && witness
            })
            .collect();
        assert_eq!(got, expected);
        assert!(!got.is_empty());
    }

    #[test]
    fn carleson_sum_trivial_cases() {
        let (cloud, mu) = circle_measure(64);
        let tree = build_cube_tree(&cloud, 0.25, 4).unwrap();
        let top = tree.top_ids()[0];
        assert_eq!(carleson_sum(&tree, &[], &mu, top).unwrap(), 0.0);
        let one = carleson_sum(&tree, &[top], &mu, top).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shell_ratios_bounded_and_decaying() {
        let (cloud, mu) = circle_measure(256);
        let tree = build_cube_tree(&cloud, 0.25, 4).unwrap();
        let fit = shell_decay(&tree, &mu, &[0.05, 0.1, 0.2, 0.4, 0.8, 1.0]).unwrap();
        assert!(fit.defined);
        // Containment keeps every ratio at or below one.
        for &(_, e) in &fit.envelope {
            assert!(e <= 1.0 + 1e-12);
        }
        // The fitted envelope dominates the data on the grid.
        for &(t, e) in fit.envelope.iter().filter(|&&(_, e)| e > 0.0) {
            assert!(e <= fit.t0_hat * t.powf(fit.alpha_hat) * (1.0 + 1e-9));
        }
        assert!(fit.alpha_hat > 0.0);
    }

    #[test]
    fn point_supported_measure_has_empty_shells() {
        let cloud = circle_cloud(32);
        let mut weights = vec![0.0; 32];
        weights[0] = 1.0;
        let heavy = PointCloud::from_points(&cloud.to_vecs(), weights).unwrap();
        let mu = DiscreteMeasure::from_cloud(&heavy).unwrap();
        let tree = build_cube_tree(&cloud, 0.25, 3).unwrap();
        // Thin shells never reach a cube center, so no mass is shed.
        let c1 = tree.c1_achieved;
        let grid = [0.1 * c1, 0.2 * c1, 0.4 * c1, 0.8 * c1];
        let fit = shell_decay(&tree, &mu, &grid).unwrap();
        assert!(!fit.defined);
        assert!(fit.envelope.iter().all(|&(_, e)| e == 0.0));
    }

    #[test]
    fn refine_whole_space_is_identity() {
        let (cloud, mu) = circle_measure(64);
        let tree = build_cube_tree(&cloud, 0.25, 4).unwrap();
        let all: Vec<usize> = (0..64).collect();
        let cfg = PorosityConfig {
            m_factor: 2.0,
            delta: 0.1,
            beta: 2.5,
            tau: 0.1,
            t: 0.1,
            rho: 0.5,
        };
        let res = refine_set(&tree, &all, &mu, &cfg).unwrap();
        assert_eq!(res.e_prime, all);
        assert!(res.t_cubes.is_empty());
        assert_eq!(res.mass_ratio, 1.0);
        assert_eq!(res.carleson_c1, 0.0);
    }

    #[test]
    fn refine_semicircle_keeps_mass() {
        let (cloud, mu) = circle_measure(256);
        let tree = build_cube_tree(&cloud, 0.25, 4).unwrap();
        let e = semicircle(256);
        let cfg = PorosityConfig {
            m_factor: 2.0,
            delta: 0.05,
            beta: 2.5,
            tau: 0.1,
            t: 0.02,
            rho: 0.05,
        };
        let res = refine_set(&tree, &e, &mu, &cfg).unwrap();
        assert!(res.mass_ratio >= 0.9);
        // Every kept point is in E and under the membership bound.
        let t_set: HashSet<CubeId> = res.t_cubes.iter().copied().collect();
        for &p in &res.e_prime {
            assert!(e.contains(&p));
            let count = (0..tree.depth)
                .filter(|&lvl| t_set.contains(&tree.cube_of_point(lvl, p)))
                .count();
            assert!(count <= res.n_bound);
        }
    }

    #[test]
    fn refine_rejects_low_mass_fraction() {
        let (cloud, mu) = circle_measure(64);
        let tree = build_cube_tree(&cloud, 0.25, 3).unwrap();
        let cfg = PorosityConfig {
            m_factor: 2.0,
            delta: 0.1,
            beta: 2.5,
            tau: 0.5,
            t: 0.1,
            rho: 0.9,
        };
        // A two-point set holds far less than 90% of its root's mass.
        let err = refine_set(&tree, &[0, 1], &mu, &cfg).unwrap_err();
        assert!(matches!(err, GmtError::InvalidInput(_)));
    }
}
