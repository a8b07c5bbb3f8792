//! Monte Carlo harmonic measure via walk-on-spheres, plus the empirical
//! boundary-comparison suite built on it: local doubling tables, the
//! ratio/positivity/Harnack comparisons at corkscrew poles, the two-domain
//! maximum-principle sandwich, and scatter experiments relating measure
//! ratios to content ratios over cube-tree test sets.
//!
//! Every estimator accumulates exact integer hit counts per indicator and
//! derives each walk from a counter-based substream of one global seed, so
//! results do not depend on thread count or evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cloud::PointCloud;
use crate::cubetree::{CubeId, CubeTree};
use crate::domain::ImplicitDomain;
use crate::error::{GmtError, Result};
use crate::geom::dist;
use crate::hausdorff::hausdorff_estimate;
use crate::invalid_input;
use crate::tol::{STAT_SIGMA, WOS_ESCAPE_FACTOR, WOS_MAX_STEPS, WOS_SHELL_FRAC};
use crate::util::splitmix64;
use crate::whitney::{find_corkscrew, CorkscrewSide};

/// Boundary-set membership oracle applied to walk exit points.
pub type Indicator<'a> = dyn Fn(&[f64]) -> bool + Sync + 'a;

/// Minimum ensemble size accepted by the estimators.
pub const MIN_WALKS: u64 = 1_000;

/// Indeterminacy threshold: a mass below this many standard errors of
/// itself cannot serve as a denominator.
const DENOM_SIGMA: f64 = 10.0;

/// Walk stopping and escape parameters.
#[derive(Debug, Clone, Serialize)]
pub struct WosSettings {
    /// Walks stop once |sdist| <= eps_shell and project to the boundary.
    pub eps_shell: f64,
    /// Walks straying this far from their start are tallied as escaped.
    pub escape_radius: f64,
    /// Step cap per walk; exceeding it also counts as escaped.
    pub max_steps: usize,
}

impl WosSettings {
    /// Defaults scaled to the domain's bounding box.
    ///
    /// For domains assembled from overlapping dilated cubes, pick
    /// `eps_shell` below half the smallest overlap margin instead
    /// (`SawtoothDomain::min_cube_side` / 32), so the stopping shell
    /// cannot swallow a seam between cubes.
    pub fn for_domain(domain: &ImplicitDomain) -> Self {
        let scale = domain.bbox.max_side().max(f64::MIN_POSITIVE);
        WosSettings {
            eps_shell: WOS_SHELL_FRAC * scale,
            escape_radius: WOS_ESCAPE_FACTOR * scale,
            max_steps: WOS_MAX_STEPS,
        }
    }

    pub fn with_eps_shell(mut self, eps_shell: f64) -> Self {
        self.eps_shell = eps_shell;
        self
    }

    pub fn with_escape_radius(mut self, escape_radius: f64) -> Self {
        self.escape_radius = escape_radius;
        self
    }
}

/// One harmonic-measure estimate with its Monte Carlo error.
#[derive(Debug, Clone, Serialize)]
pub struct WosEstimate {
    /// hits / n_walks; escaped walks count toward no boundary set.
    pub value: f64,
    pub n_walks: u64,
    /// Binomial error sqrt(value (1 - value) / n_walks).
    pub std_err: f64,
    pub eps_shell: f64,
    /// None when walks were never capped by distance.
    pub escape_radius: Option<f64>,
    pub seed: u64,
    /// Exit samples landing in the set.
    pub hits: u64,
    /// Walks that hit the step cap or the escape radius.
    pub escaped: u64,
    pub escaped_fraction: f64,
    /// Set when more than half the ensemble escaped.
    pub unreliable: bool,
}

impl WosEstimate {
    fn from_counts(
        hits: u64,
        escaped: u64,
        n_walks: u64,
        settings: &WosSettings,
        seed: u64,
    ) -> Self {
        let n = n_walks as f64;
        let value = hits as f64 / n;
        let escaped_fraction = escaped as f64 / n;
        WosEstimate {
            value,
            n_walks,
            std_err: (value * (1.0 - value) / n).sqrt(),
            eps_shell: settings.eps_shell,
            escape_radius: settings
                .escape_radius
                .is_finite()
                .then_some(settings.escape_radius),
            seed,
            hits,
            escaped,
            escaped_fraction,
            unreliable: escaped_fraction > 0.5,
        }
    }

    /// True when the value clears the denominator threshold.
    pub fn determinate(&self) -> bool {
        self.value > 0.0 && self.value >= DENOM_SIGMA * self.std_err
    }
}

/// Uniform direction on the unit sphere from paired Gaussians.
fn uniform_direction(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let mut v = Vec::with_capacity(dim);
        while v.len() < dim {
            // Box-Muller; 1 - u keeps the logarithm finite.
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen();
            let m = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
            v.push(m * c);
            if v.len() < dim {
                v.push(m * s);
            }
        }
        let n = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if n > 1e-12 {
            for t in &mut v {
                *t /= n;
            }
            return v;
        }
    }
}

/// Projects a near-boundary point onto the zero set of the signed
/// distance by damped Newton steps on central-difference gradients;
/// returns the iterate with the smallest |sdist| seen.
pub fn project_to_boundary(domain: &ImplicitDomain, x: &[f64]) -> Vec<f64> {
    let dim = domain.dim;
    let mut p = x.to_vec();
    let mut best = p.clone();
    let mut best_abs = domain.sdist(&p).abs();
    for _ in 0..12 {
        let s = domain.sdist(&p);
        if s.abs() < best_abs {
            best_abs = s.abs();
            best.copy_from_slice(&p);
        }
        if s == 0.0 {
            return p;
        }
        let step = 1e-7 * (1.0 + p.iter().fold(0.0f64, |m, t| m.max(t.abs())));
        let mut grad = vec![0.0; dim];
        let mut g2 = 0.0;
        for j in 0..dim {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[j] += step;
            lo[j] -= step;
            grad[j] = (domain.sdist(&hi) - domain.sdist(&lo)) / (2.0 * step);
            g2 += grad[j] * grad[j];
        }
        if g2 < 1e-12 {
            break;
        }
        for j in 0..dim {
            p[j] -= s * grad[j] / g2;
        }
    }
    if domain.sdist(&p).abs() < best_abs {
        p
    } else {
        best
    }
}

fn validate_start(domain: &ImplicitDomain, z: &[f64], settings: &WosSettings) -> Result<()> {
    if z.len() != domain.dim {
        return Err(invalid_input!(
            "start point dimension {} does not match the domain ({})",
            z.len(),
            domain.dim
        ));
    }
    if z.iter().any(|t| !t.is_finite()) {
        return Err(invalid_input!("start point must have finite coordinates"));
    }
    let s = domain.sdist(z);
    if !(s < -settings.eps_shell) {
        return Err(invalid_input!(
            "start point must lie strictly inside the domain below the stopping \
             shell (sdist {s}, eps_shell {})",
            settings.eps_shell
        ));
    }
    Ok(())
}

/// One walk; None means it escaped by distance or step count.
fn walk(
    domain: &ImplicitDomain,
    z: &[f64],
    settings: &WosSettings,
    rng: &mut impl Rng,
) -> Option<Vec<f64>> {
    let mut x = z.to_vec();
    for _ in 0..settings.max_steps {
        let s = domain.sdist(&x);
        if s >= -settings.eps_shell {
            return Some(project_to_boundary(domain, &x));
        }
        let dir = uniform_direction(domain.dim, rng);
        for (xj, dj) in x.iter_mut().zip(&dir) {
            *xj += -s * dj;
        }
        if dist(&x, z) > settings.escape_radius {
            return None;
        }
    }
    None
}

/// Draws one exit sample; None when the walk escapes.
pub fn wos_sample(
    domain: &ImplicitDomain,
    z: &[f64],
    settings: &WosSettings,
    rng: &mut impl Rng,
) -> Result<Option<Vec<f64>>> {
    validate_start(domain, z, settings)?;
    Ok(walk(domain, z, settings, rng))
}

/// Runs the ensemble and folds exact per-indicator hit counts.
fn run_indicator_walks(
    domain: &ImplicitDomain,
    z: &[f64],
    indicators: &[&Indicator],
    n_walks: u64,
    seed: u64,
    settings: &WosSettings,
) -> (Vec<u64>, u64) {
    let m = indicators.len();
    (0..n_walks)
        .into_par_iter()
        .fold(
            || (vec![0u64; m], 0u64),
            |(mut hits, mut escaped), k| {
                let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed, k));
                match walk(domain, z, settings, &mut rng) {
                    Some(exit) => {
                        for (h, ind) in hits.iter_mut().zip(indicators) {
                            if ind(&exit) {
                                *h += 1;
                            }
                        }
                    }
                    None => escaped += 1,
                }
                (hits, escaped)
            },
        )
        .reduce(
            || (vec![0u64; m], 0u64),
            |(mut ha, ea), (hb, eb)| {
                for (a, b) in ha.iter_mut().zip(hb) {
                    *a += b;
                }
                (ha, ea + eb)
            },
        )
}

/// Exit points of a fixed ensemble in walk order; None marks escapes.
pub fn exit_points(
    domain: &ImplicitDomain,
    z: &[f64],
    n_walks: u64,
    seed: u64,
    settings: &WosSettings,
) -> Result<Vec<Option<Vec<f64>>>> {
    validate_start(domain, z, settings)?;
    Ok((0..n_walks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed, k));
            walk(domain, z, settings, &mut rng)
        })
        .collect())
}

/// Estimates the measures of several boundary sets from one shared
/// ensemble, so disjoint-set additivity holds exactly per seed.
pub fn harmonic_measure_batch_with(
    domain: &ImplicitDomain,
    z: &[f64],
    sets: &[&Indicator],
    n_walks: u64,
    seed: u64,
    settings: &WosSettings,
) -> Result<Vec<WosEstimate>> {
    if n_walks < MIN_WALKS {
        return Err(invalid_input!(
            "need at least {MIN_WALKS} walks, got {n_walks}"
        ));
    }
    validate_start(domain, z, settings)?;
    let (hits, escaped) = run_indicator_walks(domain, z, sets, n_walks, seed, settings);
    Ok(hits
        .into_iter()
        .map(|h| WosEstimate::from_counts(h, escaped, n_walks, settings, seed))
        .collect())
}

/// Batch estimation with settings derived from the bounding box.
pub fn harmonic_measure_batch(
    domain: &ImplicitDomain,
    z: &[f64],
    sets: &[&Indicator],
    n_walks: u64,
    seed: u64,
) -> Result<Vec<WosEstimate>> {
    harmonic_measure_batch_with(domain, z, sets, n_walks, seed, &WosSettings::for_domain(domain))
}

/// Estimates the harmonic measure of one boundary set seen from z.
pub fn harmonic_measure_with(
    domain: &ImplicitDomain,
    z: &[f64],
    set: &Indicator,
    n_walks: u64,
    seed: u64,
    settings: &WosSettings,
) -> Result<WosEstimate> {
    let mut out = harmonic_measure_batch_with(domain, z, &[set], n_walks, seed, settings)?;
    Ok(out.pop().expect("one estimate per indicator"))
}

/// Single-set estimation with settings derived from the bounding box.
pub fn harmonic_measure(
    domain: &ImplicitDomain,
    z: &[f64],
    set: &Indicator,
    n_walks: u64,
    seed: u64,
) -> Result<WosEstimate> {
    harmonic_measure_with(domain, z, set, n_walks, seed, &WosSettings::for_domain(domain))
}

/// Exact mass of [a, b] x {0} on the upper half-plane seen from z,
/// from the Cauchy exit law.
pub fn halfplane_interval_mass(z: &[f64], a: f64, b: f64) -> f64 {
    let t1 = ((b - z[0]) / z[1]).atan();
    let t0 = ((a - z[0]) / z[1]).atan();
    (t1 - t0) / std::f64::consts::PI
}

/// Mass of the unit-circle arc {e^{it} : theta0 <= t <= theta1} seen
/// from z inside the disk, by composite Simpson quadrature of the
/// Poisson kernel.
pub fn disk_poisson_arc_mass(z: &[f64], theta0: f64, theta1: f64) -> f64 {
    let r2 = z[0] * z[0] + z[1] * z[1];
    let kernel = |t: f64| {
        let dx = z[0] - t.cos();
        let dy = z[1] - t.sin();
        (1.0 - r2) / (std::f64::consts::TAU * (dx * dx + dy * dy))
    };
    let n = 4096usize;
    let step = (theta1 - theta0) / n as f64;
    let mut acc = kernel(theta0) + kernel(theta1);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * kernel(theta0 + step * i as f64);
    }
    acc * step / 3.0
}

/// One (xi, r) sample of the local doubling ratio of harmonic measure.
#[derive(Debug, Clone, Serialize)]
pub struct DoublingRow {
    pub xi: Vec<f64>,
    pub r: f64,
    pub mass_single: f64,
    pub mass_double: f64,
    pub se_single: f64,
    pub se_double: f64,
    /// mass_double / mass_single; None when the denominator is
    /// indeterminate (below 10 standard errors).
    pub ratio: Option<f64>,
    /// Delta-method error of the ratio for nested events.
    pub ratio_se: Option<f64>,
    /// Pole separation respects dist(z0, xi) >= 4 r.
    pub admissible: bool,
}

/// Doubling ratios of harmonic measure over a (center, radius) grid,
/// measured from a single pole with one shared ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct DoublingTable {
    pub rows: Vec<DoublingRow>,
    /// Largest determinate ratio among admissible rows.
    pub sup_ratio: Option<f64>,
    pub indeterminate: usize,
    pub n_walks: u64,
    pub seed: u64,
}

/// Estimates omega(B(xi, 2r)) / omega(B(xi, r)) over the grid.
pub fn doubling_profile_omega(
    domain: &ImplicitDomain,
    z0: &[f64],
    centers: &[Vec<f64>],
    radii: &[f64],
    n_walks: u64,
    seed: u64,
    settings: &WosSettings,
) -> Result<DoublingTable> {
    if centers.is_empty() || radii.is_empty() {
        return Err(GmtError::Empty("doubling grid".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid_input!("doubling radii must be positive"));
    }
    let mut specs: Vec<(Vec<f64>, f64)> = Vec::new();
    for xi in centers {
        if xi.len() != domain.dim {
            return Err(invalid_input!(
                "doubling center dimension {} does not match the domain ({})",
                xi.len(),
                domain.dim
            ));
        }
        for &r in radii {
            specs.push((xi.clone(), r));
        }
    }
    let indicators: Vec<Box<Indicator<'_>>> = specs
        .iter()
        .flat_map(|(xi, r)| {
            let (xi_s, r_s) = (xi.clone(), *r);
            let (xi_d, r_d) = (xi.clone(), 2.0 * *r);
            [
                Box::new(move |x: &[f64]| dist(x, &xi_s) <= r_s) as Box<Indicator<'_>>,
                Box::new(move |x: &[f64]| dist(x, &xi_d) <= r_d) as Box<Indicator<'_>>,
            ]
        })
        .collect();
    let refs: Vec<&Indicator> = indicators.iter().map(|b| b.as_ref()).collect();
    let ests = harmonic_measure_batch_with(domain, z0, &refs, n_walks, seed, settings)?;

    let n = n_walks as f64;
    let mut rows = Vec::with_capacity(specs.len());
    let mut sup_ratio: Option<f64> = None;
    let mut indeterminate = 0usize;
    for (k, (xi, r)) in specs.iter().enumerate() {
        let single = &ests[2 * k];
        let double = &ests[2 * k + 1];
        let (ratio, ratio_se) = if single.determinate() {
            let rr = double.value / single.value;
            // Single is nested in double, so
            // Var(R)/R^2 = (1-p_s)/(n p_s) - (1-p_d)/(n p_d).
            let rel = ((1.0 - single.value) / (n * single.value)
                - (1.0 - double.value) / (n * double.value))
                .max(0.0);
            (Some(rr), Some(rr * rel.sqrt()))
        } else {
            indeterminate += 1;
            (None, None)
        };
        let admissible = dist(z0, xi) >= 4.0 * r;
        if admissible {
            if let Some(rr) = ratio {
                sup_ratio = Some(sup_ratio.map_or(rr, |s| s.max(rr)));
            }
        }
        rows.push(DoublingRow {
            xi: xi.clone(),
            r: *r,
            mass_single: single.value,
            mass_double: double.value,
            se_single: single.std_err,
            se_double: double.std_err,
            ratio,
            ratio_se,
            admissible,
        });
    }
    Ok(DoublingTable {
        rows,
        sup_ratio,
        indeterminate,
        n_walks,
        seed,
    })
}

/// Inputs for the boundary comparison experiments.
#[derive(Debug, Clone)]
pub struct ComparisonConfig {
    /// Reference pole, far from the sampled boundary balls.
    pub z0: Vec<f64>,
    /// Boundary centers xi.
    pub centers: Vec<Vec<f64>>,
    /// Ball radii sampled at every center.
    pub radii: Vec<f64>,
    pub n_walks: u64,
    pub seed: u64,
    /// Corkscrew constant used to place the near-boundary poles.
    pub c_factor: f64,
}

/// Which comparison a row instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ComparisonKind {
    /// omega^{z0}(E) / omega^{z0}(B(xi, r)) against omega^{z}(E) at the
    /// corkscrew pole z of B(xi, r), with E = B(xi, r/2).
    Ratio,
    /// omega^{z}(B(xi, r)) at its own corkscrew pole, against 1.
    Big,
    /// The same set seen from the two corkscrew poles of consecutive
    /// centers at one scale.
    Harnack,
}

/// One two-sided comparison with Monte Carlo errors.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub kind: ComparisonKind,
    pub xi: Vec<f64>,
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    pub determinate: bool,
}

/// Empirical comparability constants over the sampled grid.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    /// (min, max) of lhs/rhs over determinate Ratio rows.
    pub ratio_bounds: Option<(f64, f64)>,
    /// Smallest omega^{z}(B) over Big rows.
    pub big_min: Option<f64>,
    /// Largest two-sided pole ratio over determinate Harnack rows.
    pub harnack_max: Option<f64>,
    /// Grid points dropped because no corkscrew ball was found.
    pub skipped_corkscrew: usize,
    pub indeterminate: usize,
    pub n_walks: u64,
    pub seed: u64,
}

/// Runs the ratio, positivity, and Harnack comparisons at corkscrew
/// poles over the configured (center, radius) grid.
pub fn comparison_suite(
    domain: &ImplicitDomain,
    config: &ComparisonConfig,
) -> Result<ComparisonReport> {
    if config.centers.is_empty() || config.radii.is_empty() {
        return Err(GmtError::Empty("comparison grid".into()));
    }
    if config.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid_input!("comparison radii must be positive"));
    }
    let settings = WosSettings::for_domain(domain);

    // Reference ensemble from z0 sees E and B of every grid point.
    let mut specs: Vec<(Vec<f64>, f64)> = Vec::new();
    for &r in &config.radii {
        for xi in &config.centers {
            if xi.len() != domain.dim {
                return Err(invalid_input!(
                    "comparison center dimension {} does not match the domain ({})",
                    xi.len(),
                    domain.dim
                ));
            }
            specs.push((xi.clone(), r));
        }
    }
    let ref_indicators: Vec<Box<Indicator<'_>>> = specs
        .iter()
        .flat_map(|(xi, r)| {
            let (xi_e, r_e) = (xi.clone(), 0.5 * *r);
            let (xi_b, r_b) = (xi.clone(), *r);
            [
                Box::new(move |x: &[f64]| dist(x, &xi_e) <= r_e) as Box<Indicator<'_>>,
                Box::new(move |x: &[f64]| dist(x, &xi_b) <= r_b) as Box<Indicator<'_>>,
            ]
        })
        .collect();
    let ref_refs: Vec<&Indicator> = ref_indicators.iter().map(|b| b.as_ref()).collect();
    let ref_ests = harmonic_measure_batch_with(
        domain,
        &config.z0,
        &ref_refs,
        config.n_walks,
        splitmix64(config.seed, 0),
        &settings,
    )?;

    let n = config.n_walks as f64;
    let mut rows = Vec::new();
    let mut ratio_bounds: Option<(f64, f64)> = None;
    let mut big_min: Option<f64> = None;
    let mut harnack_max: Option<f64> = None;
    let mut skipped = 0usize;
    let mut indeterminate = 0usize;

    for (jr, &r) in config.radii.iter().enumerate() {
        // Chain state at this scale: previous center's pole and its own
        // estimate of its near set E.
        let mut prev: Option<(Vec<f64>, f64, WosEstimate)> = None;
        for (i, xi) in config.centers.iter().enumerate() {
            let pair_idx = (jr * config.centers.len() + i) as u64;
            let cork = find_corkscrew(domain, xi, r, CorkscrewSide::Interior, config.c_factor)?;
            let Some(ball) = cork else {
                skipped += 1;
                prev = None;
                continue;
            };
            let z = ball.center.clone();

            let (xi_e, r_e) = (xi.clone(), 0.5 * r);
            let (xi_b, r_b) = (xi.clone(), r);
            let ind_e = move |x: &[f64]| dist(x, &xi_e) <= r_e;
            let ind_b = move |x: &[f64]| dist(x, &xi_b) <= r_b;
            let mut local: Vec<Box<Indicator<'_>>> =
                vec![Box::new(ind_e), Box::new(ind_b)];
            if let Some((prev_xi, prev_r, _)) = &prev {
                let (xi_p, r_p) = (prev_xi.clone(), 0.5 * *prev_r);
                local.push(Box::new(move |x: &[f64]| dist(x, &xi_p) <= r_p));
            }
            let local_refs: Vec<&Indicator> = local.iter().map(|b| b.as_ref()).collect();
            let local_ests = harmonic_measure_batch_with(
                domain,
                &z,
                &local_refs,
                config.n_walks,
                splitmix64(config.seed, 1 + pair_idx),
                &settings,
            )?;

            let spec_idx = jr * config.centers.len() + i;
            let ref_e = &ref_ests[2 * spec_idx];
            let ref_b = &ref_ests[2 * spec_idx + 1];
            let near_e = &local_ests[0];
            let near_b = &local_ests[1];

            // Ratio row: omega^{z0}(E)/omega^{z0}(B) vs omega^{z}(E).
            let det = ref_b.determinate() && near_e.determinate();
            let (lhs, lhs_se) = if ref_b.determinate() {
                let v = ref_e.value / ref_b.value;
                let rel = ((1.0 - ref_e.value) / (n * ref_e.value.max(f64::MIN_POSITIVE))
                    + (1.0 - ref_b.value) / (n * ref_b.value))
                    .max(0.0);
                (v, v * rel.sqrt())
            } else {
                (f64::NAN, f64::NAN)
            };
            if det {
                let q = lhs / near_e.value;
                ratio_bounds = Some(match ratio_bounds {
                    None => (q, q),
                    Some((lo, hi)) => (lo.min(q), hi.max(q)),
                });
            } else {
                indeterminate += 1;
            }
            rows.push(ComparisonRow {
                kind: ComparisonKind::Ratio,
                xi: xi.clone(),
                r,
                lhs,
                rhs: near_e.value,
                lhs_se,
                rhs_se: near_e.std_err,
                determinate: det,
            });

            // Big row: omega^{z}(B) against 1.
            big_min = Some(big_min.map_or(near_b.value, |m: f64| m.min(near_b.value)));
            rows.push(ComparisonRow {
                kind: ComparisonKind::Big,
                xi: xi.clone(),
                r,
                lhs: near_b.value,
                rhs: 1.0,
                lhs_se: near_b.std_err,
                rhs_se: 0.0,
                determinate: true,
            });

            // Harnack row: previous near set seen from both poles.
            if let Some((prev_xi, _, prev_e)) = &prev {
                let far_e = &local_ests[2];
                let det_h = prev_e.determinate() && far_e.determinate();
                if det_h {
                    let q = (prev_e.value / far_e.value).max(far_e.value / prev_e.value);
                    harnack_max = Some(harnack_max.map_or(q, |m: f64| m.max(q)));
                } else {
                    indeterminate += 1;
                }
                rows.push(ComparisonRow {
                    kind: ComparisonKind::Harnack,
                    xi: prev_xi.clone(),
                    r,
                    lhs: prev_e.value,
                    rhs: far_e.value,
                    lhs_se: prev_e.std_err,
                    rhs_se: far_e.std_err,
                    determinate: det_h,
                });
            }
            prev = Some((xi.clone(), r, near_e.clone()));
        }
    }
    Ok(ComparisonReport {
        rows,
        ratio_bounds,
        big_min,
        harnack_max,
        skipped_corkscrew: skipped,
        indeterminate,
        n_walks: config.n_walks,
        seed: config.seed,
    })
}

/// Outcome of the two-domain maximum-principle comparison.
#[derive(Debug, Clone, Serialize)]
pub struct MaxPrincipleReport {
    pub omega_inner: WosEstimate,
    pub omega_outer: WosEstimate,
    /// omega_outer - omega_inner; nonnegative up to noise when the
    /// inner domain is contained in the outer one.
    pub margin: f64,
    pub sigma_joint: f64,
    pub pass: bool,
}

/// Checks omega_inner(F) <= omega_outer(F) within joint Monte Carlo
/// error for a set F on the shared boundary, seen from a common pole
/// inside the inner domain.
pub fn max_principle_check(
    inner: &ImplicitDomain,
    outer: &ImplicitDomain,
    set: &Indicator,
    set_support: &PointCloud,
    h: f64,
    z: &[f64],
    n_walks: u64,
    seed: u64,
) -> Result<MaxPrincipleReport> {
    if inner.dim != outer.dim {
        return Err(invalid_input!(
            "domain dimensions {} and {} do not match",
            inner.dim,
            outer.dim
        ));
    }
    if !(h > 0.0) {
        return Err(invalid_input!("support scale h must be positive"));
    }
    if set_support.is_empty() {
        return Err(GmtError::Empty("comparison set support".into()));
    }
    let tol = 2.0 * h;
    for p in set_support.iter_points() {
        if inner.sdist(p).abs() > tol || outer.sdist(p).abs() > tol {
            return Err(invalid_input!(
                "support point {p:?} is not on the shared boundary at scale {h}"
            ));
        }
    }
    let est_in = harmonic_measure_with(
        inner,
        z,
        set,
        n_walks,
        splitmix64(seed, 0),
        &WosSettings::for_domain(inner),
    )?;
    let est_out = harmonic_measure_with(
        outer,
        z,
        set,
        n_walks,
        splitmix64(seed, 1),
        &WosSettings::for_domain(outer),
    )?;
    let margin = est_out.value - est_in.value;
    let sigma_joint = (est_in.std_err.powi(2) + est_out.std_err.powi(2)).sqrt();
    let pass = margin + STAT_SIGMA * sigma_joint >= 0.0;
    Ok(MaxPrincipleReport {
        omega_inner: est_in,
        omega_outer: est_out,
        margin,
        sigma_joint,
        pass,
    })
}

/// One scatter sample: measure ratio against content ratio for a test
/// set F carved from a cube-tree cell inside a boundary ball.
#[derive(Debug, Clone, Serialize)]
pub struct AinftyRow {
    pub xi: Vec<f64>,
    pub r: f64,
    pub cube: CubeId,
    pub omega_f: f64,
    pub omega_ball: f64,
    pub se_f: f64,
    pub se_ball: f64,
    /// omega(F) / omega(B(xi, r)); at most 1 because the F indicator
    /// implies the ball indicator pointwise.
    pub omega_ratio: f64,
    /// Content estimate of F divided by r^d.
    pub hd_ratio: f64,
}

/// Empirical modulus at one threshold: the largest cutoff on one ratio
/// that forces the other ratio below epsilon across all rows.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusRow {
    pub epsilon: f64,
    /// Largest delta with: omega_ratio < delta implies hd_ratio < epsilon.
    /// None when no row reaches hd_ratio >= epsilon.
    pub delta_measure_to_content: Option<f64>,
    /// Largest delta with: hd_ratio < delta implies omega_ratio < epsilon.
    /// None when no row reaches omega_ratio >= epsilon.
    pub delta_content_to_measure: Option<f64>,
}

/// Scatter of measure ratios against content ratios with empirical
/// two-direction moduli.
#[derive(Debug, Clone, Serialize)]
pub struct AinftyScatter {
    pub rows: Vec<AinftyRow>,
    /// Rows dropped because the ball mass was indeterminate.
    pub dropped: usize,
    pub moduli: Vec<ModulusRow>,
    pub domain: String,
    pub seed: u64,
}

/// Builds the scatter over all (center, radius, cell-at-level) triples.
/// Test sets are the cell members inside the closed ball; membership of
/// exit points uses the 2h neighborhood of the cell points, and the
/// ball indicator is widened to r + 2h so F implies B pointwise. Cells
/// that miss the ball contribute the degenerate row (0, 0).
pub fn ainfty_scatter(
    domain: &ImplicitDomain,
    tree: &CubeTree,
    level: usize,
    centers: &[Vec<f64>],
    radii: &[f64],
    z0: &[f64],
    h: f64,
    n_walks: u64,
    seed: u64,
    eps_grid: &[f64],
) -> Result<AinftyScatter> {
    if level >= tree.depth {
        return Err(invalid_input!(
            "partition level {level} is outside the tree (depth {})",
            tree.depth
        ));
    }
    if centers.is_empty() || radii.is_empty() {
        return Err(GmtError::Empty("scatter grid".into()));
    }
    if !(h > 0.0) {
        return Err(invalid_input!("membership scale h must be positive"));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid_input!("scatter radii must be positive"));
    }
    if tree.cloud.dim() != domain.dim {
        return Err(invalid_input!(
            "tree cloud dimension {} does not match the domain ({})",
            tree.cloud.dim(),
            domain.dim
        ));
    }
    let d = domain.dim - 1;
    let tol = 2.0 * h;
    let n_cells = tree.levels[level].len();

    // Enumerate triples and carve each test set.
    struct Combo {
        xi: Vec<f64>,
        r: f64,
        cube: CubeId,
        f_points: Vec<Vec<f64>>,
        indicator_slot: Option<usize>,
    }
    let mut combos: Vec<Combo> = Vec::new();
    let mut indicators: Vec<Box<Indicator<'_>>> = Vec::new();
    for xi in centers {
        if xi.len() != domain.dim {
            return Err(invalid_input!(
                "scatter center dimension {} does not match the domain ({})",
                xi.len(),
                domain.dim
            ));
        }
        for &r in radii {
            // Ball indicator shared by every cell at this (xi, r).
            let (xi_b, r_b) = (xi.clone(), r + tol);
            indicators.push(Box::new(move |x: &[f64]| dist(x, &xi_b) <= r_b));
            for idx in 0..n_cells {
                let cube = CubeId { level, idx };
                let f_points: Vec<Vec<f64>> = tree
                    .cube(cube)
                    .members
                    .iter()
                    .map(|&p| tree.cloud.point(p).to_vec())
                    .filter(|p| dist(p, xi) <= r)
                    .collect();
                let indicator_slot = if f_points.is_empty() {
                    None
                } else {
                    let fset = crate::bvh::PointSet::build(f_points.clone());
                    let slot = indicators.len();
                    indicators.push(Box::new(move |x: &[f64]| fset.dist_to(x) <= tol));
                    Some(slot)
                };
                combos.push(Combo {
                    xi: xi.clone(),
                    r,
                    cube,
                    f_points,
                    indicator_slot,
                });
            }
        }
    }

    let refs: Vec<&Indicator> = indicators.iter().map(|b| b.as_ref()).collect();
    let settings = WosSettings::for_domain(domain);
    let ests = harmonic_measure_batch_with(domain, z0, &refs, n_walks, seed, &settings)?;

    let mut rows = Vec::new();
    let mut dropped = 0usize;
    let mut slot = 0usize;
    let mut combo_it = combos.iter();
    for _xi in centers {
        for _r in radii {
            let ball_est = &ests[slot];
            slot += 1;
            for _ in 0..n_cells {
                let combo = combo_it.next().expect("combo per (center, radius, cell)");
                let f_est = combo.indicator_slot.map(|s| &ests[s]);
                if combo.indicator_slot.is_some() {
                    slot += 1;
                }
                if !ball_est.determinate() {
                    dropped += 1;
                    continue;
                }
                let (omega_f, se_f) = match f_est {
                    Some(e) => (e.value, e.std_err),
                    None => (0.0, 0.0),
                };
                let hd = if combo.f_points.is_empty() {
                    0.0
                } else {
                    hausdorff_estimate(combo.f_points.iter().map(|p| p.as_slice()), h, d)?
                };
                rows.push(AinftyRow {
                    xi: combo.xi.clone(),
                    r: combo.r,
                    cube: combo.cube,
                    omega_f,
                    omega_ball: ball_est.value,
                    se_f,
                    se_ball: ball_est.std_err,
                    omega_ratio: omega_f / ball_est.value,
                    hd_ratio: hd / combo.r.powi(d as i32),
                });
            }
        }
    }

    let moduli = eps_grid
        .iter()
        .map(|&epsilon| {
            let m2c = rows
                .iter()
                .filter(|row| row.hd_ratio >= epsilon)
                .map(|row| row.omega_ratio)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |x| x.min(v))));
            let c2m = rows
                .iter()
                .filter(|row| row.omega_ratio >= epsilon)
                .map(|row| row.hd_ratio)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |x| x.min(v))));
            ModulusRow {
                epsilon,
                delta_measure_to_content: m2c,
                delta_content_to_measure: c2m,
            }
        })
        .collect();

    Ok(AinftyScatter {
        rows,
        dropped,
        moduli,
        domain: domain.name.clone(),
        seed,
    })
}
