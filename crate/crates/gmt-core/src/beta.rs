//! Bilateral flatness numbers for point clouds.
//!
//! `bbeta` measures how far a cloud deviates from the best hyperplane
//! through a center at a given scale, in both directions: cloud points far
//! from the plane and plane points far from the cloud. On top of it sit a
//! Carleson-style energy of the non-flat scales and a witness search for
//! cloud points far from a marked subset under a flatness hypothesis.

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::bvh::PointSet;
use crate::cloud::PointCloud;
use crate::error::{GmtError, Result};
use crate::geom::dist;
use crate::invalid_input;

/// Slack allowed between a requested center and its nearest cloud point,
/// relative to 1 + r.
const CENTER_TOL: f64 = 1e-7;

/// Plane-disk sample spacing as a fraction of the scale r.
const PLANE_GRID_FRAC: f64 = 1.0 / 16.0;

/// Normal-search step schedule in radians; each round shrinks by 4x.
const SEARCH_STEP0: f64 = 0.4;
const SEARCH_ROUNDS: usize = 6;
const SEARCH_SWEEPS: usize = 8;

/// Bilateral flatness of a cloud at one center and scale.
#[derive(Debug, Clone, Serialize)]
pub struct BetaRecord {
    /// Center of the evaluation ball.
    pub xi: Vec<f64>,
    /// Scale (ball radius).
    pub r: f64,
    /// Two-sided deviation: cloud-to-plane plus plane-to-cloud, each
    /// normalized by r. Always in [0, 2] up to the center tolerance.
    pub value: f64,
    /// sup over cloud points in the ball of dist(point, plane) / r.
    pub term_cloud_to_plane: f64,
    /// sup over plane-disk samples of dist(sample, cloud) / r.
    pub term_plane_to_cloud: f64,
    /// Unit normal of the minimizing hyperplane (which passes through xi).
    pub normal: Vec<f64>,
    /// Set when the ball holds fewer than dim + 1 points, so no hyperplane
    /// is determined and the seed plane is a fallback.
    pub degenerate: bool,
    /// Number of cloud points in the closed ball.
    pub n_ball_points: usize,
}

/// Carleson-style energy of the non-flat scale-location cells.
#[derive(Debug, Clone, Serialize)]
pub struct CarlesonEnergyReport {
    /// Flatness threshold defining a bad cell.
    pub epsilon: f64,
    /// Center of the region under study.
    pub xi0: Vec<f64>,
    /// Top scale of the dyadic ladder.
    pub r0: f64,
    /// Intended dimension of the cloud (content exponent).
    pub d: usize,
    /// Net spacing used for the center family.
    pub net_h: f64,
    /// Dyadic scales r0 * 2^-j, coarse to fine.
    pub scales: Vec<f64>,
    /// Number of bad cells per scale, same order as `scales`.
    pub bad_counts: Vec<usize>,
    /// Number of net centers.
    pub n_centers: usize,
    /// Sum over bad cells of net_h^d * ln 2 (d-content times the scale
    /// band's logarithmic width).
    pub estimate: f64,
    /// estimate / r0^d, the scale-free energy density.
    pub c_ur_emp: f64,
}

/// Outcome of the far-point search.
#[derive(Debug, Clone, PartialEq)]
pub enum FarPointOutcome {
    /// Cloud index and its distance to the marked subset; distance >= epsilon * r.
    Witness { index: usize, distance: f64 },
    /// A hypothesis failed; nothing can be concluded.
    HypothesesNotMet { reason: String },
    /// Hypotheses verified but no point of the ball is epsilon*r-far; the
    /// best candidate is reported for diagnosis.
    CounterexampleCandidate { index: usize, distance: f64 },
}

/// Far-point search result: the flatness value used by the hypothesis
/// check plus the outcome.
#[derive(Debug, Clone)]
pub struct FarPointReport {
    pub beta_value: f64,
    pub outcome: FarPointOutcome,
}

/// A hyperplane through a point: unit normal plus an orthonormal tangent
/// frame spanning the plane.
struct PlaneFrame {
    normal: Vec<f64>,
    tangents: Vec<Vec<f64>>,
}

impl PlaneFrame {
    fn from_normal(normal: Vec<f64>) -> PlaneFrame {
        let tangents = orthonormal_tangents(&normal);
        PlaneFrame { normal, tangents }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> bool {
    let n = crate::geom::norm(v);
    if n < 1e-14 {
        return false;
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    true
}

/// Deterministic orthonormal basis of the hyperplane with the given unit
/// normal: Gram-Schmidt over the standard basis, skipping directions that
/// collapse onto the span built so far.
fn orthonormal_tangents(normal: &[f64]) -> Vec<Vec<f64>> {
    let dim = normal.len();
    let mut tangents: Vec<Vec<f64>> = Vec::with_capacity(dim - 1);
    for i in 0..dim {
        if tangents.len() == dim - 1 {
            break;
        }
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        let a = dot(&v, normal);
        for (vk, nk) in v.iter_mut().zip(normal) {
            *vk -= a * nk;
        }
        for t in &tangents {
            let a = dot(&v, t);
            for (vk, tk) in v.iter_mut().zip(t) {
                *vk -= a * tk;
            }
        }
        if normalize(&mut v) {
            tangents.push(v);
        }
    }
    tangents
}

/// Seed normal from the smallest principal direction of the ball points.
fn pca_normal(points: &[&[f64]], dim: usize) -> Vec<f64> {
    let n = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, &x) in mean.iter_mut().zip(p.iter()) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for p in points {
        for i in 0..dim {
            for j in 0..dim {
                cov[(i, j)] += (p[i] - mean[i]) * (p[j] - mean[j]);
            }
        }
    }
    let eig = cov.symmetric_eigen();
    let mut best = 0;
    for k in 1..dim {
        if eig.eigenvalues[k] < eig.eigenvalues[best] {
            best = k;
        }
    }
    let mut normal: Vec<f64> = eig.eigenvectors.column(best).iter().copied().collect();
    if !normalize(&mut normal) {
        normal = vec![0.0; dim];
        normal[dim - 1] = 1.0;
    }
    normal
}

/// Evaluates the two-sided deviation of the plane through `xi` with the
/// given frame, on the cloud points in the ball and on a tangent lattice
/// of spacing r/16 clipped to the disk (lattice endpoints included).
fn eval_plane(
    frame: &PlaneFrame,
    xi: &[f64],
    r: f64,
    ball_points: &[&[f64]],
    zset: &PointSet,
) -> (f64, f64) {
    let mut cloud_to_plane = 0.0f64;
    for p in ball_points {
        let mut d = 0.0;
        for ((pk, xk), nk) in p.iter().zip(xi).zip(&frame.normal) {
            d += (pk - xk) * nk;
        }
        cloud_to_plane = cloud_to_plane.max(d.abs());
    }

    let steps = (1.0 / PLANE_GRID_FRAC).round() as i64;
    let spacing = r * PLANE_GRID_FRAC;
    let k = frame.tangents.len();
    let mut plane_to_cloud = 0.0f64;
    let mut offsets = vec![-steps; k];
    'lattice: loop {
        let mut u2 = 0.0;
        for &o in &offsets {
            let c = o as f64 * spacing;
            u2 += c * c;
        }
        if u2 <= r * r * (1.0 + 1e-12) {
            let mut sample = xi.to_vec();
            for (t, &o) in frame.tangents.iter().zip(&offsets) {
                let c = o as f64 * spacing;
                for (sk, tk) in sample.iter_mut().zip(t) {
                    *sk += c * tk;
                }
            }
            plane_to_cloud = plane_to_cloud.max(zset.dist_to(&sample));
        }
        for slot in 0..k {
            offsets[slot] += 1;
            if offsets[slot] <= steps {
                continue 'lattice;
            }
            offsets[slot] = -steps;
        }
        break;
    }

    (cloud_to_plane / r, plane_to_cloud / r)
}

fn objective(
    normal: Vec<f64>,
    xi: &[f64],
    r: f64,
    ball_points: &[&[f64]],
    zset: &PointSet,
) -> (PlaneFrame, f64, f64) {
    let frame = PlaneFrame::from_normal(normal);
    let (a, b) = eval_plane(&frame, xi, r, ball_points, zset);
    (frame, a, b)
}

/// Bilateral flatness of the cloud at center `xi` and scale `r`, using a
/// prebuilt nearest-point index over the same cloud.
pub fn bbeta_with_index(
    z: &PointCloud,
    zset: &PointSet,
    xi: &[f64],
    r: f64,
) -> Result<BetaRecord> {
    let dim = z.dim();
    if xi.len() != dim {
        return Err(invalid_input!(
            "center dimension {} does not match cloud dimension {dim}",
            xi.len()
        ));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid_input!("flatness scale must be positive"));
    }
    if zset.dist_to(xi) > CENTER_TOL * (1.0 + r) {
        return Err(invalid_input!(
            "center must lie on the cloud (within {} of a point)",
            CENTER_TOL * (1.0 + r)
        ));
    }
    let indices = zset.indices_in_ball(xi, r);
    if indices.is_empty() {
        return Err(GmtError::Empty("no cloud points in the flatness ball".into()));
    }
    let ball_points: Vec<&[f64]> = indices.iter().map(|&i| zset.point(i)).collect();
    let degenerate = ball_points.len() < dim + 1;

    // Candidate seeds: the smallest principal direction, then each
    // coordinate axis (exact minimizers for axis-aligned flats).
    let mut best = objective(pca_normal(&ball_points, dim), xi, r, &ball_points, zset);
    for i in 0..dim {
        let mut n = vec![0.0; dim];
        n[i] = 1.0;
        let cand = objective(n, xi, r, &ball_points, zset);
        if cand.1 + cand.2 < best.1 + best.2 {
            best = cand;
        }
    }

    // Local refinement: rotate the normal toward each tangent direction by
    // a shrinking step, keeping strict improvements only.
    let mut step = SEARCH_STEP0;
    for _ in 0..SEARCH_ROUNDS {
        let (sin, cos) = step.sin_cos();
        for _ in 0..SEARCH_SWEEPS {
            let mut improved = false;
            for j in 0..dim - 1 {
                for sign in [1.0, -1.0] {
                    let tilted: Vec<f64> = best
                        .0
                        .normal
                        .iter()
                        .zip(&best.0.tangents[j])
                        .map(|(nk, tk)| nk * cos + sign * sin * tk)
                        .collect();
                    let cand = objective(tilted, xi, r, &ball_points, zset);
                    if cand.1 + cand.2 < best.1 + best.2 {
                        best = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        step /= 4.0;
    }

    let (frame, term_cloud_to_plane, term_plane_to_cloud) = best;
    Ok(BetaRecord {
        xi: xi.to_vec(),
        r,
        value: term_cloud_to_plane + term_plane_to_cloud,
        term_cloud_to_plane,
        term_plane_to_cloud,
        normal: frame.normal,
        degenerate,
        n_ball_points: ball_points.len(),
    })
}

/// Bilateral flatness at one center and scale. Builds a fresh index; use
/// `bbeta_sweep` or `carleson_energy` for many evaluations on one cloud.
pub fn bbeta(z: &PointCloud, xi: &[f64], r: f64) -> Result<BetaRecord> {
    if z.is_empty() {
        return Err(GmtError::Empty("flatness of an empty cloud".into()));
    }
    let zset = PointSet::build(z.to_vecs());
    bbeta_with_index(z, &zset, xi, r)
}

/// Flatness records over a centers-by-scales grid, row-major in the input
/// order (all scales for the first center, then the second, ...).
pub fn bbeta_sweep(
    z: &PointCloud,
    centers: &[Vec<f64>],
    scales: &[f64],
) -> Result<Vec<BetaRecord>> {
    if z.is_empty() {
        return Err(GmtError::Empty("flatness of an empty cloud".into()));
    }
    let zset = PointSet::build(z.to_vecs());
    let cells: Vec<(usize, usize)> = (0..centers.len())
        .flat_map(|i| (0..scales.len()).map(move |j| (i, j)))
        .collect();
    cells
        .par_iter()
        .map(|&(i, j)| bbeta_with_index(z, &zset, &centers[i], scales[j]))
        .collect()
}

/// Writes flatness records as CSV with per-coordinate columns.
pub fn write_beta_csv(records: &[BetaRecord], path: &Path) -> Result<()> {
    let dim = records.first().map_or(0, |r| r.xi.len());
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..dim).map(|k| format!("xi{k}")).collect();
    header.extend(["r", "bbeta", "cloud_to_plane", "plane_to_cloud"].map(String::from));
    header.extend((0..dim).map(|k| format!("normal{k}")));
    header.push("degenerate".into());
    wtr.write_record(&header)?;
    for rec in records {
        let mut row: Vec<String> = rec.xi.iter().map(|v| format!("{v}")).collect();
        row.push(format!("{}", rec.r));
        row.push(format!("{}", rec.value));
        row.push(format!("{}", rec.term_cloud_to_plane));
        row.push(format!("{}", rec.term_plane_to_cloud));
        row.extend(rec.normal.iter().map(|v| format!("{v}")));
        row.push(format!("{}", rec.degenerate));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Greedy net over the cloud points in the closed ball B(xi0, r0):
/// ascending index order, keeping points at distance > spacing from all
/// kept points. Covers the ball portion of the cloud within `spacing`.
fn greedy_net(z: &PointCloud, zset: &PointSet, xi0: &[f64], r0: f64, spacing: f64) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for i in zset.indices_in_ball(xi0, r0) {
        let p = z.point(i);
        if kept.iter().all(|q| dist(p, q) > spacing) {
            kept.push(p.to_vec());
        }
    }
    kept
}

/// Energy of the scale-location cells where the cloud is not epsilon-flat,
/// over dyadic scales r0 * 2^-j (j = 0..=j_max) and a net_h-net of centers
/// drawn from the cloud inside B(xi0, r0). Each bad cell contributes
/// net_h^d * ln 2; a cloud that is d-dimensional and flat at all sampled
/// cells scores exactly zero.
pub fn carleson_energy(
    z: &PointCloud,
    xi0: &[f64],
    r0: f64,
    epsilon: f64,
    j_max: usize,
    net_h: f64,
    d: usize,
) -> Result<CarlesonEnergyReport> {
    if z.is_empty() {
        return Err(GmtError::Empty("energy of an empty cloud".into()));
    }
    if xi0.len() != z.dim() {
        return Err(invalid_input!("center dimension mismatch"));
    }
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(invalid_input!("top scale must be positive"));
    }
    if !(epsilon > 0.0) {
        return Err(invalid_input!("flatness threshold must be positive"));
    }
    if !(net_h > 0.0) {
        return Err(invalid_input!("net spacing must be positive"));
    }
    let zset = PointSet::build(z.to_vecs());
    let centers = greedy_net(z, &zset, xi0, r0, net_h);
    let scales: Vec<f64> = (0..=j_max).map(|j| r0 * 2f64.powi(-(j as i32))).collect();

    let cells: Vec<(usize, usize)> = (0..scales.len())
        .flat_map(|j| (0..centers.len()).map(move |i| (j, i)))
        .collect();
    let bad: Vec<bool> = cells
        .par_iter()
        .map(|&(j, i)| {
            let rec = bbeta_with_index(z, &zset, &centers[i], scales[j])?;
            Ok(rec.value > epsilon)
        })
        .collect::<Result<_>>()?;

    let mut bad_counts = vec![0usize; scales.len()];
    for (&(j, _), &is_bad) in cells.iter().zip(&bad) {
        if is_bad {
            bad_counts[j] += 1;
        }
    }
    let total_bad: usize = bad_counts.iter().sum();
    let estimate = total_bad as f64 * net_h.powi(d as i32) * std::f64::consts::LN_2;
    Ok(CarlesonEnergyReport {
        epsilon,
        xi0: xi0.to_vec(),
        r0,
        d,
        net_h,
        scales,
        bad_counts,
        n_centers: centers.len(),
        estimate,
        c_ur_emp: estimate / r0.powi(d as i32),
    })
}

/// Searches the ball B(xi, r) of the cloud for a point far from the marked
/// subset E, under the hypotheses that the cloud is epsilon-flat at (xi, r)
/// and that some point of `sigma` in B(xi, r/(2c)) is already
/// (2c+1)*epsilon*r-far from E. When the hypotheses hold, a witness at
/// distance >= epsilon*r must exist; its absence is reported as a
/// counterexample candidate rather than silently accepted.
pub fn far_point_witness(
    z: &PointCloud,
    sigma: &PointCloud,
    e_idx: &[usize],
    xi: &[f64],
    r: f64,
    epsilon: f64,
    c: f64,
) -> Result<FarPointReport> {
    if !(c >= 1.0) {
        return Err(invalid_input!("separation constant c must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0 / (8.0 * c * c)) {
        return Err(invalid_input!(
            "epsilon must lie in (0, 1/(8 c^2)) = (0, {})",
            1.0 / (8.0 * c * c)
        ));
    }
    if sigma.dim() != z.dim() {
        return Err(invalid_input!("cloud dimensions differ"));
    }
    if e_idx.is_empty() {
        return Err(GmtError::Empty("marked subset is empty".into()));
    }
    if e_idx.iter().any(|&i| i >= z.len()) {
        return Err(invalid_input!("marked index out of range"));
    }

    let beta = bbeta(z, xi, r)?;
    if !(beta.value < epsilon) {
        return Ok(FarPointReport {
            beta_value: beta.value,
            outcome: FarPointOutcome::HypothesesNotMet {
                reason: format!(
                    "flatness {} is not below epsilon {epsilon}",
                    beta.value
                ),
            },
        });
    }

    let eset = PointSet::build(e_idx.iter().map(|&i| z.point(i).to_vec()).collect());
    let separated = (0..sigma.len()).any(|i| {
        let p = sigma.point(i);
        dist(p, xi) <= r / (2.0 * c) && eset.dist_to(p) > (2.0 * c + 1.0) * epsilon * r
    });
    if !separated {
        return Ok(FarPointReport {
            beta_value: beta.value,
            outcome: FarPointOutcome::HypothesesNotMet {
                reason: format!(
                    "no sigma point in B(xi, r/(2c)) is {}-far from the subset",
                    (2.0 * c + 1.0) * epsilon * r
                ),
            },
        });
    }

    let zset = PointSet::build(z.to_vecs());
    let mut best_index = usize::MAX;
    let mut best_dist = f64::NEG_INFINITY;
    for i in zset.indices_in_ball(xi, r) {
        let d = eset.dist_to(zset.point(i));
        if d > best_dist {
            best_dist = d;
            best_index = i;
        }
    }
    let outcome = if best_dist >= epsilon * r {
        FarPointOutcome::Witness {
            index: best_index,
            distance: best_dist,
        }
    } else {
        FarPointOutcome::CounterexampleCandidate {
            index: best_index,
            distance: best_dist,
        }
    };
    Ok(FarPointReport {
        beta_value: beta.value,
        outcome,
    })
}
