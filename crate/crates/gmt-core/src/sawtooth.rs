//! Inner and outer sawtooth domains: unions of dilated Whitney cubes
//! selected around a compact boundary set E, with boundary-cube sums,
//! Ahlfors-regularity profiles, and boundary-trace checks.
//!
//! The inner sawtooth collects Whitney cubes of the base domain whose
//! dilate meets E, completes short hop-metric paths between them, and
//! takes the interior of the union of their lambda-dilates; it sits
//! inside the base domain. The outer sawtooth unions the base domain
//! with dilated Whitney cubes of the complement of E that meet the base
//! boundary; it contains the base domain. Both expose a conservative
//! signed-distance oracle: the minimum over member boxes (and the base,
//! for the outer kind), which never overstates the distance to the
//! boundary and is therefore safe to drive walk-on-spheres.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bvh::{BoxSet, PointSet};
use crate::cloud::{sample_boundary, PointCloud};
use crate::domain::{complement_of_points, ImplicitDomain};
use crate::dyadic::DyadicCube;
use crate::error::{GmtError, Result};
use crate::geom::{dist, Aabb};
use crate::invalid_input;
use crate::measure::DiscreteMeasure;
use crate::tol::{TRACE_BOUNDARY_TOL, TRACE_FACTOR};
use crate::util::compensated_sum;
use crate::whitney::{classify_box, whitney_decompose, BoxClass, WhitneyForest};

/// Which side of the base domain the sawtooth approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SawtoothKind {
    Inner,
    Outer,
}

/// Operating constants of a sawtooth build. Fields that do not apply to
/// a kind (the path constants for outer, K for inner) are stored as the
/// values actually used or zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SawtoothParams {
    /// Cube-selection dilation: cubes whose c0-dilate meets E (inner).
    pub c0_factor: f64,
    /// Maximum hop-path length completed between selected cubes (inner).
    pub c_tilde: usize,
    /// Whitney factor of the complement decomposition (outer).
    pub k_factor: f64,
    /// Scale cap on selected cubes and localization radius (inner).
    pub r0: f64,
    /// Localization center (inner).
    pub xi0: Vec<f64>,
}

/// A sawtooth domain built from dilated Whitney cubes around E.
#[derive(Clone)]
pub struct SawtoothDomain {
    pub kind: SawtoothKind,
    pub base: ImplicitDomain,
    pub lambda: f64,
    pub params: SawtoothParams,
    /// Core cubes, in forest order (coarse to fine).
    pub cube_core: Vec<DyadicCube>,
    /// The forest the core was selected from.
    pub forest: WhitneyForest,
    /// The boundary set the sawtooth traces.
    pub e_points: PointCloud,
    /// Truncated (unresolved) forest cubes relevant to the core; sums
    /// over boundary cubes report their contribution separately.
    pub truncated_core: Vec<DyadicCube>,
    core_flags: Vec<bool>,
    boxes: Arc<BoxSet>,
    boxes_bbox: Aabb,
}

impl std::fmt::Debug for SawtoothDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SawtoothDomain")
            .field("kind", &self.kind)
            .field("lambda", &self.lambda)
            .field("core_cubes", &self.cube_core.len())
            .field("truncated_core", &self.truncated_core.len())
            .finish()
    }
}

fn union_bbox(boxes: &[Aabb]) -> Aabb {
    let dim = boxes[0].dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for b in boxes {
        for k in 0..dim {
            lo[k] = lo[k].min(b.lo[k]);
            hi[k] = hi[k].max(b.hi[k]);
        }
    }
    Aabb::new(lo, hi)
}

impl SawtoothDomain {
    /// Conservative signed distance: negative strictly inside, and its
    /// magnitude never exceeds the true distance to the boundary.
    pub fn sdist(&self, x: &[f64]) -> f64 {
        match self.kind {
            SawtoothKind::Inner => self.boxes.sdist_union(x),
            SawtoothKind::Outer => self.base.sdist(x).min(self.boxes.sdist_union(x)),
        }
    }

    pub fn inside(&self, x: &[f64]) -> bool {
        self.sdist(x) < 0.0
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    /// Boundary dimension d of the ambient R^(d+1).
    pub fn surface_dim(&self) -> usize {
        self.base.dim - 1
    }

    /// Side of the smallest core cube. Walk-on-spheres stopping shells
    /// must stay below half the overlap margin of the dilated cubes,
    /// which is (lambda - 1) / 2 times this side.
    pub fn min_cube_side(&self) -> f64 {
        self.cube_core
            .iter()
            .map(|q| q.side())
            .fold(f64::INFINITY, f64::min)
    }

    /// Wraps the sawtooth as an implicit domain for sampling and walks.
    pub fn as_implicit(&self) -> ImplicitDomain {
        let boxes = Arc::clone(&self.boxes);
        let name = match self.kind {
            SawtoothKind::Inner => format!("{}_sawtooth_inner", self.base.name),
            SawtoothKind::Outer => format!("{}_sawtooth_outer", self.base.name),
        };
        let bbox = match self.kind {
            SawtoothKind::Inner => self.boxes_bbox.clone(),
            SawtoothKind::Outer => union_bbox(&[self.base.bbox.clone(), self.boxes_bbox.clone()]),
        };
        let pad = 0.05 * bbox.max_side();
        let bbox = bbox.inflate(pad);
        let diam = dist(&bbox.lo, &bbox.hi);
        match self.kind {
            SawtoothKind::Inner => ImplicitDomain::new(
                self.base.dim,
                &name,
                move |x: &[f64]| boxes.sdist_union(x),
                bbox,
                Some(diam),
            ),
            SawtoothKind::Outer => {
                let base = self.base.clone();
                ImplicitDomain::new(
                    self.base.dim,
                    &name,
                    move |x: &[f64]| base.sdist(x).min(boxes.sdist_union(x)),
                    bbox,
                    Some(diam),
                )
            }
        }
    }

    /// Serializes kind, lambda, params, and the core cube list.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": match self.kind { SawtoothKind::Inner => "inner", SawtoothKind::Outer => "outer" },
            "lambda": self.lambda,
            "params": {
                "C0": self.params.c0_factor,
                "C_tilde": self.params.c_tilde,
                "K": self.params.k_factor,
                "r0": self.params.r0,
                "xi0": self.params.xi0,
            },
            "cubes": self.cube_core.iter().map(|q| serde_json::json!({
                "level": q.level,
                "anchor": q.anchor,
            })).collect::<Vec<_>>(),
        })
    }
}

fn validate_e_on_boundary(domain: &ImplicitDomain, e: &PointCloud, scale: f64) -> Result<()> {
    if e.is_empty() {
        return Err(GmtError::Empty("sawtooth boundary set".into()));
    }
    if e.dim() != domain.dim {
        return Err(invalid_input!(
            "boundary set dimension {} does not match the domain ({})",
            e.dim(),
            domain.dim
        ));
    }
    let tol = 1e-6 * scale.max(1.0);
    for p in e.iter_points() {
        let s = domain.sdist(p);
        if s.abs() > tol {
            return Err(invalid_input!(
                "boundary set point {p:?} is off the domain boundary (sdist {s})"
            ));
        }
    }
    Ok(())
}

/// Builds the inner sawtooth over E from a Whitney forest of the domain.
#[allow(clippy::too_many_arguments)]
pub fn build_inner_sawtooth(
    domain: &ImplicitDomain,
    forest: &WhitneyForest,
    e: &PointCloud,
    c0_factor: f64,
    c_tilde: usize,
    lambda: f64,
    xi0: &[f64],
    r0: f64,
) -> Result<SawtoothDomain> {
    if !(lambda > 1.0) {
        return Err(invalid_input!(
            "cube dilation lambda must exceed 1, got {lambda}"
        ));
    }
    if lambda > forest.k_factor {
        return Err(invalid_input!(
            "lambda {lambda} exceeds the forest certification factor {}",
            forest.k_factor
        ));
    }
    if c0_factor < 1.0 {
        return Err(invalid_input!("selection dilation must be at least 1"));
    }
    if c_tilde == 0 {
        return Err(invalid_input!("path length bound must be at least 1"));
    }
    if !(r0 > 0.0) {
        return Err(invalid_input!("scale cap r0 must be positive"));
    }
    validate_e_on_boundary(domain, e, r0)?;
    if xi0.len() != domain.dim {
        return Err(invalid_input!("localization center has wrong dimension"));
    }
    let r_tol = r0 * (1.0 + 1e-9);
    for p in e.iter_points() {
        if dist(p, xi0) > r_tol {
            return Err(invalid_input!(
                "boundary set point {p:?} lies outside the localization ball"
            ));
        }
    }

    // Selection: cubes at scale <= r0 whose c0-dilate meets E.
    let n = forest.len();
    let mut selected = vec![false; n];
    for (i, q) in forest.cubes.iter().enumerate() {
        if q.side() > r0 {
            continue;
        }
        let dilated = q.dilated(c0_factor);
        if e.iter_points().any(|p| dilated.contains(p)) {
            selected[i] = true;
        }
    }
    let sources: Vec<usize> = (0..n).filter(|&i| selected[i]).collect();
    if sources.is_empty() {
        return Err(GmtError::Empty(
            "no forest cube selects the boundary set; refine the forest".into(),
        ));
    }

    // Path completion: for every pair of selected cubes within c_tilde
    // hops, add the cubes of a shortest hop path (hop distance counts
    // cubes, so a path of length c_tilde has c_tilde - 1 edges).
    let mut in_core = selected.clone();
    let mut hops = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut touched: Vec<usize> = Vec::new();
    for &s in &sources {
        let mut queue = VecDeque::new();
        hops[s] = 1;
        parent[s] = s;
        touched.push(s);
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            if hops[u] == c_tilde {
                continue;
            }
            for &v in forest.neighbors(u) {
                if hops[v] == usize::MAX {
                    hops[v] = hops[u] + 1;
                    parent[v] = u;
                    touched.push(v);
                    queue.push_back(v);
                }
            }
        }
        for &t in &sources {
            if t > s && hops[t] != usize::MAX {
                let mut cur = t;
                while cur != s {
                    in_core[cur] = true;
                    cur = parent[cur];
                }
            }
        }
        for &i in &touched {
            hops[i] = usize::MAX;
            parent[i] = usize::MAX;
        }
        touched.clear();
    }

    let core_indices: Vec<usize> = (0..n).filter(|&i| in_core[i]).collect();
    let cube_core: Vec<DyadicCube> = core_indices
        .iter()
        .map(|&i| forest.cubes[i].clone())
        .collect();
    let boxes: Vec<Aabb> = cube_core.iter().map(|q| q.dilated(lambda)).collect();
    let boxes_bbox = union_bbox(&boxes);
    let truncated_core: Vec<DyadicCube> = forest
        .truncated
        .iter()
        .filter(|q| {
            let dilated = q.dilated(c0_factor);
            q.side() <= r0 && e.iter_points().any(|p| dilated.contains(p))
        })
        .cloned()
        .collect();

    Ok(SawtoothDomain {
        kind: SawtoothKind::Inner,
        base: domain.clone(),
        lambda,
        params: SawtoothParams {
            c0_factor,
            c_tilde,
            k_factor: forest.k_factor,
            r0,
            xi0: xi0.to_vec(),
        },
        cube_core,
        forest: forest.clone(),
        e_points: e.clone(),
        truncated_core,
        core_flags: in_core,
        boxes: Arc::new(BoxSet::build(boxes)),
        boxes_bbox,
    })
}

/// Builds the outer sawtooth: the base domain plus dilated Whitney cubes
/// of the complement of E that meet the base boundary.
pub fn build_outer_sawtooth(
    domain: &ImplicitDomain,
    e: &PointCloud,
    k_factor: f64,
    lambda: f64,
    n_min: i32,
) -> Result<SawtoothDomain> {
    if !(lambda > 1.0) {
        return Err(invalid_input!(
            "cube dilation lambda must exceed 1, got {lambda}"
        ));
    }
    if k_factor < 12.0 {
        return Err(invalid_input!(
            "outer sawtooth requires a Whitney factor of at least 12, got {k_factor}"
        ));
    }
    if lambda > k_factor {
        return Err(invalid_input!("lambda exceeds the Whitney factor"));
    }
    validate_e_on_boundary(domain, e, domain.bbox.max_side())?;

    let complement = complement_of_points(e.to_vecs(), domain.bbox.clone())?;
    let forest = whitney_decompose(&complement, k_factor, &domain.bbox, n_min)?;
    let n = forest.len();
    let mut core_flags = vec![false; n];
    for (i, q) in forest.cubes.iter().enumerate() {
        let b = q.aabb();
        if classify_box(domain, &b.lo, &b.hi) == BoxClass::Boundary {
            core_flags[i] = true;
        }
    }
    let core_indices: Vec<usize> = (0..n).filter(|&i| core_flags[i]).collect();
    if core_indices.is_empty() {
        return Err(GmtError::Empty(
            "no complement cube meets the base boundary".into(),
        ));
    }
    let cube_core: Vec<DyadicCube> = core_indices
        .iter()
        .map(|&i| forest.cubes[i].clone())
        .collect();
    let boxes: Vec<Aabb> = cube_core.iter().map(|q| q.dilated(lambda)).collect();
    let boxes_bbox = union_bbox(&boxes);
    let truncated_core: Vec<DyadicCube> = forest
        .truncated
        .iter()
        .filter(|q| {
            let b = q.aabb();
            classify_box(domain, &b.lo, &b.hi) == BoxClass::Boundary
        })
        .cloned()
        .collect();

    Ok(SawtoothDomain {
        kind: SawtoothKind::Outer,
        base: domain.clone(),
        lambda,
        params: SawtoothParams {
            c0_factor: 0.0,
            c_tilde: 0,
            k_factor,
            r0: 0.0,
            xi0: Vec::new(),
        },
        cube_core,
        forest,
        e_points: e.clone(),
        truncated_core,
        core_flags,
        boxes: Arc::new(BoxSet::build(boxes)),
        boxes_bbox,
    })
}

/// Core cubes adjacent to an out-of-core cube and meeting B(xi, r).
#[derive(Debug, Clone)]
pub struct BoundaryCubeSet {
    pub xi: Vec<f64>,
    pub r: f64,
    pub cubes: Vec<DyadicCube>,
    /// Sum of side^d over the listed cubes, d the boundary dimension.
    pub sum_d: f64,
    /// Same sum over unresolved truncated cubes meeting the ball.
    pub truncated_tail: f64,
    /// Set when xi is not a point of E (the sum is still computed).
    pub off_e_warning: bool,
    /// Set when B(xi, r) is not contained in the forest search box.
    pub clipped: bool,
}

/// Enumerates the boundary cubes of the sawtooth core near xi.
pub fn boundary_cube_sum(saw: &SawtoothDomain, xi: &[f64], r: f64) -> Result<BoundaryCubeSet> {
    if xi.len() != saw.dim() {
        return Err(invalid_input!("center has wrong dimension"));
    }
    if !(r > 0.0) {
        return Err(invalid_input!("radius must be positive"));
    }
    let eset = PointSet::build(saw.e_points.to_vecs());
    let off_e_warning = eset.dist_to(xi) > 1e-9 * (1.0 + r);
    let ball_box = Aabb::new(
        xi.iter().map(|v| v - r).collect(),
        xi.iter().map(|v| v + r).collect(),
    );
    let clipped = !saw.forest.bbox.contains_box(&ball_box);

    let d = saw.surface_dim() as i32;
    let mut cubes = Vec::new();
    for i in 0..saw.forest.len() {
        if !saw.core_flags[i] {
            continue;
        }
        let q = &saw.forest.cubes[i];
        if q.aabb().dist_to(xi) > r {
            continue;
        }
        if saw
            .forest
            .neighbors(i)
            .iter()
            .any(|&j| !saw.core_flags[j])
        {
            cubes.push(q.clone());
        }
    }
    let sum_d = compensated_sum(cubes.iter().map(|q| q.side().powi(d)));
    let truncated_tail = compensated_sum(
        saw.truncated_core
            .iter()
            .filter(|q| q.aabb().dist_to(xi) <= r)
            .map(|q| q.side().powi(d)),
    );
    Ok(BoundaryCubeSet {
        xi: xi.to_vec(),
        r,
        cubes,
        sum_d,
        truncated_tail,
        off_e_warning,
        clipped,
    })
}

/// One sweep entry: the boundary-cube sum at (xi, r), normalized by r^d.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub xi: Vec<f64>,
    pub r: f64,
    pub sum_d: f64,
    pub ratio: f64,
    pub truncated_tail: f64,
    pub clipped: bool,
}

/// Sweep result: rows plus the empirical packing constant sup sum/r^d.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub sup_ratio: f64,
    pub max_truncated_tail: f64,
}

/// Runs `boundary_cube_sum` over a grid of centers and radii.
pub fn boundary_sum_sweep(
    saw: &SawtoothDomain,
    centers: &[Vec<f64>],
    radii: &[f64],
) -> Result<SweepReport> {
    if centers.is_empty() || radii.is_empty() {
        return Err(GmtError::Empty("boundary sum sweep grid".into()));
    }
    let d = saw.surface_dim() as i32;
    let mut rows = Vec::with_capacity(centers.len() * radii.len());
    let mut sup_ratio = 0.0f64;
    let mut max_tail = 0.0f64;
    for xi in centers {
        for &r in radii {
            let set = boundary_cube_sum(saw, xi, r)?;
            let ratio = set.sum_d / r.powi(d);
            sup_ratio = sup_ratio.max(ratio);
            max_tail = max_tail.max(set.truncated_tail);
            rows.push(SweepRow {
                xi: xi.clone(),
                r,
                sum_d: set.sum_d,
                ratio,
                truncated_tail: set.truncated_tail,
                clipped: set.clipped,
            });
        }
    }
    Ok(SweepReport {
        rows,
        sup_ratio,
        max_truncated_tail: max_tail,
    })
}

/// Two-sided Ahlfors-regularity constants measured on a weighted surface
/// sample: mass(B(x,r)) compared against r^d both ways.
#[derive(Debug, Clone)]
pub struct RegularityProfile {
    pub a_upper: f64,
    pub a_lower: f64,
    /// (center index, radius) pairs whose ball had no mass.
    pub zero_mass: Vec<(usize, f64)>,
    pub d: usize,
}

/// Profiles mass(B)/r^d and r^d/mass(B) over centers and radii.
pub fn regularity_profile(
    surface: &PointCloud,
    radii: &[f64],
    centers: &[Vec<f64>],
) -> Result<RegularityProfile> {
    if radii.is_empty() || centers.is_empty() {
        return Err(GmtError::Empty("regularity grid".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(invalid_input!("radii must be positive"));
    }
    let mu = DiscreteMeasure::from_cloud(surface)?;
    let d = surface.dim() - 1;
    let mut a_upper = 0.0f64;
    let mut a_lower = 0.0f64;
    let mut zero_mass = Vec::new();
    for (ci, xi) in centers.iter().enumerate() {
        for &r in radii {
            let m = mu.ball_mass(xi, r);
            let rd = r.powi(d as i32);
            if m <= 0.0 {
                zero_mass.push((ci, r));
                a_lower = f64::INFINITY;
                continue;
            }
            a_upper = a_upper.max(m / rd);
            a_lower = a_lower.max(rd / m);
        }
    }
    Ok(RegularityProfile {
        a_upper,
        a_lower,
        zero_mass,
        d,
    })
}

/// Outcome of the boundary-trace check at mesh h.
#[derive(Debug, Clone)]
pub struct TraceReport {
    pub ok: bool,
    /// Largest distance from an E point to the sawtooth boundary.
    pub max_e_to_boundary: f64,
    /// Largest distance to E from a sampled sawtooth-boundary point that
    /// lies on the base boundary (within TRACE_BOUNDARY_TOL).
    pub max_boundary_to_e: f64,
    /// Number of sampled boundary points that were subject to (b).
    pub checked: usize,
    pub witness: Option<Vec<f64>>,
}

/// Verifies the two-sided trace property: E sits on the sawtooth
/// boundary and the sawtooth boundary meets the base boundary only
/// along E, both at tolerance TRACE_FACTOR * h.
pub fn check_trace(saw: &SawtoothDomain, e: &PointCloud, h: f64) -> Result<TraceReport> {
    if !(h > 0.0) {
        return Err(invalid_input!("mesh width must be positive"));
    }
    let tol = TRACE_FACTOR * h;
    // (a) every point of E is near the sawtooth boundary. E points are
    // never interior to the box union, so |sdist| is the exact distance.
    let mut max_a = 0.0f64;
    for p in e.iter_points() {
        max_a = max_a.max(saw.sdist(p).abs());
    }
    // (b) sampled sawtooth-boundary points that genuinely lie on the base
    // boundary (the uncovered band near E) must be near E. Dilated-cube
    // faces sit at positive distance from the base boundary and are not
    // trace points, so they are excluded by the on-boundary tolerance.
    // Base boundary beyond the forest search box is outside the certified
    // region and is skipped.
    let implicit = saw.as_implicit();
    let samples = sample_boundary(&implicit, h)?;
    let eset = PointSet::build(e.to_vecs());
    let mut max_b = 0.0f64;
    let mut checked = 0usize;
    let mut witness = None;
    for x in samples.iter_points() {
        if !saw.forest.bbox.contains(x) {
            continue;
        }
        if saw.base.sdist(x).abs() > TRACE_BOUNDARY_TOL {
            continue;
        }
        checked += 1;
        let d = eset.dist_to(x);
        if d > max_b {
            max_b = d;
            if d > tol {
                witness = Some(x.to_vec());
            }
        }
    }
    Ok(TraceReport {
        ok: max_a <= tol && max_b <= tol,
        max_e_to_boundary: max_a,
        max_boundary_to_e: max_b,
        checked,
        witness,
    })
}

/// Random-sampling check of the inclusion appropriate to the kind:
/// inner inside base, base inside outer.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub checked: usize,
    pub violations: usize,
    pub witness: Option<Vec<f64>>,
}

pub fn sandwich_check(saw: &SawtoothDomain, n_samples: usize, seed: u64) -> SandwichReport {
    let bbox = union_bbox(&[saw.base.bbox.clone(), saw.boxes_bbox.clone()]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = saw.dim();
    let mut violations = 0usize;
    let mut witness = None;
    for _ in 0..n_samples {
        let x: Vec<f64> = (0..dim)
            .map(|k| rng.gen_range(bbox.lo[k]..bbox.hi[k]))
            .collect();
        let bad = match saw.kind {
            SawtoothKind::Inner => saw.inside(&x) && !saw.base.inside(&x),
            SawtoothKind::Outer => saw.base.inside(&x) && !saw.inside(&x),
        };
        if bad {
            violations += 1;
            witness.get_or_insert(x);
        }
    }
    SandwichReport {
        checked: n_samples,
        violations,
        witness,
    }
}

/// Exact localization constant of an inner sawtooth: the farthest
/// dilated-cube corner from xi0, in units of r0.
pub fn localization_constant(saw: &SawtoothDomain) -> Result<f64> {
    if saw.kind != SawtoothKind::Inner {
        return Err(invalid_input!(
            "localization applies to inner sawtooth domains only"
        ));
    }
    let xi0 = &saw.params.xi0;
    let dim = saw.dim();
    let mut worst = 0.0f64;
    for q in &saw.cube_core {
        let b = q.dilated(saw.lambda);
        // The distance to a point is convex, so box corners realize it.
        for mask in 0..(1usize << dim) {
            let corner: Vec<f64> = (0..dim)
                .map(|k| if mask >> k & 1 == 1 { b.hi[k] } else { b.lo[k] })
                .collect();
            worst = worst.max(dist(&corner, xi0));
        }
    }
    Ok(worst / saw.params.r0)
}
