//! Whitney decompositions of implicit domains.
//!
//! A Whitney forest holds the maximal dyadic cubes Q inside a search box
//! whose K-dilate is certified inside the domain, so cube sizes track the
//! distance to the complement. Certification is branch-and-bound on the
//! 1-Lipschitz signed-distance oracle: an accepted box is provably inside,
//! and rejections are exact up to the documented tolerance. The forest
//! carries the touching-cubes adjacency graph, whose hop metric (number of
//! cubes on a shortest path) quantifies domain uniformity.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::domain::ImplicitDomain;
use crate::dyadic::DyadicCube;
use crate::error::{GmtError, Result};
use crate::geom::{dist, Aabb, Ball};
use crate::invalid_input;
use crate::tol::GEOM_TOL;
use crate::util::linear_fit;

/// How a box sits relative to a domain, as certified by branch-and-bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxClass {
    /// Certified inside the open domain.
    Inside,
    /// Certified inside the open complement.
    Outside,
    /// Meets the boundary, or undecidable at the certification tolerance
    /// (conservatively treated as boundary).
    Boundary,
}

/// Certifies box ⊆ Ω. `true` is a proof; `false` may be conservative
/// within `GEOM_TOL` of a tangency.
pub fn certify_inside(domain: &ImplicitDomain, lo: &[f64], hi: &[f64]) -> bool {
    let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let rad = half_diag(lo, hi);
    let s = domain.sdist(&c);
    if s >= 0.0 {
        // A point of the closed complement lies in the box.
        return false;
    }
    if s + rad < 0.0 {
        return true;
    }
    if rad <= GEOM_TOL {
        return false;
    }
    let axis = longest_axis(lo, hi);
    let mid = 0.5 * (lo[axis] + hi[axis]);
    let mut hi_l = hi.to_vec();
    hi_l[axis] = mid;
    let mut lo_r = lo.to_vec();
    lo_r[axis] = mid;
    certify_inside(domain, lo, &hi_l) && certify_inside(domain, &lo_r, hi)
}

/// Classifies a box against the domain: inside, outside, or boundary.
pub fn classify_box(domain: &ImplicitDomain, lo: &[f64], hi: &[f64]) -> BoxClass {
    let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let rad = half_diag(lo, hi);
    let s = domain.sdist(&c);
    if s + rad < 0.0 {
        return BoxClass::Inside;
    }
    if s - rad > 0.0 {
        return BoxClass::Outside;
    }
    if rad <= GEOM_TOL {
        return BoxClass::Boundary;
    }
    let axis = longest_axis(lo, hi);
    let mid = 0.5 * (lo[axis] + hi[axis]);
    let mut hi_l = hi.to_vec();
    hi_l[axis] = mid;
    let mut lo_r = lo.to_vec();
    lo_r[axis] = mid;
    let a = classify_box(domain, lo, &hi_l);
    if a == BoxClass::Boundary {
        return BoxClass::Boundary;
    }
    let b = classify_box(domain, &lo_r, hi);
    if b == BoxClass::Boundary || a != b {
        return BoxClass::Boundary;
    }
    a
}

fn half_diag(lo: &[f64], hi: &[f64]) -> f64 {
    0.5 * lo
        .iter()
        .zip(hi)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
}

fn longest_axis(lo: &[f64], hi: &[f64]) -> usize {
    (0..lo.len())
        .max_by(|&a, &b| (hi[a] - lo[a]).partial_cmp(&(hi[b] - lo[b])).unwrap())
        .unwrap()
}

/// Serialized cube entry: anchor plus optional flags ("truncated").
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeRecord {
    pub level: i32,
    pub anchor: Vec<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// The Whitney decomposition of a domain restricted to a search box.
#[derive(Debug, Clone)]
pub struct WhitneyForest {
    /// Dilation factor K of the certification test.
    pub k_factor: f64,
    /// Truncation level: no cube is subdivided below side 2^n_min.
    pub n_min: i32,
    /// Search box; only cubes contained in it are considered.
    pub bbox: Aabb,
    /// Member cubes, sorted coarse-to-fine then lexicographically.
    pub cubes: Vec<DyadicCube>,
    /// Level-n_min cubes meeting the domain that failed certification and
    /// would subdivide further; downstream sums report their mass apart.
    pub truncated: Vec<DyadicCube>,
    adjacency: Vec<Vec<usize>>,
    index: HashMap<DyadicCube, usize>,
}

/// A path of pairwise-touching forest cubes; the hop metric counts cubes,
/// so a single cube has length 1.
#[derive(Debug, Clone)]
pub struct CubePath {
    pub cubes: Vec<DyadicCube>,
    pub length_d: usize,
}

/// Empirical uniformity profile: the upper envelope of the hop metric
/// against normalized cube separation, on a log-spaced grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformityFit {
    pub s_grid: Vec<f64>,
    pub envelope: Vec<f64>,
    /// Coefficients of the affine fit envelope ~ intercept + slope*log2(s).
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    /// True when the envelope stays close to affine in log s (the bounded
    /// uniformity signature); bottleneck domains break this.
    pub consistent: bool,
}

/// Which side of the boundary a corkscrew ball is requested on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorkscrewSide {
    Interior,
    Exterior,
}

/// Decomposes `domain` inside `bbox` into maximal dyadic cubes whose
/// K-dilate is certified inside, down to level `n_min`.
pub fn whitney_decompose(
    domain: &ImplicitDomain,
    k_factor: f64,
    bbox: &Aabb,
    n_min: i32,
) -> Result<WhitneyForest> {
    if !(k_factor >= 3.0) {
        return Err(invalid_input!("dilation factor K must be at least 3"));
    }
    if bbox.dim() != domain.dim {
        return Err(invalid_input!("search box dimension mismatch"));
    }
    if 2f64.powi(n_min) <= 1e3 * GEOM_TOL {
        return Err(invalid_input!(
            "truncation side 2^{n_min} is below the certification tolerance"
        ));
    }
    let dim = domain.dim;
    let n_cap = (bbox.max_side().log2().ceil() as i32) + 1;
    let mut cubes = Vec::new();
    let mut truncated = Vec::new();
    let mut stack: Vec<DyadicCube> = Vec::new();
    for level in (n_min..=n_cap).rev() {
        let ranges: Option<Vec<(i64, i64)>> = (0..dim)
            .map(|k| lattice_range(bbox.lo[k], bbox.hi[k], level))
            .collect();
        let Some(ranges) = ranges else { continue };
        let parent_ranges: Vec<Option<(i64, i64)>> = (0..dim)
            .map(|k| lattice_range(bbox.lo[k], bbox.hi[k], level + 1))
            .collect();
        let parent_fits = |anchor: &[i64]| -> bool {
            anchor.iter().enumerate().all(|(k, &a)| {
                parent_ranges[k].is_some_and(|(lo, hi)| {
                    let pa = a >> 1;
                    pa >= lo && pa <= hi
                })
            })
        };
        for_each_lattice(&ranges, &mut |anchor| {
            if !parent_fits(anchor) {
                stack.push(DyadicCube::new(level, anchor.to_vec()));
            }
        });
    }
    // Depth-first maximality scan: a cube is emitted when its dilate
    // certifies and every ancestor inside the box failed.
    while let Some(q) = stack.pop() {
        let s = domain.sdist(&q.center());
        if s >= q.half_diagonal() {
            continue; // certified disjoint from the domain
        }
        let kq = q.dilated(k_factor);
        if certify_inside(domain, &kq.lo, &kq.hi) {
            cubes.push(q);
            continue;
        }
        if q.level <= n_min {
            truncated.push(q);
            continue;
        }
        for child in q.children() {
            stack.push(child);
        }
    }
    sort_cubes(&mut cubes);
    sort_cubes(&mut truncated);
    Ok(WhitneyForest::assemble(
        k_factor,
        n_min,
        bbox.clone(),
        cubes,
        truncated,
    ))
}

fn sort_cubes(cubes: &mut [DyadicCube]) {
    cubes.sort_by(|a, b| {
        b.level
            .cmp(&a.level)
            .then_with(|| a.anchor.cmp(&b.anchor))
    });
}

/// Anchors a with [a*2^level, (a+1)*2^level] inside [lo, hi], or None.
fn lattice_range(lo: f64, hi: f64, level: i32) -> Option<(i64, i64)> {
    let side = 2f64.powi(level);
    let a_min = (lo / side - 1e-9).ceil() as i64;
    let a_max = (hi / side + 1e-9).floor() as i64 - 1;
    (a_max >= a_min).then_some((a_min, a_max))
}

fn for_each_lattice(ranges: &[(i64, i64)], f: &mut dyn FnMut(&[i64])) {
    let dim = ranges.len();
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&cur);
        let mut k = dim;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if cur[k] < ranges[k].1 {
                cur[k] += 1;
                for (c, r) in cur[k + 1..].iter_mut().zip(&ranges[k + 1..]) {
                    *c = r.0;
                }
                break;
            }
        }
    }
}

impl WhitneyForest {
    fn assemble(
        k_factor: f64,
        n_min: i32,
        bbox: Aabb,
        cubes: Vec<DyadicCube>,
        truncated: Vec<DyadicCube>,
    ) -> Self {
        let index: HashMap<DyadicCube, usize> = cubes
            .iter()
            .enumerate()
            .map(|(i, q)| (q.clone(), i))
            .collect();
        let adjacency = build_adjacency(&cubes, &index);
        WhitneyForest {
            k_factor,
            n_min,
            bbox,
            cubes,
            truncated,
            adjacency,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn index_of(&self, q: &DyadicCube) -> Option<usize> {
        self.index.get(q).copied()
    }

    /// Ascending indices of the cubes touching cube `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Number of member cubes whose `lambda`-dilated box contains `x`.
    pub fn dilated_cover_count(&self, x: &[f64], lambda: f64) -> usize {
        self.cubes
            .iter()
            .filter(|q| {
                let h = 0.5 * lambda * q.side();
                q.center().iter().zip(x).all(|(c, v)| (v - c).abs() <= h)
            })
            .count()
    }

    /// Hop distances from cube `src` to every cube; usize::MAX when
    /// unreachable. Distance counts cubes, so d(src, src) = 1.
    pub fn hop_distances(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::new();
        dist[src] = 1;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Serializes members plus truncated flags as an array of records.
    pub fn to_records(&self) -> Vec<CubeRecord> {
        let mut out: Vec<CubeRecord> = self
            .cubes
            .iter()
            .map(|q| CubeRecord {
                level: q.level,
                anchor: q.anchor.clone(),
                flags: Vec::new(),
            })
            .collect();
        out.extend(self.truncated.iter().map(|q| CubeRecord {
            level: q.level,
            anchor: q.anchor.clone(),
            flags: vec!["truncated".into()],
        }));
        out
    }

    /// Rebuilds a forest (including adjacency) from serialized records.
    pub fn from_records(
        k_factor: f64,
        n_min: i32,
        bbox: Aabb,
        records: &[CubeRecord],
    ) -> Result<Self> {
        let mut cubes = Vec::new();
        let mut truncated = Vec::new();
        for r in records {
            let q = DyadicCube::new(r.level, r.anchor.clone());
            if r.flags.iter().any(|f| f == "truncated") {
                truncated.push(q);
            } else {
                cubes.push(q);
            }
        }
        sort_cubes(&mut cubes);
        sort_cubes(&mut truncated);
        Ok(WhitneyForest::assemble(
            k_factor, n_min, bbox, cubes, truncated,
        ))
    }
}

fn build_adjacency(
    cubes: &[DyadicCube],
    index: &HashMap<DyadicCube, usize>,
) -> Vec<Vec<usize>> {
    let levels: BTreeSet<i32> = cubes.iter().map(|q| q.level).collect();
    let mut adjacency = vec![Vec::new(); cubes.len()];
    for (i, q) in cubes.iter().enumerate() {
        // Touching members never differ by more than a few levels (sizes
        // of touching Whitney cubes are comparable); 3 is conservative.
        for &m in levels.range(q.level - 3..=q.level + 3) {
            let ranges: Vec<(i64, i64)> = q
                .anchor
                .iter()
                .map(|&a| candidate_range(a, q.level, m))
                .collect();
            for_each_lattice(&ranges, &mut |anchor| {
                let cand = DyadicCube::new(m, anchor.to_vec());
                if let Some(&j) = index.get(&cand) {
                    if j != i && q.touches(&cand) {
                        adjacency[i].push(j);
                    }
                }
            });
        }
        adjacency[i].sort_unstable();
        adjacency[i].dedup();
    }
    adjacency
}

/// Anchor range at level m that can touch [a 2^n, (a+1) 2^n].
fn candidate_range(a: i64, n: i32, m: i32) -> (i64, i64) {
    let s = n.min(m);
    let shift_q = (n - s) as u32;
    let shift_c = (m - s) as u32;
    let a_lo = (a as i128) << shift_q;
    let a_hi = a_lo + (1i128 << shift_q);
    let b_min = (a_lo >> shift_c) - 1;
    let b_max = a_hi >> shift_c;
    (b_min as i64, b_max as i64)
}

/// Shortest touching-cubes path between two forest members.
pub fn whitney_distance(
    forest: &WhitneyForest,
    q: &DyadicCube,
    r: &DyadicCube,
) -> Result<CubePath> {
    let qi = forest
        .index_of(q)
        .ok_or_else(|| invalid_input!("first cube is not in the forest"))?;
    let ri = forest
        .index_of(r)
        .ok_or_else(|| invalid_input!("second cube is not in the forest"))?;
    let mut prev = vec![usize::MAX; forest.len()];
    let mut seen = vec![false; forest.len()];
    let mut queue = VecDeque::new();
    seen[qi] = true;
    queue.push_back(qi);
    while let Some(u) = queue.pop_front() {
        if u == ri {
            break;
        }
        for &v in forest.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    if !seen[ri] {
        return Err(GmtError::NoPath);
    }
    let mut rev = vec![ri];
    let mut cur = ri;
    while cur != qi {
        cur = prev[cur];
        rev.push(cur);
    }
    rev.reverse();
    let cubes: Vec<DyadicCube> = rev.into_iter().map(|i| forest.cubes[i].clone()).collect();
    let length_d = cubes.len();
    Ok(CubePath { cubes, length_d })
}

/// Fits the uniformity envelope over sampled member-index pairs: for each
/// pair, the hop distance against dist(Q,R)/min(side), then the upper
/// envelope on a log-spaced separation grid with an affine-in-log fit.
pub fn fit_uniformity(forest: &WhitneyForest, pairs: &[(usize, usize)]) -> Result<UniformityFit> {
    if pairs.is_empty() {
        return Err(GmtError::Empty("uniformity pair sample".into()));
    }
    let mut dist_cache: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut rows = Vec::with_capacity(pairs.len());
    let mut unreachable = Vec::new();
    for &(i, j) in pairs {
        if i >= forest.len() || j >= forest.len() {
            return Err(invalid_input!("pair index out of range"));
        }
        let d = dist_cache
            .entry(i)
            .or_insert_with(|| forest.hop_distances(i))[j];
        if d == usize::MAX {
            unreachable.push((i, j));
            continue;
        }
        let (qa, qb) = (&forest.cubes[i], &forest.cubes[j]);
        let gap = qa.aabb().dist_to_box(&qb.aabb());
        let s = gap / qa.side().min(qb.side());
        rows.push((s, d as f64));
    }
    if !unreachable.is_empty() {
        let shown: Vec<String> = unreachable
            .iter()
            .take(8)
            .map(|(i, j)| format!("({i},{j})"))
            .collect();
        return Err(invalid_input!(
            "{} disconnected pairs in the sample: {}",
            unreachable.len(),
            shown.join(", ")
        ));
    }
    let s_min = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let s_max = rows.iter().map(|r| r.0).fold(0.0f64, f64::max);
    let lo = s_min.max(0.5);
    let hi = s_max.max(lo * (1.0 + 1e-12));
    let n_grid = 16;
    let s_grid: Vec<f64> = (0..n_grid)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n_grid - 1) as f64))
        .collect();
    let envelope: Vec<f64> = s_grid
        .iter()
        .map(|&sg| {
            rows.iter()
                .filter(|r| r.0 <= sg * (1.0 + 1e-12))
                .map(|r| r.1)
                .fold(1.0f64, f64::max)
        })
        .collect();
    let xs: Vec<f64> = s_grid.iter().map(|s| s.log2()).collect();
    let (intercept, slope, max_residual) = linear_fit(&xs, &envelope);
    let range = envelope.iter().fold(0.0f64, |m, &v| m.max(v))
        - envelope.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let consistent = slope >= -1e-9 && max_residual <= (0.15 * range).max(3.0);
    Ok(UniformityFit {
        s_grid,
        envelope,
        slope,
        intercept,
        max_residual,
        consistent,
    })
}

/// Searches for a ball of radius at least r/C inside B(xi, r) and the
/// requested side of the boundary. The returned ball is a certificate
/// (containment follows from the signed-distance bound); `None` means the
/// search failed, not that no such ball exists.
pub fn find_corkscrew(
    domain: &ImplicitDomain,
    xi: &[f64],
    r: f64,
    side: CorkscrewSide,
    c_factor: f64,
) -> Result<Option<Ball>> {
    if !(r > 0.0) {
        return Err(invalid_input!("corkscrew radius must be positive"));
    }
    if !(c_factor > 1.0) {
        return Err(invalid_input!("corkscrew constant must exceed 1"));
    }
    let dim = domain.dim;
    let gain = |x: &[f64]| -> f64 {
        let s = domain.sdist(x);
        match side {
            CorkscrewSide::Interior => -s,
            CorkscrewSide::Exterior => s,
        }
    };
    let objective = |x: &[f64]| -> f64 { gain(x).min(r - dist(x, xi)) };
    // Deterministic coarse grid seed.
    let divisions = 8i64;
    let step0 = r / divisions as f64;
    let ranges: Vec<(i64, i64)> = (0..dim).map(|_| (-divisions, divisions)).collect();
    let mut best_x: Vec<f64> = xi.to_vec();
    let mut best_f = objective(&best_x);
    for_each_lattice(&ranges, &mut |offsets| {
        let x: Vec<f64> = xi
            .iter()
            .zip(offsets)
            .map(|(&c, &o)| c + o as f64 * step0)
            .collect();
        if dist(&x, xi) < r {
            let f = objective(&x);
            if f > best_f {
                best_f = f;
                best_x = x;
            }
        }
    });
    // Coordinate hill climb with shrinking step.
    let mut step = step0;
    while step > r * 1e-6 {
        let mut improved = false;
        for k in 0..dim {
            for dir in [-1.0, 1.0] {
                let mut x = best_x.clone();
                x[k] += dir * step;
                if dist(&x, xi) < r {
                    let f = objective(&x);
                    if f > best_f {
                        best_f = f;
                        best_x = x;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    if best_f + 1e-12 * r >= r / c_factor {
        Ok(Some(Ball::new(best_x, best_f)))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::gallery_by_name;

    fn half_plane() -> ImplicitDomain {
        gallery_by_name("half_space", "{}").unwrap()
    }

    #[test]
    fn half_plane_forest_is_two_rows() {
        let d = half_plane();
        let forest =
            whitney_decompose(&d, 3.0, &Aabb::new(vec![0.0, 0.0], vec![8.0, 8.0]), -2).unwrap();
        assert!(!forest.is_empty());
        for q in &forest.cubes {
            assert!(
                q.anchor[1] == 2 || q.anchor[1] == 3,
                "unexpected row {q:?}"
            );
        }
        // Side-1 cube two rows above the floor is a member; one row up is
        // not (its 3-dilate touches the floor).
        assert!(forest.index_of(&DyadicCube::new(0, vec![0, 2])).is_some());
        assert!(forest.index_of(&DyadicCube::new(0, vec![0, 1])).is_none());
        // The two floor rows can never certify at any level, so they land
        // in the truncation list at level n_min.
        assert_eq!(forest.truncated.len(), 64);
        for q in &forest.truncated {
            assert_eq!(q.level, -2);
            assert!(q.anchor[1] == 0 || q.anchor[1] == 1, "row {q:?}");
        }
    }

    #[test]
    fn box_outside_domain_gives_empty_forest() {
        let d = half_plane();
        let forest =
            whitney_decompose(&d, 3.0, &Aabb::new(vec![0.0, -8.0], vec![8.0, 0.0]), -2).unwrap();
        assert!(forest.is_empty());
        // Only the row kissing the boundary from outside survives the
        // disjointness certificate; a Lipschitz oracle cannot separate it.
        for q in &forest.truncated {
            assert_eq!(q.level, -2);
            assert_eq!(q.anchor[1], -1, "unexpected cube {q:?}");
        }
    }

    #[test]
    fn k_below_three_rejected() {
        let d = half_plane();
        let r = whitney_decompose(&d, 2.0, &Aabb::cube(2, 0.0, 8.0), -2);
        assert!(r.is_err());
    }

    #[test]
    fn adjacency_is_symmetric_with_comparable_sides() {
        let d = gallery_by_name("ball", r#"{"radius": 1.0}"#).unwrap();
        let forest = whitney_decompose(&d, 3.0, &Aabb::cube(2, -1.0, 1.0), -6).unwrap();
        assert!(!forest.is_empty());
        for i in 0..forest.len() {
            for &j in forest.neighbors(i) {
                assert!(forest.neighbors(j).contains(&i));
                let ratio = forest.cubes[i].side() / forest.cubes[j].side();
                assert!((0.25..=4.0).contains(&ratio), "side ratio {ratio}");
                assert!(forest.cubes[i].touches(&forest.cubes[j]));
            }
        }
    }

    #[test]
    fn hop_metric_on_half_plane_row() {
        let d = half_plane();
        let forest =
            whitney_decompose(&d, 3.0, &Aabb::new(vec![0.0, 0.0], vec![8.0, 8.0]), -2).unwrap();
        let q = DyadicCube::new(0, vec![0, 2]);
        let path = whitney_distance(&forest, &q, &q).unwrap();
        assert_eq!(path.length_d, 1);
        assert_eq!(path.cubes, vec![q.clone()]);
        let r = DyadicCube::new(0, vec![4, 2]);
        let path = whitney_distance(&forest, &q, &r).unwrap();
        assert_eq!(path.length_d, 5, "walk along the k=2 row");
        for w in path.cubes.windows(2) {
            assert!(w[0].touches(&w[1]));
        }
        let rev = whitney_distance(&forest, &r, &q).unwrap();
        assert_eq!(rev.length_d, path.length_d);
    }

    #[test]
    fn corkscrew_on_half_plane_and_slab() {
        let d = half_plane();
        let ball = find_corkscrew(&d, &[0.0, 0.0], 1.0, CorkscrewSide::Interior, 2.0)
            .unwrap()
            .expect("half-plane corkscrew");
        assert!(ball.radius >= 0.5 - 1e-9);
        assert!((ball.center[0]).abs() < 1e-6);
        assert!((ball.center[1] - 0.5).abs() < 1e-6);

        let slab = gallery_by_name("slab", r#"{"eps": 0.0009765625}"#).unwrap();
        let none = find_corkscrew(&slab, &[0.0, 0.0], 0.5, CorkscrewSide::Interior, 2.0).unwrap();
        assert!(none.is_none(), "no large ball fits in a thin slab");

        let exterior = find_corkscrew(&d, &[0.0, 0.0], 1.0, CorkscrewSide::Exterior, 2.0)
            .unwrap()
            .expect("half-plane exterior corkscrew");
        assert!(exterior.center[1] < 0.0);
    }

    #[test]
    fn uniformity_on_single_cube_pair() {
        let d = half_plane();
        let forest =
            whitney_decompose(&d, 3.0, &Aabb::new(vec![0.0, 0.0], vec![8.0, 8.0]), 0).unwrap();
        let fit = fit_uniformity(&forest, &[(0, 0)]).unwrap();
        assert!(fit.envelope.iter().all(|&v| v == 1.0));
        assert!(fit.consistent);
    }

    #[test]
    fn classify_box_on_unit_disk() {
        let d = gallery_by_name("ball", "{}").unwrap();
        assert_eq!(
            classify_box(&d, &[-0.1, -0.1], &[0.1, 0.1]),
            BoxClass::Inside
        );
        assert_eq!(classify_box(&d, &[2.0, 2.0], &[3.0, 3.0]), BoxClass::Outside);
        assert_eq!(
            classify_box(&d, &[0.9, -0.1], &[1.1, 0.1]),
            BoxClass::Boundary
        );
    }
}
