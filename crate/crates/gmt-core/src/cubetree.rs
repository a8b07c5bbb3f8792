//! Dyadic-style cube hierarchies on finite metric spaces.
//!
//! A cube tree partitions a point cloud at every level into "cubes" built
//! from greedy nested nets: level n uses net radius half of length(n),
//! lengths shrink by the ratio c0, and every point follows a
//! nearest-net-point chain from the finest net up to its level-n cube.
//! The construction is deterministic (lowest index wins all ties) and
//! guarantees, for c0 <= 1/4, a partition at every level, nesting across
//! levels, outer containment |xi - center| < length(n), and an inner ball
//! of radius at least 2^(n-N-2) * length(n) around each center (N the
//! finest level): points closer than that have nearest-point chains that
//! are forced into the center by the net separation, doubling at most
//! once per level.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{GmtError, Result};
use crate::geom::{dist, Ball};
use crate::invalid_input;

/// Identifies a cube by (level, index within the level).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeId {
    pub level: usize,
    pub idx: usize,
}

/// One cube: a center point index and the sorted member indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricCube {
    pub center: usize,
    pub members: Vec<usize>,
}

/// The members of a cube that sit deeper than t * length from its
/// complement; the remainder is the cube's boundary shell.
#[derive(Debug, Clone)]
pub struct InnerCube {
    pub id: CubeId,
    pub t: f64,
    pub members: Vec<usize>,
}

/// Per-axiom verification outcome with worst-case witnesses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeAxiomReport {
    pub partition_ok: bool,
    pub nesting_ok: bool,
    pub sandwich_ok: bool,
    pub c1_achieved: f64,
    pub witnesses: Vec<String>,
}

impl CubeAxiomReport {
    pub fn all_ok(&self) -> bool {
        self.partition_ok && self.nesting_ok && self.sandwich_ok
    }
}

/// A hierarchy of cubes over a point cloud.
#[derive(Debug, Clone)]
pub struct CubeTree {
    pub cloud: PointCloud,
    pub c0: f64,
    /// Number of generations; levels run 0..depth.
    pub depth: usize,
    /// length(n) = diam * c0^n; the top length is the cloud diameter.
    pub lengths: Vec<f64>,
    pub levels: Vec<Vec<MetricCube>>,
    /// Empirical inner-ball constant: min over cubes of
    /// dist(center, nonmembers) / length(level).
    pub c1_achieved: f64,
    /// Set when the nets saturate before the last level (every deeper
    /// generation repeats the same singleton cubes).
    pub truncated: bool,
    /// parent[n][i]: index at level n-1 of the parent of cube (n, i).
    parent: Vec<Vec<usize>>,
    /// assign[n][p]: index at level n of the cube containing point p.
    assign: Vec<Vec<usize>>,
    /// children[n][i]: level n+1 cube indices under cube (n, i).
    children: Vec<Vec<Vec<usize>>>,
}

/// Builds the tree with `depth` generations (levels 0..depth-1).
pub fn build_cube_tree(cloud: &PointCloud, c0: f64, depth: usize) -> Result<CubeTree> {
    if cloud.is_empty() {
        return Err(GmtError::Empty("cube tree input cloud".into()));
    }
    if !(c0 > 0.0 && c0 <= 0.25) {
        return Err(invalid_input!(
            "net ratio c0 must lie in (0, 1/4], got {c0}"
        ));
    }
    if depth == 0 {
        return Err(invalid_input!("tree depth must be at least 1"));
    }
    let n = cloud.len();
    let diam = diameter(cloud);
    let lengths: Vec<f64> = (0..depth).map(|l| diam * c0.powi(l as i32)).collect();

    // Greedy nested nets, lowest index first: a point joins the level-n
    // net when it is at least radius(n) = length(n)/2 from the net so far.
    let mut nets: Vec<Vec<usize>> = Vec::with_capacity(depth);
    let mut in_net = vec![false; n];
    let mut net: Vec<usize> = Vec::new();
    for length in &lengths {
        let rho = 0.5 * length;
        for p in 0..n {
            if in_net[p] {
                continue;
            }
            let far = net
                .iter()
                .all(|&q| dist(cloud.point(p), cloud.point(q)) >= rho);
            if far {
                in_net[p] = true;
                net.push(p);
            }
        }
        let mut level_net = net.clone();
        level_net.sort_unstable();
        nets.push(level_net);
    }
    let finest = depth - 1;

    // Nearest-net-point chains: every point maps to its nearest finest
    // net point, and each net point at level n maps to its nearest level
    // n-1 net point (lowest index on ties, everywhere).
    let nearest_in = |targets: &[usize], x: &[f64]| -> usize {
        let mut best = (f64::INFINITY, usize::MAX);
        for &q in targets {
            let d = dist(x, cloud.point(q));
            if d < best.0 {
                best = (d, q);
            }
        }
        best.1
    };
    // rep[n][p]: the level-n net point whose chain owns point p.
    let mut rep: Vec<Vec<usize>> = vec![vec![0; n]; depth];
    for p in 0..n {
        rep[finest][p] = nearest_in(&nets[finest], cloud.point(p));
    }
    for lvl in (0..finest).rev() {
        // Chain each level lvl+1 net point up, then compose.
        let mut up = std::collections::HashMap::new();
        for &q in &nets[lvl + 1] {
            up.insert(q, nearest_in(&nets[lvl], cloud.point(q)));
        }
        for p in 0..n {
            rep[lvl][p] = up[&rep[lvl + 1][p]];
        }
    }

    // Materialize cubes per level in net order; drop empty cubes (a net
    // point always owns itself, so none are empty in practice).
    let mut levels: Vec<Vec<MetricCube>> = Vec::with_capacity(depth);
    let mut assign: Vec<Vec<usize>> = Vec::with_capacity(depth);
    for lvl in 0..depth {
        let mut cubes = Vec::new();
        let mut slot_of = std::collections::HashMap::new();
        for &z in &nets[lvl] {
            slot_of.insert(z, cubes.len());
            cubes.push(MetricCube {
                center: z,
                members: Vec::new(),
            });
        }
        let mut a = vec![usize::MAX; n];
        for p in 0..n {
            let slot = slot_of[&rep[lvl][p]];
            cubes[slot].members.push(p);
            a[p] = slot;
        }
        cubes.retain(|c| !c.members.is_empty());
        // Rebuild assignment after retain.
        let mut a2 = vec![usize::MAX; n];
        for (i, c) in cubes.iter().enumerate() {
            for &p in &c.members {
                a2[p] = i;
            }
        }
        let _ = a;
        levels.push(cubes);
        assign.push(a2);
    }

    // Parent and children tables from the assignments.
    let mut parent: Vec<Vec<usize>> = vec![Vec::new(); depth];
    let mut children: Vec<Vec<Vec<usize>>> = (0..depth)
        .map(|lvl| vec![Vec::new(); levels[lvl].len()])
        .collect();
    for lvl in 1..depth {
        parent[lvl] = levels[lvl]
            .iter()
            .map(|c| assign[lvl - 1][c.center])
            .collect();
        for (i, &pa) in parent[lvl].iter().enumerate() {
            children[lvl - 1][pa].push(i);
        }
    }

    let truncated = nets[finest].len() < n_distinct(cloud)
        || (depth >= 2 && nets[finest].len() == nets[finest - 1].len() && all_singletons(&levels[finest - 1]));

    let mut tree = CubeTree {
        cloud: cloud.clone(),
        c0,
        depth,
        lengths,
        levels,
        c1_achieved: f64::INFINITY,
        truncated,
        parent,
        assign,
        children,
    };
    tree.c1_achieved = tree.compute_c1();
    Ok(tree)
}

fn diameter(cloud: &PointCloud) -> f64 {
    let mut d = 0.0f64;
    for i in 0..cloud.len() {
        for j in (i + 1)..cloud.len() {
            d = d.max(dist(cloud.point(i), cloud.point(j)));
        }
    }
    d
}

fn n_distinct(cloud: &PointCloud) -> usize {
    let mut pts: Vec<&[f64]> = cloud.iter_points().collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts.len()
}

fn all_singletons(cubes: &[MetricCube]) -> bool {
    cubes.iter().all(|c| c.members.len() == 1)
}

impl CubeTree {
    pub fn n_points(&self) -> usize {
        self.cloud.len()
    }

    pub fn cube(&self, id: CubeId) -> &MetricCube {
        &self.levels[id.level][id.idx]
    }

    pub fn length(&self, id: CubeId) -> f64 {
        self.lengths[id.level]
    }

    pub fn center_point(&self, id: CubeId) -> &[f64] {
        self.cloud.point(self.cube(id).center)
    }

    /// The containment ball B(center, length).
    pub fn ball(&self, id: CubeId) -> Ball {
        Ball::new(self.center_point(id).to_vec(), self.length(id).max(f64::MIN_POSITIVE))
    }

    /// All cube ids, coarse to fine, in level order.
    pub fn ids(&self) -> Vec<CubeId> {
        (0..self.depth)
            .flat_map(|level| {
                (0..self.levels[level].len()).map(move |idx| CubeId { level, idx })
            })
            .collect()
    }

    pub fn top_ids(&self) -> Vec<CubeId> {
        (0..self.levels[0].len())
            .map(|idx| CubeId { level: 0, idx })
            .collect()
    }

    /// The cube at `level` containing point `p`.
    pub fn cube_of_point(&self, level: usize, p: usize) -> CubeId {
        CubeId {
            level,
            idx: self.assign[level][p],
        }
    }

    pub fn parent_of(&self, id: CubeId) -> Option<CubeId> {
        (id.level > 0).then(|| CubeId {
            level: id.level - 1,
            idx: self.parent[id.level][id.idx],
        })
    }

    pub fn children_of(&self, id: CubeId) -> Vec<CubeId> {
        if id.level + 1 >= self.depth {
            return Vec::new();
        }
        self.children[id.level][id.idx]
            .iter()
            .map(|&idx| CubeId {
                level: id.level + 1,
                idx,
            })
            .collect()
    }

    /// Whether `inner` is contained in `outer` (every cube contains itself).
    pub fn is_descendant(&self, inner: CubeId, outer: CubeId) -> bool {
        if inner.level < outer.level {
            return false;
        }
        let mut cur = inner;
        while cur.level > outer.level {
            cur = self.parent_of(cur).unwrap();
        }
        cur == outer
    }

    /// For each member of the cube, its distance to the complement of the
    /// cube in the cloud (+inf when the complement is empty).
    pub fn member_complement_distances(&self, id: CubeId) -> Vec<f64> {
        let cube = self.cube(id);
        let level_assign = &self.assign[id.level];
        let complement: Vec<usize> = (0..self.n_points())
            .filter(|&p| level_assign[p] != id.idx)
            .collect();
        cube.members
            .iter()
            .map(|&m| {
                complement
                    .iter()
                    .map(|&q| dist(self.cloud.point(m), self.cloud.point(q)))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    fn compute_c1(&self) -> f64 {
        let mut c1 = f64::INFINITY;
        for level in 0..self.depth {
            let len = self.lengths[level];
            if len <= 0.0 {
                continue;
            }
            for (idx, cube) in self.levels[level].iter().enumerate() {
                let zeta = self.cloud.point(cube.center);
                let mut nearest = f64::INFINITY;
                for p in 0..self.n_points() {
                    if self.assign[level][p] != idx {
                        nearest = nearest.min(dist(zeta, self.cloud.point(p)));
                    }
                }
                if nearest.is_finite() {
                    c1 = c1.min(nearest / len);
                }
            }
        }
        c1
    }

    /// Serializes per the external format:
    /// {c0, c1_achieved, levels: [[{center_idx, member_idx[]}]]}.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "c0": self.c0,
            "c1_achieved": if self.c1_achieved.is_finite() { serde_json::json!(self.c1_achieved) } else { serde_json::Value::Null },
            "truncated": self.truncated,
            "levels": self.levels.iter().map(|cubes| {
                cubes.iter().map(|c| serde_json::json!({
                    "center_idx": c.center,
                    "member_idx": c.members,
                })).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
        })
    }

    /// Rebuilds a tree from serialized levels plus the original cloud.
    pub fn from_json(cloud: &PointCloud, value: &serde_json::Value) -> Result<CubeTree> {
        let c0 = value["c0"]
            .as_f64()
            .ok_or_else(|| invalid_input!("tree json missing c0"))?;
        let levels_json = value["levels"]
            .as_array()
            .ok_or_else(|| invalid_input!("tree json missing levels"))?;
        let n = cloud.len();
        let depth = levels_json.len();
        if depth == 0 {
            return Err(invalid_input!("tree json has no levels"));
        }
        let mut levels: Vec<Vec<MetricCube>> = Vec::with_capacity(depth);
        let mut assign: Vec<Vec<usize>> = Vec::with_capacity(depth);
        for lv in levels_json {
            let cubes_json = lv
                .as_array()
                .ok_or_else(|| invalid_input!("tree level is not an array"))?;
            let mut cubes = Vec::with_capacity(cubes_json.len());
            let mut a = vec![usize::MAX; n];
            for cj in cubes_json {
                let center = cj["center_idx"]
                    .as_u64()
                    .ok_or_else(|| invalid_input!("cube missing center_idx"))?
                    as usize;
                let members: Vec<usize> = cj["member_idx"]
                    .as_array()
                    .ok_or_else(|| invalid_input!("cube missing member_idx"))?
                    .iter()
                    .map(|v| v.as_u64().unwrap_or(u64::MAX) as usize)
                    .collect();
                if members.iter().any(|&m| m >= n) || center >= n {
                    return Err(invalid_input!("cube index out of range for the cloud"));
                }
                for &m in &members {
                    if a[m] != usize::MAX {
                        return Err(invalid_input!("point {m} appears in two cubes"));
                    }
                    a[m] = cubes.len();
                }
                cubes.push(MetricCube { center, members });
            }
            if a.iter().any(|&v| v == usize::MAX) {
                return Err(invalid_input!("a point is missing from a level"));
            }
            levels.push(cubes);
            assign.push(a);
        }
        let diam = diameter(cloud);
        let lengths: Vec<f64> = (0..depth).map(|l| diam * c0.powi(l as i32)).collect();
        let mut parent: Vec<Vec<usize>> = vec![Vec::new(); depth];
        let mut children: Vec<Vec<Vec<usize>>> = (0..depth)
            .map(|lvl| vec![Vec::new(); levels[lvl].len()])
            .collect();
        for lvl in 1..depth {
            parent[lvl] = levels[lvl]
                .iter()
                .map(|c| assign[lvl - 1][c.center])
                .collect();
            for (i, &pa) in parent[lvl].iter().enumerate() {
                children[lvl - 1][pa].push(i);
            }
        }
        let mut tree = CubeTree {
            cloud: cloud.clone(),
            c0,
            depth,
            lengths,
            levels,
            c1_achieved: f64::INFINITY,
            truncated: false,
            parent,
            assign,
            children,
        };
        tree.c1_achieved = tree.compute_c1();
        Ok(tree)
    }
}

/// Members of the cube deeper than t * length(cube) from its complement.
pub fn inner_cube(tree: &CubeTree, id: CubeId, t: f64) -> Result<InnerCube> {
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid_input!("inner-cube parameter t must lie in (0,1)"));
    }
    let dists = tree.member_complement_distances(id);
    let cutoff = t * tree.length(id);
    let members = tree
        .cube(id)
        .members
        .iter()
        .zip(&dists)
        .filter(|(_, &d)| d > cutoff)
        .map(|(&m, _)| m)
        .collect();
    Ok(InnerCube { id, t, members })
}

/// Checks partition, nesting, and the ball sandwich on every level.
pub fn verify_cube_axioms(tree: &CubeTree) -> CubeAxiomReport {
    let n = tree.n_points();
    let mut witnesses = Vec::new();

    // Partition: every point in exactly one cube per level, read from the
    // member lists themselves.
    let mut partition_ok = true;
    let mut owner: Vec<Vec<usize>> = Vec::with_capacity(tree.depth);
    for level in 0..tree.depth {
        let mut seen = vec![usize::MAX; n];
        for (idx, cube) in tree.levels[level].iter().enumerate() {
            for &p in &cube.members {
                if seen[p] != usize::MAX {
                    partition_ok = false;
                    witnesses.push(format!(
                        "partition: point {p} is in two cubes at level {level}"
                    ));
                } else {
                    seen[p] = idx;
                }
            }
        }
        if let Some(p) = seen.iter().position(|&v| v == usize::MAX) {
            partition_ok = false;
            witnesses.push(format!(
                "partition: point {p} is in no cube at level {level}"
            ));
        }
        owner.push(seen);
    }

    // Nesting: all members of a level n+1 cube share one level-n cube.
    let mut nesting_ok = true;
    'nest: for level in 1..tree.depth {
        for cube in tree.levels[level].iter() {
            let owners: Vec<usize> = cube
                .members
                .iter()
                .map(|&p| owner[level - 1][p])
                .collect();
            if owners.windows(2).any(|w| w[0] != w[1]) {
                nesting_ok = false;
                witnesses.push(format!(
                    "nesting: cube with center {} at level {level} straddles two parents",
                    cube.center
                ));
                break 'nest;
            }
        }
    }

    // Sandwich: members stay strictly inside the containment ball, and
    // the achieved inner constant is the worst center-to-nonmember gap.
    let mut sandwich_ok = true;
    for level in 0..tree.depth {
        let len = tree.lengths[level];
        for cube in tree.levels[level].iter() {
            let zeta = tree.cloud.point(cube.center);
            for &p in &cube.members {
                let d = dist(zeta, tree.cloud.point(p));
                if d > 0.0 && d >= len {
                    sandwich_ok = false;
                    witnesses.push(format!(
                        "sandwich: point {p} at distance {d} from center {} (length {len})",
                        cube.center
                    ));
                }
            }
        }
    }

    CubeAxiomReport {
        partition_ok,
        nesting_ok,
        sandwich_ok,
        c1_achieved: tree.c1_achieved,
        witnesses,
    }
}
