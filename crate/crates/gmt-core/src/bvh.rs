//! Bounding-volume hierarchies for nearest-point and union signed-distance
//! queries.
//!
//! Both trees are built by deterministic median splits along the longest
//! axis, so query results and even tie-breaking are reproducible across
//! runs. Queries return exact values; the hierarchy only prunes.

use crate::geom::{dist, Aabb};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
struct Node {
    aabb: Aabb,
    /// Left child index, or usize::MAX at a leaf.
    left: usize,
    /// Right child index, or start of the item range at a leaf.
    right: usize,
    /// Item count at a leaf, 0 at internal nodes.
    count: usize,
    /// Max over boxes in the subtree of half the longest box side; 0 for
    /// point sets. Lower bound for a subtree: dist(x, aabb) - hmax.
    hmax: f64,
}

/// A static point set supporting exact nearest-distance queries.
#[derive(Debug, Clone)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl PointSet {
    /// Builds the hierarchy; the input order is preserved for indexing.
    pub fn build(points: Vec<Vec<f64>>) -> Self {
        assert!(!points.is_empty(), "point set must be nonempty");
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        let n = points.len();
        build_node(
            &mut nodes,
            &mut order,
            0,
            n,
            &|i| points[i].as_slice(),
            &|_| 0.0,
            &|i| {
                let p = &points[i];
                Aabb::new(p.clone(), p.clone())
            },
        );
        PointSet {
            points,
            order,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Exact distance from `x` to the set.
    pub fn dist_to(&self, x: &[f64]) -> f64 {
        self.nearest(x).1
    }

    /// Index (lowest on ties) and distance of a nearest point to `x`.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_rec(0, x, &mut best);
        best
    }

    /// Ascending indices of all points in the closed ball B(x, r).
    pub fn indices_in_ball(&self, x: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.ball_rec(0, x, r, &mut out);
        out.sort_unstable();
        out
    }

    fn ball_rec(&self, node: usize, x: &[f64], r: f64, out: &mut Vec<usize>) {
        let nd = &self.nodes[node];
        if nd.aabb.dist_to(x) > r {
            return;
        }
        if nd.count > 0 {
            for &i in &self.order[nd.right..nd.right + nd.count] {
                if dist(x, &self.points[i]) <= r {
                    out.push(i);
                }
            }
            return;
        }
        self.ball_rec(nd.left, x, r, out);
        self.ball_rec(nd.right, x, r, out);
    }

    fn nearest_rec(&self, node: usize, x: &[f64], best: &mut (usize, f64)) {
        let nd = &self.nodes[node];
        if nd.aabb.dist_to(x) > best.1 {
            return;
        }
        if nd.count > 0 {
            for &i in &self.order[nd.right..nd.right + nd.count] {
                let d = dist(x, &self.points[i]);
                if d < best.1 || (d == best.1 && i < best.0) {
                    *best = (i, d);
                }
            }
            return;
        }
        let (a, b) = (nd.left, nd.right);
        let da = self.nodes[a].aabb.dist_to(x);
        let db = self.nodes[b].aabb.dist_to(x);
        // Visit the nearer child first; on ties keep left-first order so
        // the lowest qualifying index wins deterministically.
        if db < da {
            self.nearest_rec(b, x, best);
            self.nearest_rec(a, x, best);
        } else {
            self.nearest_rec(a, x, best);
            self.nearest_rec(b, x, best);
        }
    }
}

/// A static box collection supporting exact union signed-distance queries:
/// the minimum over member boxes of the box signed distance.
#[derive(Debug, Clone)]
pub struct BoxSet {
    boxes: Vec<Aabb>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl BoxSet {
    pub fn build(boxes: Vec<Aabb>) -> Self {
        assert!(!boxes.is_empty(), "box set must be nonempty");
        let centers: Vec<Vec<f64>> = boxes
            .iter()
            .map(|b| {
                (0..b.dim())
                    .map(|k| 0.5 * (b.lo[k] + b.hi[k]))
                    .collect()
            })
            .collect();
        let mut order: Vec<usize> = (0..boxes.len()).collect();
        let mut nodes = Vec::new();
        let n = boxes.len();
        build_node(
            &mut nodes,
            &mut order,
            0,
            n,
            &|i| centers[i].as_slice(),
            &|i| 0.5 * boxes[i].max_side(),
            &|i| boxes[i].clone(),
        );
        BoxSet {
            boxes,
            order,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    /// Exact signed distance to the union of the boxes: negative strictly
    /// inside some box, positive outside all, via min over members.
    pub fn sdist_union(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        self.sdist_rec(0, x, &mut best);
        best
    }

    fn sdist_rec(&self, node: usize, x: &[f64], best: &mut f64) {
        let nd = &self.nodes[node];
        // Any box B in the subtree satisfies sdist_B(x) >= dist(x, aabb) -
        // hmax: outside B the value is dist(x,B) >= dist(x,aabb), inside B
        // it is >= -hmax and dist(x,aabb) = 0.
        if nd.aabb.dist_to(x) - nd.hmax >= *best {
            return;
        }
        if nd.count > 0 {
            for &i in &self.order[nd.right..nd.right + nd.count] {
                let s = self.boxes[i].sdist(x);
                if s < *best {
                    *best = s;
                }
            }
            return;
        }
        let (a, b) = (nd.left, nd.right);
        let ka = self.nodes[a].aabb.dist_to(x) - self.nodes[a].hmax;
        let kb = self.nodes[b].aabb.dist_to(x) - self.nodes[b].hmax;
        if kb < ka {
            self.sdist_rec(b, x, best);
            self.sdist_rec(a, x, best);
        } else {
            self.sdist_rec(a, x, best);
            self.sdist_rec(b, x, best);
        }
    }
}

/// Recursive median-split build shared by both trees. `key` yields the
/// split coordinate per item, `half` the per-item hmax contribution, and
/// `item_box` the bounding box contribution.
fn build_node<'a>(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    offset: usize,
    len: usize,
    key: &dyn Fn(usize) -> &'a [f64],
    half: &dyn Fn(usize) -> f64,
    item_box: &dyn Fn(usize) -> Aabb,
) -> usize {
    let slot = nodes.len();
    let mut aabb = item_box(order[0]);
    let mut hmax: f64 = 0.0;
    for &i in order.iter().take(len) {
        let ib = item_box(i);
        for k in 0..aabb.dim() {
            aabb.lo[k] = aabb.lo[k].min(ib.lo[k]);
            aabb.hi[k] = aabb.hi[k].max(ib.hi[k]);
        }
        hmax = hmax.max(half(i));
    }
    nodes.push(Node {
        aabb: aabb.clone(),
        left: usize::MAX,
        right: offset,
        count: len,
        hmax,
    });
    if len <= LEAF_SIZE {
        return slot;
    }
    let axis = (0..aabb.dim())
        .max_by(|&a, &b| {
            (aabb.hi[a] - aabb.lo[a])
                .partial_cmp(&(aabb.hi[b] - aabb.lo[b]))
                .unwrap()
        })
        .unwrap();
    let mid = len / 2;
    order[..len].select_nth_unstable_by(mid, |&a, &b| {
        key(a)[axis]
            .partial_cmp(&key(b)[axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build_node(nodes, lo, offset, mid, key, half, item_box);
    let right = build_node(nodes, hi, offset + mid, len - mid, key, half, item_box);
    nodes[slot].left = left;
    nodes[slot].right = right;
    nodes[slot].count = 0;
    nodes[slot].hmax = nodes[left].hmax.max(nodes[right].hmax);
    slot
}
