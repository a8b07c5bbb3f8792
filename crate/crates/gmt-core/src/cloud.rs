//! Weighted point clouds and boundary sampling.
//!
//! Clouds carry one weight per point, interpreted as surface mass. The
//! boundary sampler walks the grid edges of an h-lattice, bisects every
//! sign change of the signed distance, and splits each occupied cell's
//! h^d mass evenly among the points found in it.

use std::path::Path;

use crate::error::{GmtError, Result};
use crate::domain::ImplicitDomain;
use crate::invalid_input;

/// A finite weighted point set in R^k with flat coordinate storage.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
    weights: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, data: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid_input!("point dimension must be positive"));
        }
        if data.len() != dim * weights.len() {
            return Err(invalid_input!(
                "coordinate count {} does not match {} points of dimension {}",
                data.len(),
                weights.len(),
                dim
            ));
        }
        if !data.iter().chain(weights.iter()).all(|v| v.is_finite()) {
            return Err(invalid_input!("non-finite value in point cloud"));
        }
        Ok(PointCloud { dim, data, weights })
    }

    pub fn from_points(points: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(GmtError::Empty("point cloud".into()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(invalid_input!("points have mixed dimensions"));
        }
        let data = points.iter().flatten().copied().collect();
        PointCloud::new(dim, data, weights)
    }

    /// Equal weights summing to `total_mass`.
    pub fn uniform(points: &[Vec<f64>], total_mass: f64) -> Result<Self> {
        let w = total_mass / points.len() as f64;
        PointCloud::from_points(points, vec![w; points.len()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.iter_points().map(|p| p.to_vec()).collect()
    }

    /// Total mass, summed with compensation.
    pub fn total_weight(&self) -> f64 {
        crate::util::compensated_sum(self.weights.iter().copied())
    }

    /// Reads `x0,...,x{k-1},weight` rows; the header fixes the dimension.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[headers.len() - 1] != "weight" {
            return Err(invalid_input!(
                "cloud csv must end with a 'weight' column, got {:?}",
                headers
            ));
        }
        let dim = headers.len() - 1;
        for (k, name) in headers.iter().take(dim).enumerate() {
            if name != format!("x{k}") {
                return Err(invalid_input!("expected column x{k}, got '{name}'"));
            }
        }
        let mut data = Vec::new();
        let mut weights = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() != dim + 1 {
                return Err(invalid_input!("row width {} != {}", record.len(), dim + 1));
            }
            for field in record.iter().take(dim) {
                data.push(parse_f64(field)?);
            }
            weights.push(parse_f64(&record[dim])?);
        }
        PointCloud::new(dim, data, weights)
    }

    /// Writes the cloud with shortest round-trip decimal formatting.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.dim).map(|k| format!("x{k}")).collect();
        header.push("weight".into());
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.point(i).iter().map(|v| format!("{v}")).collect();
            row.push(format!("{}", self.weight(i)));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| invalid_input!("bad number '{s}' in csv"))
}

/// Samples the boundary inside the domain's box of interest at grid
/// resolution `h`. Every grid edge with a strict sign change is bisected
/// to the crossing; each occupied grid cell contributes mass h^d (d = the
/// boundary dimension) split evenly among its points.
pub fn sample_boundary(domain: &ImplicitDomain, h: f64) -> Result<PointCloud> {
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid_input!("grid resolution must be positive"));
    }
    let dim = domain.dim;
    let bb = &domain.bbox;
    let mut counts = Vec::with_capacity(dim);
    for k in 0..dim {
        let n = ((bb.hi[k] - bb.lo[k]) / h).ceil() as usize;
        counts.push(n.max(1) + 1);
    }
    let total: usize = counts.iter().product();
    if total > 200_000_000 {
        return Err(invalid_input!(
            "grid of {total} nodes is too fine for this box"
        ));
    }
    let node = |idx: &[usize]| -> Vec<f64> {
        (0..dim).map(|k| bb.lo[k] + idx[k] as f64 * h).collect()
    };
    // One pass to evaluate all node values, indexed row-major.
    let strides = {
        let mut s = vec![1usize; dim];
        for k in (0..dim - 1).rev() {
            s[k] = s[k + 1] * counts[k + 1];
        }
        s
    };
    let mut values = vec![0f64; total];
    let mut idx = vec![0usize; dim];
    for (flat, slot) in values.iter_mut().enumerate() {
        let mut rem = flat;
        for k in 0..dim {
            idx[k] = rem / strides[k];
            rem %= strides[k];
        }
        *slot = domain.sdist(&node(&idx));
    }
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut idx = vec![0usize; dim];
    for flat in 0..total {
        let mut rem = flat;
        for k in 0..dim {
            idx[k] = rem / strides[k];
            rem %= strides[k];
        }
        let s0 = values[flat];
        if s0 == 0.0 {
            points.push(node(&idx));
        }
        for k in 0..dim {
            if idx[k] + 1 >= counts[k] {
                continue;
            }
            let s1 = values[flat + strides[k]];
            if s0 * s1 < 0.0 {
                let a = node(&idx);
                points.push(bisect_edge(domain, &a, k, h, s0));
            }
        }
    }
    if points.is_empty() {
        return Err(GmtError::Empty(format!(
            "no boundary crossings of {} at h = {h}",
            domain.name
        )));
    }
    // Split each occupied cell's h^d mass evenly among its points.
    let d = dim - 1;
    let cell_of = |p: &[f64]| -> Vec<i64> {
        (0..dim)
            .map(|k| (((p[k] - bb.lo[k]) / h).floor() as i64).min(counts[k] as i64 - 2).max(0))
            .collect()
    };
    let mut cell_count = std::collections::HashMap::new();
    for p in &points {
        *cell_count.entry(cell_of(p)).or_insert(0usize) += 1;
    }
    let hd = h.powi(d as i32);
    let weights = points
        .iter()
        .map(|p| hd / cell_count[&cell_of(p)] as f64)
        .collect();
    PointCloud::from_points(&points, weights)
}

/// Number of occupied h-cells behind a boundary sample's weights.
pub fn occupied_cell_count(cloud: &PointCloud, lo: &[f64], h: f64) -> usize {
    let mut cells = std::collections::HashSet::new();
    for p in cloud.iter_points() {
        let c: Vec<i64> = (0..cloud.dim())
            .map(|k| ((p[k] - lo[k]) / h).floor() as i64)
            .collect();
        cells.insert(c);
    }
    cells.len()
}

fn bisect_edge(domain: &ImplicitDomain, a: &[f64], axis: usize, h: f64, s0: f64) -> Vec<f64> {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let eval = |t: f64| {
        let mut p = a.to_vec();
        p[axis] += t * h;
        domain.sdist(&p)
    };
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let sm = eval(mid);
        if sm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (sm < 0.0) == (s0 < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let mut p = a.to_vec();
    p[axis] += t * h;
    p
}
