//! Points, balls, and axis-aligned boxes.
//!
//! Points are `&[f64]` slices of runtime dimension; dense collections store
//! them in flat buffers (see [`crate::cloud::PointCloud`]) to keep hot loops
//! allocation-free.

use serde::{Deserialize, Serialize};

/// Squared Euclidean distance between two points of equal dimension.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// Euclidean distance between two points.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Euclidean norm.
#[inline]
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A closed ball B(center, radius).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    /// Creates a ball; the radius must be positive.
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius > 0.0, "ball radius must be positive");
        Ball { center, radius }
    }

    /// Whether `x` lies in the closed ball.
    pub fn contains(&self, x: &[f64]) -> bool {
        dist(&self.center, x) <= self.radius
    }
}

/// An axis-aligned box given by per-axis lower and upper corners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(
            lo.iter().zip(&hi).all(|(a, b)| a <= b),
            "box corners must be ordered"
        );
        Aabb { lo, hi }
    }

    /// Cube box [lo, hi]^dim.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Aabb::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Longest side length.
    pub fn max_side(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(0.0f64, f64::max)
    }

    /// Whether `x` lies in the closed box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lo[i] && v <= self.hi[i])
    }

    /// Distance from `x` to the closed box (0 inside).
    pub fn dist_to(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..x.len() {
            let d = (self.lo[i] - x[i]).max(0.0).max(x[i] - self.hi[i]);
            s += d * d;
        }
        s.sqrt()
    }

    /// Exact signed distance to the box boundary: negative inside.
    pub fn sdist(&self, x: &[f64]) -> f64 {
        let mut outside2 = 0.0;
        let mut inside = f64::NEG_INFINITY;
        for i in 0..x.len() {
            let lo_gap = self.lo[i] - x[i];
            let hi_gap = x[i] - self.hi[i];
            let out = lo_gap.max(hi_gap);
            if out > 0.0 {
                outside2 += out * out;
            } else {
                inside = inside.max(out);
            }
        }
        if outside2 > 0.0 {
            outside2.sqrt()
        } else {
            inside
        }
    }

    /// Euclidean distance between two closed boxes (0 when they touch).
    pub fn dist_to_box(&self, other: &Aabb) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            let d = (self.lo[i] - other.hi[i]).max(other.lo[i] - self.hi[i]).max(0.0);
            s += d * d;
        }
        s.sqrt()
    }

    /// Center point of the box.
    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Half of the space diagonal: max distance from center to the box.
    pub fn half_diagonal(&self) -> f64 {
        0.5 * self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Whether `other` lies inside `self` (closed containment).
    pub fn contains_box(&self, other: &Aabb) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Grows the box by `pad` on every side.
    pub fn inflate(&self, pad: f64) -> Aabb {
        Aabb {
            lo: self.lo.iter().map(|v| v - pad).collect(),
            hi: self.hi.iter().map(|v| v + pad).collect(),
        }
    }
}
