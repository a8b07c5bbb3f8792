//! Exact arithmetic for dyadic cubes.
//!
//! A cube at level n has side 2^n and corners on the lattice 2^n Z^k; it is
//! stored as the integer anchor of its lower corner, so containment,
//! adjacency, and ancestry are integer computations with no rounding.

use serde::{Deserialize, Serialize};

use crate::geom::Aabb;

/// A closed dyadic cube: the product of [a_k 2^n, (a_k+1) 2^n].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    /// Side length exponent: the side is 2^level.
    pub level: i32,
    /// Lower corner in units of the side length.
    pub anchor: Vec<i64>,
}

impl DyadicCube {
    pub fn new(level: i32, anchor: Vec<i64>) -> Self {
        assert!(!anchor.is_empty());
        DyadicCube { level, anchor }
    }

    /// The level-n cube containing `x` (points on faces go to the cube
    /// whose lower corner they are, matching floor semantics).
    pub fn containing(x: &[f64], level: i32) -> Self {
        let side = 2f64.powi(level);
        let anchor = x.iter().map(|&v| (v / side).floor() as i64).collect();
        DyadicCube { level, anchor }
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// Side length 2^level, exact in f64 for all practical levels.
    pub fn side(&self) -> f64 {
        2f64.powi(self.level)
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.anchor.iter().map(|&a| (a as f64 + 0.5) * s).collect()
    }

    pub fn aabb(&self) -> Aabb {
        let s = self.side();
        Aabb::new(
            self.anchor.iter().map(|&a| a as f64 * s).collect(),
            self.anchor.iter().map(|&a| (a as f64 + 1.0) * s).collect(),
        )
    }

    /// The concentric box scaled by `factor` about the cube center.
    pub fn dilated(&self, factor: f64) -> Aabb {
        let s = self.side();
        let h = 0.5 * factor * s;
        let c = self.center();
        Aabb::new(
            c.iter().map(|&v| v - h).collect(),
            c.iter().map(|&v| v + h).collect(),
        )
    }

    /// Half of the space diagonal: max distance from center to the cube.
    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.side() * (self.dim() as f64).sqrt()
    }

    pub fn parent(&self) -> DyadicCube {
        DyadicCube {
            level: self.level + 1,
            // Arithmetic shift floors toward negative infinity, as needed
            // for anchors below the origin.
            anchor: self.anchor.iter().map(|&a| a >> 1).collect(),
        }
    }

    /// The 2^dim children in lexicographic offset order.
    pub fn children(&self) -> Vec<DyadicCube> {
        let d = self.dim();
        (0..1u32 << d)
            .map(|mask| DyadicCube {
                level: self.level - 1,
                anchor: (0..d)
                    .map(|k| 2 * self.anchor[k] + ((mask >> (d - 1 - k)) & 1) as i64)
                    .collect(),
            })
            .collect()
    }

    /// The ancestor at `level >= self.level`.
    pub fn ancestor_at(&self, level: i32) -> DyadicCube {
        assert!(level >= self.level);
        let shift = (level - self.level) as u32;
        DyadicCube {
            level,
            anchor: self.anchor.iter().map(|&a| a >> shift).collect(),
        }
    }

    /// Whether `other` is contained in `self` (as closed cubes; every cube
    /// contains itself).
    pub fn contains_cube(&self, other: &DyadicCube) -> bool {
        other.level <= self.level && other.ancestor_at(self.level).anchor == self.anchor
    }

    /// Whether the closed cubes intersect, computed exactly in integers.
    pub fn touches(&self, other: &DyadicCube) -> bool {
        let (fine, coarse) = if self.level <= other.level {
            (self, other)
        } else {
            (other, self)
        };
        let shift = (coarse.level - fine.level) as u32;
        // Compare in units of the fine side: coarse spans [b<<s, (b+1)<<s].
        fine.anchor.iter().zip(&coarse.anchor).all(|(&a, &b)| {
            let lo = (b as i128) << shift;
            let hi = ((b as i128) + 1) << shift;
            (a as i128) <= hi && lo <= (a as i128) + 1
        })
    }

    /// Whether `x` lies in the closed cube.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        let s = self.side();
        self.anchor
            .iter()
            .zip(x)
            .all(|(&a, &v)| a as f64 * s <= v && v <= (a as f64 + 1.0) * s)
    }
}
