//! Boundary-set descriptions parsed from CLI arguments and configs.
//!
//! A `SetSpec` names a boundary subset in coordinates; `to_indicator`
//! realizes it as a membership test for harmonic-measure queries.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use gmt_core::bvh::PointSet;
use gmt_core::wos::Indicator;
use gmt_core::{invalid_input, PointCloud, Result};
use serde::{Deserialize, Serialize};

/// A boundary subset described in coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    /// Points within `radius` of `center`.
    Ball { center: Vec<f64>, radius: f64 },
    /// Points whose coordinate along `axis` lies in [lo, hi].
    Slab { axis: usize, lo: f64, hi: f64 },
    /// Planar points whose angle atan2(y, x) lies on the arc from
    /// `theta0` to `theta1`, walked counterclockwise.
    Arc { theta0: f64, theta1: f64 },
    /// Points within `radius` of some point of the cloud CSV at `path`.
    Points { path: String, radius: f64 },
}

impl SetSpec {
    /// Parses inline JSON, or reads and parses the file at `text`.
    pub fn parse(text: &str) -> Result<SetSpec> {
        let body = if text.trim_start().starts_with('{') {
            text.to_string()
        } else {
            fs::read_to_string(Path::new(text))?
        };
        serde_json::from_str(&body)
            .map_err(|e| invalid_input!("set spec: {e}"))
    }

    /// Builds the membership indicator. `Points` loads its cloud here.
    pub fn to_indicator(&self) -> Result<Box<Indicator<'static>>> {
        match self {
            SetSpec::Ball { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(invalid_input!("set ball radius must be positive"));
                }
                let c = center.clone();
                let r = *radius;
                Ok(Box::new(move |x: &[f64]| gmt_core::geom::dist(x, &c) <= r))
            }
            SetSpec::Slab { axis, lo, hi } => {
                if lo > hi {
                    return Err(invalid_input!("set slab bounds are reversed"));
                }
                let (axis, lo, hi) = (*axis, *lo, *hi);
                Ok(Box::new(move |x: &[f64]| {
                    axis < x.len() && x[axis] >= lo && x[axis] <= hi
                }))
            }
            SetSpec::Arc { theta0, theta1 } => {
                let full = theta1 - theta0 >= TAU;
                let a = theta0.rem_euclid(TAU);
                let b = theta1.rem_euclid(TAU);
                Ok(Box::new(move |x: &[f64]| {
                    if x.len() < 2 {
                        return false;
                    }
                    if full {
                        return true;
                    }
                    let t = x[1].atan2(x[0]).rem_euclid(TAU);
                    if a <= b {
                        t >= a && t <= b
                    } else {
                        t >= a || t <= b
                    }
                }))
            }
            SetSpec::Points { path, radius } => {
                if !(*radius > 0.0) {
                    return Err(invalid_input!("set point radius must be positive"));
                }
                let cloud = PointCloud::read_csv(Path::new(path))?;
                let index = PointSet::build(cloud.to_vecs());
                let r = *radius;
                Ok(Box::new(move |x: &[f64]| index.dist_to(x) <= r))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_and_slab_membership() {
        let b = SetSpec::parse(r#"{"kind":"ball","center":[0.0,0.0],"radius":1.0}"#).unwrap();
        let ind = b.to_indicator().unwrap();
        assert!(ind(&[0.5, 0.5]));
        assert!(!ind(&[1.5, 0.0]));

        let s = SetSpec::parse(r#"{"kind":"slab","axis":0,"lo":-1.0,"hi":1.0}"#).unwrap();
        let ind = s.to_indicator().unwrap();
        assert!(ind(&[0.0, 9.0]));
        assert!(!ind(&[2.0, 0.0]));
    }

    #[test]
    fn arc_wraps_around_the_cut() {
        let spec = SetSpec::Arc {
            theta0: -0.5,
            theta1: 0.5,
        };
        let ind = spec.to_indicator().unwrap();
        assert!(ind(&[1.0, 0.1]));
        assert!(ind(&[1.0, -0.1]));
        assert!(!ind(&[-1.0, 0.0]));
    }
}
