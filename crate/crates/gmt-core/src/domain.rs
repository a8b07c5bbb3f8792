//! Implicit domains and the gallery of canonical test domains.
//!
//! A domain is an open set in R^{d+1} described by a signed-distance oracle:
//! negative inside, positive outside, zero on the boundary. The oracle is
//! 1-Lipschitz and its magnitude is a lower bound on the true distance to
//! the boundary, which is exactly what sphere-stepping and cube
//! certification need.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GmtError, Result};
use crate::geom::{norm, Aabb};
use crate::invalid_input;

type SdistFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// An open set in R^{d+1} given by a signed-distance oracle.
#[derive(Clone)]
pub struct ImplicitDomain {
    /// Ambient dimension d+1 (so the boundary has dimension d >= 1).
    pub dim: usize,
    /// Region of interest containing the boundary portion under study.
    pub bbox: Aabb,
    /// Diameter of the boundary; `None` marks an unbounded boundary.
    pub diam_boundary: Option<f64>,
    /// Short name used in reports.
    pub name: String,
    /// Documented interior/exterior corkscrew constant where known.
    pub nta_hint: Option<f64>,
    sdist: Arc<SdistFn>,
}

impl fmt::Debug for ImplicitDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitDomain")
            .field("dim", &self.dim)
            .field("name", &self.name)
            .field("bbox", &self.bbox)
            .field("diam_boundary", &self.diam_boundary)
            .finish()
    }
}

impl ImplicitDomain {
    /// Wraps a signed-distance closure as a domain.
    pub fn new<F>(dim: usize, name: &str, sdist: F, bbox: Aabb, diam_boundary: Option<f64>) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        assert!(dim >= 2, "ambient dimension d+1 must be at least 2");
        assert_eq!(bbox.dim(), dim);
        ImplicitDomain {
            dim,
            bbox,
            diam_boundary,
            name: name.to_string(),
            nta_hint: None,
            sdist: Arc::new(sdist),
        }
    }

    /// Raw oracle evaluation without input validation.
    #[inline]
    pub fn sdist(&self, x: &[f64]) -> f64 {
        (self.sdist)(x)
    }

    /// Whether `x` lies in the open set.
    #[inline]
    pub fn inside(&self, x: &[f64]) -> bool {
        self.sdist(x) < 0.0
    }
}

/// Validated signed-distance evaluation; |result| is a lower bound on the
/// true distance from `x` to the boundary.
pub fn signed_distance(domain: &ImplicitDomain, x: &[f64]) -> Result<f64> {
    if x.len() != domain.dim {
        return Err(invalid_input!(
            "point dimension {} does not match domain dimension {}",
            x.len(),
            domain.dim
        ));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(invalid_input!("non-finite coordinate in input point"));
    }
    Ok(domain.sdist(x))
}

/// A gallery entry parsed from configuration: `{"name": ..., "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl DomainSpec {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn f64_param(&self, key: &str, default: f64) -> f64 {
        self.params
            .get(key)
            .and_then(|v| v.as_f64())
            .unwrap_or(default)
    }

    fn usize_param(&self, key: &str, default: usize) -> Option<usize> {
        match self.params.get(key) {
            None => Some(default),
            Some(v) => v.as_u64().map(|u| u as usize),
        }
    }

    fn bbox_override(&self, dim: usize) -> Result<Option<Aabb>> {
        match self.params.get("bbox") {
            None => Ok(None),
            Some(v) => {
                let corners: [Vec<f64>; 2] = serde_json::from_value(v.clone())?;
                if corners[0].len() != dim || corners[1].len() != dim {
                    return Err(invalid_input!("bbox corners must have dimension {dim}"));
                }
                Ok(Some(Aabb::new(corners[0].clone(), corners[1].clone())))
            }
        }
    }
}

/// Builds a gallery domain from its specification.
pub fn gallery_domain(spec: &DomainSpec) -> Result<ImplicitDomain> {
    let dim = spec
        .usize_param("dim", if spec.name == "perforated_half_space" { 3 } else { 2 })
        .ok_or_else(|| invalid_input!("dim must be a nonnegative integer"))?;
    if dim < 2 {
        return Err(invalid_input!("ambient dimension must be at least 2"));
    }
    let mut domain = match spec.name.as_str() {
        "ball" => {
            let r = spec.f64_param("radius", 1.0);
            if r <= 0.0 {
                return Err(invalid_input!("ball radius must be positive"));
            }
            let mut d = ImplicitDomain::new(
                dim,
                "ball",
                move |x| norm(x) - r,
                Aabb::cube(dim, -r - 1.0, r + 1.0),
                Some(2.0 * r),
            );
            d.nta_hint = Some(2.0);
            d
        }
        "half_space" => {
            let mut d = ImplicitDomain::new(
                dim,
                "half_space",
                |x| -x[x.len() - 1],
                Aabb::cube(dim, -4.0, 4.0),
                None,
            );
            d.nta_hint = Some(2.0);
            d
        }
        "slab" => {
            let eps = spec.f64_param("eps", 2f64.powi(-10));
            if eps <= 0.0 {
                return Err(invalid_input!("slab thickness must be positive"));
            }
            let mut lo = vec![-2.0; dim];
            let mut hi = vec![2.0; dim];
            lo[dim - 1] = -0.5;
            hi[dim - 1] = eps + 0.5;
            ImplicitDomain::new(
                dim,
                "slab",
                move |x| {
                    let y = x[x.len() - 1];
                    (-y).max(y - eps)
                },
                Aabb::new(lo, hi),
                None,
            )
        }
        "lipschitz_graph" => {
            let slope = spec.f64_param("slope", 0.5);
            if slope < 0.0 {
                return Err(invalid_input!("graph slope must be nonnegative"));
            }
            let scale = (1.0 + slope * slope).sqrt();
            ImplicitDomain::new(
                dim,
                "lipschitz_graph",
                move |x| {
                    let y = x[x.len() - 1];
                    (slope * triangle_wave(x[0]) - y) / scale
                },
                Aabb::cube(dim, -4.0, 4.0),
                None,
            )
        }
        "perforated_half_space" => {
            let m = spec
                .params
                .get("m")
                .map(|v| v.as_i64().unwrap_or(-1))
                .unwrap_or(3);
            if m < 0 {
                return Err(invalid_input!("perforation depth m must be >= 0"));
            }
            if dim != 3 {
                return Err(invalid_input!("perforated_half_space lives in R^3"));
            }
            let m = m as i32;
            ImplicitDomain::new(
                3,
                "perforated_half_space",
                move |x| perforated_sdist(x, m),
                Aabb::new(vec![-2.0, -2.0, -0.5], vec![2.0, 2.0, 2.0]),
                None,
            )
        }
        "cube_complement" => ImplicitDomain::new(
            dim,
            "cube_complement",
            |x| -Aabb::cube(x.len(), 0.0, 1.0).sdist(x),
            Aabb::cube(dim, -1.0, 2.0),
            Some((dim as f64).sqrt()),
        ),
        "annulus" => {
            let r_in = spec.f64_param("r_in", 0.5);
            let r_out = spec.f64_param("r_out", 1.0);
            if !(0.0 < r_in && r_in < r_out) {
                return Err(invalid_input!("annulus needs 0 < r_in < r_out"));
            }
            ImplicitDomain::new(
                dim,
                "annulus",
                move |x| {
                    let n = norm(x);
                    (r_in - n).max(n - r_out)
                },
                Aabb::cube(dim, -r_out - 1.0, r_out + 1.0),
                Some(2.0 * r_out),
            )
        }
        other => return Err(invalid_input!("unknown gallery domain '{other}'")),
    };
    if let Some(bb) = spec.bbox_override(domain.dim)? {
        domain.bbox = bb;
    }
    Ok(domain)
}

/// Convenience constructor from name and JSON params text.
pub fn gallery_by_name(name: &str, params_json: &str) -> Result<ImplicitDomain> {
    let params = if params_json.trim().is_empty() {
        serde_json::Map::new()
    } else {
        serde_json::from_str(params_json)?
    };
    gallery_domain(&DomainSpec {
        name: name.to_string(),
        params,
    })
}

/// Period-2 triangle wave with slopes +-1 and range [0,1].
fn triangle_wave(x: f64) -> f64 {
    (x - 2.0 * (x / 2.0).round()).abs()
}

/// Signed distance for the upper half-space in R^3 minus the lattice of
/// balls B(i 2^-n e1 + j 2^-n e2 + 2^-n e3, 2^-n-10), n = 0..=m. The balls
/// are pairwise disjoint and disjoint from the plane, so the maximum over
/// the plane term and per-level nearest-center terms is the exact signed
/// distance.
fn perforated_sdist(x: &[f64], m: i32) -> f64 {
    let mut best = -x[2];
    for n in 0..=m {
        let s = 2f64.powi(-n);
        let r = 2f64.powi(-n - 10);
        let ci = (x[0] / s).round() * s;
        let cj = (x[1] / s).round() * s;
        let d = ((x[0] - ci).powi(2) + (x[1] - cj).powi(2) + (x[2] - s).powi(2)).sqrt();
        best = best.max(r - d);
    }
    best
}

/// The domain `R^{d+1} \ E` for a finite set E, used for outer Whitney
/// decompositions; the oracle is the exact negated distance to E.
pub fn complement_of_points(points: Vec<Vec<f64>>, bbox: Aabb) -> Result<ImplicitDomain> {
    if points.is_empty() {
        return Err(GmtError::Empty("complement of an empty set".into()));
    }
    let dim = points[0].len();
    let index = crate::bvh::PointSet::build(points);
    Ok(ImplicitDomain::new(
        dim,
        "complement_of_points",
        move |x| -index.dist_to(x),
        bbox,
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str, params: &str) -> DomainSpec {
        DomainSpec {
            name: name.to_string(),
            params: serde_json::from_str(params).unwrap(),
        }
    }

    #[test]
    fn unit_ball_center_distance() {
        let d = gallery_domain(&spec("ball", r#"{"radius": 1.0}"#)).unwrap();
        assert_eq!(signed_distance(&d, &[0.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn half_space_point_distance() {
        let d = gallery_domain(&spec("half_space", "{}")).unwrap();
        assert_eq!(signed_distance(&d, &[3.0, 2.0]).unwrap(), -2.0);
    }

    #[test]
    fn perforated_matches_brute_force_enumeration() {
        // Oracle: exhaustive minimum over all removed balls with centers in
        // range, plus the plane term, evaluated independently of the
        // nearest-center shortcut.
        let m = 2;
        let brute = |x: &[f64]| -> f64 {
            let mut best = -x[2];
            for n in 0..=m {
                let s = 2f64.powi(-n);
                let r = 2f64.powi(-n - 10);
                for i in -8i64..=8 {
                    for j in -8i64..=8 {
                        let c = [i as f64 * s, j as f64 * s, s];
                        let d = crate::geom::dist(x, &c);
                        best = best.max(r - d);
                    }
                }
            }
            best
        };
        let d = gallery_domain(&spec("perforated_half_space", r#"{"m": 2}"#)).unwrap();
        let probes = [
            [0.0, 0.0, 1.0],
            [0.3, 0.2, 0.9],
            [0.5, 0.5, 0.5],
            [0.26, 0.26, 0.27],
            [-0.7, 0.1, 0.05],
            [0.1, -0.4, 1.7],
        ];
        for p in &probes {
            let got = d.sdist(p);
            let want = brute(p);
            assert!(
                (got - want).abs() < 1e-12,
                "mismatch at {p:?}: {got} vs {want}"
            );
        }
        // x = (0,0,1) sits at the center of the n=0 ball, inside a removed
        // ball, so the signed distance is exactly its radius.
        assert_eq!(d.sdist(&[0.0, 0.0, 1.0]), 2f64.powi(-10));
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(gallery_domain(&spec("moebius", "{}")).is_err());
        assert!(gallery_domain(&spec("perforated_half_space", r#"{"m": -1}"#)).is_err());
    }

    #[test]
    fn bbox_override_applies() {
        let d = gallery_domain(&spec("ball", r#"{"bbox": [[-3,-3],[3,3]]}"#)).unwrap();
        assert_eq!(d.bbox, Aabb::cube(2, -3.0, 3.0));
    }

    #[test]
    fn annulus_signs() {
        let d = gallery_domain(&spec("annulus", r#"{"r_in": 0.5, "r_out": 1.0}"#)).unwrap();
        assert!(d.inside(&[0.75, 0.0]));
        assert!(!d.inside(&[0.25, 0.0]));
        assert!(!d.inside(&[1.25, 0.0]));
    }
}
