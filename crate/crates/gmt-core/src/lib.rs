//! Computational geometric measure theory toolkit.
//!
//! The crate builds and cross-checks the standard objects of quantitative
//! boundary geometry on implicit domains and finite point clouds:
//!
//! - signed-distance domains and a gallery of canonical test domains,
//! - Whitney decompositions with their adjacency metric and corkscrew search,
//! - dyadic cube trees on finite metric spaces,
//! - porosity / Carleson packing analytics for doubling measures,
//! - inner and outer sawtooth domains built from Whitney cubes,
//! - bilateral beta numbers and their Carleson energy,
//! - a walk-on-spheres estimator for harmonic measure with a verification
//!   suite (doubling, maximum-principle sandwich, A-infinity scatter).
//!
//! All geometry is plain `f64`; every statistically estimated quantity
//! carries its Monte Carlo error, and every deterministic construction is
//! reproducible byte-for-byte given the same inputs and seed.

pub mod beta;
pub mod bvh;
pub mod cloud;
pub mod cubetree;
pub mod domain;
pub mod dyadic;
pub mod error;
pub mod geom;
pub mod hausdorff;
pub mod measure;
pub mod porosity;
pub mod sawtooth;
pub mod tol;
pub mod util;
pub mod whitney;
pub mod wos;

pub use cloud::PointCloud;
pub use cubetree::CubeTree;
pub use domain::ImplicitDomain;
pub use dyadic::DyadicCube;
pub use error::{GmtError, Result};
pub use geom::{Aabb, Ball};
pub use measure::DiscreteMeasure;
pub use sawtooth::SawtoothDomain;
pub use whitney::WhitneyForest;
