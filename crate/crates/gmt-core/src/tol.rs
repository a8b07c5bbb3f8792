//! Centralized numerical tolerances.
//!
//! Every threshold used by constructions and verifiers is defined here with
//! its rationale, so no module carries ad-hoc magic numbers.

/// Certification margin for branch-and-bound sign decisions on signed
/// distances. Geometry in the gallery is dyadic-rational, so true margins
/// are never below 2^-40 at the scales we test; 1e-9 leaves room for
/// accumulated f64 rounding while staying far above it.
pub const GEOM_TOL: f64 = 1e-9;

/// A sampled point counts as lying on a boundary when |sdist| is below this.
/// Boundary samples come from bisection on a 1-Lipschitz oracle, which
/// converges well past this threshold in under 60 iterations.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Tolerance for exact-arithmetic identities checked in f64 (for example
/// cube side = 2^level, or additivity of per-seed Monte Carlo counts).
pub const EXACT_TOL: f64 = 1e-12;

/// Default shell half-width at which a walk-on-spheres trajectory is
/// considered to have reached the boundary, as a fraction of the walk's
/// starting scale. Halving it must not move estimates by more than one
/// standard error (checked by the calibration tests).
pub const WOS_SHELL_FRAC: f64 = 1e-4;

/// Default escape radius multiplier for walks in unbounded domains:
/// walks passing 1e3 times the configured scale are tallied as escaped.
pub const WOS_ESCAPE_FACTOR: f64 = 1e3;

/// Hard cap on walk length; hitting it also counts as escaped.
pub const WOS_MAX_STEPS: usize = 100_000;

/// Statistical acceptance band in units of the binomial standard error.
pub const STAT_SIGMA: f64 = 3.0;

/// Relative stability band for mesh-refinement comparisons (sup ratios,
/// Carleson norms, regularity constants under h -> h/2).
pub const STABILITY_FRAC: f64 = 0.25;

/// Set-equality claims at mesh h are tested at tolerance 2h.
pub const TRACE_FACTOR: f64 = 2.0;

/// A sampled point counts as lying on a domain boundary when its signed
/// distance is within this of zero (bisection leaves ~1e-12 residuals).
pub const TRACE_BOUNDARY_TOL: f64 = 1e-8;
