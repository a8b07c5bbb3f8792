//! Command-line pipelines over the gmt-core toolkit.
//!
//! Three pipelines chain the library stages end to end: `main-theorem`
//! (boundary cloud, cube tree, porosity refinement, sawtooth envelopes,
//! harmonic-measure sandwich), `in-and-out` (flatness-energy certification
//! of an input cloud before the sawtooth stages), and `verify-nta`
//! (corkscrew and Whitney-uniformity probes). Each run writes a report
//! bundle: per-stage artifacts, a verdict list, and a manifest whose hash
//! covers every artifact byte, so equal configs and seeds reproduce equal
//! bundles.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod setspec;

pub use config::PipelineConfig;
pub use pipeline::run_pipeline;
pub use report::{ReportBundle, StageReport, Verdict};
pub use setspec::SetSpec;
