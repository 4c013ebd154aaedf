//! Per-operator CPU-cycle cost profiling for packet-processing pipelines.
//!
//! The toolkit measures how many CPU cycles a single packet-processing
//! operator (CRC, checksum, hash lookup, ...) consumes per packet, without
//! instrumenting the pipeline itself. It relies on the fact that a saturated
//! pipeline is cycle-limited, so throughput and per-packet cost are tied by
//! `R × C = F_cpu`:
//!
//! 1. measure the saturation throughput of a minimal forwarding baseline,
//! 2. insert one operator and measure again,
//! 3. the operator's cost is `F_cpu × (1/R_op − 1/R_base)` cycles/packet.
//!
//! Sweeping packet sizes and fitting `cost(s) = a·s^k` in log-log space
//! yields a base cost (cost at the smallest size) and a scaling exponent,
//! which place each operator in one of four performance quadrants
//! (low/high base × sub/super-linear scaling). Comparing quadrant
//! assignments across CPU platforms exposes operators whose behavior does
//! not port.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`model`] — shared domain types and validation
//! - [`derive`] — throughput-delta cost derivation and saturation guards
//! - [`fit`] — power-law fitting and scaling classification
//! - [`opq`] — quadrant classification, cross-platform shift, comparisons
//! - [`sim`] — deterministic saturated-pipeline model (verification oracle)
//! - [`bench`] — in-process micro-benchmark producing real measurements
//! - [`io`] — CSV/JSON formats, bundled reference dataset, reports, CLI glue
//!
//! Core arithmetic is generic over the scalar type (see [`scalar::Scalar`]);
//! every domain type defaults its scalar parameter to `f64`, which is what
//! the CLI and all file formats use.

pub mod bench;
pub mod derive;
pub mod fit;
pub mod io;
pub mod model;
pub mod opq;
pub mod scalar;
pub mod sim;

pub use model::{
    CostCurve, CostSample, MeasurementRecord, OpqPoint, PlatformSpec, QuadrantLabel, ShiftRecord,
};
pub use scalar::Scalar;

/// CPU frequency in cycles per second.
pub type Hz = f64;
/// Throughput in packets per second.
pub type Pps = f64;
/// Per-packet cost in CPU cycles.
pub type Cycles = f64;
