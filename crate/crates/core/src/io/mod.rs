//! File formats, the bundled reference dataset, and report generation.
//!
//! Measurements travel as CSV (`platform,operator,packet_size_bytes,
//! throughput_pps,run_id`); everything else — profiles, derivations, plot
//! data — is JSON. All emitted documents are deterministic for identical
//! inputs, and file writes go through a write-temp-then-rename step so a
//! crash never leaves a half-written document behind.

pub mod csv;
pub mod plot;
pub mod profile;
pub mod reference;
pub mod report;

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::model::ValidationError;
use crate::opq::OpqError;

pub use csv::{emit_measurements_csv, parse_measurements_csv, CSV_HEADER};
pub use plot::{emit_opq_plot_data, PlotDocument};
pub use profile::{ProfileDocument, FIT_SPACE, PROFILE_SCHEMA_VERSION};
pub use reference::{load_reference_table2, reference_measurement_records};
pub use report::emit_table_report;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum IoError {
    #[error("{path}: missing or wrong header; expected \"{expected}\"")]
    MissingHeader { path: String, expected: String },
    #[error("{path}:{line}: bad row: {reason}")]
    BadRow {
        path: String,
        line: u64,
        reason: String,
    },
    #[error("{path}: file is empty")]
    EmptyFile { path: String },
    #[error("profile document invalid: {reason}")]
    InvalidDocument { reason: String },
    #[error("no classified quadrant points in profile \"{platform}\"; run classification first")]
    UnclassifiedPoints { platform: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Opq(#[from] OpqError),
}

/// Writes a whole file atomically: temp file in the target directory, then
/// rename over the destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| IoError::Io(e.error))?;
    Ok(())
}
