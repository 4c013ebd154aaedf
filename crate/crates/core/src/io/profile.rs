//! Persisted profile documents: one platform's curves, samples, and
//! quadrant points.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{CostCurve, CostSample, OpqPoint, PlatformSpec};
use crate::opq::classify_quadrant;

use super::{write_atomic, IoError};

pub const PROFILE_SCHEMA_VERSION: &str = "1";
/// Fits happen in log-log space and R² is computed on ln-cost residuals;
/// the constant is recorded in every document so downstream consumers know
/// which space the numbers live in.
pub const FIT_SPACE: &str = "log-log";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument<F = f64> {
    pub schema_version: String,
    pub platform: PlatformSpec<F>,
    pub curves: Vec<CostCurve<F>>,
    pub samples: Vec<CostSample<F>>,
    pub opq_points: Vec<OpqPoint<F>>,
    /// Where the numbers came from: "bench", "simulated", "ingested", ...
    pub provenance: String,
    pub fit_space: String,
}

impl ProfileDocument {
    pub fn new(platform: PlatformSpec, provenance: impl Into<String>) -> Self {
        Self {
            schema_version: PROFILE_SCHEMA_VERSION.to_string(),
            platform,
            curves: Vec::new(),
            samples: Vec::new(),
            opq_points: Vec::new(),
            provenance: provenance.into(),
            fit_space: FIT_SPACE.to_string(),
        }
    }

    /// Structural invariants: schema version present, platform valid, every
    /// quadrant point backed by a curve and consistent with its own
    /// `(base_cost, exponent_k, threshold_used)`.
    pub fn validate(&self) -> Result<(), IoError> {
        if self.schema_version.is_empty() {
            return Err(IoError::InvalidDocument {
                reason: "schema_version missing".to_string(),
            });
        }
        self.platform
            .validate()
            .map_err(|e| IoError::InvalidDocument {
                reason: e.to_string(),
            })?;
        for point in &self.opq_points {
            if !self.curves.iter().any(|c| c.operator == point.operator) {
                return Err(IoError::InvalidDocument {
                    reason: format!(
                        "opq point for \"{}\" has no matching cost curve",
                        point.operator
                    ),
                });
            }
            let expected =
                classify_quadrant(point.base_cost, point.exponent_k, point.threshold_used)
                    .map_err(|e| IoError::InvalidDocument {
                        reason: e.to_string(),
                    })?;
            if expected != point.quadrant {
                return Err(IoError::InvalidDocument {
                    reason: format!(
                        "opq point for \"{}\" stores {} but its fields classify as {}",
                        point.operator, point.quadrant, expected
                    ),
                });
            }
        }
        Ok(())
    }

    /// Serializes to pretty JSON with a trailing newline. Field order is
    /// declaration order, so identical documents give identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        self.validate()?;
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let content = std::fs::read_to_string(path)?;
        let doc: ProfileDocument = serde_json::from_str(&content)?;
        doc.validate()?;
        Ok(doc)
    }
}
