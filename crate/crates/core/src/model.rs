//! Shared domain types, units, and validation.
//!
//! All types are immutable value objects after construction and safe to
//! share across threads. Costs and exponents are floating point (default
//! `f64`); packet sizes and run ids are exact integers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{to_f64, Scalar};

/// Operator name reserved for the minimal forwarding base system.
pub const BASELINE_OPERATOR: &str = "baseline";

/// Validation failures for domain-type invariants.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum ValidationError {
    #[error("throughput must be positive, got {pps} pps")]
    NonPositiveThroughput { pps: f64 },
    #[error("operator name must be non-empty")]
    EmptyOperatorName,
    #[error("packet size must be at least 1 byte")]
    ZeroPacketSize,
    #[error("platform name must be non-empty")]
    EmptyPlatformName,
    #[error("cpu frequency must be positive, got {hz} Hz")]
    NonPositiveFrequency { hz: f64 },
}

/// A profiled CPU platform: name plus the fixed clock frequency `F_cpu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSpec<F = f64> {
    pub name: String,
    /// Clock frequency in Hz (cycles per second), held constant during
    /// measurement (frequency scaling disabled).
    pub cpu_hz: F,
    #[serde(default)]
    pub description: String,
}

impl<F: Scalar> PlatformSpec<F> {
    pub fn new(name: impl Into<String>, cpu_hz: F, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            cpu_hz,
            description: description.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.name.is_empty() {
            return Err(ValidationError::EmptyPlatformName);
        }
        if !(self.cpu_hz > F::zero()) {
            return Err(ValidationError::NonPositiveFrequency {
                hz: to_f64(self.cpu_hz),
            });
        }
        Ok(())
    }
}

/// One saturation-throughput observation: a platform ran `operator` at
/// `packet_size` and sustained `throughput_pps` packets per second.
///
/// `operator == "baseline"` denotes the base system without an inserted
/// operator. `run_id` distinguishes repeated trials of the same point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord<F = f64> {
    pub platform: String,
    pub operator: String,
    pub packet_size: u32,
    pub throughput_pps: F,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<u32>,
}

/// Returns the record iff every type invariant holds.
pub fn validate_record<F: Scalar>(
    record: MeasurementRecord<F>,
) -> Result<MeasurementRecord<F>, ValidationError> {
    if record.operator.is_empty() {
        return Err(ValidationError::EmptyOperatorName);
    }
    if record.packet_size == 0 {
        return Err(ValidationError::ZeroPacketSize);
    }
    if !(record.throughput_pps > F::zero()) {
        return Err(ValidationError::NonPositiveThroughput {
            pps: to_f64(record.throughput_pps),
        });
    }
    Ok(record)
}

/// Net operator cost in CPU cycles per packet at one packet size.
///
/// Negative derivations are rejected upstream and never stored here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSample<F = f64> {
    pub operator: String,
    pub packet_size: u32,
    pub cost_cycles: F,
}

impl<F: Scalar> CostSample<F> {
    pub fn new(operator: impl Into<String>, packet_size: u32, cost_cycles: F) -> Self {
        Self {
            operator: operator.into(),
            packet_size,
            cost_cycles,
        }
    }
}

/// Fitted power-law cost curve `cost(s) = a · s^k`.
///
/// `base_cost` is the curve evaluated at the smallest swept packet size and
/// `r_squared` is the coefficient of determination of the fit (computed on
/// ln-cost residuals; `1.0` for any noiseless power law).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCurve<F = f64> {
    pub operator: String,
    pub coefficient_a: F,
    pub exponent_k: F,
    pub r_squared: F,
    pub base_cost: F,
    pub n_points: usize,
}

/// The four performance quadrants.
///
/// Axes: base cost (split at a dataset threshold, ties to the high side) and
/// scaling exponent (split at k = 1, ties to the sub-linear side):
///
/// | quadrant           | base ≥ threshold | k > 1 |
/// |--------------------|------------------|-------|
/// | LatentTrap         | yes              | yes   |
/// | HighStartupCost    | yes              | no    |
/// | Ideal              | no               | no    |
/// | EmergentBottleneck | no               | yes   |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadrantLabel {
    LatentTrap,
    HighStartupCost,
    Ideal,
    EmergentBottleneck,
}

impl QuadrantLabel {
    /// Prescribed optimization strategy for operators in this quadrant.
    pub fn strategy(self) -> &'static str {
        match self {
            QuadrantLabel::LatentTrap => "algorithm replacement / hardware offload",
            QuadrantLabel::HighStartupCost => "batch processing",
            QuadrantLabel::Ideal => "none",
            QuadrantLabel::EmergentBottleneck => "hybrid algorithm",
        }
    }
}

impl core::fmt::Display for QuadrantLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            QuadrantLabel::LatentTrap => "LatentTrap",
            QuadrantLabel::HighStartupCost => "HighStartupCost",
            QuadrantLabel::Ideal => "Ideal",
            QuadrantLabel::EmergentBottleneck => "EmergentBottleneck",
        };
        f.write_str(s)
    }
}

/// Quadrant classification of one operator on one platform.
///
/// Built through [`crate::opq::classify_quadrant`] so the stored quadrant is
/// always consistent with `(base_cost, exponent_k, threshold_used)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpqPoint<F = f64> {
    pub operator: String,
    pub platform: String,
    pub base_cost: F,
    pub exponent_k: F,
    pub quadrant: QuadrantLabel,
    pub threshold_used: F,
}

/// Movement of one operator between two platforms' quadrant charts.
///
/// Deltas are `to − from`. Whether the operator shifted quadrants is
/// derived from the stored pair, never stored separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRecord<F = f64> {
    pub operator: String,
    pub from_platform: String,
    pub to_platform: String,
    pub from_quadrant: QuadrantLabel,
    pub to_quadrant: QuadrantLabel,
    pub delta_base: F,
    pub delta_k: F,
    pub from_threshold: F,
    pub to_threshold: F,
}

impl<F: Scalar> ShiftRecord<F> {
    /// True when the operator landed in a different quadrant.
    pub fn shifted(&self) -> bool {
        self.from_quadrant != self.to_quadrant
    }
}

/// Per-size link capacity model: the throughput ceiling imposed by the NIC
/// and link rather than by CPU cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LineRate<F = f64> {
    /// Fixed cap independent of packet size.
    ConstantPps { pps: F },
    /// Ethernet framing: cap(s) = bits/s ÷ ((s + 20) · 8). The 20 bytes per
    /// frame cover preamble, start-of-frame delimiter, and inter-frame gap.
    Ethernet { gbps: F },
}

impl<F: Scalar> LineRate<F> {
    /// 100GbE: cap(s) = 10^11 / ((s + 20) · 8) pps.
    pub fn ethernet_100g() -> Self {
        LineRate::Ethernet {
            gbps: crate::scalar::from_f64(100.0),
        }
    }

    /// Maximum packets per second the link sustains at this frame size.
    pub fn cap_pps(&self, packet_size: u32) -> F {
        match *self {
            LineRate::ConstantPps { pps } => pps,
            LineRate::Ethernet { gbps } => {
                let bits_per_sec = gbps * crate::scalar::from_f64(1e9);
                let frame_bits = crate::scalar::from_f64(f64::from((packet_size + 20) * 8));
                bits_per_sec / frame_bits
            }
        }
    }
}
