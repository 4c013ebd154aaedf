//! Saturation-throughput-delta cost derivation.
//!
//! A saturated, CPU-bound pipeline obeys `R × C = F_cpu`: throughput times
//! per-packet cost equals the clock rate. Measuring the baseline rate
//! `R_base` and the rate `R_op` with one operator inserted gives
//!
//! ```text
//! C_base = F_cpu / R_base
//! C_op   = F_cpu × (1/R_op − 1/R_base)
//! ```
//!
//! The derivation is only valid while CPU cycles are the binding resource;
//! [`check_saturation_validity`] and [`SaturationGuard`] flag measurements
//! that sit at the link's line rate instead, where the model does not apply.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_record, CostSample, LineRate, MeasurementRecord, ValidationError, BASELINE_OPERATOR,
};
use crate::scalar::{median, to_f64, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum DeriveError {
    #[error("{name} must be positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },
    /// The operator pipeline ran faster than the baseline. The saturation
    /// model cannot produce this; it signals a violated assumption, not a
    /// valid (negative) cost.
    #[error("derived cost is negative ({cost_cycles} cycles{}) — operator measured faster than baseline", match packet_size { Some(s) => format!(" at {s}B"), None => String::new() })]
    NegativeCost {
        packet_size: Option<u32>,
        cost_cycles: f64,
    },
    #[error("baseline packet sizes {baseline:?} do not match operator packet sizes {sut:?}")]
    MismatchedSizeSets { baseline: Vec<u32>, sut: Vec<u32> },
    #[error("duplicate measurement for packet size {packet_size} (run_id {run_id:?}); tag repeated trials with distinct run ids")]
    DuplicateSize {
        packet_size: u32,
        run_id: Option<u32>,
    },
    #[error("{which} measurement list is empty")]
    EmptyInput { which: &'static str },
    #[error("{which} list mixes operators {names:?}; derive one operator per sweep")]
    MixedOperators {
        which: &'static str,
        names: Vec<String>,
    },
    #[error("measurements mix platforms {names:?}; derive one platform per sweep")]
    MixedPlatforms { names: Vec<String> },
    #[error("\"{BASELINE_OPERATOR}\" is reserved for the base system and cannot be a system-under-test operator")]
    ReservedOperator,
    #[error("guard margin must be in (0, 1), got {margin}")]
    InvalidMargin { margin: f64 },
    #[error(transparent)]
    Record(#[from] ValidationError),
}

/// Validity of one saturation measurement against the link capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SaturationValidity {
    /// Throughput sits safely below the line rate; the CPU is the bottleneck.
    Valid,
    /// Throughput is at (or within the margin of) the line rate; the NIC is
    /// the bottleneck and the cycle model does not apply.
    LineRateBound,
}

/// Which side of the delta a warning refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementSide {
    Baseline,
    Operator,
}

/// Per-point validity flags carried alongside derivation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidityWarning {
    /// The measurement hit the line-rate guard and the size was excluded.
    LineRateBound {
        packet_size: u32,
        side: MeasurementSide,
        pps: f64,
        cap_pps: f64,
    },
    /// Repetitions at this point spread more than the stability bound.
    Noisy {
        operator: String,
        packet_size: u32,
        spread_ratio: f64,
    },
}

/// Line-rate guard: flags measurements within `margin` of the link cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationGuard<F = f64> {
    pub line_rate: LineRate<F>,
    pub margin: F,
}

/// Default guard margin: measurements within 2% of line rate are suspect.
pub const DEFAULT_GUARD_MARGIN: f64 = 0.02;

impl<F: Scalar> SaturationGuard<F> {
    pub fn new(line_rate: LineRate<F>, margin: F) -> Result<Self, DeriveError> {
        if !(margin > F::zero() && margin < F::one()) {
            return Err(DeriveError::InvalidMargin {
                margin: to_f64(margin),
            });
        }
        Ok(Self { line_rate, margin })
    }

    fn check(&self, pps: F, packet_size: u32) -> SaturationValidity {
        let cap = self.line_rate.cap_pps(packet_size);
        if pps >= (F::one() - self.margin) * cap {
            SaturationValidity::LineRateBound
        } else {
            SaturationValidity::Valid
        }
    }
}

/// Flags a measurement as line-rate bound when its throughput reaches
/// `(1 − margin) · line_rate_pps` (boundary inclusive on the bound side).
///
/// Callers guarantee `line_rate_pps > 0` and `0 < margin < 1`; use
/// [`SaturationGuard::new`] when the inputs are untrusted.
pub fn check_saturation_validity<F: Scalar>(
    record: &MeasurementRecord<F>,
    line_rate_pps: F,
    margin: F,
) -> SaturationValidity {
    debug_assert!(line_rate_pps > F::zero());
    debug_assert!(margin > F::zero() && margin < F::one());
    if record.throughput_pps >= (F::one() - margin) * line_rate_pps {
        SaturationValidity::LineRateBound
    } else {
        SaturationValidity::Valid
    }
}

/// Sweep output: one cost sample per valid packet size, the baseline cost
/// per size, and any validity flags raised along the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationResult<F = f64> {
    pub samples: Vec<CostSample<F>>,
    /// `C_base = F_cpu / R_base` per packet size with a valid baseline.
    pub base_costs: BTreeMap<u32, F>,
    pub warnings: Vec<ValidityWarning>,
}

/// `C_base = F_cpu / R_base`.
pub fn derive_base_cost<F: Scalar>(cpu_hz: F, r_base: F) -> Result<F, DeriveError> {
    ensure_positive(cpu_hz, "cpu_hz")?;
    ensure_positive(r_base, "r_base")?;
    Ok(cpu_hz / r_base)
}

/// `C_op = F_cpu × (1/R_op − 1/R_base)`; negative results are an error.
pub fn derive_operator_cost<F: Scalar>(cpu_hz: F, r_base: F, r_op: F) -> Result<F, DeriveError> {
    ensure_positive(cpu_hz, "cpu_hz")?;
    ensure_positive(r_base, "r_base")?;
    ensure_positive(r_op, "r_op")?;
    let cost = cpu_hz * (F::one() / r_op - F::one() / r_base);
    if cost < F::zero() {
        return Err(DeriveError::NegativeCost {
            packet_size: None,
            cost_cycles: to_f64(cost),
        });
    }
    Ok(cost)
}

/// Derives one cost sample per packet size shared by the baseline and
/// operator sweeps. Repeated trials (distinct run ids) are aggregated by
/// per-size median throughput before applying the delta.
pub fn derive_sweep<F: Scalar>(
    cpu_hz: F,
    baseline: &[MeasurementRecord<F>],
    sut: &[MeasurementRecord<F>],
) -> Result<DerivationResult<F>, DeriveError> {
    derive_sweep_guarded(cpu_hz, baseline, sut, None)
}

/// [`derive_sweep`] with an optional line-rate guard. Sizes where either
/// side is flagged are excluded from `samples` (and from `base_costs` when
/// the baseline itself is bound), with a warning recorded per exclusion.
pub fn derive_sweep_guarded<F: Scalar>(
    cpu_hz: F,
    baseline: &[MeasurementRecord<F>],
    sut: &[MeasurementRecord<F>],
    guard: Option<&SaturationGuard<F>>,
) -> Result<DerivationResult<F>, DeriveError> {
    ensure_positive(cpu_hz, "cpu_hz")?;

    let (base_rates, _) = aggregate_by_size(baseline, "baseline")?;
    let (sut_rates, sut_operator) = aggregate_by_size(sut, "operator")?;
    if sut_operator == BASELINE_OPERATOR {
        return Err(DeriveError::ReservedOperator);
    }
    check_single_platform(baseline, sut)?;

    let base_sizes: Vec<u32> = base_rates.keys().copied().collect();
    let sut_sizes: Vec<u32> = sut_rates.keys().copied().collect();
    if base_sizes != sut_sizes {
        return Err(DeriveError::MismatchedSizeSets {
            baseline: base_sizes,
            sut: sut_sizes,
        });
    }

    let mut result = DerivationResult {
        samples: Vec::new(),
        base_costs: BTreeMap::new(),
        warnings: Vec::new(),
    };

    for (&size, &r_base) in &base_rates {
        let r_op = sut_rates[&size];

        if let Some(g) = guard {
            let mut bound = false;
            for (pps, side) in [
                (r_base, MeasurementSide::Baseline),
                (r_op, MeasurementSide::Operator),
            ] {
                if g.check(pps, size) == SaturationValidity::LineRateBound {
                    result.warnings.push(ValidityWarning::LineRateBound {
                        packet_size: size,
                        side,
                        pps: to_f64(pps),
                        cap_pps: to_f64(g.line_rate.cap_pps(size)),
                    });
                    bound = true;
                }
            }
            if bound {
                // A valid baseline still yields a usable C_base even when
                // the operator measurement is capped.
                if g.check(r_base, size) == SaturationValidity::Valid {
                    result.base_costs.insert(size, cpu_hz / r_base);
                }
                continue;
            }
        }

        result.base_costs.insert(size, cpu_hz / r_base);
        let cost = derive_operator_cost(cpu_hz, r_base, r_op).map_err(|e| match e {
            DeriveError::NegativeCost { cost_cycles, .. } => DeriveError::NegativeCost {
                packet_size: Some(size),
                cost_cycles,
            },
            other => other,
        })?;
        result
            .samples
            .push(CostSample::new(sut_operator.clone(), size, cost));
    }

    Ok(result)
}

fn ensure_positive<F: Scalar>(value: F, name: &'static str) -> Result<(), DeriveError> {
    if !(value > F::zero()) || !value.is_finite() {
        return Err(DeriveError::NonPositiveInput {
            name,
            value: to_f64(value),
        });
    }
    Ok(())
}

/// Groups records by packet size and reduces repeats to median throughput.
/// Rejects empty input, mixed operator names, and indistinguishable
/// duplicates (same size and same run id).
fn aggregate_by_size<F: Scalar>(
    records: &[MeasurementRecord<F>],
    which: &'static str,
) -> Result<(BTreeMap<u32, F>, String), DeriveError> {
    if records.is_empty() {
        return Err(DeriveError::EmptyInput { which });
    }
    let mut names: Vec<String> = records.iter().map(|r| r.operator.clone()).collect();
    names.sort();
    names.dedup();
    if names.len() > 1 {
        return Err(DeriveError::MixedOperators { which, names });
    }

    let mut groups: BTreeMap<u32, Vec<(Option<u32>, F)>> = BTreeMap::new();
    for record in records {
        validate_record(record.clone())?;
        let group = groups.entry(record.packet_size).or_default();
        if group.iter().any(|(run, _)| *run == record.run_id) {
            return Err(DeriveError::DuplicateSize {
                packet_size: record.packet_size,
                run_id: record.run_id,
            });
        }
        group.push((record.run_id, record.throughput_pps));
    }

    let mut rates = BTreeMap::new();
    for (size, group) in groups {
        let pps: Vec<F> = group.iter().map(|(_, p)| *p).collect();
        let med = median(&pps).expect("validated positive throughputs");
        rates.insert(size, med);
    }
    Ok((rates, names.remove(0)))
}

fn check_single_platform<F: Scalar>(
    baseline: &[MeasurementRecord<F>],
    sut: &[MeasurementRecord<F>],
) -> Result<(), DeriveError> {
    let mut names: Vec<String> = baseline
        .iter()
        .chain(sut.iter())
        .map(|r| r.platform.clone())
        .collect();
    names.sort();
    names.dedup();
    if names.len() > 1 {
        return Err(DeriveError::MixedPlatforms { names });
    }
    Ok(())
}
