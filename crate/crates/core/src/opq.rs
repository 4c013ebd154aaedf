//! Operator performance quadrants and cross-platform comparison.
//!
//! Operators are placed on two axes: base cost (net cycles at the smallest
//! packet size, split by a dataset threshold — the median by default) and
//! the power-law scaling exponent (split at k = 1). Classifying the same
//! operators on two platforms and diffing the assignments exposes quadrant
//! shifts: performance characteristics that do not port across CPUs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::eval_curve;
use crate::model::{CostCurve, CostSample, OpqPoint, QuadrantLabel, ShiftRecord};
use crate::scalar::{from_f64, median, to_f64, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum OpqError {
    #[error("no sample at {smallest_size}B and no curve to evaluate")]
    MissingSmallestSize { smallest_size: u32 },
    #[error("cannot take the median of an empty dataset")]
    EmptyDataset,
    #[error("no operator exists on both platforms")]
    NoCommonOperators,
    #[error("cpu frequency must be positive, got {hz}")]
    NonPositiveFrequency { hz: f64 },
    #[error("fold-change denominator must be non-zero")]
    DivisionByZero,
    #[error("base cost, exponent, and threshold must be finite")]
    NonFiniteInput,
}

/// Where a base cost came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseCostSource {
    /// Measured sample at the smallest swept size.
    Measured,
    /// Fitted curve evaluated at the smallest size.
    Curve,
}

/// Base cost with provenance metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseCost<F = f64> {
    pub value: F,
    pub source: BaseCostSource,
}

/// Net cost at the smallest packet size: prefers a measured sample at
/// `smallest_size`, falling back to evaluating the fitted curve there.
pub fn base_cost_of<F: Scalar>(
    samples: &[CostSample<F>],
    curve: Option<&CostCurve<F>>,
    smallest_size: u32,
) -> Result<BaseCost<F>, OpqError> {
    if let Some(sample) = samples.iter().find(|s| s.packet_size == smallest_size) {
        return Ok(BaseCost {
            value: sample.cost_cycles,
            source: BaseCostSource::Measured,
        });
    }
    if let Some(curve) = curve {
        if smallest_size > 0 {
            let value = eval_curve(curve, smallest_size)
                .map_err(|_| OpqError::MissingSmallestSize { smallest_size })?;
            return Ok(BaseCost {
                value,
                source: BaseCostSource::Curve,
            });
        }
    }
    Err(OpqError::MissingSmallestSize { smallest_size })
}

/// Median base cost of the dataset (even counts average the two middle
/// values). This is the default high/low split of the base-cost axis.
pub fn median_threshold<F: Scalar>(base_costs: &[F]) -> Result<F, OpqError> {
    median(base_costs).ok_or(OpqError::EmptyDataset)
}

/// Places one `(base_cost, exponent_k)` pair against a threshold.
///
/// Ties: `base_cost == threshold` goes to the high side, `k == 1` to the
/// sub-linear side. Total over all finite inputs.
pub fn classify_quadrant<F: Scalar>(
    base_cost: F,
    exponent_k: F,
    threshold: F,
) -> Result<QuadrantLabel, OpqError> {
    if !base_cost.is_finite() || !exponent_k.is_finite() || !threshold.is_finite() {
        return Err(OpqError::NonFiniteInput);
    }
    let high_base = base_cost >= threshold;
    let super_linear = exponent_k > F::one();
    Ok(match (high_base, super_linear) {
        (true, true) => QuadrantLabel::LatentTrap,
        (true, false) => QuadrantLabel::HighStartupCost,
        (false, false) => QuadrantLabel::Ideal,
        (false, true) => QuadrantLabel::EmergentBottleneck,
    })
}

/// Classifies a set of fitted curves for one platform, using the dataset
/// median as the threshold unless an override is given.
pub fn classify_points<F: Scalar>(
    curves: &[CostCurve<F>],
    platform: &str,
    threshold_override: Option<F>,
) -> Result<Vec<OpqPoint<F>>, OpqError> {
    let bases: Vec<F> = curves.iter().map(|c| c.base_cost).collect();
    let threshold = match threshold_override {
        Some(t) => t,
        None => median_threshold(&bases)?,
    };
    curves
        .iter()
        .map(|curve| {
            let quadrant = classify_quadrant(curve.base_cost, curve.exponent_k, threshold)?;
            Ok(OpqPoint {
                operator: curve.operator.clone(),
                platform: platform.to_string(),
                base_cost: curve.base_cost,
                exponent_k: curve.exponent_k,
                quadrant,
                threshold_used: threshold,
            })
        })
        .collect()
}

/// Shift computation output: one record per operator present on both
/// platforms, plus the names skipped because they exist on only one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport<F = f64> {
    pub shifts: Vec<ShiftRecord<F>>,
    pub skipped: Vec<String>,
}

/// Diffs two platforms' classified points. Each side keeps its own
/// threshold; deltas are `to − from`.
pub fn compute_shift<F: Scalar>(
    from: &[OpqPoint<F>],
    to: &[OpqPoint<F>],
) -> Result<ShiftReport<F>, OpqError> {
    let mut shifts = Vec::new();
    let mut skipped: Vec<String> = Vec::new();

    for from_point in from {
        match to.iter().find(|p| p.operator == from_point.operator) {
            Some(to_point) => shifts.push(ShiftRecord {
                operator: from_point.operator.clone(),
                from_platform: from_point.platform.clone(),
                to_platform: to_point.platform.clone(),
                from_quadrant: from_point.quadrant,
                to_quadrant: to_point.quadrant,
                delta_base: to_point.base_cost - from_point.base_cost,
                delta_k: to_point.exponent_k - from_point.exponent_k,
                from_threshold: from_point.threshold_used,
                to_threshold: to_point.threshold_used,
            }),
            None => skipped.push(from_point.operator.clone()),
        }
    }
    for to_point in to {
        if !from.iter().any(|p| p.operator == to_point.operator) {
            skipped.push(to_point.operator.clone());
        }
    }

    if shifts.is_empty() {
        return Err(OpqError::NoCommonOperators);
    }
    skipped.sort();
    skipped.dedup();
    Ok(ShiftReport { shifts, skipped })
}

/// Converts cycles to wall time: `cost / cpu_hz · 1e9` nanoseconds.
pub fn normalize_to_time<F: Scalar>(cost_cycles: F, cpu_hz: F) -> Result<F, OpqError> {
    if !(cpu_hz > F::zero()) {
        return Err(OpqError::NonPositiveFrequency {
            hz: to_f64(cpu_hz),
        });
    }
    Ok(cost_cycles / cpu_hz * from_f64(1e9))
}

/// Cost ratio `cost_a / cost_b`.
pub fn fold_change<F: Scalar>(cost_a: F, cost_b: F) -> Result<F, OpqError> {
    if cost_b == F::zero() {
        return Err(OpqError::DivisionByZero);
    }
    Ok(cost_a / cost_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TABLE2_BASE_COSTS: [f64; 12] = [
        823.0, 65.0, 34.0, 49.0, 12006.0, 108.0, 747.0, 27.0, 9.0, 1.5, 29129.0, 49.0,
    ];

    fn point(op: &str, platform: &str, base: f64, k: f64, threshold: f64) -> OpqPoint {
        OpqPoint {
            operator: op.into(),
            platform: platform.into(),
            base_cost: base,
            exponent_k: k,
            quadrant: classify_quadrant(base, k, threshold).unwrap(),
            threshold_used: threshold,
        }
    }

    #[test]
    fn base_cost_prefers_measured_sample() {
        let samples = vec![
            CostSample::new("CRC", 64, 823.0),
            CostSample::new("CRC", 128, 2100.0),
        ];
        let got = base_cost_of(&samples, None, 64).unwrap();
        assert_eq!(got.value, 823.0);
        assert_eq!(got.source, BaseCostSource::Measured);
    }

    #[test]
    fn base_cost_falls_back_to_curve() {
        let curve = CostCurve {
            operator: "op".into(),
            coefficient_a: 10.0,
            exponent_k: 0.0,
            r_squared: 1.0,
            base_cost: 10.0,
            n_points: 3,
        };
        let got = base_cost_of::<f64>(&[], Some(&curve), 64).unwrap();
        assert!((got.value - 10.0).abs() < 1e-12);
        assert_eq!(got.source, BaseCostSource::Curve);
    }

    #[test]
    fn base_cost_missing_everywhere_is_an_error() {
        let samples = vec![CostSample::new("op", 128, 5.0)];
        assert!(matches!(
            base_cost_of(&samples, None, 64).unwrap_err(),
            OpqError::MissingSmallestSize { smallest_size: 64 }
        ));
    }

    #[test]
    fn median_of_reference_base_costs_is_57() {
        assert_eq!(median_threshold(&TABLE2_BASE_COSTS).unwrap(), 57.0);
    }

    #[test]
    fn median_edge_cases() {
        assert_eq!(median_threshold(&[100.0]).unwrap(), 100.0);
        assert_eq!(median_threshold(&[10.0, 20.0, 30.0]).unwrap(), 20.0);
        assert_eq!(
            median_threshold::<f64>(&[]).unwrap_err(),
            OpqError::EmptyDataset
        );
    }

    #[test]
    fn quadrant_examples() {
        assert_eq!(
            classify_quadrant(823.0, 1.37, 57.0).unwrap(),
            QuadrantLabel::LatentTrap
        );
        assert_eq!(
            classify_quadrant(1.5, 0.0644, 57.0).unwrap(),
            QuadrantLabel::Ideal
        );
        assert_eq!(
            classify_quadrant(20.0, 1.2, 57.0).unwrap(),
            QuadrantLabel::EmergentBottleneck
        );
        assert_eq!(
            classify_quadrant(12006.0, 0.113, 57.0).unwrap(),
            QuadrantLabel::HighStartupCost
        );
    }

    #[test]
    fn quadrant_tie_breaks() {
        // base == threshold → high side; k == 1 → sub-linear side.
        assert_eq!(
            classify_quadrant(57.0, 1.0, 57.0).unwrap(),
            QuadrantLabel::HighStartupCost
        );
        assert_eq!(
            classify_quadrant(56.9, 1.0, 57.0).unwrap(),
            QuadrantLabel::Ideal
        );
        assert_eq!(
            classify_quadrant(57.0, 1.0 + 1e-12, 57.0).unwrap(),
            QuadrantLabel::LatentTrap
        );
    }

    #[test]
    fn quadrant_rejects_non_finite() {
        assert!(classify_quadrant(f64::NAN, 1.0, 57.0).is_err());
        assert!(classify_quadrant(1.0, f64::INFINITY, 57.0).is_err());
    }

    #[test]
    fn shift_of_hash_between_platforms() {
        let from = vec![point("hash", "arm", 34.0, 0.2606, 86.5)];
        let to = vec![point("hash", "x86", 9.0, 0.1547, 38.0)];
        let report = compute_shift(&from, &to).unwrap();
        assert_eq!(report.shifts.len(), 1);
        let s = &report.shifts[0];
        assert!((s.delta_base - -25.0).abs() < 1e-12);
        assert!((s.delta_k - -0.1059).abs() < 1e-12);
        assert_eq!(s.from_threshold, 86.5);
        assert_eq!(s.to_threshold, 38.0);
        assert!(!s.shifted()); // Ideal on both sides.
    }

    #[test]
    fn crc_stays_in_latent_trap_on_both_platforms() {
        let from = vec![point("CRC", "arm", 823.0, 1.37, 86.5)];
        let to = vec![point("CRC", "x86", 747.0, 1.2699, 38.0)];
        let report = compute_shift(&from, &to).unwrap();
        let s = &report.shifts[0];
        assert_eq!(s.from_quadrant, QuadrantLabel::LatentTrap);
        assert_eq!(s.to_quadrant, QuadrantLabel::LatentTrap);
        assert!(!s.shifted());
    }

    #[test]
    fn shift_disjoint_sets_is_an_error() {
        let from = vec![point("CRC", "arm", 823.0, 1.37, 86.5)];
        let to = vec![point("hash", "x86", 9.0, 0.1547, 38.0)];
        assert_eq!(
            compute_shift(&from, &to).unwrap_err(),
            OpqError::NoCommonOperators
        );
    }

    #[test]
    fn shift_lists_one_sided_operators_as_skipped() {
        let from = vec![
            point("CRC", "arm", 823.0, 1.37, 86.5),
            point("htons", "arm", 49.0, 0.2067, 86.5),
        ];
        let to = vec![
            point("CRC", "x86", 747.0, 1.2699, 38.0),
            point("printf", "x86", 29129.0, 0.2222, 38.0),
        ];
        let report = compute_shift(&from, &to).unwrap();
        assert_eq!(report.shifts.len(), 1);
        assert_eq!(report.skipped, vec!["htons".to_string(), "printf".to_string()]);
    }

    #[test]
    fn normalize_to_time_examples() {
        let ns: f64 = normalize_to_time(823.0, 1.8e9).unwrap();
        assert!((ns - 457.2222222222222).abs() < 1e-9);
        assert_eq!(normalize_to_time(0.0, 2.2e9).unwrap(), 0.0);
        assert!((normalize_to_time::<f64>(2200.0, 2.2e9).unwrap() - 1000.0).abs() < 1e-9);
        assert!(normalize_to_time(1.0, 0.0).is_err());
    }

    #[test]
    fn fold_change_examples() {
        // printf vs rte_log: >110× on Arm, ≈595× on x86.
        let arm: f64 = fold_change(12006.0, 108.0).unwrap();
        assert!((arm - 111.16666666666667).abs() < 1e-9);
        assert!(arm > 110.0);
        let x86: f64 = fold_change(29129.0, 49.0).unwrap();
        assert!((x86 - 594.469387755102).abs() < 1e-9);
        assert_eq!(fold_change(42.0, 42.0).unwrap(), 1.0);
        assert_eq!(fold_change(1.0, 0.0).unwrap_err(), OpqError::DivisionByZero);
    }

    #[test]
    fn classify_points_uses_dataset_median_by_default() {
        let curves: Vec<CostCurve> = [("a", 10.0, 0.5), ("b", 20.0, 1.5), ("c", 30.0, 0.9)]
            .iter()
            .map(|&(op, base, k)| CostCurve {
                operator: op.into(),
                coefficient_a: base / 64f64.powf(k),
                exponent_k: k,
                r_squared: 1.0,
                base_cost: base,
                n_points: 3,
            })
            .collect();
        let points = classify_points(&curves, "p", None).unwrap();
        assert!(points.iter().all(|p| p.threshold_used == 20.0));
        assert_eq!(points[0].quadrant, QuadrantLabel::Ideal);
        assert_eq!(points[1].quadrant, QuadrantLabel::LatentTrap);
        assert_eq!(points[2].quadrant, QuadrantLabel::HighStartupCost);

        let with_override = classify_points(&curves, "p", Some(25.0)).unwrap();
        assert_eq!(with_override[1].quadrant, QuadrantLabel::EmergentBottleneck);
    }

    proptest! {
        // Every finite triple maps to exactly one quadrant: total function.
        #[test]
        fn prop_quadrant_total(
            base in -1e6f64..1e6,
            k in -10.0f64..10.0,
            threshold in -1e6f64..1e6,
        ) {
            let q = classify_quadrant(base, k, threshold).unwrap();
            let expected = match (base >= threshold, k > 1.0) {
                (true, true) => QuadrantLabel::LatentTrap,
                (true, false) => QuadrantLabel::HighStartupCost,
                (false, false) => QuadrantLabel::Ideal,
                (false, true) => QuadrantLabel::EmergentBottleneck,
            };
            prop_assert_eq!(q, expected);
        }

        // Jointly rescaling base and threshold by any positive affinity
        // preserves the label; the k side never depends on base cost.
        #[test]
        fn prop_quadrant_affine_invariance(
            base in -1e3f64..1e3,
            k in -5.0f64..5.0,
            threshold in -1e3f64..1e3,
            scale in 1e-3f64..1e3,
            offset in -1e3f64..1e3,
        ) {
            let q1 = classify_quadrant(base, k, threshold).unwrap();
            let q2 = classify_quadrant(base * scale + offset, k, threshold * scale + offset)
                .unwrap();
            prop_assert_eq!(q1, q2);
        }

        // Swapping from/to negates the deltas and reverses the pair.
        #[test]
        fn prop_shift_antisymmetry(
            base_a in 0.1f64..1e4,
            base_b in 0.1f64..1e4,
            k_a in -2.0f64..3.0,
            k_b in -2.0f64..3.0,
        ) {
            let a = vec![point("op", "p1", base_a, k_a, 50.0)];
            let b = vec![point("op", "p2", base_b, k_b, 60.0)];
            let ab = compute_shift(&a, &b).unwrap().shifts.remove(0);
            let ba = compute_shift(&b, &a).unwrap().shifts.remove(0);
            prop_assert_eq!(ab.delta_base, -ba.delta_base);
            prop_assert_eq!(ab.delta_k, -ba.delta_k);
            prop_assert_eq!(ab.from_quadrant, ba.to_quadrant);
            prop_assert_eq!(ab.to_quadrant, ba.from_quadrant);
        }

        // The median is permutation invariant.
        #[test]
        fn prop_median_permutation_invariance(
            mut values in proptest::collection::vec(0.0f64..1e6, 1..20),
            rotation in 0usize..20,
        ) {
            let before = median_threshold(&values).unwrap();
            let len = values.len();
            values.rotate_left(rotation % len);
            values.reverse();
            prop_assert_eq!(median_threshold(&values).unwrap(), before);
        }
    }
}
