//! Structured plot data: everything a plotting tool needs to draw the
//! quadrant chart (points, boundary lines, shift arrows), per-operator
//! cost-vs-size scaling series, and the printf-vs-lightweight-logging
//! comparison. No image rendering happens here.

use serde::{Deserialize, Serialize};

use crate::fit::eval_curve;
use crate::model::QuadrantLabel;
use crate::opq::{compute_shift, fold_change};

use super::profile::ProfileDocument;
use super::reference::REFERENCE_SIZES;
use super::IoError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub operator: String,
    pub platform: String,
    pub exponent_k: f64,
    pub base_cost: f64,
    pub quadrant: QuadrantLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotThreshold {
    pub platform: String,
    pub base_cost_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotCoordinate {
    pub exponent_k: f64,
    pub base_cost: f64,
}

/// One operator's movement between the two plotted platforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotArrow {
    pub operator: String,
    pub from_platform: String,
    pub to_platform: String,
    pub from: PlotCoordinate,
    pub to: PlotCoordinate,
    pub from_quadrant: QuadrantLabel,
    pub to_quadrant: QuadrantLabel,
    pub shifted: bool,
}

/// Cost-vs-size series for scaling charts (log-scale y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    pub operator: String,
    pub platform: String,
    pub packet_sizes: Vec<u32>,
    pub cost_cycles: Vec<f64>,
}

/// printf against its lightweight logging alternative, per platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggingComparison {
    pub platform: String,
    pub printf_base_cost: f64,
    pub alternative_operator: String,
    pub alternative_base_cost: f64,
    pub fold_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotDocument {
    pub schema_version: String,
    /// Base-cost axes span orders of magnitude; plot them log-scaled.
    pub log_scale_y: bool,
    /// Vertical quadrant boundary on the exponent axis.
    pub k_split: f64,
    /// Horizontal boundary per platform (that platform's threshold).
    pub thresholds: Vec<PlotThreshold>,
    pub points: Vec<PlotPoint>,
    pub arrows: Vec<PlotArrow>,
    pub scaling_series: Vec<ScalingSeries>,
    pub logging_comparison: Vec<LoggingComparison>,
}

fn require_classified(profile: &ProfileDocument) -> Result<(), IoError> {
    if profile.opq_points.is_empty() {
        return Err(IoError::UnclassifiedPoints {
            platform: profile.platform.name.clone(),
        });
    }
    Ok(())
}

fn series_for(profile: &ProfileDocument) -> Vec<ScalingSeries> {
    profile
        .curves
        .iter()
        .map(|curve| {
            let mut sized: Vec<(u32, f64)> = profile
                .samples
                .iter()
                .filter(|s| s.operator == curve.operator)
                .map(|s| (s.packet_size, s.cost_cycles))
                .collect();
            if sized.is_empty() {
                sized = REFERENCE_SIZES
                    .iter()
                    .map(|&s| (s, eval_curve(curve, s).expect("positive size")))
                    .collect();
            }
            sized.sort_by_key(|&(size, _)| size);
            ScalingSeries {
                operator: curve.operator.clone(),
                platform: profile.platform.name.clone(),
                packet_sizes: sized.iter().map(|&(s, _)| s).collect(),
                cost_cycles: sized.iter().map(|&(_, c)| c).collect(),
            }
        })
        .collect()
}

fn logging_pair(profile: &ProfileDocument) -> Option<LoggingComparison> {
    let base_of = |name: &str| {
        profile
            .curves
            .iter()
            .find(|c| c.operator.eq_ignore_ascii_case(name))
            .map(|c| (c.operator.clone(), c.base_cost))
    };
    let (_, printf_base) = base_of("printf")?;
    let (alt_name, alt_base) = base_of("rte_log").or_else(|| base_of("ringlog"))?;
    let ratio = fold_change(printf_base, alt_base).ok()?;
    Some(LoggingComparison {
        platform: profile.platform.name.clone(),
        printf_base_cost: printf_base,
        alternative_operator: alt_name,
        alternative_base_cost: alt_base,
        fold_change: ratio,
    })
}

/// Builds the plot document for one classified profile, or for a pair with
/// one shift arrow per operator common to both.
pub fn emit_opq_plot_data(
    from: &ProfileDocument,
    to: Option<&ProfileDocument>,
) -> Result<PlotDocument, IoError> {
    require_classified(from)?;
    if let Some(to) = to {
        require_classified(to)?;
    }

    let mut points = Vec::new();
    let mut thresholds = Vec::new();
    let mut scaling_series = Vec::new();
    let mut logging_comparison = Vec::new();

    let profiles: Vec<&ProfileDocument> = std::iter::once(from).chain(to).collect();
    for profile in &profiles {
        thresholds.push(PlotThreshold {
            platform: profile.platform.name.clone(),
            base_cost_threshold: profile.opq_points[0].threshold_used,
        });
        for point in &profile.opq_points {
            points.push(PlotPoint {
                operator: point.operator.clone(),
                platform: point.platform.clone(),
                exponent_k: point.exponent_k,
                base_cost: point.base_cost,
                quadrant: point.quadrant,
            });
        }
        scaling_series.extend(series_for(profile));
        logging_comparison.extend(logging_pair(profile));
    }

    let arrows = match to {
        Some(to) => {
            let report = compute_shift(&from.opq_points, &to.opq_points)?;
            report
                .shifts
                .iter()
                .map(|shift| {
                    let find = |points: &[crate::model::OpqPoint], op: &str| {
                        let p = points
                            .iter()
                            .find(|p| p.operator == op)
                            .expect("shift operators exist on both sides");
                        PlotCoordinate {
                            exponent_k: p.exponent_k,
                            base_cost: p.base_cost,
                        }
                    };
                    PlotArrow {
                        operator: shift.operator.clone(),
                        from_platform: shift.from_platform.clone(),
                        to_platform: shift.to_platform.clone(),
                        from: find(&from.opq_points, &shift.operator),
                        to: find(&to.opq_points, &shift.operator),
                        from_quadrant: shift.from_quadrant,
                        to_quadrant: shift.to_quadrant,
                        shifted: shift.shifted(),
                    }
                })
                .collect()
        }
        None => Vec::new(),
    };

    Ok(PlotDocument {
        schema_version: super::profile::PROFILE_SCHEMA_VERSION.to_string(),
        log_scale_y: true,
        k_split: 1.0,
        thresholds,
        points,
        arrows,
        scaling_series,
        logging_comparison,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::reference::load_reference_table2;
    use crate::opq::classify_points;

    #[test]
    fn reference_pair_yields_12_points_and_6_arrows() {
        let (arm, x86) = load_reference_table2();
        let plot = emit_opq_plot_data(&arm, Some(&x86)).unwrap();
        assert_eq!(plot.points.len(), 12);
        assert_eq!(plot.arrows.len(), 6);
        assert!(plot.log_scale_y);
        assert_eq!(plot.k_split, 1.0);
        assert_eq!(plot.thresholds.len(), 2);
        assert_eq!(plot.scaling_series.len(), 12);
        assert_eq!(plot.logging_comparison.len(), 2);

        let crc = plot.arrows.iter().find(|a| a.operator == "CRC").unwrap();
        assert!(!crc.shifted, "CRC stays a latent trap on both platforms");
        let printf_arm = plot
            .logging_comparison
            .iter()
            .find(|c| c.platform == "arm")
            .unwrap();
        assert!(printf_arm.fold_change > 110.0);
    }

    #[test]
    fn single_platform_has_points_but_no_arrows() {
        let (arm, _) = load_reference_table2();
        let plot = emit_opq_plot_data(&arm, None).unwrap();
        assert_eq!(plot.points.len(), 6);
        assert!(plot.arrows.is_empty());
        assert_eq!(plot.thresholds.len(), 1);
        assert_eq!(plot.thresholds[0].base_cost_threshold, 86.5);
    }

    #[test]
    fn unclassified_profile_is_rejected() {
        let (mut arm, _) = load_reference_table2();
        arm.opq_points.clear();
        assert!(matches!(
            emit_opq_plot_data(&arm, None).unwrap_err(),
            IoError::UnclassifiedPoints { .. }
        ));
    }

    #[test]
    fn threshold_override_moves_htons_and_checksum_into_high_half() {
        // With the default arm median (86.5), htons (49) and Checksum (65)
        // sit in the low half; an override inside (34, 49] lifts them.
        let (mut arm, _) = load_reference_table2();
        arm.opq_points = classify_points(&arm.curves, "arm", Some(40.0)).unwrap();
        let plot = emit_opq_plot_data(&arm, None).unwrap();
        let threshold = plot.thresholds[0].base_cost_threshold;
        assert_eq!(threshold, 40.0);
        for operator in ["htons", "Checksum"] {
            let point = plot.points.iter().find(|p| p.operator == operator).unwrap();
            assert!(
                point.base_cost >= threshold,
                "{operator} should plot in the high-base half"
            );
        }
        let hash = plot.points.iter().find(|p| p.operator == "hash").unwrap();
        assert!(hash.base_cost < threshold);
    }

    #[test]
    fn scaling_series_prefers_measured_samples() {
        let (mut arm, _) = load_reference_table2();
        arm.samples.push(crate::model::CostSample::new("CRC", 64, 800.0));
        arm.samples.push(crate::model::CostSample::new("CRC", 128, 2000.0));
        let plot = emit_opq_plot_data(&arm, None).unwrap();
        let crc = plot
            .scaling_series
            .iter()
            .find(|s| s.operator == "CRC")
            .unwrap();
        assert_eq!(crc.packet_sizes, vec![64, 128]);
        assert_eq!(crc.cost_cycles, vec![800.0, 2000.0]);
    }
}
