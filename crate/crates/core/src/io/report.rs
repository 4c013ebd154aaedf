//! Text report generation: the per-operator profile table.

use crate::model::CostCurve;

use super::profile::ProfileDocument;

/// Operator ordering used by the published table; anything else sorts after
/// these, alphabetically.
const OPERATOR_ORDER: [&str; 6] = ["crc", "checksum", "hash", "htons", "printf", "rte_log"];

fn operator_rank(name: &str) -> (usize, String) {
    let lower = name.to_ascii_lowercase();
    let rank = OPERATOR_ORDER
        .iter()
        .position(|&o| o == lower)
        .unwrap_or(OPERATOR_ORDER.len());
    (rank, lower)
}

/// Cost formatting: up to four significant digits, plain decimal notation,
/// trailing zeros trimmed. Values at or above 1000 cycles keep full integer
/// precision, so published base costs print back verbatim.
pub fn format_cost(value: f64) -> String {
    if !value.is_finite() {
        return format!("{value}");
    }
    if value == 0.0 {
        return "0".to_string();
    }
    let magnitude = value.abs();
    let int_digits = if magnitude >= 1.0 {
        magnitude.log10().floor() as i32 + 1
    } else {
        1
    };
    let decimals = (4 - int_digits).clamp(0, 6) as usize;
    let mut s = format!("{value:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Exponents and R² print with four fixed decimals.
pub fn format_exponent(value: f64) -> String {
    format!("{value:.4}")
}

struct Row {
    operator: String,
    platform: String,
    base: String,
    exponent: String,
    r_squared: String,
}

/// Renders a fixed-width table (Operator, Platform, Base Cost,
/// Exponent (k), R^2), grouped by operator in published order with the
/// operator name printed once per group. Footnotes carry each profile's
/// provenance and the fit space.
pub fn emit_table_report(profiles: &[&ProfileDocument]) -> String {
    let mut entries: Vec<(&CostCurve, &str, usize)> = Vec::new();
    for (profile_index, profile) in profiles.iter().enumerate() {
        for curve in &profile.curves {
            entries.push((curve, profile.platform.name.as_str(), profile_index));
        }
    }
    entries.sort_by(|a, b| {
        operator_rank(&a.0.operator)
            .cmp(&operator_rank(&b.0.operator))
            .then(a.2.cmp(&b.2))
    });

    let mut rows = Vec::with_capacity(entries.len());
    let mut previous_operator: Option<&str> = None;
    for (curve, platform, _) in &entries {
        let first_of_group = previous_operator != Some(curve.operator.as_str());
        rows.push(Row {
            operator: if first_of_group {
                curve.operator.clone()
            } else {
                String::new()
            },
            platform: (*platform).to_string(),
            base: format_cost(curve.base_cost),
            exponent: format_exponent(curve.exponent_k),
            r_squared: format_exponent(curve.r_squared),
        });
        previous_operator = Some(curve.operator.as_str());
    }

    let headers = ["Operator", "Platform", "Base Cost", "Exponent (k)", "R^2"];
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &rows {
        let cells = [
            &row.operator,
            &row.platform,
            &row.base,
            &row.exponent,
            &row.r_squared,
        ];
        for (w, cell) in widths.iter_mut().zip(cells) {
            *w = (*w).max(cell.len());
        }
    }

    let mut out = String::new();
    let line = |out: &mut String, cells: [&str; 5]| {
        let mut parts = Vec::with_capacity(5);
        for (cell, width) in cells.iter().zip(&widths) {
            parts.push(format!("{cell:<width$}"));
        }
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };

    line(&mut out, headers);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("--"));
    out.push('\n');
    for row in &rows {
        line(
            &mut out,
            [
                &row.operator,
                &row.platform,
                &row.base,
                &row.exponent,
                &row.r_squared,
            ],
        );
    }

    out.push('\n');
    for profile in profiles {
        out.push_str(&format!(
            "provenance: {} (platform {}, cpu_hz {})\n",
            profile.provenance, profile.platform.name, profile.platform.cpu_hz
        ));
    }
    out.push_str("fit space: log-log (R^2 computed on ln-cost residuals)\n");
    out
}
