//! Bundled reference dataset: published operator profiles for an Arm server
//! (Marvell CN96XX, 1.8 GHz) and an x86 server (Intel Xeon Silver 4210,
//! 2.20 GHz), measured over 64/128/256-byte sweeps on 100GbE hardware.
//!
//! Base costs are cycles at 64 bytes; exponents come from log-log fits. The
//! R² values are carried verbatim as metadata — the raw samples behind them
//! are not available, so refits reproduce base/exponent but not R².

use crate::model::{CostCurve, MeasurementRecord, PlatformSpec};
use crate::opq::classify_points;
use crate::sim::{run_protocol, CostFn, SimConfig};

use super::profile::ProfileDocument;

pub const ARM_PLATFORM: &str = "arm";
pub const X86_PLATFORM: &str = "x86";
pub const ARM_CPU_HZ: f64 = 1.8e9;
pub const X86_CPU_HZ: f64 = 2.2e9;

/// The packet sizes behind the reference fits.
pub const REFERENCE_SIZES: [u32; 3] = [64, 128, 256];

/// (operator, base cost, exponent k, R²) per platform, in published order.
const ARM_ROWS: [(&str, f64, f64, f64); 6] = [
    ("CRC", 823.0, 1.3700, 0.9976),
    ("Checksum", 65.0, 0.1632, 0.9981),
    ("hash", 34.0, 0.2606, 0.9762),
    ("htons", 49.0, 0.2067, 0.9993),
    ("printf", 12006.0, 0.1130, 0.9358),
    ("rte_log", 108.0, 0.2429, 0.9327),
];

const X86_ROWS: [(&str, f64, f64, f64); 6] = [
    ("CRC", 747.0, 1.2699, 0.9997),
    ("Checksum", 27.0, 0.1551, 0.9995),
    ("hash", 9.0, 0.1547, 0.9988),
    ("htons", 1.5, 0.0644, 0.9634),
    ("printf", 29129.0, 0.2222, 0.9561),
    ("rte_log", 49.0, 0.1509, 0.9653),
];

fn build_profile(
    platform: PlatformSpec,
    rows: &[(&str, f64, f64, f64); 6],
) -> ProfileDocument {
    let curves: Vec<CostCurve> = rows
        .iter()
        .map(|&(operator, base_cost, exponent_k, r_squared)| CostCurve {
            operator: operator.to_string(),
            // base = a · 64^k, so a = base / 64^k.
            coefficient_a: base_cost / 64f64.powf(exponent_k),
            exponent_k,
            r_squared,
            base_cost,
            n_points: REFERENCE_SIZES.len(),
        })
        .collect();
    let opq_points = classify_points(&curves, &platform.name, None)
        .expect("reference curves classify");

    let mut doc = ProfileDocument::new(platform, "reference");
    doc.curves = curves;
    doc.opq_points = opq_points;
    doc
}

/// The embedded reference profiles, classified with each platform's own
/// median threshold (86.5 cycles on arm, 38 on x86).
pub fn load_reference_table2() -> (ProfileDocument, ProfileDocument) {
    let arm = build_profile(
        PlatformSpec::new(ARM_PLATFORM, ARM_CPU_HZ, "Marvell CN96XX (1.8 GHz)"),
        &ARM_ROWS,
    );
    let x86 = build_profile(
        PlatformSpec::new(
            X86_PLATFORM,
            X86_CPU_HZ,
            "Intel Xeon Silver 4210 (2.20 GHz)",
        ),
        &X86_ROWS,
    );
    (arm, x86)
}

/// Baseline cycle costs assumed when synthesizing raw measurements. The
/// published table only contains operator deltas; the delta cancels the
/// baseline, so any positive constant works.
const ARM_SYNTHETIC_BASE: f64 = 400.0;
const X86_SYNTHETIC_BASE: f64 = 300.0;

/// Synthesizes the saturation measurements the reference profiles would
/// have come from: noiseless simulated sweeps per operator, baseline
/// included once per platform. Feeding these through derivation and
/// fitting reproduces every published base cost and exponent.
pub fn reference_measurement_records() -> Vec<MeasurementRecord> {
    let mut records = Vec::new();
    for (platform, cpu_hz, base, rows) in [
        (ARM_PLATFORM, ARM_CPU_HZ, ARM_SYNTHETIC_BASE, &ARM_ROWS),
        (X86_PLATFORM, X86_CPU_HZ, X86_SYNTHETIC_BASE, &X86_ROWS),
    ] {
        let config: SimConfig = SimConfig::new(platform, cpu_hz, CostFn::constant(base));
        for (index, &(operator, base_cost, exponent_k, _)) in rows.iter().enumerate() {
            let op_cost = CostFn::power_law(base_cost / 64f64.powf(exponent_k), exponent_k);
            let (baseline, sut) =
                run_protocol(&config, operator, &op_cost, &REFERENCE_SIZES, 1)
                    .expect("reference simulation");
            if index == 0 {
                records.extend(baseline);
            }
            records.extend(sut);
        }
    }
    records
}
