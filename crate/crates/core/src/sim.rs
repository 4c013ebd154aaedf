//! Deterministic model of a CPU-saturated pipeline.
//!
//! Solves the saturation equations forward: a pipeline whose per-packet
//! cost is `C_base(s) + C_op(s)` cycles sustains `F_cpu / (C_base + C_op)`
//! packets per second, optionally capped by the link's line rate and
//! perturbed by seeded multiplicative lognormal noise. Because every
//! quantity is injected, the simulator serves as the ground-truth oracle
//! for the derivation protocol: simulate → derive → fit must recover what
//! was injected.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derive::{
    derive_sweep_guarded, DeriveError, SaturationGuard, ValidityWarning, DEFAULT_GUARD_MARGIN,
};
use crate::fit::{fit_power_law, FitError};
use crate::model::{CostCurve, CostSample, LineRate, MeasurementRecord, BASELINE_OPERATOR};
use crate::scalar::{from_f64, to_f64, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum SimError {
    #[error("cpu_hz must be positive, got {hz}")]
    NonPositiveFrequency { hz: f64 },
    #[error("noise sigma must be non-negative, got {sigma}")]
    NegativeNoiseSigma { sigma: f64 },
    #[error("base cost must be positive at {packet_size}B, got {cost}")]
    NonPositiveBaseCost { packet_size: u32, cost: f64 },
    #[error("operator cost must be non-negative at {packet_size}B, got {cost}")]
    NegativeOpCost { packet_size: u32, cost: f64 },
    #[error("per-size cost table has no entry for {packet_size}B")]
    MissingSize { packet_size: u32 },
    #[error("size sweep must be non-empty")]
    EmptySizes,
    #[error("runs must be at least 1")]
    ZeroRuns,
    #[error("\"{BASELINE_OPERATOR}\" is reserved; pick another operator name")]
    ReservedOperator,
    #[error(transparent)]
    Derive(#[from] DeriveError),
}

/// Cost as a function of packet size, in a serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CostFn<F = f64> {
    Constant { cycles: F },
    PowerLaw { a: F, k: F },
    PerSize { costs: BTreeMap<u32, F> },
}

impl<F: Scalar> CostFn<F> {
    pub fn constant(cycles: F) -> Self {
        CostFn::Constant { cycles }
    }

    pub fn power_law(a: F, k: F) -> Self {
        CostFn::PowerLaw { a, k }
    }

    pub fn eval(&self, packet_size: u32) -> Result<F, SimError> {
        match self {
            CostFn::Constant { cycles } => Ok(*cycles),
            CostFn::PowerLaw { a, k } => {
                Ok(*a * from_f64::<F>(f64::from(packet_size)).powf(*k))
            }
            CostFn::PerSize { costs } => costs
                .get(&packet_size)
                .copied()
                .ok_or(SimError::MissingSize { packet_size }),
        }
    }

    /// `(a, k)` when the function is an exact power law (constants are
    /// `a·s^0`); `None` for tabulated costs.
    pub fn as_power_law(&self) -> Option<(F, F)> {
        match self {
            CostFn::Constant { cycles } => Some((*cycles, F::zero())),
            CostFn::PowerLaw { a, k } => Some((*a, *k)),
            CostFn::PerSize { .. } => None,
        }
    }
}

/// Simulated pipeline parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: serde::Deserialize<'de> + Scalar"))]
pub struct SimConfig<F = f64> {
    /// Platform name stamped on emitted records.
    pub platform: String,
    pub cpu_hz: F,
    /// Base system cost per packet size (must be positive everywhere).
    pub base_cost: CostFn<F>,
    /// Optional link capacity; `None` models an unbounded generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_rate: Option<LineRate<F>>,
    /// Lognormal σ applied multiplicatively to throughput; 0 = noiseless.
    #[serde(default = "zero_sigma")]
    pub noise_sigma: F,
    #[serde(default)]
    pub seed: u64,
}

fn zero_sigma<F: Scalar>() -> F {
    F::zero()
}

impl<F: Scalar> SimConfig<F> {
    pub fn new(platform: impl Into<String>, cpu_hz: F, base_cost: CostFn<F>) -> Self {
        Self {
            platform: platform.into(),
            cpu_hz,
            base_cost,
            line_rate: None,
            noise_sigma: F::zero(),
            seed: 0,
        }
    }

    pub fn with_line_rate(mut self, line_rate: LineRate<F>) -> Self {
        self.line_rate = Some(line_rate);
        self
    }

    pub fn with_noise(mut self, sigma: F, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.cpu_hz > F::zero()) {
            return Err(SimError::NonPositiveFrequency {
                hz: to_f64(self.cpu_hz),
            });
        }
        if self.noise_sigma < F::zero() {
            return Err(SimError::NegativeNoiseSigma {
                sigma: to_f64(self.noise_sigma),
            });
        }
        Ok(())
    }
}

/// Whether a simulated measurement was limited by cycles or by the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundFlag {
    CpuBound,
    /// Returned pps equals the line-rate cap.
    LineRateBound,
}

/// Stateful simulator: owns the seeded noise stream so that consecutive
/// draws within one protocol run are reproducible for a fixed seed.
pub struct Simulator<F = f64> {
    config: SimConfig<F>,
    rng: ChaCha8Rng,
    noise: Option<LogNormal<f64>>,
}

impl<F: Scalar> Simulator<F> {
    pub fn new(config: SimConfig<F>) -> Result<Self, SimError> {
        config.validate()?;
        let sigma = to_f64(config.noise_sigma);
        let noise = if sigma > 0.0 {
            Some(LogNormal::new(0.0, sigma).expect("validated sigma"))
        } else {
            None
        };
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self { config, rng, noise })
    }

    pub fn config(&self) -> &SimConfig<F> {
        &self.config
    }

    /// One saturation measurement: `F_cpu / (C_base(s) + op_cost)`, noise
    /// applied to the uncapped rate, then clamped to the line rate.
    pub fn throughput(&mut self, packet_size: u32, op_cost: F) -> Result<(F, BoundFlag), SimError> {
        let base = self.config.base_cost.eval(packet_size)?;
        if !(base > F::zero()) {
            return Err(SimError::NonPositiveBaseCost {
                packet_size,
                cost: to_f64(base),
            });
        }
        if op_cost < F::zero() {
            return Err(SimError::NegativeOpCost {
                packet_size,
                cost: to_f64(op_cost),
            });
        }

        let mut pps = self.config.cpu_hz / (base + op_cost);
        if let Some(noise) = &self.noise {
            pps = pps * from_f64(noise.sample(&mut self.rng));
        }

        if let Some(line_rate) = &self.config.line_rate {
            let cap = line_rate.cap_pps(packet_size);
            if pps >= cap {
                return Ok((cap, BoundFlag::LineRateBound));
            }
        }
        Ok((pps, BoundFlag::CpuBound))
    }
}

/// One-shot saturation measurement from a fresh seeded stream.
pub fn simulate_throughput<F: Scalar>(
    config: &SimConfig<F>,
    packet_size: u32,
    op_cost: F,
) -> Result<(F, BoundFlag), SimError> {
    Simulator::new(config.clone())?.throughput(packet_size, op_cost)
}

/// Runs the two-step measurement protocol: a baseline pass (operator cost
/// zero) followed by a pass with `op_cost_fn` injected, `runs` repetitions
/// per size. Record order is fixed — baseline then operator, sizes in the
/// given order, runs innermost — so a fixed seed reproduces output exactly.
pub fn run_protocol<F: Scalar>(
    config: &SimConfig<F>,
    operator: &str,
    op_cost_fn: &CostFn<F>,
    sizes: &[u32],
    runs: u32,
) -> Result<(Vec<MeasurementRecord<F>>, Vec<MeasurementRecord<F>>), SimError> {
    if sizes.is_empty() {
        return Err(SimError::EmptySizes);
    }
    if runs == 0 {
        return Err(SimError::ZeroRuns);
    }
    if operator == BASELINE_OPERATOR {
        return Err(SimError::ReservedOperator);
    }
    let mut sim = Simulator::new(config.clone())?;

    let mut pass = |name: &str, cost_fn: Option<&CostFn<F>>| -> Result<Vec<_>, SimError> {
        let mut records = Vec::with_capacity(sizes.len() * runs as usize);
        for &size in sizes {
            let op_cost = match cost_fn {
                Some(f) => f.eval(size)?,
                None => F::zero(),
            };
            for run in 1..=runs {
                let (pps, _) = sim.throughput(size, op_cost)?;
                records.push(MeasurementRecord {
                    platform: config.platform.clone(),
                    operator: name.to_string(),
                    packet_size: size,
                    throughput_pps: pps,
                    run_id: Some(run),
                });
            }
        }
        Ok(records)
    };

    let baseline = pass(BASELINE_OPERATOR, None)?;
    let sut = pass(operator, Some(op_cost_fn))?;
    Ok((baseline, sut))
}

/// Fit outcome of a closed-loop round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FitOutcome<F = f64> {
    Fitted {
        curve: CostCurve<F>,
        /// `fitted − injected` when the injected cost was a power law.
        delta_a: Option<F>,
        delta_k: Option<F>,
    },
    /// All recovered costs were zero (or negative-rounded): a zero-cost
    /// operator cannot be fitted in log space. Not a protocol failure.
    DegenerateNonPositive,
    /// Line-rate exclusions left fewer than two sizes to fit.
    TooFewPoints { available: usize },
}

/// Comparison of injected vs recovered costs after simulate → derive → fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport<F = f64> {
    pub injected: Vec<CostSample<F>>,
    pub recovered: Vec<CostSample<F>>,
    /// Sizes dropped by the line-rate guard.
    pub excluded_sizes: Vec<u32>,
    /// `max |recovered − injected| / max(injected, 1)` over recovered sizes.
    pub max_rel_error: F,
    pub warnings: Vec<ValidityWarning>,
    pub fit: FitOutcome<F>,
}

/// Composes the full loop: run the protocol, derive costs back out of the
/// simulated throughputs, fit the recovered samples, and report how far
/// everything drifted from the injected truth.
pub fn end_to_end_roundtrip<F: Scalar>(
    config: &SimConfig<F>,
    operator: &str,
    op_cost_fn: &CostFn<F>,
    sizes: &[u32],
) -> Result<RoundtripReport<F>, SimError> {
    let (baseline, sut) = run_protocol(config, operator, op_cost_fn, sizes, 1)?;

    let guard = match &config.line_rate {
        Some(lr) => Some(
            SaturationGuard::new(lr.clone(), from_f64(DEFAULT_GUARD_MARGIN))
                .expect("default margin valid"),
        ),
        None => None,
    };
    let derivation = derive_sweep_guarded(config.cpu_hz, &baseline, &sut, guard.as_ref())?;

    let mut injected = Vec::with_capacity(sizes.len());
    for &size in sizes {
        injected.push(CostSample::new(operator, size, op_cost_fn.eval(size)?));
    }

    let recovered = derivation.samples;
    let excluded_sizes: Vec<u32> = sizes
        .iter()
        .copied()
        .filter(|s| !recovered.iter().any(|r| r.packet_size == *s))
        .collect();

    let mut max_rel_error = F::zero();
    for sample in &recovered {
        let truth = op_cost_fn.eval(sample.packet_size)?;
        let rel = (sample.cost_cycles - truth).abs() / truth.max(F::one());
        max_rel_error = max_rel_error.max(rel);
    }

    let fit = match fit_power_law(&recovered) {
        Ok(curve) => {
            let (delta_a, delta_k) = match op_cost_fn.as_power_law() {
                Some((a, k)) => (Some(curve.coefficient_a - a), Some(curve.exponent_k - k)),
                None => (None, None),
            };
            FitOutcome::Fitted {
                curve,
                delta_a,
                delta_k,
            }
        }
        Err(FitError::NonPositiveCost { .. }) => FitOutcome::DegenerateNonPositive,
        Err(FitError::InsufficientPoints { got }) => FitOutcome::TooFewPoints { available: got },
        Err(other) => {
            // Remaining fit errors require malformed samples, which the
            // derivation cannot produce.
            unreachable!("unexpected fit error in roundtrip: {other}")
        }
    };

    Ok(RoundtripReport {
        injected,
        recovered,
        excluded_sizes,
        max_rel_error,
        warnings: derivation.warnings,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn basic_config(cpu_hz: f64, base: f64) -> SimConfig {
        SimConfig::new("sim", cpu_hz, CostFn::constant(base))
    }

    #[test]
    fn throughput_inverts_the_rate_equation() {
        let (pps, flag) = simulate_throughput(&basic_config(1e9, 100.0), 64, 0.0).unwrap();
        assert_eq!(pps, 1.0e7);
        assert_eq!(flag, BoundFlag::CpuBound);
    }

    #[test]
    fn throughput_caps_at_line_rate() {
        let config = basic_config(1e9, 5.0)
            .with_line_rate(LineRate::ConstantPps { pps: 5.0e7 });
        let (pps, flag) = simulate_throughput(&config, 64, 5.0).unwrap();
        assert_eq!(pps, 5.0e7);
        assert_eq!(flag, BoundFlag::LineRateBound);
    }

    #[test]
    fn throughput_crc_arm_magnitude() {
        // 1.8e9 / (400 + 823) cycles, computed independently.
        let (pps, flag) = simulate_throughput(&basic_config(1.8e9, 400.0), 64, 823.0).unwrap();
        assert!((pps - 1471790.6786590351).abs() < 1e-6, "got {pps}");
        assert_eq!(flag, BoundFlag::CpuBound);
    }

    #[test]
    fn config_validation() {
        assert!(Simulator::new(basic_config(0.0, 100.0)).is_err());
        assert!(Simulator::new(basic_config(1e9, 100.0).with_noise(-0.1, 0)).is_err());
        let mut sim = Simulator::new(basic_config(1e9, 0.0)).unwrap();
        assert!(matches!(
            sim.throughput(64, 0.0),
            Err(SimError::NonPositiveBaseCost { .. })
        ));
        let mut sim = Simulator::new(basic_config(1e9, 10.0)).unwrap();
        assert!(matches!(
            sim.throughput(64, -1.0),
            Err(SimError::NegativeOpCost { .. })
        ));
    }

    #[test]
    fn protocol_noiseless_repeats_are_identical() {
        let config = basic_config(1e9, 100.0);
        let (baseline, sut) =
            run_protocol(&config, "op", &CostFn::constant(50.0), &[64, 128], 5).unwrap();
        assert_eq!(baseline.len(), 10);
        assert_eq!(sut.len(), 10);
        for chunk in baseline.chunks(5).chain(sut.chunks(5)) {
            for rec in chunk {
                assert_eq!(rec.throughput_pps, chunk[0].throughput_pps);
            }
        }
    }

    #[test]
    fn protocol_same_seed_is_byte_identical() {
        let config = basic_config(1e9, 100.0).with_noise(0.05, 42);
        let op = CostFn::power_law(2.0, 1.3);
        let a = run_protocol(&config, "op", &op, &[64, 128, 256], 3).unwrap();
        let b = run_protocol(&config, "op", &op, &[64, 128, 256], 3).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );

        let other_seed = basic_config(1e9, 100.0).with_noise(0.05, 43);
        let c = run_protocol(&other_seed, "op", &op, &[64, 128, 256], 3).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn protocol_rejects_degenerate_inputs() {
        let config = basic_config(1e9, 100.0);
        let op = CostFn::constant(1.0);
        assert!(matches!(
            run_protocol(&config, "op", &op, &[], 1),
            Err(SimError::EmptySizes)
        ));
        assert!(matches!(
            run_protocol(&config, "op", &op, &[64], 0),
            Err(SimError::ZeroRuns)
        ));
        assert!(matches!(
            run_protocol(&config, "baseline", &op, &[64], 1),
            Err(SimError::ReservedOperator)
        ));
    }

    #[test]
    fn roundtrip_recovers_injected_power_law() {
        let config = basic_config(1.8e9, 400.0);
        let report = end_to_end_roundtrip(
            &config,
            "op",
            &CostFn::power_law(2.0, 1.37),
            &[64, 128, 256],
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-9);
        assert!(report.excluded_sizes.is_empty());
        match report.fit {
            FitOutcome::Fitted { delta_k, .. } => {
                assert!(delta_k.unwrap().abs() < 1e-6);
            }
            other => panic!("expected fit, got {other:?}"),
        }
    }

    #[test]
    fn roundtrip_zero_cost_operator_is_degenerate_not_failed() {
        let config = basic_config(1e9, 100.0);
        let report =
            end_to_end_roundtrip(&config, "noop", &CostFn::constant(0.0), &[64, 128, 256])
                .unwrap();
        assert!(report.recovered.iter().all(|s| s.cost_cycles.abs() < 1e-9));
        assert_eq!(report.fit, FitOutcome::DegenerateNonPositive);
    }

    #[test]
    fn roundtrip_excludes_line_rate_bound_size_and_fits_the_rest() {
        // Baseline cost grows linearly with size, so a constant cap between
        // the 64B and 128B baseline rates binds at 64B only.
        let config: SimConfig = SimConfig::new("sim", 1e9, CostFn::power_law(1.0, 1.0))
            .with_line_rate(LineRate::ConstantPps { pps: 1.0e7 });
        let report = end_to_end_roundtrip(
            &config,
            "op",
            &CostFn::power_law(2.0, 1.3),
            &[64, 128, 256],
        )
        .unwrap();
        assert_eq!(report.excluded_sizes, vec![64]);
        assert_eq!(report.recovered.len(), 2);
        assert!(!report.warnings.is_empty());
        match report.fit {
            FitOutcome::Fitted { curve, .. } => {
                assert!((curve.exponent_k - 1.3).abs() < 1e-9);
                assert!((curve.coefficient_a - 2.0).abs() < 1e-9 * 2.0);
            }
            other => panic!("expected fit on remaining sizes, got {other:?}"),
        }
    }

    #[test]
    fn roundtrip_grid_recovers_within_1e9_relative() {
        // Module invariant: noiseless loop is exact to 1e-9 relative over
        // the full cost grid.
        for &c_base in &[50.0, 400.0, 1000.0] {
            for &c_op in &[0.5, 10.0, 823.0, 12006.0] {
                let config = basic_config(1.8e9, c_base);
                let report = end_to_end_roundtrip(
                    &config,
                    "op",
                    &CostFn::constant(c_op),
                    &[64, 128, 256],
                )
                .unwrap();
                assert!(
                    report.max_rel_error < 1e-9,
                    "C_base={c_base} C_op={c_op} rel={}",
                    report.max_rel_error
                );
            }
        }
    }

    #[test]
    fn noise_is_unbiased_in_log_space() {
        // ln(noisy/true) has zero mean by construction; with n = 10000 the
        // sample mean should sit within 5·σ/√n of zero.
        let sigma = 0.1;
        let n = 10_000;
        let config = basic_config(1e9, 100.0).with_noise(sigma, 7);
        let mut sim = Simulator::new(config).unwrap();
        let truth = 1e9 / 150.0;
        let mut sum = 0.0;
        for _ in 0..n {
            let (pps, _) = sim.throughput(64, 50.0).unwrap();
            sum += (pps / truth).ln();
        }
        let mean = sum / f64::from(n);
        let tol = 5.0 * sigma / f64::from(n).sqrt();
        assert!(mean.abs() < tol, "mean {mean} exceeds {tol}");
    }

    proptest! {
        // Uncapped throughput: strictly decreasing in op cost, strictly
        // increasing in clock rate.
        #[test]
        fn prop_throughput_monotonicity(
            cpu_hz in 1e6f64..1e12,
            base in 1.0f64..1e4,
            cost_a in 0.0f64..1e5,
            cost_b in 0.0f64..1e5,
            hz_scale in 1.01f64..10.0,
        ) {
            prop_assume!((cost_a - cost_b).abs() > 1e-9);
            let config = basic_config(cpu_hz, base);
            let (lo, hi) = if cost_a < cost_b { (cost_a, cost_b) } else { (cost_b, cost_a) };
            let (pps_lo, _) = simulate_throughput(&config, 64, lo).unwrap();
            let (pps_hi, _) = simulate_throughput(&config, 64, hi).unwrap();
            prop_assert!(pps_lo > pps_hi);

            let faster = basic_config(cpu_hz * hz_scale, base);
            let (pps_faster, _) = simulate_throughput(&faster, 64, lo).unwrap();
            prop_assert!(pps_faster > pps_lo);
        }

        // The LineRateBound flag holds exactly when pps equals the cap.
        #[test]
        fn prop_bound_flag_iff_capped(
            cpu_hz in 1e6f64..1e12,
            base in 1.0f64..1e4,
            cap in 1e3f64..1e12,
        ) {
            let config = basic_config(cpu_hz, base)
                .with_line_rate(LineRate::ConstantPps { pps: cap });
            let (pps, flag) = simulate_throughput(&config, 64, 0.0).unwrap();
            prop_assert_eq!(flag == BoundFlag::LineRateBound, pps == cap);
        }
    }
}
