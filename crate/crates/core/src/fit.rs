//! Power-law fitting of cost-vs-size samples.
//!
//! Costs are modeled as `cost(s) = a · s^k`. Taking logs turns this into a
//! line, `ln cost = ln a + k·ln s`, fitted with closed-form ordinary least
//! squares. Three-point sweeps make nonlinear fitting in linear space
//! ill-conditioned, so the log-log route is the only one offered; R² is
//! likewise computed on ln-cost residuals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CostCurve, CostSample};
use crate::scalar::{from_f64, to_f64, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum FitError {
    #[error("power-law fit needs at least 2 samples, got {got}")]
    InsufficientPoints { got: usize },
    #[error("cost must be positive to fit in log space, got {cost} at {packet_size}B")]
    NonPositiveCost { packet_size: u32, cost: f64 },
    #[error("duplicate packet size {packet_size} in fit input")]
    DuplicateSize { packet_size: u32 },
    #[error("packet size must be positive")]
    NonPositiveSize,
    #[error("scaling exponent must be finite, got {k}")]
    NonFiniteExponent { k: f64 },
}

/// Scaling behavior by exponent: the boundary sits exactly at k = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingClass {
    /// k > 1: per-packet cost accelerates with size.
    SuperLinear,
    /// k = 1 exactly.
    Linear,
    /// k < 1: per-packet cost decelerates with size.
    SubLinear,
}

/// Fits `cost(s) = a · s^k` by ordinary least squares on `(ln s, ln cost)`.
///
/// `base_cost` is the fitted curve evaluated at the smallest sampled size.
/// A zero-variance response (all costs equal) fits `k = 0` with R² defined
/// as 1.0: the model explains all of the (zero) variance.
pub fn fit_power_law<F: Scalar>(samples: &[CostSample<F>]) -> Result<CostCurve<F>, FitError> {
    if samples.len() < 2 {
        return Err(FitError::InsufficientPoints {
            got: samples.len(),
        });
    }
    let mut seen = Vec::with_capacity(samples.len());
    for sample in samples {
        if sample.packet_size == 0 {
            return Err(FitError::NonPositiveSize);
        }
        if seen.contains(&sample.packet_size) {
            return Err(FitError::DuplicateSize {
                packet_size: sample.packet_size,
            });
        }
        seen.push(sample.packet_size);
        if !(sample.cost_cycles > F::zero()) {
            return Err(FitError::NonPositiveCost {
                packet_size: sample.packet_size,
                cost: to_f64(sample.cost_cycles),
            });
        }
    }

    let n = from_f64::<F>(samples.len() as f64);
    let xs: Vec<F> = samples
        .iter()
        .map(|s| from_f64::<F>(f64::from(s.packet_size)).ln())
        .collect();
    let ys: Vec<F> = samples.iter().map(|s| s.cost_cycles.ln()).collect();

    let x_mean = xs.iter().copied().sum::<F>() / n;
    let y_mean = ys.iter().copied().sum::<F>() / n;

    let mut sxx = F::zero();
    let mut sxy = F::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx = sxx + (x - x_mean) * (x - x_mean);
        sxy = sxy + (x - x_mean) * (y - y_mean);
    }
    // Distinct positive sizes guarantee sxx > 0.
    let k = sxy / sxx;
    let ln_a = y_mean - k * x_mean;
    let a = ln_a.exp();

    let mut ss_res = F::zero();
    let mut ss_tot = F::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        let fitted = ln_a + k * x;
        ss_res = ss_res + (y - fitted) * (y - fitted);
        ss_tot = ss_tot + (y - y_mean) * (y - y_mean);
    }
    let r_squared = if ss_tot == F::zero() {
        F::one()
    } else {
        F::one() - ss_res / ss_tot
    };

    let s_min = samples.iter().map(|s| s.packet_size).min().expect("non-empty");
    let base_cost = a * from_f64::<F>(f64::from(s_min)).powf(k);

    Ok(CostCurve {
        operator: samples[0].operator.clone(),
        coefficient_a: a,
        exponent_k: k,
        r_squared,
        base_cost,
        n_points: samples.len(),
    })
}

/// Evaluates `a · s^k` at a packet size.
pub fn eval_curve<F: Scalar>(curve: &CostCurve<F>, packet_size: u32) -> Result<F, FitError> {
    if packet_size == 0 {
        return Err(FitError::NonPositiveSize);
    }
    Ok(curve.coefficient_a * from_f64::<F>(f64::from(packet_size)).powf(curve.exponent_k))
}

/// Splits exponents at k = 1: strictly above is super-linear, strictly
/// below sub-linear, exactly 1 linear.
pub fn classify_scaling<F: Scalar>(exponent_k: F) -> Result<ScalingClass, FitError> {
    if !exponent_k.is_finite() {
        return Err(FitError::NonFiniteExponent {
            k: to_f64(exponent_k),
        });
    }
    Ok(if exponent_k > F::one() {
        ScalingClass::SuperLinear
    } else if exponent_k == F::one() {
        ScalingClass::Linear
    } else {
        ScalingClass::SubLinear
    })
}
