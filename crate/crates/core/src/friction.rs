//! Friction coefficients of a pad pressed by the output port.
//!
//! Suction at the port adds to the normal force, blowing lifts the pad.
//! Coefficients are reported against the dead weight W, so a change in
//! normal force shows up as a change in μ.

use serde::{Deserialize, Serialize};

use crate::coeffs::ModelCoefficients;
use crate::device::Device;
use crate::engine::{evaluate_operating_point, OperatingState};
use crate::error::{Error, Result};
use crate::Scalar;

/// Default suction-acting contact area, m² (1 cm²).
pub const DEFAULT_CONTACT_AREA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FrictionSample<T: Scalar> {
    /// Dead weight W, N.
    pub weight_load: T,
    /// Force at slip onset, N.
    pub f_slip: T,
    /// Mean sliding force, N.
    pub f_mean: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FrictionPrediction<T: Scalar> {
    pub mu_s: T,
    pub mu_k: T,
    /// Effective normal force, N.
    pub n_eff: T,
}

fn check_load<T: Scalar>(w: T) -> Result<()> {
    if w > T::zero() && w.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "weight load must be positive, got {w}"
        )))
    }
}

/// (μ_s, μ_k) = (f_slip/W, f_mean/W).
pub fn coefficients_from_sample<T: Scalar>(s: &FrictionSample<T>) -> Result<(T, T)> {
    check_load(s.weight_load)?;
    if !(s.f_slip >= T::zero() && s.f_mean >= T::zero()) {
        return Err(Error::domain("friction forces must be non-negative"));
    }
    Ok((s.f_slip / s.weight_load, s.f_mean / s.weight_load))
}

/// max(0, W − p_out·a_eff), N. Suction (p_out < 0) presses the pad down.
pub fn effective_normal<T: Scalar>(weight: T, p_out: T, a_eff: T) -> T {
    (weight - p_out * a_eff).max(T::zero())
}

/// Base coefficients scaled by n_eff/W.
pub fn predict_coefficients<T: Scalar>(
    mu0_s: T,
    mu0_k: T,
    weight: T,
    p_out: T,
    a_eff: T,
) -> Result<FrictionPrediction<T>> {
    check_load(weight)?;
    if !(mu0_s > T::zero() && mu0_k > T::zero()) {
        return Err(Error::domain("base friction coefficients must be positive"));
    }
    if !(a_eff > T::zero()) {
        return Err(Error::domain("contact area must be positive"));
    }
    let n_eff = effective_normal(weight, p_out, a_eff);
    let factor = n_eff / weight;
    Ok(FrictionPrediction {
        mu_s: mu0_s * factor,
        mu_k: mu0_k * factor,
        n_eff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FrictionPoint<T: Scalar> {
    pub state: OperatingState<T>,
    pub prediction: FrictionPrediction<T>,
}

/// Solves the device at each supply flow (m³/s) and predicts the friction
/// coefficients there.
#[allow(clippy::too_many_arguments)]
pub fn friction_curve<T: Scalar>(
    device: &Device<T>,
    coeffs: &ModelCoefficients<T>,
    mu0_s: T,
    mu0_k: T,
    weight: T,
    a_eff: T,
    q_list: &[T],
) -> Result<Vec<FrictionPoint<T>>> {
    if q_list.is_empty() {
        return Err(Error::domain("at least one flow rate is required"));
    }
    device.validate()?;
    coeffs.validate()?;
    q_list
        .iter()
        .map(|&q| {
            let state = evaluate_operating_point(q, device, coeffs)?;
            let prediction = predict_coefficients(mu0_s, mu0_k, weight, state.p_out, a_eff)?;
            Ok(FrictionPoint { state, prediction })
        })
        .collect()
}
