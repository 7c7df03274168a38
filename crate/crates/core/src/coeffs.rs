//! Calibratable closure constants shared by the flow, gate and ejector models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Least-squares fit of `p_in = c1 q + c2 q²` to the six reference
/// pressure/flow points, Pa/(m³/s).
pub const DEFAULT_C1: f64 = 79_528_125.0;
/// See [`DEFAULT_C1`]; Pa/(m³/s)².
pub const DEFAULT_C2: f64 = 35_758_928_571.428_57;

/// Closure constants of the lumped model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct ModelCoefficients<T: Scalar> {
    /// Fraction of the nozzle jet's dynamic pressure recovered as suction, (0, 1].
    pub eta: T,
    /// Strength of the recirculation penalty for wide channels, ≥ 0.
    pub c_recirc: T,
    /// Output-port discharge coefficient, (0, 1].
    pub cd_out: T,
    /// Flap-gate discharge coefficient, (0, 1].
    pub cd_gate: T,
    /// Discharge coefficient of nozzles and internal channels, (0, 1].
    pub cd_internal: T,
    /// Closed-gate leak area as a fraction of the exhaust cross-section, [0, 1).
    pub leak_fraction: T,
    /// Reference gate compliance, m²/Pa.
    pub k0: T,
    /// Crack pressure below which the gate stays shut, Pa.
    pub p_c: T,
    /// Linear input-pressure coefficient, Pa/(m³/s).
    pub c1: T,
    /// Quadratic input-pressure coefficient, Pa/(m³/s)².
    pub c2: T,
}

impl<T: Scalar> Default for ModelCoefficients<T> {
    fn default() -> Self {
        Self {
            eta: T::lit(0.1),
            c_recirc: T::lit(4.0),
            cd_out: T::lit(0.8),
            cd_gate: T::lit(0.8),
            cd_internal: T::lit(0.8),
            leak_fraction: T::lit(0.02),
            k0: T::lit(1.4e-10),
            p_c: T::lit(8_000.0),
            c1: T::lit(DEFAULT_C1),
            c2: T::lit(DEFAULT_C2),
        }
    }
}

impl<T: Scalar> ModelCoefficients<T> {
    /// Same coefficients with the recirculation penalty switched off.
    pub fn without_recirculation(mut self) -> Self {
        self.c_recirc = T::zero();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: T| -> Result<()> {
            if v > T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        let nonneg = |name: &str, v: T| -> Result<()> {
            if v >= T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "{name} must be finite and ≥ 0, got {v}"
                )))
            }
        };
        unit("eta", self.eta)?;
        unit("cd_out", self.cd_out)?;
        unit("cd_gate", self.cd_gate)?;
        unit("cd_internal", self.cd_internal)?;
        nonneg("c_recirc", self.c_recirc)?;
        nonneg("p_c", self.p_c)?;
        nonneg("c1", self.c1)?;
        nonneg("c2", self.c2)?;
        if !(self.leak_fraction >= T::zero() && self.leak_fraction < T::one()) {
            return Err(Error::domain(format!(
                "leak_fraction must lie in [0, 1), got {}",
                self.leak_fraction
            )));
        }
        if !(self.k0 > T::zero() && self.k0.is_finite()) {
            return Err(Error::domain(format!(
                "k0 must be positive, got {}",
                self.k0
            )));
        }
        Ok(())
    }
}
