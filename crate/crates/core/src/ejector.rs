//! Output-port pressure: reversed flow while the gate is shut, jet
//! entrainment once it opens.
//!
//! Sign convention: positive p_out is blowing, negative is suction.

use serde::Serialize;

use crate::coeffs::ModelCoefficients;
use crate::device::{DeviceGeometry, FluidProperties};
use crate::gate::GateState;
use crate::Scalar;

/// Speed of sound in air at 20 °C, m/s. Jets faster than this are outside
/// what an incompressible closure can describe and get flagged.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Mean exit velocity of one nozzle, m/s.
pub fn jet_velocity<T: Scalar>(q_in: T, g: &DeviceGeometry<T>) -> T {
    q_in / T::from_usize_lossy(g.n_nozzles) / g.a_ne
}

/// (ρ/2)·v² of the nozzle jet, Pa.
pub fn jet_dynamic_pressure<T: Scalar>(
    q_in: T,
    g: &DeviceGeometry<T>,
    fluid: &FluidProperties<T>,
) -> T {
    let v = jet_velocity(q_in, g);
    fluid.rho / T::lit(2.0) * v * v
}

/// 1 / (1 + c·max(0, (w − w_ref)/w_ref)²), in (0, 1].
pub fn recirculation_penalty<T: Scalar>(w: T, w_ref: T, coeffs: &ModelCoefficients<T>) -> T {
    let excess = ((w - w_ref) / w_ref).max(T::zero());
    T::one() / (T::one() + coeffs.c_recirc * excess * excess)
}

/// Terms of the output closure at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputPressure<T: Scalar> {
    /// Pa, positive = blowing.
    pub p_out: T,
    /// Back-pressure of the reversed flow, Pa.
    pub p_blow: T,
    /// Entrained suction, Pa (magnitude).
    pub p_suck: T,
    /// Opening including the closed-gate leak, as a fraction of saturation.
    pub effective_opening: T,
    /// m/s.
    pub jet_velocity: T,
    pub supersonic: bool,
}

/// Full breakdown of [`output_pressure`].
///
/// The gate never seals completely: its effective opening is
/// max(a_fg, leak_fraction·a_ex). With s that opening over a_fg_max and r
/// that opening over a_ex,
///
/// p_out = (1 − s)·(ρ/2)·((1 − s)·q/(cd_out·a_out))² − s·eta·jet·min(1, r)·penalty(w)
pub fn output_breakdown<T: Scalar>(
    q_in: T,
    gate: &GateState<T>,
    g: &DeviceGeometry<T>,
    fluid: &FluidProperties<T>,
    coeffs: &ModelCoefficients<T>,
) -> OutputPressure<T> {
    let two = T::lit(2.0);
    let opening = gate.a_fg.max(coeffs.leak_fraction * g.a_ex);
    let s = (opening / gate.a_fg_max).min(T::one());
    let r = (opening / g.a_ex).min(T::one());
    let reverse = (T::one() - s) * q_in / (coeffs.cd_out * g.a_out);
    let p_blow = fluid.rho / two * reverse * reverse;
    let p_suck = coeffs.eta
        * jet_dynamic_pressure(q_in, g, fluid)
        * r
        * recirculation_penalty(g.gate.w, g.channel_width_ref, coeffs);
    let v = jet_velocity(q_in, g);
    OutputPressure {
        p_out: (T::one() - s) * p_blow - s * p_suck,
        p_blow,
        p_suck,
        effective_opening: s,
        jet_velocity: v,
        supersonic: v > T::lit(SPEED_OF_SOUND),
    }
}

/// Output-port gauge pressure, Pa (positive = blowing).
pub fn output_pressure<T: Scalar>(
    q_in: T,
    gate: &GateState<T>,
    g: &DeviceGeometry<T>,
    fluid: &FluidProperties<T>,
    coeffs: &ModelCoefficients<T>,
) -> T {
    output_breakdown(q_in, gate, g, fluid, coeffs).p_out
}
