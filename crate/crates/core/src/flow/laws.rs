use crate::coeffs::ModelCoefficients;
use crate::device::{DeviceGeometry, FluidProperties};
use crate::Scalar;

/// Pressure just downstream of the input bifurcation, Pa (gauge).
///
/// Bernoulli plus continuity across the split of the input channel into two
/// branches:
///
/// p = (ρ/ρ_in)·p_in + ((γ−1)/(2γ))·ρ·(q_in/A_in)²·(1 − (A_in/(2A))²)
///
/// With ρ = ρ_in and A_in = 2A the kinetic term vanishes and p = p_in.
pub fn bifurcation_pressure<T: Scalar>(
    q_in: T,
    p_in: T,
    fluid: &FluidProperties<T>,
    g: &DeviceGeometry<T>,
) -> T {
    let two = T::lit(2.0);
    let velocity = q_in / g.a_in;
    let area_ratio = g.a_in / (two * g.a_branch);
    let kinetic = (fluid.gamma - T::one()) / (two * fluid.gamma)
        * fluid.rho
        * velocity
        * velocity
        * (T::one() - area_ratio * area_ratio);
    fluid.rho / fluid.rho_in * p_in + kinetic
}

/// ∂p/∂q_in of [`bifurcation_pressure`] at fixed p_in, Pa/(m³/s).
pub fn bifurcation_pressure_dq<T: Scalar>(
    q_in: T,
    fluid: &FluidProperties<T>,
    g: &DeviceGeometry<T>,
) -> T {
    let two = T::lit(2.0);
    let area_ratio = g.a_in / (two * g.a_branch);
    (fluid.gamma - T::one()) / fluid.gamma * fluid.rho * q_in / (g.a_in * g.a_in)
        * (T::one() - area_ratio * area_ratio)
}

/// Volumetric flow through a sharp-edged restriction, m³/s.
///
/// q = sign(Δp)·C_d·A·√(2|Δp|/ρ). Odd and strictly increasing in Δp.
pub fn orifice_flow<T: Scalar>(dp: T, area: T, cd: T, rho: T) -> T {
    let magnitude = cd * area * (T::lit(2.0) * dp.abs() / rho).sqrt();
    if dp < T::zero() {
        -magnitude
    } else {
        magnitude
    }
}

/// Inverse of [`orifice_flow`]: pressure drop that drives `q`, Pa.
pub fn orifice_pressure_drop<T: Scalar>(q: T, area: T, cd: T, rho: T) -> T {
    let v = q / (cd * area);
    let magnitude = rho / T::lit(2.0) * v * v;
    if q < T::zero() {
        -magnitude
    } else {
        magnitude
    }
}

/// dq/dΔp of [`orifice_flow`], with |Δp| floored at `dp_floor` to keep the
/// derivative finite at zero flow.
pub fn orifice_conductance<T: Scalar>(dp: T, area: T, cd: T, rho: T, dp_floor: T) -> T {
    let dp = dp.abs().max(dp_floor);
    cd * area / (T::lit(2.0) * rho * dp).sqrt()
}

/// Gauge pressure at the input port for a supply flow `q_in`, Pa.
pub fn input_pressure<T: Scalar>(q_in: T, coeffs: &ModelCoefficients<T>) -> T {
    coeffs.c1 * q_in + coeffs.c2 * q_in * q_in
}
