//! Operating points, flow sweeps, design comparison and geometry search.

mod design;
mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coeffs::ModelCoefficients;
use crate::device::Device;
use crate::ejector::output_breakdown;
use crate::error::{Error, Result};
use crate::flow::{
    assemble_network, bifurcation_pressure, input_pressure, solve_steady, solve_steady_from,
    DeviceNodes, Network, NetworkSolution, SolverOptions,
};
use crate::gate::{opening_area, GateComplianceModel};
use crate::Scalar;

pub use design::{
    compare_designs, compare_devices, optimize_geometry, ordering_checks, Comparison,
    ComparisonRow, DesignBounds, DesignPoint, Objective, OptimizeOptions, OptimizeResult,
    OrderingCheck,
};
pub use sweep::{
    sweep, sweep_model, sweep_with, workers_from_env, DeviceModel, FnModel, OperatingModel,
    SweepOptions, SweepResult,
};

/// |p_out| at or below this is reported as neutral, Pa.
pub const MODE_DEADBAND: f64 = 1.0;

/// Fixed-point iterations allowed in [`solve_operating_point`].
pub const MAX_FIXED_POINT_ITERATIONS: usize = 100;

/// Successive gate openings closer than this end the fixed point, m².
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Blowing,
    Suction,
    Neutral,
}

impl Mode {
    pub fn classify<T: Scalar>(p_out: T) -> Self {
        let band = T::lit(MODE_DEADBAND);
        if p_out > band {
            Mode::Blowing
        } else if p_out < -band {
            Mode::Suction
        } else {
            Mode::Neutral
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Blowing => "blowing",
            Mode::Suction => "suction",
            Mode::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blowing" => Ok(Mode::Blowing),
            "suction" => Ok(Mode::Suction),
            "neutral" => Ok(Mode::Neutral),
            other => Err(Error::domain(format!("unknown mode {other:?}"))),
        }
    }
}

/// Steady state of the device at one supply flow. SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OperatingState<T: Scalar> {
    /// m³/s.
    pub q_in: T,
    /// Pa.
    pub p_in: T,
    /// Pa.
    pub p_chamber: T,
    /// m².
    pub a_fg: T,
    /// m².
    pub a_fg_max: T,
    /// a_fg / a_ex.
    pub a_fg_over_a_ex: T,
    /// Pa, positive = blowing.
    pub p_out: T,
    pub mode: Mode,
    /// Nozzle jet faster than sound; the closure is being used outside its
    /// range.
    pub supersonic: bool,
}

/// An operating point together with the internal network it was solved on.
#[derive(Debug, Clone)]
pub struct OperatingPoint<T: Scalar> {
    pub state: OperatingState<T>,
    pub network: Network<T>,
    pub nodes: DeviceNodes,
    pub solution: NetworkSolution<T>,
    pub iterations: usize,
}

fn check_flow<T: Scalar>(q_in: T) -> Result<()> {
    if q_in >= T::zero() && q_in.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "supply flow must be finite and ≥ 0, got {q_in}"
        )))
    }
}

fn state_from_opening<T: Scalar>(
    q_in: T,
    p_in: T,
    p_chamber: T,
    a_fg: T,
    device: &Device<T>,
    coeffs: &ModelCoefficients<T>,
) -> OperatingState<T> {
    let g = &device.geometry;
    let gate_model = GateComplianceModel::for_device(coeffs, g);
    let gate = crate::gate::GateState::from_area(a_fg, gate_model.a_fg_max);
    let out = output_breakdown(q_in, &gate, g, &device.fluid, coeffs);
    OperatingState {
        q_in,
        p_in,
        p_chamber,
        a_fg: gate.a_fg,
        a_fg_max: gate.a_fg_max,
        a_fg_over_a_ex: gate.a_fg / g.a_ex,
        p_out: out.p_out,
        mode: Mode::classify(out.p_out),
        supersonic: out.supersonic,
    }
}

fn chamber_state<T: Scalar>(
    q_in: T,
    device: &Device<T>,
    coeffs: &ModelCoefficients<T>,
) -> (T, T, T) {
    let g = &device.geometry;
    let p_in = input_pressure(q_in, coeffs);
    let p_chamber = bifurcation_pressure(q_in, p_in, &device.fluid, g);
    let gate_model = GateComplianceModel::for_device(coeffs, g);
    let a_fg = opening_area(p_chamber, &gate_model, &g.gate, &device.material).a_fg;
    (p_in, p_chamber, a_fg)
}

/// Operating point without the internal network.
///
/// The chamber pressure follows from the input law and the bifurcation
/// relation alone, so the gate opening and output pressure do not depend on
/// how flow divides inside the device. This gives the same state as
/// [`solve_operating_point`] at a fraction of the cost and is what sweeps,
/// fits and the optimizer use.
pub fn evaluate_operating_point<T: Scalar>(
    q_in: T,
    device: &Device<T>,
    coeffs: &ModelCoefficients<T>,
) -> Result<OperatingState<T>> {
    check_flow(q_in)?;
    let (p_in, p_chamber, a_fg) = chamber_state(q_in, device, coeffs);
    Ok(state_from_opening(
        q_in, p_in, p_chamber, a_fg, device, coeffs,
    ))
}

/// Coupled solve: gate opening from chamber pressure, internal network on
/// that opening, repeated until the opening settles.
pub fn solve_operating_point<T: Scalar>(
    q_in: T,
    device: &Device<T>,
    coeffs: &ModelCoefficients<T>,
) -> Result<OperatingState<T>> {
    Ok(solve_operating_point_detailed(q_in, device, coeffs)?.state)
}

pub fn solve_operating_point_detailed<T: Scalar>(
    q_in: T,
    device: &Device<T>,
    coeffs: &ModelCoefficients<T>,
) -> Result<OperatingPoint<T>> {
    check_flow(q_in)?;
    device.validate()?;
    coeffs.validate()?;
    let g = &device.geometry;
    let gate_model = GateComplianceModel::for_device(coeffs, g);
    let tol = T::lit(FIXED_POINT_TOLERANCE);

    let p_in = input_pressure(q_in, coeffs);
    let p_chamber = bifurcation_pressure(q_in, p_in, &device.fluid, g);

    let mut a_fg = T::zero();
    let mut previous = T::nan();
    let mut last: Option<(Network<T>, DeviceNodes, NetworkSolution<T>)> = None;
    for iteration in 1..=MAX_FIXED_POINT_ITERATIONS {
        let (network, nodes) = assemble_network(g, &device.fluid, a_fg, coeffs)?;
        let solution = match &last {
            // Warm start from the previous solve's input pressure.
            Some((_, n, s)) => solve_steady_from(
                &network,
                q_in,
                s.pressures[n.input] / T::lit(2.0),
                &SolverOptions::default(),
            )
            .or_else(|_| solve_steady(&network, q_in))?,
            None => solve_steady(&network, q_in)?,
        };
        let next = opening_area(p_chamber, &gate_model, &g.gate, &device.material).a_fg;
        last = Some((network, nodes, solution));
        if (next - a_fg).abs() < tol {
            let (network, nodes, solution) = last.expect("set above");
            return Ok(OperatingPoint {
                state: state_from_opening(q_in, p_in, p_chamber, next, device, coeffs),
                network,
                nodes,
                solution,
                iterations: iteration,
            });
        }
        previous = a_fg;
        a_fg = next;
    }
    Err(Error::FixedPointDivergence {
        iterations: MAX_FIXED_POINT_ITERATIONS,
        last: a_fg.to_f64_lossy(),
        previous: previous.to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{table1_device, FluidProperties, TableType};
    use crate::gate::{gate_stiffness, reference_stiffness};
    use crate::units::lpm_to_m3s;
    use approx::assert_relative_eq;

    fn nominal() -> Device<f64> {
        table1_device(TableType::B)
    }

    #[test]
    fn rest_state() {
        let s = solve_operating_point(0.0, &nominal(), &ModelCoefficients::default()).unwrap();
        assert_eq!(s.p_in, 0.0);
        assert_eq!(s.p_chamber, 0.0);
        assert_eq!(s.a_fg, 0.0);
        assert_eq!(s.p_out, 0.0);
        assert_eq!(s.mode, Mode::Neutral);
    }

    #[test]
    fn nominal_blows_then_sucks() {
        let d = nominal();
        let c = ModelCoefficients::default();
        let low = solve_operating_point(lpm_to_m3s(10.0), &d, &c).unwrap();
        let high = solve_operating_point(lpm_to_m3s(30.0), &d, &c).unwrap();
        assert_eq!(low.mode, Mode::Blowing);
        assert_eq!(high.mode, Mode::Suction);
        assert!(high.supersonic);
    }

    #[test]
    fn fast_path_matches_coupled_solve() {
        let d = nominal();
        let c = ModelCoefficients::default();
        for q in [0.0, 3.0, 12.5, 21.0, 30.0] {
            let q = lpm_to_m3s(q);
            assert_eq!(
                evaluate_operating_point(q, &d, &c).unwrap(),
                solve_operating_point(q, &d, &c).unwrap()
            );
        }
    }

    #[test]
    fn settles_in_two_iterations_and_conserves_mass() {
        let d = nominal();
        let c = ModelCoefficients::default();
        let q = lpm_to_m3s(25.0);
        let op = solve_operating_point_detailed(q, &d, &c).unwrap();
        assert!(op.iterations <= 2);
        for r in op.solution.interior_imbalance(&op.network, q) {
            assert!(r.abs() <= 1e-9, "{r}");
        }
    }

    #[test]
    fn closed_form_with_constant_compliance() {
        // p_c = 0, linear input law, unequal densities and a narrowed branch:
        //   p_in = c1 q
        //   p    = (ρ/ρ_in) p_in + K q²,  K = ((γ−1)/2γ) ρ (1 − (A_in/2A)²) / A_in²
        //   a    = k0 (D_ref/D) p
        let mut d = table1_device::<f64>(TableType::E);
        d.fluid = FluidProperties::new(1.25, 1.1, 1.4).unwrap();
        d.geometry.a_branch = 1.8e-6;
        d.geometry.design_rule = false;
        let c = ModelCoefficients {
            p_c: 0.0,
            c1: 1.0e8,
            c2: 0.0,
            k0: 1e-11,
            ..Default::default()
        };
        let q = lpm_to_m3s(4.0);
        let g = &d.geometry;
        let ratio: f64 = g.a_in / (2.0 * g.a_branch);
        let k = 0.4 / 2.8 * 1.1 * (1.0 - ratio * ratio) / (g.a_in * g.a_in);
        let p = 1.1 / 1.25 * 1.0e8 * q + k * q * q;
        let a = 1e-11 * reference_stiffness::<f64>() / gate_stiffness(&g.gate, &d.material) * p;
        let s = solve_operating_point(q, &d, &c).unwrap();
        assert!(a < s.a_fg_max);
        assert_relative_eq!(s.p_chamber, p, max_relative = 1e-9);
        assert_relative_eq!(s.a_fg, a, max_relative = 1e-9);
    }

    #[test]
    fn negative_flow_is_rejected() {
        assert!(solve_operating_point(-1e-5, &nominal(), &ModelCoefficients::default()).is_err());
        assert!(
            evaluate_operating_point(f64::NAN, &nominal(), &ModelCoefficients::default()).is_err()
        );
    }

    #[test]
    fn invalid_device_is_rejected() {
        let mut d = nominal();
        d.geometry.gate.t = 0.0;
        assert!(solve_operating_point(1e-4, &d, &ModelCoefficients::default()).is_err());
    }

    #[test]
    fn every_table_type_converges() {
        let c = ModelCoefficients::default();
        for kind in TableType::ALL {
            let d = table1_device::<f64>(kind);
            for i in 0..=30 {
                let op = solve_operating_point_detailed(lpm_to_m3s(i as f64), &d, &c).unwrap();
                assert!(op.iterations <= MAX_FIXED_POINT_ITERATIONS);
            }
        }
    }

    #[test]
    fn single_precision_agrees() {
        let d64 = nominal();
        let d32 = table1_device::<f32>(TableType::B);
        let s64 =
            solve_operating_point(lpm_to_m3s(30.0), &d64, &ModelCoefficients::default()).unwrap();
        let s32 = solve_operating_point(lpm_to_m3s(30.0f32), &d32, &ModelCoefficients::default())
            .unwrap();
        assert_relative_eq!(s32.p_out as f64, s64.p_out, max_relative = 1e-4);
        assert_eq!(s32.mode, s64.mode);
    }

    #[test]
    fn mode_deadband() {
        assert_eq!(Mode::classify(1.0), Mode::Neutral);
        assert_eq!(Mode::classify(-1.0), Mode::Neutral);
        assert_eq!(Mode::classify(1.5), Mode::Blowing);
        assert_eq!(Mode::classify(-1.5), Mode::Suction);
        assert_eq!("suction".parse::<Mode>().unwrap(), Mode::Suction);
    }
}
