//! Flap-gate compliance: chamber pressure to gate opening area.

use serde::{Deserialize, Serialize};

use crate::coeffs::ModelCoefficients;
use crate::device::{shore_to_modulus, DeviceGeometry, FlapGateGeometry, Material};
use crate::error::{Error, Result};
use crate::units::mm_to_m;
use crate::Scalar;

/// Gate height at which the saturated opening equals the exhaust
/// cross-section, m (2 mm, the nominal height).
pub const REFERENCE_GATE_HEIGHT_MM: f64 = 2.0;

/// Stiffness proxy D = E·t³·h/w, N·m.
pub fn gate_stiffness<T: Scalar>(geom: &FlapGateGeometry<T>, mat: &Material<T>) -> T {
    mat.youngs_modulus * geom.t.powi(3) * geom.h / geom.w
}

/// Stiffness of the nominal gate (Shore A 10, w 8 mm, t 0.5 mm, h 2 mm).
pub fn reference_stiffness<T: Scalar>() -> T {
    let geom = FlapGateGeometry {
        w: mm_to_m(T::lit(8.0)),
        t: mm_to_m(T::lit(0.5)),
        h: mm_to_m(T::lit(2.0)),
    };
    let mat = Material {
        shore_a: T::lit(10.0),
        youngs_modulus: shore_to_modulus(T::lit(10.0)).expect("hardness 10 in range"),
    };
    gate_stiffness(&geom, &mat)
}

/// Saturated opening area. Lower gates leave a taller free passage, so the
/// limit scales as 1/h and equals the exhaust area at the nominal height.
pub fn saturation_area<T: Scalar>(g: &DeviceGeometry<T>) -> T {
    g.a_ex * mm_to_m(T::lit(REFERENCE_GATE_HEIGHT_MM)) / g.gate.h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GateComplianceModel<T: Scalar> {
    /// Compliance of the reference gate, m²/Pa.
    pub compliance_scale: T,
    /// Pa.
    pub crack_pressure: T,
    /// m².
    pub a_fg_max: T,
    /// Stiffness the compliance scale refers to, N·m.
    pub reference_stiffness: T,
}

impl<T: Scalar> GateComplianceModel<T> {
    pub fn new(compliance_scale: T, crack_pressure: T, a_fg_max: T) -> Result<Self> {
        let model = Self {
            compliance_scale,
            crack_pressure,
            a_fg_max,
            reference_stiffness: reference_stiffness(),
        };
        model.check()?;
        Ok(model)
    }

    /// Model for a device under the given coefficients.
    pub fn for_device(coeffs: &ModelCoefficients<T>, g: &DeviceGeometry<T>) -> Self {
        Self {
            compliance_scale: coeffs.k0,
            crack_pressure: coeffs.p_c,
            a_fg_max: saturation_area(g),
            reference_stiffness: reference_stiffness(),
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.compliance_scale > T::zero()) {
            return Err(Error::domain("gate compliance scale must be positive"));
        }
        if !(self.crack_pressure >= T::zero()) {
            return Err(Error::domain("crack pressure must be non-negative"));
        }
        if !(self.a_fg_max > T::zero()) {
            return Err(Error::domain("saturation opening must be positive"));
        }
        if !(self.reference_stiffness > T::zero()) {
            return Err(Error::domain("reference stiffness must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GateState<T: Scalar> {
    /// m².
    pub a_fg: T,
    /// a_fg / a_fg_max.
    pub open_fraction: T,
    /// m².
    pub a_fg_max: T,
}

impl<T: Scalar> GateState<T> {
    pub fn closed(a_fg_max: T) -> Self {
        Self {
            a_fg: T::zero(),
            open_fraction: T::zero(),
            a_fg_max,
        }
    }

    /// State for a given opening, clamped into [0, a_fg_max].
    pub fn from_area(a_fg: T, a_fg_max: T) -> Self {
        let a_fg = a_fg.max(T::zero()).min(a_fg_max);
        Self {
            a_fg,
            open_fraction: a_fg / a_fg_max,
            a_fg_max,
        }
    }
}

/// Opening area at chamber pressure `p` (Pa):
/// a_fg = min(a_fg_max, k0·(D_ref/D)·max(0, p − p_c)).
///
/// Negative pressures are treated as zero.
pub fn opening_area<T: Scalar>(
    p: T,
    model: &GateComplianceModel<T>,
    geom: &FlapGateGeometry<T>,
    mat: &Material<T>,
) -> GateState<T> {
    let compliance = model.compliance_scale * model.reference_stiffness / gate_stiffness(geom, mat);
    let excess = (p - model.crack_pressure).max(T::zero());
    GateState::from_area(compliance * excess, model.a_fg_max)
}

pub fn opening_ratio<T: Scalar>(a_fg: T, a_ex: T) -> T {
    a_fg / a_ex
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{table1_device, TableType};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model_for(kind: TableType) -> (GateComplianceModel<f64>, crate::device::Device<f64>) {
        let d = table1_device::<f64>(kind);
        let m = GateComplianceModel::for_device(&ModelCoefficients::default(), &d.geometry);
        (m, d)
    }

    #[test]
    fn doubling_thickness_multiplies_stiffness_by_eight() {
        let d = table1_device::<f64>(TableType::B);
        let mut thick = d.geometry.gate;
        thick.t *= 2.0;
        let ratio =
            gate_stiffness(&thick, &d.material) / gate_stiffness(&d.geometry.gate, &d.material);
        assert_relative_eq!(ratio, 8.0, max_relative = 1e-14);
    }

    #[test]
    fn narrow_gate_is_stiffer() {
        let a = table1_device::<f64>(TableType::A);
        let c = table1_device::<f64>(TableType::C);
        assert!(
            gate_stiffness(&a.geometry.gate, &a.material)
                > gate_stiffness(&c.geometry.gate, &c.material)
        );
    }

    #[test]
    fn stiffness_reference_value() {
        // 0.574e6 · (0.5e-3)³ · 2e-3 / 8e-3 = 1.79375e-5
        let geom = FlapGateGeometry {
            w: 8e-3,
            t: 0.5e-3,
            h: 2e-3,
        };
        let mat = Material::with_modulus(10.0, 0.574e6).unwrap();
        assert_relative_eq!(
            gate_stiffness(&geom, &mat),
            1.79375e-5,
            max_relative = 1e-12
        );
        let b = table1_device::<f64>(TableType::B);
        assert_relative_eq!(
            reference_stiffness::<f64>(),
            gate_stiffness(&b.geometry.gate, &b.material),
            max_relative = 1e-15
        );
    }

    #[test]
    fn closed_at_rest() {
        let (m, d) = model_for(TableType::B);
        let s = opening_area(0.0, &m, &d.geometry.gate, &d.material);
        assert_eq!(s.a_fg, 0.0);
        assert_eq!(s.open_fraction, 0.0);
    }

    #[test]
    fn linear_regime_value() {
        let (_, d) = model_for(TableType::B);
        let m = GateComplianceModel::new(1e-10, 5_000.0, 1.0).unwrap();
        let s = opening_area(25_000.0, &m, &d.geometry.gate, &d.material);
        assert_relative_eq!(s.a_fg, 2.0e-6, max_relative = 1e-12);
    }

    #[test]
    fn opens_further_with_reference_pressures() {
        let (m, d) = model_for(TableType::B);
        let at = |kpa: f64| opening_area(kpa * 1e3, &m, &d.geometry.gate, &d.material).a_fg;
        assert!(at(47.1) >= at(21.1));
        assert!(at(21.1) >= at(5.4));
        assert!(at(47.1) > 0.0);
    }

    #[test]
    fn saturation_equals_exhaust_at_nominal_height() {
        let (m, d) = model_for(TableType::B);
        assert_relative_eq!(m.a_fg_max, d.geometry.a_ex, max_relative = 1e-15);
        let (f, _) = model_for(TableType::F);
        assert!(f.a_fg_max > m.a_fg_max);
    }

    #[test]
    fn ratio() {
        assert_eq!(opening_ratio(0.0, 6e-6), 0.0);
        assert_eq!(opening_ratio(6e-6, 6e-6), 1.0);
        assert_eq!(opening_ratio(3e-6, 6e-6), 0.5);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(GateComplianceModel::new(0.0, 1.0, 1.0).is_err());
        assert!(GateComplianceModel::new(1e-10, -1.0, 1.0).is_err());
        assert!(GateComplianceModel::new(1e-10, 1.0, 0.0).is_err());
    }

    #[test]
    fn monotone_in_pressure_for_every_type() {
        for kind in TableType::ALL {
            let (m, d) = model_for(kind);
            let mut last = 0.0;
            for i in 0..500 {
                let p = 60_000.0 * i as f64 / 499.0;
                let a = opening_area(p, &m, &d.geometry.gate, &d.material).a_fg;
                assert!(a >= last, "{kind} at {p}");
                last = a;
            }
        }
    }

    proptest! {
        #[test]
        fn stiffer_gate_opens_less(p in 0.0f64..8e4, dt in 1e-5f64..3e-4, ds in 0.5f64..40.0) {
            let (m, d) = model_for(TableType::B);
            let mut thick = d.geometry.gate;
            thick.t += dt;
            let hard = Material::from_shore(10.0 + ds).unwrap();
            let base = opening_area(p, &m, &d.geometry.gate, &d.material).a_fg;
            prop_assert!(opening_area(p, &m, &thick, &d.material).a_fg <= base);
            prop_assert!(opening_area(p, &m, &d.geometry.gate, &hard).a_fg <= base);
        }

        #[test]
        fn wider_gate_opens_more(p in 0.0f64..8e4, dw in 1e-5f64..4e-3) {
            let (m, d) = model_for(TableType::B);
            let mut wide = d.geometry.gate;
            wide.w += dw;
            prop_assert!(
                opening_area(p, &m, &wide, &d.material).a_fg
                    >= opening_area(p, &m, &d.geometry.gate, &d.material).a_fg
            );
        }

        #[test]
        fn state_stays_in_range(
            p in -1e4f64..1e6,
            k0 in 1e-13f64..1e-8,
            pc in 0.0f64..5e4,
            amax in 1e-8f64..1e-4,
        ) {
            let (_, d) = model_for(TableType::B);
            let m = GateComplianceModel::new(k0, pc, amax).unwrap();
            let s = opening_area(p, &m, &d.geometry.gate, &d.material);
            prop_assert!(s.a_fg >= 0.0 && s.a_fg <= amax);
            prop_assert!((0.0..=1.0).contains(&s.open_fraction));
        }
    }
}
