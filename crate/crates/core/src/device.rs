//! Fluid properties, elastomer material, device geometry and the catalogue
//! device family.
//!
//! Everything here is in SI units. Devices are plain values: once built they
//! are never mutated, so they can be shared freely between sweep workers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{mm2_to_m2, mm_to_m};
use crate::Scalar;

/// Air properties on both sides of the input bifurcation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FluidProperties<T: Scalar> {
    /// Density at the input port, kg/m³.
    pub rho_in: T,
    /// Density downstream of the bifurcation, kg/m³.
    pub rho: T,
    /// Ratio of specific heats.
    pub gamma: T,
}

impl<T: Scalar> FluidProperties<T> {
    pub fn new(rho_in: T, rho: T, gamma: T) -> Result<Self> {
        let fluid = Self { rho_in, rho, gamma };
        fluid.check()?;
        Ok(fluid)
    }

    /// Dry air at 20 °C.
    pub fn air() -> Self {
        Self {
            rho_in: T::lit(1.204),
            rho: T::lit(1.204),
            gamma: T::lit(1.4),
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.rho_in > T::zero() && self.rho > T::zero()) {
            return Err(Error::domain("air densities must be positive"));
        }
        if !(self.gamma > T::one()) {
            return Err(Error::domain("specific heat ratio must exceed 1"));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for FluidProperties<T> {
    fn default() -> Self {
        Self::air()
    }
}

/// Gent's estimate of Young's modulus from Shore A hardness, in Pa.
///
/// E = 0.0981 (56 + 7.66 S) / (0.137505 (254 − 2.54 S)) MPa, defined for
/// 0 < S < 100 and strictly increasing there.
pub fn shore_to_modulus<T: Scalar>(shore_a: T) -> Result<T> {
    if !(shore_a > T::zero() && shore_a < T::lit(100.0)) {
        return Err(Error::domain(format!(
            "Shore A hardness must lie in (0, 100), got {shore_a}"
        )));
    }
    let numerator = T::lit(0.0981) * (T::lit(56.0) + T::lit(7.66) * shore_a);
    let denominator = T::lit(0.137505) * (T::lit(254.0) - T::lit(2.54) * shore_a);
    Ok(numerator / denominator * T::lit(1e6))
}

/// Silicone body material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Material<T: Scalar> {
    pub shore_a: T,
    /// Pa.
    pub youngs_modulus: T,
}

impl<T: Scalar> Material<T> {
    /// Material whose modulus follows from its hardness.
    pub fn from_shore(shore_a: T) -> Result<Self> {
        Ok(Self {
            shore_a,
            youngs_modulus: shore_to_modulus(shore_a)?,
        })
    }

    /// Material with an explicitly measured modulus.
    pub fn with_modulus(shore_a: T, youngs_modulus: T) -> Result<Self> {
        if !(shore_a > T::zero() && shore_a < T::lit(100.0)) {
            return Err(Error::domain("Shore A hardness must lie in (0, 100)"));
        }
        if !(youngs_modulus > T::zero()) {
            return Err(Error::domain("Young's modulus must be positive"));
        }
        Ok(Self {
            shore_a,
            youngs_modulus,
        })
    }
}

/// Flap-gate wall dimensions, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FlapGateGeometry<T: Scalar> {
    /// Width, equal to the airflow channel width.
    pub w: T,
    /// Wall thickness.
    pub t: T,
    /// Wall height.
    pub h: T,
}

/// Cross-sections and gate dimensions of one device, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DeviceGeometry<T: Scalar> {
    /// Input port cross-section, m².
    pub a_in: T,
    /// Cross-section of each channel after the input bifurcation, m².
    pub a_branch: T,
    /// Exit cross-section of one nozzle, m².
    pub a_ne: T,
    pub n_nozzles: usize,
    /// Exhaust port cross-section, m².
    pub a_ex: T,
    /// Output (suction/blowing) port cross-section, m².
    pub a_out: T,
    pub gate: FlapGateGeometry<T>,
    /// Channel width below which the jet develops without recirculation, m.
    pub channel_width_ref: T,
    /// Whether the device claims the `a_in = 2 a_branch` design rule.
    pub design_rule: bool,
}

/// Defaults for dimensions the catalogue does not vary.
pub mod defaults {
    /// mm²
    pub const A_IN_MM2: f64 = 4.0;
    /// mm²
    pub const A_BRANCH_MM2: f64 = 2.0;
    /// mm²
    pub const A_EX_MM2: f64 = 6.0;
    /// mm²
    pub const A_OUT_MM2: f64 = 6.0;
    pub const N_NOZZLES: usize = 2;
    /// mm. Narrowest channel of the family (Type A), which shows no
    /// recirculation in the dye observations.
    pub const CHANNEL_WIDTH_REF_MM: f64 = 6.0;
}

/// A geometry invariant that does not hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every geometry invariant, returning all violations found.
pub fn validate_geometry<T: Scalar>(g: &DeviceGeometry<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut positive = |field: &'static str, v: T| {
        if !(v > T::zero() && v.is_finite()) {
            out.push(Violation {
                field,
                message: format!("must be positive and finite, got {v}"),
            });
        }
    };
    positive("a_in", g.a_in);
    positive("a_branch", g.a_branch);
    positive("a_ne", g.a_ne);
    positive("a_ex", g.a_ex);
    positive("a_out", g.a_out);
    positive("channel_width_ref", g.channel_width_ref);
    positive("w", g.gate.w);
    positive("t", g.gate.t);
    positive("h", g.gate.h);

    if g.n_nozzles == 0 {
        out.push(Violation {
            field: "n_nozzles",
            message: "at least one nozzle is required".into(),
        });
    }
    let gate = &g.gate;
    if gate.t > T::zero() && gate.w > T::zero() && gate.t >= gate.w {
        out.push(Violation {
            field: "t",
            message: "gate thickness must be smaller than its width".into(),
        });
    }
    if gate.t > T::zero() && gate.h > T::zero() && gate.t >= gate.h {
        out.push(Violation {
            field: "t",
            message: "gate thickness must be smaller than its height".into(),
        });
    }
    if g.design_rule && g.a_in > T::zero() && g.a_branch > T::zero() {
        let target = T::lit(2.0) * g.a_branch;
        if ((g.a_in - target) / target).abs() > T::lit(1e-12) {
            out.push(Violation {
                field: "a_in",
                message: format!(
                    "design rule A_in = 2A violated: a_in = {}, 2 a_branch = {}",
                    g.a_in, target
                ),
            });
        }
    }
    out
}

/// Rows of the design catalogue. Type B is nominal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableType {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    J,
    K,
}

impl TableType {
    pub const ALL: [TableType; 11] = [
        TableType::A,
        TableType::B,
        TableType::C,
        TableType::D,
        TableType::E,
        TableType::F,
        TableType::G,
        TableType::H,
        TableType::I,
        TableType::J,
        TableType::K,
    ];

    pub fn letter(self) -> char {
        match self {
            TableType::A => 'A',
            TableType::B => 'B',
            TableType::C => 'C',
            TableType::D => 'D',
            TableType::E => 'E',
            TableType::F => 'F',
            TableType::G => 'G',
            TableType::H => 'H',
            TableType::I => 'I',
            TableType::J => 'J',
            TableType::K => 'K',
        }
    }

    /// (Shore A, A_ne mm², w mm, t mm, h mm)
    fn row(self) -> (f64, f64, f64, f64, f64) {
        match self {
            TableType::A => (10.0, 0.4, 6.0, 0.5, 2.0),
            TableType::B => (10.0, 0.4, 8.0, 0.5, 2.0),
            TableType::C => (10.0, 0.4, 10.0, 0.5, 2.0),
            TableType::D => (10.0, 0.4, 8.0, 0.4, 2.0),
            TableType::E => (10.0, 0.4, 8.0, 0.6, 2.0),
            TableType::F => (10.0, 0.4, 8.0, 0.5, 1.8),
            TableType::G => (10.0, 0.4, 8.0, 0.5, 1.9),
            TableType::H => (10.0, 0.32, 8.0, 0.5, 2.0),
            TableType::I => (10.0, 0.48, 8.0, 0.5, 2.0),
            TableType::J => (20.0, 0.4, 8.0, 0.5, 2.0),
            TableType::K => (30.0, 0.4, 8.0, 0.5, 2.0),
        }
    }
}

impl fmt::Display for TableType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for TableType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let mut chars = trimmed.chars();
        match (chars.next().map(|c| c.to_ascii_uppercase()), chars.next()) {
            (Some(c), None) => TableType::ALL
                .into_iter()
                .find(|t| t.letter() == c)
                .ok_or_else(|| unknown_type(trimmed)),
            _ => Err(unknown_type(trimmed)),
        }
    }
}

fn unknown_type(s: &str) -> Error {
    Error::domain(format!(
        "unknown device type {s:?}; valid types are A, B, C, D, E, F, G, H, I, J, K"
    ))
}

/// A complete device: geometry, body material and working fluid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Device<T: Scalar> {
    pub label: String,
    pub geometry: DeviceGeometry<T>,
    pub material: Material<T>,
    pub fluid: FluidProperties<T>,
}

impl<T: Scalar> Device<T> {
    pub fn table(kind: TableType) -> Self {
        table1_device(kind)
    }

    pub fn nominal() -> Self {
        table1_device(TableType::B)
    }

    /// Same device with different gate dimensions and nozzle area.
    pub fn with_design(&self, w: T, t: T, h: T, a_ne: T) -> Self {
        let mut out = self.clone();
        out.geometry.gate = FlapGateGeometry { w, t, h };
        out.geometry.a_ne = a_ne;
        out
    }

    pub fn validate(&self) -> Result<()> {
        let violations = validate_geometry(&self.geometry);
        if !violations.is_empty() {
            let joined: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(Error::domain(joined.join("; ")));
        }
        self.fluid.check()
    }
}

/// Parameters of one catalogue row; dimensions the catalogue does not
/// list come from [`defaults`].
pub fn table1_device<T: Scalar>(kind: TableType) -> Device<T> {
    let (shore, a_ne, w, t, h) = kind.row();
    let material = Material::from_shore(T::lit(shore)).expect("table hardness in range");
    let geometry = DeviceGeometry {
        a_in: mm2_to_m2(T::lit(defaults::A_IN_MM2)),
        a_branch: mm2_to_m2(T::lit(defaults::A_BRANCH_MM2)),
        a_ne: mm2_to_m2(T::lit(a_ne)),
        n_nozzles: defaults::N_NOZZLES,
        a_ex: mm2_to_m2(T::lit(defaults::A_EX_MM2)),
        a_out: mm2_to_m2(T::lit(defaults::A_OUT_MM2)),
        gate: FlapGateGeometry {
            w: mm_to_m(T::lit(w)),
            t: mm_to_m(T::lit(t)),
            h: mm_to_m(T::lit(h)),
        },
        channel_width_ref: mm_to_m(T::lit(defaults::CHANNEL_WIDTH_REF_MM)),
        design_rule: true,
    };
    Device {
        label: format!("Type {kind}"),
        geometry,
        material,
        fluid: FluidProperties::air(),
    }
}

/// Parses a catalogue letter (case-insensitive).
pub fn table1_by_letter<T: Scalar>(letter: &str) -> Result<Device<T>> {
    Ok(table1_device(letter.parse()?))
}
