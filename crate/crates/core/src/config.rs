//! Device and coefficient files.
//!
//! A device file is a JSON object whose keys carry their unit as a suffix
//! (`w_mm`, `a_ne_mm2`, `rho_kg_m3`). Every key is optional; missing values
//! come from `base_type` (a catalogue letter A to K, default `B`).
//!
//! ```json
//! { "base_type": "B", "label": "narrow", "w_mm": 6.5, "shore_a": 15 }
//! ```
//!
//! A coefficient file holds [`ModelCoefficients`] in SI, either bare or as
//! the `coefficients` member of a saved fit report. Missing members take
//! their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coeffs::ModelCoefficients;
use crate::device::{table1_device, Device, Material, TableType};
use crate::error::{Error, Result};
use crate::units::{mm2_to_m2, mm_to_m};
use crate::Scalar;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub base_type: Option<String>,
    pub label: Option<String>,
    pub shore_a: Option<f64>,
    /// Overrides the modulus derived from `shore_a`.
    pub youngs_modulus_mpa: Option<f64>,
    pub a_in_mm2: Option<f64>,
    pub a_branch_mm2: Option<f64>,
    pub a_ne_mm2: Option<f64>,
    pub n_nozzles: Option<usize>,
    pub a_ex_mm2: Option<f64>,
    pub a_out_mm2: Option<f64>,
    pub w_mm: Option<f64>,
    pub t_mm: Option<f64>,
    pub h_mm: Option<f64>,
    pub channel_width_ref_mm: Option<f64>,
    pub design_rule: Option<bool>,
    pub rho_in_kg_m3: Option<f64>,
    pub rho_kg_m3: Option<f64>,
    pub gamma: Option<f64>,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Domain(msg) => Error::Config(msg),
        other => other,
    }
}

impl DeviceConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("device file: {e}")))
    }

    /// Builds and validates the device, converting to SI.
    pub fn to_device<T: Scalar>(&self) -> Result<Device<T>> {
        let kind: TableType = self
            .base_type
            .as_deref()
            .unwrap_or("B")
            .parse()
            .map_err(config_err)?;
        let mut d = table1_device::<T>(kind);
        if let Some(label) = &self.label {
            d.label = label.clone();
        }
        let lit = |v: f64| T::lit(v);
        let g = &mut d.geometry;
        let set_area = |field: &mut T, v: Option<f64>| {
            if let Some(v) = v {
                *field = mm2_to_m2(lit(v));
            }
        };
        set_area(&mut g.a_in, self.a_in_mm2);
        set_area(&mut g.a_branch, self.a_branch_mm2);
        set_area(&mut g.a_ne, self.a_ne_mm2);
        set_area(&mut g.a_ex, self.a_ex_mm2);
        set_area(&mut g.a_out, self.a_out_mm2);
        let set_len = |field: &mut T, v: Option<f64>| {
            if let Some(v) = v {
                *field = mm_to_m(lit(v));
            }
        };
        set_len(&mut g.gate.w, self.w_mm);
        set_len(&mut g.gate.t, self.t_mm);
        set_len(&mut g.gate.h, self.h_mm);
        set_len(&mut g.channel_width_ref, self.channel_width_ref_mm);
        if let Some(n) = self.n_nozzles {
            g.n_nozzles = n;
        }
        if let Some(rule) = self.design_rule {
            g.design_rule = rule;
        }

        let shore = self.shore_a.map(lit).unwrap_or(d.material.shore_a);
        d.material = match self.youngs_modulus_mpa {
            Some(e) => Material::with_modulus(shore, lit(e * 1e6)),
            None => Material::from_shore(shore),
        }
        .map_err(config_err)?;

        if let Some(v) = self.rho_in_kg_m3 {
            d.fluid.rho_in = lit(v);
        }
        if let Some(v) = self.rho_kg_m3 {
            d.fluid.rho = lit(v);
        }
        if let Some(v) = self.gamma {
            d.fluid.gamma = lit(v);
        }
        d.validate().map_err(config_err)?;
        Ok(d)
    }
}

pub fn load_device<T: Scalar>(path: impl AsRef<Path>) -> Result<Device<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    DeviceConfig::from_json(&text)?.to_device()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoeffFile {
    Report { coefficients: serde_json::Value },
    Bare(serde_json::Value),
}

pub fn coefficients_from_json<T: Scalar>(text: &str) -> Result<ModelCoefficients<T>> {
    let parsed: CoeffFile =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("coefficient file: {e}")))?;
    let value = match parsed {
        CoeffFile::Report { coefficients } => coefficients,
        CoeffFile::Bare(v) => v,
    };
    let c: ModelCoefficients<T> = serde_json::from_value(value)
        .map_err(|e| Error::Config(format!("coefficient file: {e}")))?;
    c.validate().map_err(config_err)?;
    Ok(c)
}

pub fn load_coefficients<T: Scalar>(path: impl AsRef<Path>) -> Result<ModelCoefficients<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    coefficients_from_json(&text)
}
