//! Lumped-parameter model of a single-input pneumatic device that blows air
//! at low supply flow and sucks once an elastic flap gate opens.
//!
//! The model is generic over the float type ([`Scalar`]); the aliases at the
//! crate root fix it to `f64`, with `F32` variants for single precision.
//!
//! ```
//! use fdr_core::{engine, units, Device, ModelCoefficients, TableType};
//!
//! let device = Device::table(TableType::B);
//! let coeffs = ModelCoefficients::default();
//! let state = engine::solve_operating_point(units::lpm_to_m3s(30.0), &device, &coeffs).unwrap();
//! assert_eq!(state.mode, engine::Mode::Suction);
//! ```

// `!(x > 0)` is how NaN gets rejected along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod linalg;

pub mod calib;
pub mod coeffs;
pub mod config;
pub mod device;
pub mod ejector;
pub mod engine;
pub mod error;
pub mod flow;
pub mod friction;
pub mod gate;
pub mod optim;
pub mod report;
pub mod scalar;
pub mod units;

pub use device::TableType;
pub use engine::Mode;
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Device = device::Device<f64>;
pub type DeviceGeometry = device::DeviceGeometry<f64>;
pub type FlapGateGeometry = device::FlapGateGeometry<f64>;
pub type FluidProperties = device::FluidProperties<f64>;
pub type Material = device::Material<f64>;
pub type ModelCoefficients = coeffs::ModelCoefficients<f64>;
pub type GateComplianceModel = gate::GateComplianceModel<f64>;
pub type GateState = gate::GateState<f64>;
pub type OperatingState = engine::OperatingState<f64>;
pub type SweepResult = engine::SweepResult<f64>;
pub type MeasurementSet = calib::MeasurementSet<f64>;
pub type FitReport = calib::FitReport<f64>;
pub type FrictionSample = friction::FrictionSample<f64>;
pub type FrictionPrediction = friction::FrictionPrediction<f64>;

pub type DeviceF32 = device::Device<f32>;
pub type DeviceGeometryF32 = device::DeviceGeometry<f32>;
pub type ModelCoefficientsF32 = coeffs::ModelCoefficients<f32>;
pub type OperatingStateF32 = engine::OperatingState<f32>;
pub type SweepResultF32 = engine::SweepResult<f32>;
