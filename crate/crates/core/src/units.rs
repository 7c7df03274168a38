//! Display-unit conversions.
//!
//! The model works in SI throughout. These helpers are for the boundary layers
//! (config files, measurement CSVs, report columns and the CLI), which use the
//! units common on a lab bench: L/min, kPa, mm and mm².

use crate::Scalar;

/// Standard gravity, m/s². Used to turn gram-force loads into newtons.
pub const STANDARD_GRAVITY: f64 = 9.806_65;

pub fn lpm_to_m3s<T: Scalar>(lpm: T) -> T {
    lpm / T::lit(60_000.0)
}

pub fn m3s_to_lpm<T: Scalar>(m3s: T) -> T {
    m3s * T::lit(60_000.0)
}

pub fn kpa_to_pa<T: Scalar>(kpa: T) -> T {
    kpa * T::lit(1e3)
}

pub fn pa_to_kpa<T: Scalar>(pa: T) -> T {
    pa / T::lit(1e3)
}

pub fn mm_to_m<T: Scalar>(mm: T) -> T {
    mm / T::lit(1e3)
}

pub fn m_to_mm<T: Scalar>(m: T) -> T {
    m * T::lit(1e3)
}

pub fn mm2_to_m2<T: Scalar>(mm2: T) -> T {
    mm2 / T::lit(1e6)
}

pub fn m2_to_mm2<T: Scalar>(m2: T) -> T {
    m2 * T::lit(1e6)
}

pub fn cm2_to_m2<T: Scalar>(cm2: T) -> T {
    cm2 / T::lit(1e4)
}

pub fn gram_force_to_newton<T: Scalar>(grams: T) -> T {
    grams * T::lit(STANDARD_GRAVITY * 1e-3)
}
