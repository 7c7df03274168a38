use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::{evaluate_operating_point, solve_operating_point, OperatingState};
use crate::coeffs::ModelCoefficients;
use crate::device::Device;
use crate::error::{Error, Result};
use crate::units::m3s_to_lpm;
use crate::Scalar;

/// Environment variable capping the number of sweep worker threads.
pub const WORKERS_ENV: &str = "FDR_WORKERS";

/// Anything that maps a supply flow (m³/s) to an operating state.
pub trait OperatingModel<T: Scalar>: Sync {
    fn state_at(&self, q_in: T) -> Result<OperatingState<T>>;
}

/// A device under fixed coefficients.
#[derive(Debug, Clone)]
pub struct DeviceModel<'a, T: Scalar> {
    pub device: &'a Device<T>,
    pub coeffs: &'a ModelCoefficients<T>,
    /// Solve the internal network at every point instead of the algebraic
    /// shortcut. Results are identical; this only costs time.
    pub with_network: bool,
}

impl<T: Scalar> OperatingModel<T> for DeviceModel<'_, T> {
    fn state_at(&self, q_in: T) -> Result<OperatingState<T>> {
        if self.with_network {
            solve_operating_point(q_in, self.device, self.coeffs)
        } else {
            evaluate_operating_point(q_in, self.device, self.coeffs)
        }
    }
}

/// Wraps a closure as an [`OperatingModel`], mostly for tests.
pub struct FnModel<F>(pub F);

impl<T: Scalar, F> OperatingModel<T> for FnModel<F>
where
    F: Fn(T) -> Result<OperatingState<T>> + Sync,
{
    fn state_at(&self, q_in: T) -> Result<OperatingState<T>> {
        (self.0)(q_in)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions<T> {
    /// Worker threads; `None` uses all cores, capped by `FDR_WORKERS`.
    pub workers: Option<usize>,
    /// Bisection stops once |p_out| falls below this, Pa.
    pub switch_tolerance: T,
}

impl<T: Scalar> Default for SweepOptions<T> {
    fn default() -> Self {
        Self {
            workers: None,
            switch_tolerance: T::lit(1e-3),
        }
    }
}

/// Worker cap from `FDR_WORKERS`, if set to a positive integer.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepResult<T: Scalar> {
    /// Ordered by q_in.
    pub states: Vec<OperatingState<T>>,
    /// First blowing/suction crossing, m³/s.
    pub switching_q: Option<T>,
    /// Pa.
    pub switching_p_in: Option<T>,
    /// Number of sign changes of p_out along the grid.
    pub sign_changes: usize,
    /// Largest positive p_out on the grid, Pa (0 if none).
    pub max_blow: T,
    /// Largest suction magnitude on the grid, Pa (0 if none).
    pub max_suck: T,
}

impl<T: Scalar> SweepResult<T> {
    /// State at the top of the ramp.
    pub fn last(&self) -> &OperatingState<T> {
        self.states.last().expect("sweeps have at least two points")
    }
}

fn grid<T: Scalar>(q_start: T, q_end: T, step: T) -> Result<Vec<T>> {
    if !(q_start.is_finite() && q_end.is_finite() && step.is_finite()) {
        return Err(Error::domain("sweep bounds must be finite"));
    }
    if !(q_start >= T::zero()) {
        return Err(Error::domain(format!(
            "sweep start must be ≥ 0, got {q_start}"
        )));
    }
    if !(q_start < q_end) {
        return Err(Error::domain(format!(
            "sweep start {q_start} must be below end {q_end}"
        )));
    }
    if !(step > T::zero()) {
        return Err(Error::domain(format!(
            "sweep step must be positive, got {step}"
        )));
    }
    // Points within a tiny fraction of a step of the end count as on it, so
    // 0→30 in steps of 0.1 gives 301 points despite rounding.
    let span = (q_end - q_start) / step;
    let n = (span + T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) * span.max(T::one()))
        .floor()
        .to_usize()
        .ok_or_else(|| Error::domain("sweep grid too large"))?;
    if n > 10_000_000 {
        return Err(Error::domain("sweep grid too large"));
    }
    Ok((0..=n)
        .map(|i| q_start + T::from_usize_lossy(i) * step)
        .collect())
}

fn with_flow<T: Scalar>(q: T, err: Error) -> Error {
    Error::AtFlowRate {
        q_in_lpm: m3s_to_lpm(q).to_f64_lossy(),
        source: Box::new(err),
    }
}

/// Sweep of a device under fixed coefficients, honouring `FDR_WORKERS`.
pub fn sweep<T: Scalar>(
    device: &Device<T>,
    coeffs: &ModelCoefficients<T>,
    q_start: T,
    q_end: T,
    step: T,
) -> Result<SweepResult<T>> {
    let options = SweepOptions {
        workers: workers_from_env()?,
        ..SweepOptions::default()
    };
    sweep_with(device, coeffs, q_start, q_end, step, &options)
}

pub fn sweep_with<T: Scalar>(
    device: &Device<T>,
    coeffs: &ModelCoefficients<T>,
    q_start: T,
    q_end: T,
    step: T,
    options: &SweepOptions<T>,
) -> Result<SweepResult<T>> {
    device.validate()?;
    coeffs.validate()?;
    let model = DeviceModel {
        device,
        coeffs,
        with_network: false,
    };
    sweep_model(&model, q_start, q_end, step, options)
}

/// Solves every point of the inclusive grid q_start + i·step and locates
/// the first sign change of p_out by bisection.
pub fn sweep_model<T: Scalar, M: OperatingModel<T> + ?Sized>(
    model: &M,
    q_start: T,
    q_end: T,
    step: T,
    options: &SweepOptions<T>,
) -> Result<SweepResult<T>> {
    let qs = grid(q_start, q_end, step)?;
    let solve = |q: &T| model.state_at(*q).map_err(|e| with_flow(*q, e));
    let states: Vec<OperatingState<T>> = match options.workers {
        Some(1) => qs.iter().map(solve).collect::<Result<_>>()?,
        workers => {
            let cap = workers
                .or(workers_from_env()?)
                .unwrap_or_else(rayon::current_num_threads)
                .max(1);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cap)
                .build()
                .map_err(|e| Error::Config(format!("cannot start sweep workers: {e}")))?;
            // Indexed collect keeps grid order whatever the scheduling.
            pool.install(|| qs.par_iter().map(solve).collect::<Result<_>>())?
        }
    };

    let mut max_blow = T::zero();
    let mut max_suck = T::zero();
    for s in &states {
        max_blow = max_blow.max(s.p_out);
        max_suck = max_suck.max(-s.p_out);
    }

    // Sign changes between successive non-zero values.
    let mut sign_changes = 0;
    let mut first_bracket = None;
    let mut prev: Option<usize> = None;
    for (i, s) in states.iter().enumerate() {
        if s.p_out == T::zero() || s.p_out.is_nan() {
            continue;
        }
        if let Some(j) = prev {
            if (states[j].p_out > T::zero()) != (s.p_out > T::zero()) {
                sign_changes += 1;
                first_bracket.get_or_insert((j, i));
            }
        }
        prev = Some(i);
    }

    let (switching_q, switching_p_in) = match first_bracket {
        None => (None, None),
        Some((j, i)) => {
            let s = bisect(model, &states[j], &states[i], options.switch_tolerance)?;
            (Some(s.q_in), Some(s.p_in))
        }
    };

    Ok(SweepResult {
        states,
        switching_q,
        switching_p_in,
        sign_changes,
        max_blow,
        max_suck,
    })
}

fn bisect<T: Scalar, M: OperatingModel<T> + ?Sized>(
    model: &M,
    lo: &OperatingState<T>,
    hi: &OperatingState<T>,
    tolerance: T,
) -> Result<OperatingState<T>> {
    let mut lo = *lo;
    let mut hi = *hi;
    let lo_positive = lo.p_out > T::zero();
    for _ in 0..200 {
        let mid_q = (lo.q_in + hi.q_in) / T::lit(2.0);
        if !(mid_q > lo.q_in && mid_q < hi.q_in) {
            break;
        }
        let mid = model.state_at(mid_q).map_err(|e| with_flow(mid_q, e))?;
        if mid.p_out.abs() < tolerance {
            return Ok(mid);
        }
        if (mid.p_out > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if lo.p_out.abs() <= hi.p_out.abs() {
        lo
    } else {
        hi
    })
}
