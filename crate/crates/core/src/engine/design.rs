use serde::{Deserialize, Serialize};

use super::evaluate_operating_point;
use super::sweep::{sweep_model, sweep_with, DeviceModel, SweepOptions, SweepResult};
use crate::coeffs::ModelCoefficients;
use crate::device::{table1_device, Device, TableType};
use crate::error::{Error, Result};
use crate::optim::{minimize, Bounds, NelderMeadOptions};
use crate::units::lpm_to_m3s;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ComparisonRow<T: Scalar> {
    pub kind: Option<TableType>,
    pub label: String,
    pub sweep: SweepResult<T>,
}

impl<T: Scalar> ComparisonRow<T> {
    /// Suction magnitude at the top of the ramp, Pa (0 when blowing).
    pub fn suction_at_end(&self) -> T {
        (-self.sweep.last().p_out).max(T::zero())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Comparison<T: Scalar> {
    pub rows: Vec<ComparisonRow<T>>,
}

impl<T: Scalar> Comparison<T> {
    pub fn row(&self, kind: TableType) -> Option<&ComparisonRow<T>> {
        self.rows.iter().find(|r| r.kind == Some(kind))
    }
}

/// One sweep per catalogue type, all under the same coefficients.
pub fn compare_designs<T: Scalar>(
    types: &[TableType],
    coeffs: &ModelCoefficients<T>,
    q_start: T,
    q_end: T,
    step: T,
    options: &SweepOptions<T>,
) -> Result<Comparison<T>> {
    if types.is_empty() {
        return Err(Error::domain("at least one device type is required"));
    }
    let devices: Vec<(Option<TableType>, Device<T>)> =
        types.iter().map(|&k| (Some(k), table1_device(k))).collect();
    compare_inner(&devices, coeffs, q_start, q_end, step, options)
}

/// Same as [`compare_designs`] for arbitrary devices.
pub fn compare_devices<T: Scalar>(
    devices: &[Device<T>],
    coeffs: &ModelCoefficients<T>,
    q_start: T,
    q_end: T,
    step: T,
    options: &SweepOptions<T>,
) -> Result<Comparison<T>> {
    if devices.is_empty() {
        return Err(Error::domain("at least one device is required"));
    }
    let tagged: Vec<(Option<TableType>, Device<T>)> =
        devices.iter().map(|d| (None, d.clone())).collect();
    compare_inner(&tagged, coeffs, q_start, q_end, step, options)
}

fn compare_inner<T: Scalar>(
    devices: &[(Option<TableType>, Device<T>)],
    coeffs: &ModelCoefficients<T>,
    q_start: T,
    q_end: T,
    step: T,
    options: &SweepOptions<T>,
) -> Result<Comparison<T>> {
    let rows = devices
        .iter()
        .map(|(kind, d)| {
            Ok(ComparisonRow {
                kind: *kind,
                label: d.label.clone(),
                sweep: sweep_with(d, coeffs, q_start, q_end, step, options)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Comparison { rows })
}

/// A strict ordering the design trends predict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingCheck {
    /// `switching_p_in`, `max_blow` or `suction_at_end`.
    pub quantity: &'static str,
    /// Types in expected decreasing order.
    pub chain: Vec<TableType>,
    /// Values along the chain, SI; NaN where undefined.
    pub values: Vec<f64>,
    pub holds: bool,
}

impl OrderingCheck {
    pub fn describe(&self) -> String {
        let chain: Vec<String> = self.chain.iter().map(|t| t.to_string()).collect();
        format!("{}: {}", self.quantity, chain.join(" > "))
    }
}

const SWITCHING_CHAINS: [[TableType; 3]; 5] = {
    use TableType::*;
    [[A, B, C], [E, B, D], [B, G, F], [I, B, H], [K, J, B]]
};

const BLOWING_CHAINS: [[TableType; 3]; 3] = {
    use TableType::*;
    [[A, B, C], [E, B, D], [K, J, B]]
};

/// Checks every known trend whose types all appear in the comparison.
pub fn ordering_checks<T: Scalar>(cmp: &Comparison<T>) -> Vec<OrderingCheck> {
    let mut out = Vec::new();
    let mut check = |quantity: &'static str,
                     chain: &[TableType],
                     get: &dyn Fn(&ComparisonRow<T>) -> Option<T>| {
        let rows: Option<Vec<&ComparisonRow<T>>> = chain.iter().map(|&k| cmp.row(k)).collect();
        let Some(rows) = rows else { return };
        let values: Vec<f64> = rows
            .iter()
            .map(|r| get(r).map_or(f64::NAN, |v| v.to_f64_lossy()))
            .collect();
        let holds = values.windows(2).all(|w| w[0] > w[1]);
        out.push(OrderingCheck {
            quantity,
            chain: chain.to_vec(),
            values,
            holds,
        });
    };
    for chain in &SWITCHING_CHAINS {
        check("switching_p_in", chain, &|r| r.sweep.switching_p_in);
    }
    for chain in &BLOWING_CHAINS {
        check("max_blow", chain, &|r| Some(r.sweep.max_blow));
    }
    check("suction_at_end", &[TableType::A, TableType::C], &|r| {
        Some(r.suction_at_end())
    });
    out
}

/// Design variables of the optimizer, SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DesignPoint<T: Scalar> {
    /// m.
    pub w: T,
    /// m.
    pub t: T,
    /// m.
    pub h: T,
    /// m², per nozzle.
    pub a_ne: T,
}

impl<T: Scalar> DesignPoint<T> {
    pub fn of(device: &Device<T>) -> Self {
        let g = &device.geometry;
        Self {
            w: g.gate.w,
            t: g.gate.t,
            h: g.gate.h,
            a_ne: g.a_ne,
        }
    }

    fn to_vec(self) -> Vec<T> {
        vec![self.w, self.t, self.h, self.a_ne]
    }

    fn from_slice(x: &[T]) -> Self {
        Self {
            w: x[0],
            t: x[1],
            h: x[2],
            a_ne: x[3],
        }
    }

    pub fn apply(&self, base: &Device<T>) -> Device<T> {
        base.with_design(self.w, self.t, self.h, self.a_ne)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DesignBounds<T: Scalar> {
    pub lower: DesignPoint<T>,
    pub upper: DesignPoint<T>,
}

impl<T: Scalar> DesignBounds<T> {
    /// Box that pins every variable to the device's own value.
    pub fn fixed(device: &Device<T>) -> Self {
        let p = DesignPoint::of(device);
        Self { lower: p, upper: p }
    }

    pub fn check(&self) -> Result<()> {
        let lo = self.lower.to_vec();
        let hi = self.upper.to_vec();
        for (i, name) in ["w", "t", "h", "a_ne"].iter().enumerate() {
            if !(lo[i] > T::zero() && lo[i] <= hi[i] && hi[i].is_finite()) {
                return Err(Error::domain(format!(
                    "bounds on {name} must satisfy 0 < lower ≤ upper, got [{}, {}]",
                    lo[i], hi[i]
                )));
            }
        }
        Ok(())
    }
}

/// What the geometry search minimizes. Pressures in Pa, flows in m³/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", rename_all = "snake_case")]
pub enum Objective<T: Scalar> {
    /// Squared relative distance of the switching input pressure to a target.
    TargetSwitchingPin {
        p_in: T,
    },
    MinimizeSwitchingPin,
    /// Most negative p_out at the given flow.
    MaxSuction {
        q_in: T,
    },
    /// Most positive p_out at the given flow.
    MaxBlowing {
        q_in: T,
    },
    /// Least squares against a reference curve: p_out normalized by its
    /// largest magnitude plus the opening ratio a_fg/a_ex.
    MatchCurve {
        q_in: Vec<T>,
        p_out: Vec<T>,
        a_fg_over_a_ex: Vec<T>,
    },
    Weighted(Vec<(T, Objective<T>)>),
}

impl<T: Scalar> Objective<T> {
    /// Curve-matching objective whose target is `device`'s own response on
    /// `q_in`.
    pub fn match_device(
        device: &Device<T>,
        coeffs: &ModelCoefficients<T>,
        q_in: Vec<T>,
    ) -> Result<Self> {
        let states = q_in
            .iter()
            .map(|&q| evaluate_operating_point(q, device, coeffs))
            .collect::<Result<Vec<_>>>()?;
        Ok(Objective::MatchCurve {
            p_out: states.iter().map(|s| s.p_out).collect(),
            a_fg_over_a_ex: states.iter().map(|s| s.a_fg_over_a_ex).collect(),
            q_in,
        })
    }

    fn check(&self) -> Result<()> {
        match self {
            Objective::MatchCurve {
                q_in,
                p_out,
                a_fg_over_a_ex,
            } => {
                if q_in.is_empty()
                    || q_in.len() != p_out.len()
                    || q_in.len() != a_fg_over_a_ex.len()
                {
                    return Err(Error::domain(
                        "curve target needs equally long, non-empty q_in, p_out and a_fg_over_a_ex",
                    ));
                }
                Ok(())
            }
            Objective::Weighted(parts) if parts.is_empty() => {
                Err(Error::domain("weighted objective needs at least one term"))
            }
            Objective::Weighted(parts) => parts.iter().try_for_each(|(_, o)| o.check()),
            _ => Ok(()),
        }
    }

    /// Value for one candidate device.
    pub fn evaluate(
        &self,
        device: &Device<T>,
        coeffs: &ModelCoefficients<T>,
        options: &OptimizeOptions<T>,
    ) -> Result<T> {
        match self {
            Objective::TargetSwitchingPin { p_in } => {
                let s = switching_p_in(device, coeffs, options)?;
                let rel = (s - *p_in) / *p_in;
                Ok(rel * rel)
            }
            Objective::MinimizeSwitchingPin => switching_p_in(device, coeffs, options),
            Objective::MaxSuction { q_in } => {
                Ok(evaluate_operating_point(*q_in, device, coeffs)?.p_out)
            }
            Objective::MaxBlowing { q_in } => {
                Ok(-evaluate_operating_point(*q_in, device, coeffs)?.p_out)
            }
            Objective::MatchCurve {
                q_in,
                p_out,
                a_fg_over_a_ex,
            } => {
                let scale = p_out.iter().fold(T::zero(), |m, p| m.max(p.abs()));
                let scale = if scale > T::zero() { scale } else { T::one() };
                let n = T::from_usize_lossy(q_in.len());
                let mut sum = T::zero();
                for ((&q, &p), &r) in q_in.iter().zip(p_out).zip(a_fg_over_a_ex) {
                    let s = evaluate_operating_point(q, device, coeffs)?;
                    let dp = (s.p_out - p) / scale;
                    let dr = s.a_fg_over_a_ex - r;
                    sum = sum + dp * dp + dr * dr;
                }
                Ok(sum / n)
            }
            Objective::Weighted(parts) => parts.iter().try_fold(T::zero(), |acc, (w, o)| {
                Ok(acc + *w * o.evaluate(device, coeffs, options)?)
            }),
        }
    }
}

fn switching_p_in<T: Scalar>(
    device: &Device<T>,
    coeffs: &ModelCoefficients<T>,
    options: &OptimizeOptions<T>,
) -> Result<T> {
    let model = DeviceModel {
        device,
        coeffs,
        with_network: false,
    };
    let serial = SweepOptions {
        workers: Some(1),
        ..SweepOptions::default()
    };
    sweep_model(
        &model,
        options.q_start,
        options.q_end,
        options.q_step,
        &serial,
    )?
    .switching_p_in
    .ok_or_else(|| Error::domain("no switching point on the sweep range"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions<T: Scalar> {
    pub nelder_mead: NelderMeadOptions<T>,
    /// Start of the search; defaults to the base device clamped into the box.
    pub start: Option<DesignPoint<T>>,
    /// Initial simplex edge as a fraction of each box side.
    pub initial_step: T,
    /// Ramp used by the switching-pressure objectives, m³/s.
    pub q_start: T,
    pub q_end: T,
    pub q_step: T,
}

impl<T: Scalar> Default for OptimizeOptions<T> {
    fn default() -> Self {
        Self {
            nelder_mead: NelderMeadOptions::default(),
            start: None,
            initial_step: T::lit(0.1),
            q_start: T::zero(),
            q_end: lpm_to_m3s(T::lit(30.0)),
            q_step: lpm_to_m3s(T::lit(0.5)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct OptimizeResult<T: Scalar> {
    pub design: DesignPoint<T>,
    pub device: Device<T>,
    pub value: T,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead over (w, t, h, a_ne) inside `bounds`, in coordinates scaled
/// to the unit box. Variables whose bounds coincide stay fixed. Candidates
/// that cannot be evaluated (invalid geometry, no switching point) score +∞.
pub fn optimize_geometry<T: Scalar>(
    base: &Device<T>,
    objective: &Objective<T>,
    bounds: &DesignBounds<T>,
    coeffs: &ModelCoefficients<T>,
    options: &OptimizeOptions<T>,
) -> Result<OptimizeResult<T>> {
    bounds.check()?;
    objective.check()?;
    coeffs.validate()?;
    let lo = bounds.lower.to_vec();
    let hi = bounds.upper.to_vec();
    let start = options
        .start
        .unwrap_or_else(|| DesignPoint::of(base))
        .to_vec();

    let width: Vec<T> = lo.iter().zip(&hi).map(|(&l, &h)| h - l).collect();
    let u0: Vec<T> = (0..4)
        .map(|i| {
            if width[i] > T::zero() {
                ((start[i] - lo[i]) / width[i]).max(T::zero()).min(T::one())
            } else {
                T::zero()
            }
        })
        .collect();
    let steps: Vec<T> = (0..4)
        .map(|i| {
            if width[i] > T::zero() {
                // Step inwards when the start sits near the upper face.
                if u0[i] + options.initial_step > T::one() {
                    -options.initial_step
                } else {
                    options.initial_step
                }
            } else {
                T::zero()
            }
        })
        .collect();
    let to_design = |u: &[T]| {
        let x: Vec<T> = (0..4).map(|i| lo[i] + u[i] * width[i]).collect();
        DesignPoint::from_slice(&x)
    };
    let unit = Bounds {
        lower: vec![T::zero(); 4],
        upper: vec![T::one(); 4],
    };
    let f = |u: &[T]| {
        let device = to_design(u).apply(base);
        if device.validate().is_err() {
            return T::infinity();
        }
        objective
            .evaluate(&device, coeffs, options)
            .unwrap_or_else(|_| T::infinity())
    };
    let m = minimize(f, &u0, &steps, Some(&unit), &options.nelder_mead);
    let design = to_design(&m.x);
    Ok(OptimizeResult {
        design,
        device: design.apply(base),
        value: m.value,
        evaluations: m.evaluations,
        converged: m.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mm_to_m;

    fn serial() -> SweepOptions<f64> {
        SweepOptions {
            workers: Some(1),
            ..Default::default()
        }
    }

    #[test]
    fn singleton_comparison_matches_sweep() {
        let c = ModelCoefficients::default();
        let (end, step) = (lpm_to_m3s(30.0), lpm_to_m3s(0.5));
        let cmp = compare_designs(&[TableType::B], &c, 0.0, end, step, &serial()).unwrap();
        let direct =
            sweep_with(&table1_device(TableType::B), &c, 0.0, end, step, &serial()).unwrap();
        assert_eq!(cmp.rows.len(), 1);
        assert_eq!(cmp.rows[0].sweep, direct);
        assert!(compare_designs::<f64>(&[], &c, 0.0, end, step, &serial()).is_err());
    }

    #[test]
    fn ordering_report_covers_present_chains() {
        use TableType::*;
        let c = ModelCoefficients::default();
        let cmp = compare_designs(
            &[A, B, C],
            &c,
            0.0,
            lpm_to_m3s(30.0),
            lpm_to_m3s(0.1),
            &serial(),
        )
        .unwrap();
        let checks = ordering_checks(&cmp);
        let names: Vec<String> = checks.iter().map(OrderingCheck::describe).collect();
        assert_eq!(
            names,
            [
                "switching_p_in: A > B > C",
                "max_blow: A > B > C",
                "suction_at_end: A > C"
            ]
        );
        assert!(checks.iter().all(|c| c.holds), "{checks:?}");
    }

    #[test]
    fn degenerate_box_returns_its_point() {
        let base = table1_device::<f64>(TableType::B);
        let r = optimize_geometry(
            &base,
            &Objective::MinimizeSwitchingPin,
            &DesignBounds::fixed(&base),
            &Default::default(),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.design, DesignPoint::of(&base));
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn lower_gate_switches_earlier() {
        let base = table1_device::<f64>(TableType::B);
        let mut bounds = DesignBounds::fixed(&base);
        bounds.lower.h = mm_to_m(1.8);
        bounds.upper.h = mm_to_m(2.0);
        let r = optimize_geometry(
            &base,
            &Objective::MinimizeSwitchingPin,
            &bounds,
            &Default::default(),
            &Default::default(),
        )
        .unwrap();
        assert!((r.design.h - mm_to_m(1.8)).abs() < 1e-9, "{}", r.design.h);
        assert!(r.evaluations <= 400);
    }

    #[test]
    fn rejects_inverted_bounds() {
        let base = table1_device::<f64>(TableType::B);
        let mut bounds = DesignBounds::fixed(&base);
        bounds.lower.w = 2.0 * bounds.upper.w;
        assert!(optimize_geometry(
            &base,
            &Objective::MinimizeSwitchingPin,
            &bounds,
            &Default::default(),
            &Default::default()
        )
        .is_err());
    }

    #[test]
    fn suction_objective_prefers_narrow_channel() {
        // Inside [6, 10] mm recirculation dominates the opening gain.
        let base = table1_device::<f64>(TableType::B);
        let mut bounds = DesignBounds::fixed(&base);
        bounds.lower.w = mm_to_m(6.0);
        bounds.upper.w = mm_to_m(10.0);
        let r = optimize_geometry(
            &base,
            &Objective::MaxSuction {
                q_in: lpm_to_m3s(30.0),
            },
            &bounds,
            &Default::default(),
            &Default::default(),
        )
        .unwrap();
        let at = |w: f64| {
            evaluate_operating_point(
                lpm_to_m3s(30.0),
                &base.with_design(w, 5e-4, 2e-3, 4e-7),
                &Default::default(),
            )
            .unwrap()
            .p_out
        };
        assert!(r.value <= at(mm_to_m(8.0)));
        assert!(r.value <= at(mm_to_m(10.0)));
    }
}
