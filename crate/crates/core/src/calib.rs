//! Measurement sets and least-squares calibration of [`ModelCoefficients`].

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coeffs::ModelCoefficients;
use crate::device::Device;
use crate::engine::evaluate_operating_point;
use crate::error::{Error, Result};
use crate::optim::{minimize, NelderMeadOptions};
use crate::units::{kpa_to_pa, lpm_to_m3s, m2_to_mm2, m3s_to_lpm, mm2_to_m2, pa_to_kpa};
use crate::Scalar;

/// Column names of the measurement CSV.
pub const MEASUREMENT_HEADER: [&str; 4] = ["q_in_lpm", "p_in_kpa", "p_out_kpa", "a_fg_mm2"];

/// One measured operating point, SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Measurement<T: Scalar> {
    /// m³/s.
    pub q_in: T,
    /// Pa.
    pub p_in: Option<T>,
    /// Pa.
    pub p_out: Option<T>,
    /// m².
    pub a_fg: Option<T>,
}

impl<T: Scalar> Measurement<T> {
    pub fn new(q_in: T) -> Self {
        Self {
            q_in,
            p_in: None,
            p_out: None,
            a_fg: None,
        }
    }
}

/// Rows sorted by q_in, exact duplicates collapsed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MeasurementSet<T: Scalar> {
    pub label: String,
    rows: Vec<Measurement<T>>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    q_in_lpm: f64,
    #[serde(default)]
    p_in_kpa: Option<f64>,
    #[serde(default)]
    p_out_kpa: Option<f64>,
    #[serde(default)]
    a_fg_mm2: Option<f64>,
}

fn bits<T: Scalar>(v: Option<T>) -> Option<u64> {
    v.map(|x| x.to_f64_lossy().to_bits())
}

impl<T: Scalar> MeasurementSet<T> {
    /// Validates and normalizes the rows. Rows repeated exactly count once;
    /// two different rows at the same flow are rejected.
    pub fn new(label: impl Into<String>, mut rows: Vec<Measurement<T>>) -> Result<Self> {
        for r in &rows {
            if !(r.q_in >= T::zero() && r.q_in.is_finite()) {
                return Err(Error::domain(format!(
                    "flow rates must be finite and ≥ 0, got {}",
                    r.q_in
                )));
            }
            for v in [r.p_in, r.p_out, r.a_fg].into_iter().flatten() {
                if !v.is_finite() {
                    return Err(Error::domain("measured values must be finite"));
                }
            }
        }
        rows.sort_by(|a, b| a.q_in.partial_cmp(&b.q_in).expect("finite"));
        rows.dedup_by(|b, a| {
            a.q_in == b.q_in
                && bits(a.p_in) == bits(b.p_in)
                && bits(a.p_out) == bits(b.p_out)
                && bits(a.a_fg) == bits(b.a_fg)
        });
        if let Some(w) = rows.windows(2).find(|w| w[0].q_in == w[1].q_in) {
            return Err(Error::domain(format!(
                "conflicting rows at q_in = {} L/min",
                m3s_to_lpm(w[0].q_in)
            )));
        }
        Ok(Self {
            label: label.into(),
            rows,
        })
    }

    pub fn rows(&self) -> &[Measurement<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reads the bench CSV (`q_in_lpm,p_in_kpa,p_out_kpa,a_fg_mm2`). Missing
    /// or empty optional cells are allowed; lines starting with `#` are
    /// skipped.
    pub fn from_csv_reader(label: impl Into<String>, reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if !headers.iter().any(|h| h == "q_in_lpm") {
            return Err(Error::Config(
                "measurement CSV lacks a q_in_lpm column".into(),
            ));
        }
        if let Some(h) = headers.iter().find(|h| !MEASUREMENT_HEADER.contains(h)) {
            return Err(Error::Config(format!(
                "unknown measurement column {h:?}; expected {}",
                MEASUREMENT_HEADER.join(",")
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            let r: CsvRow = rec?;
            rows.push(Measurement {
                q_in: lpm_to_m3s(T::lit(r.q_in_lpm)),
                p_in: r.p_in_kpa.map(|v| kpa_to_pa(T::lit(v))),
                p_out: r.p_out_kpa.map(|v| kpa_to_pa(T::lit(v))),
                a_fg: r.a_fg_mm2.map(|v| mm2_to_m2(T::lit(v))),
            });
        }
        Self::new(label, rows)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(path.display().to_string(), file)
    }

    /// Writes the rows back in the bench CSV layout.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(MEASUREMENT_HEADER)?;
        let cell = |v: Option<T>| {
            v.map(|x| crate::report::fmt_g(x.to_f64_lossy()))
                .unwrap_or_default()
        };
        for r in &self.rows {
            w.write_record([
                crate::report::fmt_g(m3s_to_lpm(r.q_in).to_f64_lossy()),
                cell(r.p_in.map(pa_to_kpa)),
                cell(r.p_out.map(pa_to_kpa)),
                cell(r.a_fg.map(m2_to_mm2)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Six reference pressure/flow pairs of the nominal device, 5 to 30 L/min.
pub fn builtin_reference_points<T: Scalar>() -> MeasurementSet<T> {
    const POINTS: [(f64, f64); 6] = [
        (5.0, 5.4),
        (10.0, 13.5),
        (15.0, 21.1),
        (20.0, 32.2),
        (25.0, 41.1),
        (30.0, 47.1),
    ];
    let rows = POINTS
        .iter()
        .map(|&(q, p)| Measurement {
            p_in: Some(kpa_to_pa(T::lit(p))),
            ..Measurement::new(lpm_to_m3s(T::lit(q)))
        })
        .collect();
    MeasurementSet::new("reference pressure points", rows).expect("static data is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ResidualPoint<T: Scalar> {
    /// Measurement set the point came from.
    pub label: String,
    /// m³/s.
    pub q_in: T,
    pub observed: T,
    pub fitted: T,
    /// fitted − observed.
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FitReport<T: Scalar> {
    pub coefficients: ModelCoefficients<T>,
    /// `p_in` or `p_out`; residuals are in Pa.
    pub quantity: String,
    pub fitted_parameters: Vec<String>,
    pub rms_residual: T,
    pub residuals: Vec<ResidualPoint<T>>,
    pub warnings: Vec<String>,
    pub evaluations: usize,
}

fn rms<T: Scalar>(residuals: &[ResidualPoint<T>]) -> T {
    if residuals.is_empty() {
        return T::zero();
    }
    let sum: T = residuals.iter().map(|r| r.residual * r.residual).sum();
    (sum / T::from_usize_lossy(residuals.len())).sqrt()
}

impl<T: Scalar> FitReport<T> {
    /// Root mean square of the residual list.
    pub fn recomputed_rms(&self) -> T {
        rms(&self.residuals)
    }
}

/// Least squares of p_in = c1·q + c2·q² with c1, c2 ≥ 0.
///
/// Solves the 2×2 normal equations on flows scaled to [0, 1]; if a
/// coefficient comes out negative, the better of the two single-term fits is
/// taken instead. All other coefficients are copied from `base`.
pub fn fit_input_pressure<T: Scalar>(
    data: &MeasurementSet<T>,
    base: &ModelCoefficients<T>,
) -> Result<FitReport<T>> {
    let pts: Vec<(T, T)> = data
        .rows()
        .iter()
        .filter_map(|r| r.p_in.map(|p| (r.q_in, p)))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least two rows with p_in_kpa, got {}",
            pts.len()
        )));
    }
    let q_max = pts.iter().fold(T::zero(), |m, p| m.max(p.0));
    if !(q_max > T::zero()) {
        return Err(Error::Fit("rank deficient: every flow rate is zero".into()));
    }
    let (mut s2, mut s3, mut s4, mut sy1, mut sy2) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for &(q, p) in &pts {
        let x = q / q_max;
        s2 = s2 + x * x;
        s3 = s3 + x * x * x;
        s4 = s4 + x * x * x * x;
        sy1 = sy1 + x * p;
        sy2 = sy2 + x * x * p;
    }
    let det = s2 * s4 - s3 * s3;
    if !(det > T::lit(1e-10) * s2 * s4) {
        return Err(Error::Fit(
            "rank deficient: flow rates must take at least two distinct non-zero values".into(),
        ));
    }
    let sse = |a: T, b: T| -> T {
        pts.iter()
            .map(|&(q, p)| {
                let x = q / q_max;
                let r = a * x + b * x * x - p;
                r * r
            })
            .sum()
    };
    let mut a = (sy1 * s4 - sy2 * s3) / det;
    let mut b = (s2 * sy2 - s3 * sy1) / det;
    if a < T::zero() || b < T::zero() {
        let linear = (sy1 / s2).max(T::zero());
        let quadratic = (sy2 / s4).max(T::zero());
        if sse(linear, T::zero()) <= sse(T::zero(), quadratic) {
            (a, b) = (linear, T::zero());
        } else {
            (a, b) = (T::zero(), quadratic);
        }
    }
    let coefficients = ModelCoefficients {
        c1: a / q_max,
        c2: b / (q_max * q_max),
        ..*base
    };
    let residuals: Vec<ResidualPoint<T>> = pts
        .iter()
        .map(|&(q, p)| {
            let fitted = crate::flow::input_pressure(q, &coefficients);
            ResidualPoint {
                label: data.label.clone(),
                q_in: q,
                observed: p,
                fitted,
                residual: fitted - p,
            }
        })
        .collect();
    Ok(FitReport {
        coefficients,
        quantity: "p_in".into(),
        fitted_parameters: vec!["c1".into(), "c2".into()],
        rms_residual: rms(&residuals),
        residuals,
        warnings: Vec::new(),
        evaluations: 1,
    })
}

/// True when p_in(q) is non-decreasing on `n` equal steps over [0, q_max].
pub fn input_law_is_monotone<T: Scalar>(coeffs: &ModelCoefficients<T>, q_max: T, n: usize) -> bool {
    let mut last = crate::flow::input_pressure(T::zero(), coeffs);
    (1..=n).all(|i| {
        let q = q_max * T::from_usize_lossy(i) / T::from_usize_lossy(n);
        let p = crate::flow::input_pressure(q, coeffs);
        let ok = p >= last;
        last = p;
        ok
    })
}

/// Closure parameters fitted by [`fit_closures`], in this order.
pub const CLOSURE_PARAMETERS: [&str; 5] = ["k0", "p_c", "eta", "c_recirc", "leak_fraction"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureFitOptions<T> {
    /// Per start; restarts included.
    pub nelder_mead: NelderMeadOptions<T>,
    /// Log-offsets applied to k0 and p_c to build the grid of starts.
    pub start_offsets: [T; 3],
    /// Initial simplex edge in log units.
    pub initial_step: T,
}

impl<T: Scalar> Default for ClosureFitOptions<T> {
    fn default() -> Self {
        Self {
            nelder_mead: NelderMeadOptions {
                max_evals: 1200,
                tolerance: T::lit(1e-9),
                ..NelderMeadOptions::default()
            },
            start_offsets: [T::zero(), T::lit(-0.3), T::lit(0.3)],
            initial_step: T::lit(0.2),
        }
    }
}

fn with_params<T: Scalar>(base: &ModelCoefficients<T>, x: &[T]) -> ModelCoefficients<T> {
    ModelCoefficients {
        k0: x[0],
        p_c: x[1],
        eta: x[2],
        c_recirc: x[3],
        leak_fraction: x[4],
        ..*base
    }
}

/// Fits (k0, p_c, eta, c_recirc, leak_fraction) to measured p_out.
///
/// Each entry pairs a device with data taken on it. The residual is the
/// model p_out minus the measured one, scaled by the largest measured
/// magnitude. Parameters are searched in log space from a small grid of
/// starts around `base`; the best result wins.
///
/// The recirculation penalty only shows up relative to other devices: with
/// no channel wider than the reference width, or all channels equally wide,
/// c_recirc cannot be told apart from eta and is held at its base value.
pub fn fit_closures<T: Scalar>(
    data: &[(Device<T>, MeasurementSet<T>)],
    base: &ModelCoefficients<T>,
    options: &ClosureFitOptions<T>,
) -> Result<FitReport<T>> {
    if data.is_empty() {
        return Err(Error::Fit("no measurement sets given".into()));
    }
    base.validate()?;
    let mut points: Vec<(usize, T, T)> = Vec::new();
    for (i, (device, set)) in data.iter().enumerate() {
        device.validate()?;
        points.extend(
            set.rows()
                .iter()
                .filter_map(|r| r.p_out.map(|p| (i, r.q_in, p))),
        );
    }
    if points.is_empty() {
        return Err(Error::Fit(
            "column p_out_kpa is empty; closure fitting needs measured output pressure".into(),
        ));
    }

    let mut warnings = Vec::new();
    let any_sign_change = data.iter().any(|(_, set)| {
        let ps: Vec<T> = set.rows().iter().filter_map(|r| r.p_out).collect();
        ps.iter().any(|&p| p > T::zero()) && ps.iter().any(|&p| p < T::zero())
    });
    if !any_sign_change {
        warnings.push(
            "p_out never changes sign in the data; the switching point is unconstrained"
                .to_string(),
        );
    }

    let widths: Vec<T> = data.iter().map(|(d, _)| d.geometry.gate.w).collect();
    let distinct_widths = widths.iter().any(|&w| w != widths[0]);
    let any_wide = data
        .iter()
        .any(|(d, _)| d.geometry.gate.w > d.geometry.channel_width_ref);
    let fit_recirc = distinct_widths && any_wide;
    if !fit_recirc {
        warnings.push(format!(
            "c_recirc held at {} (needs devices of different widths, one wider than the reference)",
            base.c_recirc
        ));
    }

    let scale = points.iter().fold(T::zero(), |m, p| m.max(p.2.abs()));
    let scale = if scale > T::zero() { scale } else { T::one() };
    let n = T::from_usize_lossy(points.len());

    // Log parametrization needs positive anchors.
    let anchor = [
        base.k0,
        if base.p_c > T::zero() {
            base.p_c
        } else {
            T::lit(1e3)
        },
        base.eta,
        if base.c_recirc > T::zero() {
            base.c_recirc
        } else {
            T::one()
        },
        if base.leak_fraction > T::zero() {
            base.leak_fraction
        } else {
            T::lit(0.01)
        },
    ];
    let decode = |u: &[T]| -> Vec<T> { (0..5).map(|i| anchor[i] * u[i].exp()).collect() };
    let objective = |u: &[T]| -> T {
        let c = with_params(base, &decode(u));
        if c.validate().is_err() {
            return T::infinity();
        }
        let mut sum = T::zero();
        for &(i, q, p) in &points {
            match evaluate_operating_point(q, &data[i].0, &c) {
                Ok(s) => {
                    let r = (s.p_out - p) / scale;
                    sum = sum + r * r;
                }
                Err(_) => return T::infinity(),
            }
        }
        sum / n
    };

    let u_base = [T::zero(); 5];
    let mut steps = vec![options.initial_step; 5];
    if !fit_recirc {
        steps[3] = T::zero();
    }

    let mut best: Option<(Vec<T>, T)> = None;
    let mut evaluations = 0;
    for &dk in &options.start_offsets {
        for &dp in &options.start_offsets {
            let mut start = u_base.to_vec();
            start[0] = start[0] + dk;
            start[1] = start[1] + dp;
            let m = minimize(&objective, &start, &steps, None, &options.nelder_mead);
            evaluations += m.evaluations;
            if best.as_ref().map_or(true, |(_, v)| m.value < *v) {
                best = Some((m.x, m.value));
            }
        }
    }
    let (u, value) = best.expect("at least one start");
    if !value.is_finite() {
        return Err(Error::Fit("no admissible coefficients found".into()));
    }
    let mut params = decode(&u);
    if !fit_recirc {
        params[3] = base.c_recirc;
    }
    let coefficients = with_params(base, &params);

    let residuals = points
        .iter()
        .map(|&(i, q, p)| {
            let fitted = evaluate_operating_point(q, &data[i].0, &coefficients)?.p_out;
            Ok(ResidualPoint {
                label: data[i].1.label.clone(),
                q_in: q,
                observed: p,
                fitted,
                residual: fitted - p,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fitted_parameters = CLOSURE_PARAMETERS
        .iter()
        .filter(|&&p| fit_recirc || p != "c_recirc")
        .map(|p| p.to_string())
        .collect();
    Ok(FitReport {
        coefficients,
        quantity: "p_out".into(),
        fitted_parameters,
        rms_residual: rms(&residuals),
        residuals,
        warnings,
        evaluations,
    })
}

/// Simulated measurement set for `device` on the given flows (m³/s).
pub fn synthesize<T: Scalar>(
    device: &Device<T>,
    coeffs: &ModelCoefficients<T>,
    q_in: &[T],
) -> Result<MeasurementSet<T>> {
    let rows = q_in
        .iter()
        .map(|&q| {
            let s = evaluate_operating_point(q, device, coeffs)?;
            Ok(Measurement {
                q_in: q,
                p_in: Some(s.p_in),
                p_out: Some(s.p_out),
                a_fg: Some(s.a_fg),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementSet::new(device.label.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{table1_device, TableType};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid() -> Vec<f64> {
        (0..=30).map(|i| lpm_to_m3s(i as f64)).collect()
    }

    #[test]
    fn reference_points() {
        let set = builtin_reference_points::<f64>();
        assert_eq!(set.len(), 6);
        assert_eq!(set.rows()[0].q_in, lpm_to_m3s(5.0));
        assert_eq!(set.rows()[0].p_in, Some(5_400.0));
        assert!(set.rows().windows(2).all(|w| w[0].q_in < w[1].q_in));
    }

    #[test]
    fn reference_fit_reproduces_defaults() {
        let r =
            fit_input_pressure(&builtin_reference_points::<f64>(), &Default::default()).unwrap();
        assert_relative_eq!(
            r.coefficients.c1,
            crate::coeffs::DEFAULT_C1,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            r.coefficients.c2,
            crate::coeffs::DEFAULT_C2,
            max_relative = 1e-9
        );
        assert!(r.rms_residual <= 2_500.0);
        assert_relative_eq!(r.rms_residual, r.recomputed_rms(), max_relative = 1e-12);
        assert!(input_law_is_monotone(
            &r.coefficients,
            lpm_to_m3s(30.0),
            300
        ));
    }

    #[test]
    fn exact_linear_data() {
        let rows = (1..=4)
            .map(|i| {
                let q = i as f64 * 1e-4;
                Measurement {
                    p_in: Some(2.0 * q),
                    ..Measurement::new(q)
                }
            })
            .collect();
        let set = MeasurementSet::new("lin", rows).unwrap();
        let r = fit_input_pressure(&set, &Default::default()).unwrap();
        assert_relative_eq!(r.coefficients.c1, 2.0, max_relative = 1e-12);
        assert!(r.coefficients.c2.abs() < 1e-9);
        assert!(r.rms_residual < 1e-15);
    }

    #[test]
    fn negative_curvature_is_clamped() {
        // Concave data would want c2 < 0.
        let rows = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|&q: &f64| Measurement {
                p_in: Some(10.0 * q - q * q),
                ..Measurement::new(q)
            })
            .collect();
        let r = fit_input_pressure(
            &MeasurementSet::new("concave", rows).unwrap(),
            &Default::default(),
        )
        .unwrap();
        assert!(r.coefficients.c1 >= 0.0 && r.coefficients.c2 == 0.0);
    }

    #[test]
    fn duplicates_do_not_change_the_fit() {
        let set = builtin_reference_points::<f64>();
        let mut doubled = set.rows().to_vec();
        doubled.extend_from_slice(&set.rows()[..3]);
        let dup = MeasurementSet::new("dup", doubled).unwrap();
        assert_eq!(dup.len(), 6);
        assert_eq!(
            fit_input_pressure(&dup, &Default::default())
                .unwrap()
                .coefficients,
            fit_input_pressure(&set, &Default::default())
                .unwrap()
                .coefficients
        );
    }

    #[test]
    fn rank_deficient_data_is_rejected() {
        let rows = vec![
            Measurement {
                p_in: Some(1.0),
                ..Measurement::new(1e-4)
            },
            Measurement {
                p_in: Some(1.0),
                ..Measurement::new(0.0)
            },
        ];
        let err = fit_input_pressure(
            &MeasurementSet::new("x", rows).unwrap(),
            &Default::default(),
        )
        .unwrap_err();
        assert!(err.is_fit_failure());
        let conflicting = vec![
            Measurement {
                p_in: Some(1.0),
                ..Measurement::new(1e-4)
            },
            Measurement {
                p_in: Some(2.0),
                ..Measurement::new(1e-4)
            },
        ];
        assert!(MeasurementSet::new("x", conflicting).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let text = "q_in_lpm,p_in_kpa,p_out_kpa,a_fg_mm2\n# bench run 3\n10,13.5,,\n5, 5.4 ,0.2,0\n10,13.5,,\n";
        let set = MeasurementSet::<f64>::from_csv_reader("bench", text.as_bytes()).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.rows()[0].p_out, Some(200.0));
        assert_eq!(set.rows()[1].p_out, None);
        let mut out = Vec::new();
        set.write_csv(&mut out).unwrap();
        let back = MeasurementSet::<f64>::from_csv_reader("bench", out.as_slice()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn csv_rejects_unknown_columns() {
        let text = "q_in_lpm,pressure\n1,2\n";
        assert!(MeasurementSet::<f64>::from_csv_reader("x", text.as_bytes()).is_err());
        let text = "p_in_kpa\n2\n";
        assert!(MeasurementSet::<f64>::from_csv_reader("x", text.as_bytes()).is_err());
    }

    #[test]
    fn closure_fit_needs_p_out() {
        let d = table1_device::<f64>(TableType::B);
        let err = fit_closures(
            &[(d, builtin_reference_points())],
            &Default::default(),
            &Default::default(),
        )
        .unwrap_err();
        assert!(err.is_fit_failure());
        assert!(err.to_string().contains("p_out_kpa"));
    }

    #[test]
    fn own_output_fits_exactly() {
        let d = table1_device::<f64>(TableType::B);
        let c = ModelCoefficients::default();
        let data = synthesize(&d, &c, &grid()).unwrap();
        let r = fit_closures(&[(d, data)], &c, &Default::default()).unwrap();
        assert!(r.residuals.iter().all(|p| p.residual == 0.0));
        assert_eq!(r.coefficients, c);
        assert!(r.warnings.iter().any(|w| w.contains("c_recirc")));
    }

    #[test]
    fn one_sided_data_warns() {
        let d = table1_device::<f64>(TableType::B);
        let c = ModelCoefficients::default();
        let low: Vec<f64> = (1..=8).map(|i| lpm_to_m3s(i as f64)).collect();
        let data = synthesize(&d, &c, &low).unwrap();
        let r = fit_closures(&[(d, data)], &c, &Default::default()).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("sign")));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn recovers_generating_input_law(c1 in 0.0f64..2e8, c2 in 0.0f64..1e11, n in 2usize..12) {
            prop_assume!(c1 > 1e3 || c2 > 1e3);
            let truth = ModelCoefficients::<f64> { c1, c2, ..Default::default() };
            let rows = (1..=n)
                .map(|i| {
                    let q = lpm_to_m3s(3.0 * i as f64);
                    Measurement { p_in: Some(crate::flow::input_pressure(q, &truth)), ..Measurement::new(q) }
                })
                .collect();
            let r = fit_input_pressure(&MeasurementSet::new("synthetic", rows).unwrap(), &Default::default()).unwrap();
            let scale = c1 * lpm_to_m3s(30.0) + c2 * lpm_to_m3s(30.0f64).powi(2);
            prop_assert!((r.coefficients.c1 - c1).abs() * lpm_to_m3s(30.0) <= 1e-9 * scale);
            prop_assert!((r.coefficients.c2 - c2).abs() * lpm_to_m3s(30.0f64).powi(2) <= 1e-9 * scale);
            prop_assert!((r.rms_residual - r.recomputed_rms()).abs() <= 1e-12 * (1.0 + r.rms_residual));
            prop_assert!(input_law_is_monotone(&r.coefficients, lpm_to_m3s(30.0), 100));
        }
    }
}
