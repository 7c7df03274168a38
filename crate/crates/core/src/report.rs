//! CSV emission in bench units.
//!
//! Numbers are written with 9 significant digits in `%g` style, so files
//! are stable across platforms and runs. Summary values follow the data as
//! `# key=value` comment lines.

use std::io::Write;

use crate::calib::FitReport;
use crate::engine::{Comparison, OperatingState, OptimizeResult, OrderingCheck, SweepResult};
use crate::error::Result;
use crate::friction::FrictionPoint;
use crate::units::{m2_to_mm2, m3s_to_lpm, m_to_mm, pa_to_kpa};
use crate::Scalar;

pub const SWEEP_HEADER: &str =
    "q_in_lpm,p_in_kpa,p_chamber_kpa,a_fg_mm2,a_fg_over_a_ex,p_out_kpa,mode";
const SI_HEADER: &str = "q_in_m3s,p_in_pa,p_chamber_pa,a_fg_m2,p_out_pa";

/// `%.9g`.
pub fn fmt_g(x: f64) -> String {
    fmt_sig(x, 9)
}

/// C-style `%.{sig}g`: shortest of fixed and exponent notation, trailing
/// zeros removed.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn g<T: Scalar>(x: T) -> String {
    fmt_g(x.to_f64_lossy())
}

fn opt_g<T: Scalar>(x: Option<T>) -> String {
    x.map_or_else(|| "none".to_string(), g)
}

fn state_row<T: Scalar>(s: &OperatingState<T>, si: bool) -> String {
    let mut row = [
        g(m3s_to_lpm(s.q_in)),
        g(pa_to_kpa(s.p_in)),
        g(pa_to_kpa(s.p_chamber)),
        g(m2_to_mm2(s.a_fg)),
        g(s.a_fg_over_a_ex),
        g(pa_to_kpa(s.p_out)),
        s.mode.to_string(),
    ]
    .join(",");
    if si {
        for v in [s.q_in, s.p_in, s.p_chamber, s.a_fg, s.p_out] {
            row.push(',');
            row.push_str(&g(v));
        }
    }
    row
}

/// Header and one row per state.
pub fn write_states_csv<T: Scalar>(
    mut w: impl Write,
    states: &[OperatingState<T>],
    si: bool,
) -> Result<()> {
    if si {
        writeln!(w, "{SWEEP_HEADER},{SI_HEADER}")?;
    } else {
        writeln!(w, "{SWEEP_HEADER}")?;
    }
    for s in states {
        writeln!(w, "{}", state_row(s, si))?;
    }
    Ok(())
}

/// Sweep table followed by `# switching_q_lpm=…` and the other summary
/// values.
pub fn write_sweep_csv<T: Scalar>(
    mut w: impl Write,
    label: &str,
    r: &SweepResult<T>,
    si: bool,
) -> Result<()> {
    write_states_csv(&mut w, &r.states, si)?;
    writeln!(w, "# device={label}")?;
    writeln!(
        w,
        "# switching_q_lpm={}",
        opt_g(r.switching_q.map(m3s_to_lpm))
    )?;
    writeln!(
        w,
        "# switching_p_in_kpa={}",
        opt_g(r.switching_p_in.map(pa_to_kpa))
    )?;
    writeln!(w, "# sign_changes={}", r.sign_changes)?;
    writeln!(w, "# max_blow_kpa={}", g(pa_to_kpa(r.max_blow)))?;
    writeln!(w, "# max_suck_kpa={}", g(pa_to_kpa(r.max_suck)))?;
    let supersonic = r.states.iter().filter(|s| s.supersonic).count();
    writeln!(w, "# supersonic_points={supersonic}")?;
    Ok(())
}

pub const COMPARISON_HEADER: &str =
    "type,label,switching_q_lpm,switching_p_in_kpa,max_blow_kpa,max_suck_kpa,suction_at_end_kpa,sign_changes";

/// One row per device, then one `# ordering …` line per trend check.
pub fn write_comparison_csv<T: Scalar>(
    mut w: impl Write,
    cmp: &Comparison<T>,
    checks: &[OrderingCheck],
) -> Result<()> {
    writeln!(w, "{COMPARISON_HEADER}")?;
    for row in &cmp.rows {
        let r = &row.sweep;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            row.kind.map_or_else(|| "-".to_string(), |k| k.to_string()),
            row.label,
            opt_g(r.switching_q.map(m3s_to_lpm)),
            opt_g(r.switching_p_in.map(pa_to_kpa)),
            g(pa_to_kpa(r.max_blow)),
            g(pa_to_kpa(r.max_suck)),
            g(pa_to_kpa(row.suction_at_end())),
            r.sign_changes,
        )?;
    }
    for c in checks {
        writeln!(w, "# ordering {} holds={}", c.describe(), c.holds)?;
    }
    Ok(())
}

pub const FRICTION_HEADER: &str = "q_in_lpm,p_out_kpa,mode,n_eff_n,mu_s,mu_k";

pub fn write_friction_csv<T: Scalar>(
    mut w: impl Write,
    points: &[FrictionPoint<T>],
    weight: T,
    a_eff: T,
) -> Result<()> {
    writeln!(w, "{FRICTION_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            g(m3s_to_lpm(p.state.q_in)),
            g(pa_to_kpa(p.state.p_out)),
            p.state.mode,
            g(p.prediction.n_eff),
            g(p.prediction.mu_s),
            g(p.prediction.mu_k),
        )?;
    }
    writeln!(w, "# weight_n={}", g(weight))?;
    writeln!(w, "# a_eff_cm2={}", g(a_eff * T::lit(1e4)))?;
    Ok(())
}

pub const FIT_HEADER: &str = "label,q_in_lpm,observed_kpa,fitted_kpa,residual_kpa";

/// Residual table, then the fitted coefficients in SI as comments.
pub fn write_fit_csv<T: Scalar>(mut w: impl Write, r: &FitReport<T>) -> Result<()> {
    writeln!(w, "{FIT_HEADER}")?;
    for p in &r.residuals {
        writeln!(
            w,
            "{},{},{},{},{}",
            p.label,
            g(m3s_to_lpm(p.q_in)),
            g(pa_to_kpa(p.observed)),
            g(pa_to_kpa(p.fitted)),
            g(pa_to_kpa(p.residual)),
        )?;
    }
    let c = &r.coefficients;
    writeln!(w, "# quantity={}", r.quantity)?;
    writeln!(w, "# rms_residual_kpa={}", g(pa_to_kpa(r.rms_residual)))?;
    for (k, v) in [
        ("c1", c.c1),
        ("c2", c.c2),
        ("k0", c.k0),
        ("p_c", c.p_c),
        ("eta", c.eta),
        ("c_recirc", c.c_recirc),
        ("leak_fraction", c.leak_fraction),
    ] {
        writeln!(w, "# {k}={}", g(v))?;
    }
    for warning in &r.warnings {
        writeln!(w, "# warning={warning}")?;
    }
    Ok(())
}

pub const OPTIMIZE_HEADER: &str = "w_mm,t_mm,h_mm,a_ne_mm2,objective,evaluations,converged";

pub fn write_optimize_csv<T: Scalar>(mut w: impl Write, r: &OptimizeResult<T>) -> Result<()> {
    writeln!(w, "{OPTIMIZE_HEADER}")?;
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        g(m_to_mm(r.design.w)),
        g(m_to_mm(r.design.t)),
        g(m_to_mm(r.design.h)),
        g(m2_to_mm2(r.design.a_ne)),
        g(r.value),
        r.evaluations,
        r.converged,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{table1_device, TableType};
    use crate::engine::{sweep_with, SweepOptions};
    use crate::units::lpm_to_m3s;

    #[test]
    fn percent_g_formatting() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(-0.0), "0");
        assert_eq!(fmt_g(30.0), "30");
        assert_eq!(fmt_g(0.1), "0.1");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_g(123456789.0), "123456789");
        assert_eq!(fmt_g(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(0.00001234), "1.234e-05");
        assert_eq!(fmt_g(-2.5e-10), "-2.5e-10");
        assert_eq!(fmt_g(f64::NAN), "nan");
        assert_eq!(fmt_sig(2.0 / 3.0, 3), "0.667");
        assert_eq!(fmt_g(0.30000000000000004), "0.3");
    }

    #[test]
    fn sweep_csv_shape() {
        let d = table1_device::<f64>(TableType::B);
        let opts = SweepOptions {
            workers: Some(1),
            ..Default::default()
        };
        let r = sweep_with(
            &d,
            &Default::default(),
            0.0,
            lpm_to_m3s(30.0),
            lpm_to_m3s(0.1),
            &opts,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &d.label, &r, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 302);
        assert!(lines[1].starts_with("0,0,0,0,0,0,neutral"));
        assert!(text.ends_with('\n'));
        assert!(lines.iter().any(|l| l.starts_with("# switching_q_lpm=1")));

        let mut si = Vec::new();
        write_sweep_csv(&mut si, &d.label, &r, true).unwrap();
        let first = String::from_utf8(si).unwrap();
        assert_eq!(first.lines().next().unwrap().split(',').count(), 12);
    }
}
