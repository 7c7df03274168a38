//! `fdr`: command-line front end for the flow-direction reversal simulator.
//!
//! Flags use bench units (L/min, kPa, mm, mm², N). Everything is converted
//! to SI before it reaches the library.
//!
//! Exit codes: 0 success, 2 bad input or configuration, 3 solver failure,
//! 4 fit failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use fdr_core::calib::{
    builtin_reference_points, fit_closures, fit_input_pressure, ClosureFitOptions,
};
use fdr_core::config::{load_coefficients, load_device};
use fdr_core::device::{table1_device, TableType};
use fdr_core::engine::{
    compare_designs, optimize_geometry, ordering_checks, solve_operating_point, sweep_with,
    workers_from_env, DesignBounds, DesignPoint, Objective, OptimizeOptions, SweepOptions,
};
use fdr_core::friction::friction_curve;
use fdr_core::optim::NelderMeadOptions;
use fdr_core::report::{
    write_comparison_csv, write_fit_csv, write_friction_csv, write_optimize_csv, write_states_csv,
    write_sweep_csv,
};
use fdr_core::units::{cm2_to_m2, gram_force_to_newton, kpa_to_pa, lpm_to_m3s, mm2_to_m2, mm_to_m};
use fdr_core::{Device, Error, FitReport, MeasurementSet, ModelCoefficients, Result};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "fdr",
    version,
    about = "Simulate single-input pneumatic flow-direction reversal devices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one operating point.
    Simulate(SimulateArgs),
    /// Ramp the supply flow and record every steady state.
    Sweep(SweepArgs),
    /// Sweep several catalogue devices under one coefficient set and check the design trends.
    Compare(CompareArgs),
    /// Fit the input pressure law and, when p_out is measured, the closure coefficients.
    Calibrate(CalibrateArgs),
    /// Search gate dimensions and nozzle area for a design objective.
    Optimize(OptimizeArgs),
    /// Predict friction coefficients of a pad under the output port.
    Friction(FrictionArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
#[group(multiple = false)]
struct DeviceArgs {
    /// Catalogue device letter, A to K [default: B].
    #[arg(long = "type", value_name = "LETTER")]
    kind: Option<String>,
    /// Device file (JSON, keys suffixed with their unit, e.g. w_mm).
    #[arg(long, value_name = "FILE")]
    device: Option<PathBuf>,
}

impl DeviceArgs {
    fn load(&self) -> Result<Device> {
        match (&self.kind, &self.device) {
            (_, Some(path)) => load_device(path),
            (Some(letter), None) => Ok(table1_device(parse_type(letter)?)),
            (None, None) => Ok(table1_device(TableType::B)),
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Coefficient file (JSON, SI units); a saved calibration report also works.
    #[arg(long, value_name = "FILE")]
    coeffs: Option<PathBuf>,
    /// Switch off the recirculation penalty for wide channels.
    #[arg(long)]
    no_recirculation: bool,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn coefficients(&self) -> Result<ModelCoefficients> {
        let c = match &self.coeffs {
            Some(path) => load_coefficients(path)?,
            None => ModelCoefficients::default(),
        };
        Ok(if self.no_recirculation {
            c.without_recirculation()
        } else {
            c
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    device: DeviceArgs,
    /// Supply flow rate [L/min].
    #[arg(long, value_name = "L/MIN", default_value_t = 10.0)]
    qin_lpm: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct RampArgs {
    /// First supply flow of the ramp [L/min].
    #[arg(long, value_name = "L/MIN", default_value_t = 0.0)]
    q_start_lpm: f64,
    /// Last supply flow of the ramp, inclusive [L/min].
    #[arg(long, value_name = "L/MIN", default_value_t = 30.0)]
    q_end_lpm: f64,
    /// Ramp step [L/min].
    #[arg(long, value_name = "L/MIN", default_value_t = 0.1)]
    step_lpm: f64,
}

impl RampArgs {
    fn si(&self) -> (f64, f64, f64) {
        (
            lpm_to_m3s(self.q_start_lpm),
            lpm_to_m3s(self.q_end_lpm),
            lpm_to_m3s(self.step_lpm),
        )
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    device: DeviceArgs,
    #[command(flatten)]
    ramp: RampArgs,
    /// Append SI columns (m³/s, Pa, m²) to the CSV.
    #[arg(long)]
    si: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated catalogue letters [default: all of A to K].
    #[arg(long, value_name = "LETTERS", value_delimiter = ',')]
    types: Vec<String>,
    #[command(flatten)]
    ramp: RampArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Measurement CSV (q_in_lpm plus any of p_in_kpa, p_out_kpa, a_fg_mm2), or `builtin`
    /// for the built-in input pressure points. Repeat for several devices.
    #[arg(long, value_name = "FILE|builtin", required = true)]
    data: Vec<String>,
    /// Catalogue letter of the device behind each data file, in the same order; a single
    /// letter applies to every file [default: B].
    #[arg(
        long = "type",
        value_name = "LETTER",
        value_delimiter = ',',
        conflicts_with = "device"
    )]
    kind: Vec<String>,
    /// Device file used for every data file instead of --type.
    #[arg(long, value_name = "FILE")]
    device: Option<PathBuf>,
    /// Objective evaluation budget per closure-fit start.
    #[arg(long, value_name = "COUNT", default_value_t = 1200)]
    max_evals: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
#[command(group(ArgGroup::new("objective").required(true).args([
    "target_switching_kpa", "min_switching", "max_suction_lpm", "max_blowing_lpm", "match_type",
])))]
struct OptimizeArgs {
    #[command(flatten)]
    device: DeviceArgs,
    /// Aim the switching input pressure at this value [kPa].
    #[arg(long, value_name = "KPA")]
    target_switching_kpa: Option<f64>,
    /// Make the device switch at the lowest input pressure.
    #[arg(long)]
    min_switching: bool,
    /// Maximize suction at this supply flow [L/min].
    #[arg(long, value_name = "L/MIN")]
    max_suction_lpm: Option<f64>,
    /// Maximize blowing at this supply flow [L/min].
    #[arg(long, value_name = "L/MIN")]
    max_blowing_lpm: Option<f64>,
    /// Reproduce the simulated p_out and a_fg/a_ex curve of this catalogue device.
    #[arg(long, value_name = "LETTER")]
    match_type: Option<String>,
    /// Flow spacing of the curve target for --match-type [L/min].
    #[arg(long, value_name = "L/MIN", default_value_t = 1.0)]
    match_step_lpm: f64,
    /// Gate width bounds, LOW,HIGH [mm].
    #[arg(long, value_name = "MM,MM", value_delimiter = ',', default_values_t = [6.0, 10.0])]
    w_mm: Vec<f64>,
    /// Gate thickness bounds, LOW,HIGH [mm].
    #[arg(long, value_name = "MM,MM", value_delimiter = ',', default_values_t = [0.35, 0.65])]
    t_mm: Vec<f64>,
    /// Gate height bounds, LOW,HIGH [mm].
    #[arg(long, value_name = "MM,MM", value_delimiter = ',', default_values_t = [1.5, 2.5])]
    h_mm: Vec<f64>,
    /// Nozzle area bounds per nozzle, LOW,HIGH [mm²]; fixed at the base device when omitted.
    #[arg(long, value_name = "MM2,MM2", value_delimiter = ',')]
    a_ne_mm2: Vec<f64>,
    /// Starting design W,T,H [mm] with optional nozzle area [mm²]; the base device when omitted.
    #[arg(long, value_name = "MM,MM,MM[,MM2]", value_delimiter = ',')]
    start: Vec<f64>,
    /// Objective evaluation budget.
    #[arg(long, value_name = "COUNT", default_value_t = 400)]
    max_evals: usize,
    /// Ramp used to locate the switching point.
    #[command(flatten)]
    ramp: OptimizeRamp,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OptimizeRamp {
    /// Last supply flow of the switching ramp [L/min].
    #[arg(long, value_name = "L/MIN", default_value_t = 30.0)]
    q_end_lpm: f64,
    /// Step of the switching ramp [L/min].
    #[arg(long, value_name = "L/MIN", default_value_t = 0.5)]
    step_lpm: f64,
}

#[derive(Args)]
#[command(group(ArgGroup::new("load").required(true).args(["weight_n", "weight_gf"])))]
struct FrictionArgs {
    #[command(flatten)]
    device: DeviceArgs,
    /// Dead weight on the pad [N].
    #[arg(long, value_name = "N")]
    weight_n: Option<f64>,
    /// Dead weight on the pad [gf].
    #[arg(long, value_name = "GF")]
    weight_gf: Option<f64>,
    /// Static friction coefficient with the device off [-].
    #[arg(long, value_name = "MU", default_value_t = 1.0)]
    mu0_s: f64,
    /// Kinetic friction coefficient with the device off [-].
    #[arg(long, value_name = "MU", default_value_t = 1.0)]
    mu0_k: f64,
    /// Area over which the output pressure acts on the pad [cm²].
    #[arg(long, value_name = "CM2", default_value_t = 1.0)]
    a_eff_cm2: f64,
    /// Comma-separated supply flows [L/min].
    #[arg(long, value_name = "L/MIN,...", value_delimiter = ',', default_values_t = [0.0, 10.0, 20.0, 30.0])]
    qin_lpm: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: CommonArgs,
}

fn parse_type(letter: &str) -> Result<TableType> {
    letter.parse().map_err(|e| match e {
        Error::Domain(msg) => Error::Config(msg),
        other => other,
    })
}

fn pair(name: &str, v: &[f64]) -> Result<(f64, f64)> {
    match v {
        [lo, hi] => Ok((*lo, *hi)),
        _ => Err(Error::Config(format!(
            "--{name} takes LOW,HIGH, got {} values",
            v.len()
        ))),
    }
}

fn sweep_options() -> Result<SweepOptions<f64>> {
    Ok(SweepOptions {
        workers: workers_from_env()?,
        ..SweepOptions::default()
    })
}

fn json_bytes(v: &serde_json::Value) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(v)?;
    buf.push(b'\n');
    Ok(buf)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn simulate(args: &SimulateArgs) -> Result<Vec<u8>> {
    let device = args.device.load()?;
    let coeffs = args.common.coefficients()?;
    let s = solve_operating_point(lpm_to_m3s(args.qin_lpm), &device, &coeffs)?;
    let mut buf = Vec::new();
    match args.format {
        Format::Csv => {
            write_states_csv(&mut buf, std::slice::from_ref(&s), true)?;
            writeln!(buf, "# device={}", device.label)?;
        }
        Format::Json => {
            let v = json!({
                "device": device.label,
                "q_in_lpm": args.qin_lpm,
                "p_in_kpa": s.p_in / 1e3,
                "p_chamber_kpa": s.p_chamber / 1e3,
                "a_fg_mm2": s.a_fg * 1e6,
                "a_fg_over_a_ex": s.a_fg_over_a_ex,
                "p_out_kpa": s.p_out / 1e3,
                "mode": s.mode,
                "supersonic": s.supersonic,
                "si": s,
            });
            buf = json_bytes(&v)?;
        }
    }
    Ok(buf)
}

fn sweep(args: &SweepArgs) -> Result<Vec<u8>> {
    let device = args.device.load()?;
    let coeffs = args.common.coefficients()?;
    let (start, end, step) = args.ramp.si();
    let r = sweep_with(&device, &coeffs, start, end, step, &sweep_options()?)?;
    let mut buf = Vec::new();
    match args.format {
        Format::Csv => write_sweep_csv(&mut buf, &device.label, &r, args.si)?,
        Format::Json => buf = json_bytes(&json!({ "device": device.label, "sweep": r }))?,
    }
    Ok(buf)
}

fn compare(args: &CompareArgs) -> Result<Vec<u8>> {
    let kinds: Vec<TableType> = if args.types.is_empty() {
        TableType::ALL.to_vec()
    } else {
        args.types
            .iter()
            .map(|t| parse_type(t))
            .collect::<Result<_>>()?
    };
    let coeffs = args.common.coefficients()?;
    let (start, end, step) = args.ramp.si();
    let cmp = compare_designs(&kinds, &coeffs, start, end, step, &sweep_options()?)?;
    let checks = ordering_checks(&cmp);
    let mut buf = Vec::new();
    match args.format {
        Format::Csv => write_comparison_csv(&mut buf, &cmp, &checks)?,
        Format::Json => buf = json_bytes(&json!({ "comparison": cmp, "orderings": checks }))?,
    }
    Ok(buf)
}

fn calibration_devices(args: &CalibrateArgs) -> Result<Vec<Device>> {
    if let Some(path) = &args.device {
        let d = load_device(path)?;
        return Ok(vec![d; args.data.len()]);
    }
    let letters: Vec<&str> = match args.kind.len() {
        0 => vec!["B"; args.data.len()],
        1 => vec![args.kind[0].as_str(); args.data.len()],
        n if n == args.data.len() => args.kind.iter().map(String::as_str).collect(),
        n => {
            return Err(Error::Config(format!(
                "{n} device letters for {} data files; give one letter or one per file",
                args.data.len()
            )))
        }
    };
    letters
        .into_iter()
        .map(|l| Ok(table1_device(parse_type(l)?)))
        .collect()
}

fn load_measurements(source: &str) -> Result<MeasurementSet> {
    if ["builtin", "paper"]
        .iter()
        .any(|k| source.eq_ignore_ascii_case(k))
    {
        Ok(builtin_reference_points())
    } else {
        MeasurementSet::from_csv_path(source).map_err(|e| match e {
            Error::Domain(msg) => Error::Config(msg),
            other => other,
        })
    }
}

fn calibrate(args: &CalibrateArgs) -> Result<Vec<u8>> {
    let base = args.common.coefficients()?;
    let devices = calibration_devices(args)?;
    let sets = args
        .data
        .iter()
        .map(|s| load_measurements(s))
        .collect::<Result<Vec<_>>>()?;

    let mut reports: Vec<FitReport> = Vec::new();
    let mut coeffs = base;
    let input_rows: Vec<_> = sets
        .iter()
        .flat_map(|s| s.rows().iter().filter(|r| r.p_in.is_some()).copied())
        .collect();
    if !input_rows.is_empty() {
        let label = sets
            .iter()
            .map(|s| s.label.as_str())
            .collect::<Vec<_>>()
            .join("+");
        let merged =
            MeasurementSet::new(label, input_rows).map_err(|e| Error::Fit(e.to_string()))?;
        let r = fit_input_pressure(&merged, &coeffs)?;
        coeffs = r.coefficients;
        reports.push(r);
    }
    if sets
        .iter()
        .any(|s| s.rows().iter().any(|r| r.p_out.is_some()))
    {
        let data: Vec<(Device, MeasurementSet)> = devices.into_iter().zip(sets).collect();
        let options = ClosureFitOptions {
            nelder_mead: NelderMeadOptions {
                max_evals: args.max_evals,
                ..ClosureFitOptions::default().nelder_mead
            },
            ..ClosureFitOptions::default()
        };
        let r = fit_closures(&data, &coeffs, &options)?;
        reports.push(r);
    }
    if reports.is_empty() {
        return Err(Error::Fit(
            "data holds neither p_in_kpa nor p_out_kpa values".into(),
        ));
    }
    for r in &reports {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }

    let mut buf = Vec::new();
    match args.format {
        Format::Csv => {
            for r in &reports {
                write_fit_csv(&mut buf, r)?;
            }
        }
        Format::Json => {
            let v = if reports.len() == 1 {
                serde_json::to_value(&reports[0])?
            } else {
                let last = reports.last().expect("two reports");
                json!({ "coefficients": last.coefficients, "reports": reports })
            };
            buf = json_bytes(&v)?;
        }
    }
    Ok(buf)
}

fn optimize(args: &OptimizeArgs) -> Result<Vec<u8>> {
    let base = args.device.load()?;
    let coeffs = args.common.coefficients()?;
    let objective = if let Some(kpa) = args.target_switching_kpa {
        Objective::TargetSwitchingPin {
            p_in: kpa_to_pa(kpa),
        }
    } else if args.min_switching {
        Objective::MinimizeSwitchingPin
    } else if let Some(q) = args.max_suction_lpm {
        Objective::MaxSuction {
            q_in: lpm_to_m3s(q),
        }
    } else if let Some(q) = args.max_blowing_lpm {
        Objective::MaxBlowing {
            q_in: lpm_to_m3s(q),
        }
    } else if let Some(letter) = &args.match_type {
        let target = table1_device(parse_type(letter)?);
        if args.match_step_lpm.is_nan() || args.match_step_lpm <= 0.0 {
            return Err(Error::Config("--match-step-lpm must be positive".into()));
        }
        let n = (args.ramp.q_end_lpm / args.match_step_lpm + 1e-9).floor() as usize;
        let qs = (0..=n)
            .map(|i| lpm_to_m3s(i as f64 * args.match_step_lpm))
            .collect();
        Objective::match_device(&target, &coeffs, qs)?
    } else {
        return Err(Error::Config("no objective given".into()));
    };

    let nominal = DesignPoint::of(&base);
    let (w, t, h) = (
        pair("w-mm", &args.w_mm)?,
        pair("t-mm", &args.t_mm)?,
        pair("h-mm", &args.h_mm)?,
    );
    let a_ne = if args.a_ne_mm2.is_empty() {
        (nominal.a_ne, nominal.a_ne)
    } else {
        let (lo, hi) = pair("a-ne-mm2", &args.a_ne_mm2)?;
        (mm2_to_m2(lo), mm2_to_m2(hi))
    };
    let bounds = DesignBounds {
        lower: DesignPoint {
            w: mm_to_m(w.0),
            t: mm_to_m(t.0),
            h: mm_to_m(h.0),
            a_ne: a_ne.0,
        },
        upper: DesignPoint {
            w: mm_to_m(w.1),
            t: mm_to_m(t.1),
            h: mm_to_m(h.1),
            a_ne: a_ne.1,
        },
    };
    bounds.check().map_err(|e| Error::Config(e.to_string()))?;
    let start = match args.start.as_slice() {
        [] => None,
        [w, t, h] => Some(DesignPoint {
            w: mm_to_m(*w),
            t: mm_to_m(*t),
            h: mm_to_m(*h),
            a_ne: nominal.a_ne,
        }),
        [w, t, h, a] => Some(DesignPoint {
            w: mm_to_m(*w),
            t: mm_to_m(*t),
            h: mm_to_m(*h),
            a_ne: mm2_to_m2(*a),
        }),
        v => {
            return Err(Error::Config(format!(
                "--start takes 3 or 4 values, got {}",
                v.len()
            )))
        }
    };
    let options = OptimizeOptions {
        nelder_mead: NelderMeadOptions {
            max_evals: args.max_evals,
            ..NelderMeadOptions::default()
        },
        start,
        q_end: lpm_to_m3s(args.ramp.q_end_lpm),
        q_step: lpm_to_m3s(args.ramp.step_lpm),
        ..OptimizeOptions::default()
    };
    let r = optimize_geometry(&base, &objective, &bounds, &coeffs, &options)?;
    let mut buf = Vec::new();
    match args.format {
        Format::Csv => write_optimize_csv(&mut buf, &r)?,
        Format::Json => buf = json_bytes(&serde_json::to_value(&r)?)?,
    }
    Ok(buf)
}

fn friction(args: &FrictionArgs) -> Result<Vec<u8>> {
    let device = args.device.load()?;
    let coeffs = args.common.coefficients()?;
    let weight = match (args.weight_n, args.weight_gf) {
        (Some(n), _) => n,
        (None, Some(gf)) => gram_force_to_newton(gf),
        (None, None) => return Err(Error::Config("a weight is required".into())),
    };
    let qs: Vec<f64> = args.qin_lpm.iter().map(|&q| lpm_to_m3s(q)).collect();
    let a_eff = cm2_to_m2(args.a_eff_cm2);
    let points = friction_curve(&device, &coeffs, args.mu0_s, args.mu0_k, weight, a_eff, &qs)?;
    let mut buf = Vec::new();
    match args.format {
        Format::Csv => write_friction_csv(&mut buf, &points, weight, a_eff)?,
        Format::Json => {
            buf = json_bytes(
                &json!({ "device": device.label, "weight_n": weight, "a_eff_m2": a_eff, "points": points }),
            )?
        }
    }
    Ok(buf)
}

fn exit_code(e: &Error) -> u8 {
    if e.is_solver_failure() {
        3
    } else if e.is_fit_failure() {
        4
    } else {
        2
    }
}

fn run(cli: &Cli) -> Result<()> {
    let (bytes, out) = match &cli.command {
        Command::Simulate(a) => (simulate(a)?, &a.common.out),
        Command::Sweep(a) => (sweep(a)?, &a.common.out),
        Command::Compare(a) => (compare(a)?, &a.common.out),
        Command::Calibrate(a) => (calibrate(a)?, &a.common.out),
        Command::Optimize(a) => (optimize(a)?, &a.common.out),
        Command::Friction(a) => (friction(a)?, &a.common.out),
    };
    emit(out.as_deref(), &bytes)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
