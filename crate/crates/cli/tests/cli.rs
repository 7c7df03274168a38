use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdr"))
        .args(args)
        .env_remove("FDR_WORKERS")
        .output()
        .expect("binary runs")
}

fn fdr_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdr"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .collect()
}

fn comment(text: &str, key: &str) -> String {
    let prefix = format!("# {key}=");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} line"))
        .to_string()
}

fn sweep_file(dir: &Path, name: &str, kind: &str) -> String {
    let path = dir.join(name);
    let o = fdr(&["sweep", "--type", kind, "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    fs::read_to_string(path).unwrap()
}

#[test]
fn simulate_modes() {
    let text = stdout(&fdr(&["simulate", "--type", "B", "--qin-lpm", "30"]));
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(6), Some("suction"));
    let text = stdout(&fdr(&["simulate", "--type", "b", "--qin-lpm", "10"]));
    assert_eq!(
        text.lines().nth(1).unwrap().split(',').nth(6),
        Some("blowing")
    );
}

#[test]
fn simulate_at_rest_is_all_zero() {
    let text = stdout(&fdr(&["simulate", "--type", "B", "--qin-lpm", "0"]));
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "0,0,0,0,0,0,neutral,0,0,0,0,0"
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&fdr(&[
        "simulate",
        "--qin-lpm",
        "0",
        "--format",
        "json",
    ])))
    .unwrap();
    assert_eq!(json["p_out_kpa"], 0.0);
    assert_eq!(json["mode"], "neutral");
    assert_eq!(json["si"]["p_in"], 0.0);
}

#[test]
fn unknown_type_exits_2_and_lists_letters() {
    let o = fdr(&["simulate", "--type", "Z"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("A, B, C, D, E, F, G, H, I, J, K"), "{err}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"w_mm": -1}"#).unwrap();
    let o = fdr(&["simulate", "--device", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = fdr(&["simulate", "--qin-lpm", "-5"]);
    assert_eq!(o.status.code(), Some(2));

    let o = fdr(&["sweep", "--coeffs", "/nonexistent/coeffs.json"]);
    assert_eq!(o.status.code(), Some(2));

    let o = fdr_env(&["sweep"], "FDR_WORKERS", "zero");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FDR_WORKERS"));
}

#[test]
fn fit_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flow_only.csv");
    fs::write(&data, "q_in_lpm,a_fg_mm2\n10,0.5\n20,1.0\n").unwrap();
    let o = fdr(&["calibrate", "--data", data.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn sweep_has_301_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let text = sweep_file(dir.path(), "b.csv", "B");
    assert!(text
        .starts_with("q_in_lpm,p_in_kpa,p_chamber_kpa,a_fg_mm2,a_fg_over_a_ex,p_out_kpa,mode\n"));
    assert_eq!(data_rows(&text).len(), 301);
    assert!(text.ends_with('\n'));
    assert_eq!(comment(&text, "sign_changes"), "1");
    let q: f64 = comment(&text, "switching_q_lpm").parse().unwrap();
    assert!(q > 10.0 && q < 30.0);
}

#[test]
fn sweep_si_columns() {
    let text = stdout(&fdr(&["sweep", "--si", "--step-lpm", "1"]));
    assert!(text
        .lines()
        .next()
        .unwrap()
        .ends_with(",q_in_m3s,p_in_pa,p_chamber_pa,a_fg_m2,p_out_pa"));
    assert_eq!(data_rows(&text).len(), 31);
    assert!(data_rows(&text).iter().all(|r| r.split(',').count() == 12));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = sweep_file(dir.path(), "a.csv", "B");
    let b = sweep_file(dir.path(), "b.csv", "B");
    assert_eq!(a, b);
}

#[test]
fn worker_count_does_not_change_output() {
    let one = fdr_env(&["sweep", "--type", "C", "--si"], "FDR_WORKERS", "1");
    let four = fdr_env(&["sweep", "--type", "C", "--si"], "FDR_WORKERS", "4");
    assert_eq!(stdout(&one), stdout(&four));
    let one = fdr_env(&["compare"], "FDR_WORKERS", "1");
    let four = fdr_env(&["compare"], "FDR_WORKERS", "4");
    assert_eq!(stdout(&one), stdout(&four));
}

#[test]
fn lower_gate_switches_earlier() {
    let dir = tempfile::tempdir().unwrap();
    let b: f64 = comment(&sweep_file(dir.path(), "b.csv", "B"), "switching_q_lpm")
        .parse()
        .unwrap();
    let f: f64 = comment(&sweep_file(dir.path(), "f.csv", "F"), "switching_q_lpm")
        .parse()
        .unwrap();
    assert!(f < b, "F {f} vs B {b}");
}

#[test]
fn compare_three_widths() {
    let text = stdout(&fdr(&["compare", "--types", "A,B,C"]));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 3);
    let p: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(p[0] > p[1] && p[1] > p[2], "{p:?}");
    assert!(text.contains("# ordering switching_p_in: A > B > C holds=true"));
}

#[test]
fn friction_rows_follow_mode_ordering() {
    let text = stdout(&fdr(&[
        "friction",
        "--type",
        "B",
        "--weight-n",
        "0.157",
        "--qin-lpm",
        "0,10,20,30",
    ]));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 4);
    let mu: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(mu[1] < mu[0] && mu[0] < mu[2] && mu[2] < mu[3], "{mu:?}");
}

#[test]
fn friction_weight_in_gram_force() {
    let n = stdout(&fdr(&["friction", "--weight-n", "0.980665"]));
    let gf = stdout(&fdr(&["friction", "--weight-gf", "100"]));
    assert_eq!(n, gf);
    let o = fdr(&["friction"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibrate_builtin_points() {
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&fdr(&["calibrate", "--data", "builtin"]))).unwrap();
    let rms = json["rms_residual"].as_f64().unwrap();
    assert!(rms <= 2_500.0, "rms {rms} Pa");
    assert_eq!(json["residuals"].as_array().unwrap().len(), 6);
    assert!(json["coefficients"]["c1"].as_f64().unwrap() > 0.0);
}

#[test]
fn calibration_report_feeds_back_as_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("fit.json");
    let o = fdr(&[
        "calibrate",
        "--data",
        "paper",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let with = stdout(&fdr(&[
        "simulate",
        "--qin-lpm",
        "20",
        "--coeffs",
        report.to_str().unwrap(),
    ]));
    let without = stdout(&fdr(&["simulate", "--qin-lpm", "20"]));
    // The fitted input law is the default one up to rounding.
    assert_eq!(
        with.lines().nth(1).unwrap().split(',').nth(6),
        without.lines().nth(1).unwrap().split(',').nth(6)
    );
}

#[test]
fn closure_calibration_from_measured_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("b.csv");
    let mut text = String::from("q_in_lpm,p_out_kpa\n");
    // p_out from the default model on a coarse grid.
    let model = stdout(&fdr(&["sweep", "--step-lpm", "2"]));
    for row in data_rows(&model) {
        let cols: Vec<&str> = row.split(',').collect();
        text.push_str(&format!("{},{}\n", cols[0], cols[5]));
    }
    fs::write(&data, text).unwrap();
    let o = fdr(&[
        "calibrate",
        "--data",
        data.to_str().unwrap(),
        "--type",
        "B",
        "--format",
        "csv",
    ]);
    let out = stdout(&o);
    assert!(out.starts_with("label,q_in_lpm,observed_kpa,fitted_kpa,residual_kpa\n"));
    let rms: f64 = comment(&out, "rms_residual_kpa").parse().unwrap();
    assert!(rms < 1e-3, "rms {rms} kPa");
    assert!(String::from_utf8_lossy(&o.stderr).contains("c_recirc held"));
}

#[test]
fn optimize_recovers_nominal_gate() {
    let text = stdout(&fdr(&[
        "optimize",
        "--match-type",
        "B",
        "--start",
        "6.4,0.6,2.4",
    ]));
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .take(3)
        .map(|v| v.parse().unwrap())
        .collect();
    for (got, want) in row.iter().zip([8.0, 0.5, 2.0]) {
        assert!(((got - want) / want).abs() < 0.05, "{row:?}");
    }
    let evals: usize = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(5)
        .unwrap()
        .parse()
        .unwrap();
    assert!(evals <= 400);
}

#[test]
fn optimize_needs_an_objective() {
    let o = fdr(&["optimize"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fdr(&["optimize", "--min-switching", "--w-mm", "6"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_lists_units() {
    let expectations: [(&str, &[&str]); 6] = [
        ("simulate", &["[L/min]"]),
        ("sweep", &["[L/min]", "m³/s"]),
        ("compare", &["[L/min]"]),
        ("calibrate", &["q_in_lpm", "p_in_kpa"]),
        ("optimize", &["[kPa]", "[L/min]", "[mm]", "[mm²]"]),
        ("friction", &["[N]", "[gf]", "[cm²]", "[L/min]"]),
    ];
    for (cmd, units) in expectations {
        let text = stdout(&fdr(&[cmd, "--help"]));
        for u in units {
            assert!(text.contains(u), "{cmd} --help lacks {u}");
        }
    }
}
