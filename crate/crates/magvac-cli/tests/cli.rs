use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn magvac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magvac")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", stdout(o)))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("magvac-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn value(report: &Value, name: &str) -> f64 {
    report["values"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["name"] == name)
        .unwrap_or_else(|| panic!("no value {name}"))["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(magvac(&["--help"]).status.code(), Some(0));
    assert_eq!(magvac(&["sweep", "--help"]).status.code(), Some(0));
    let v = magvac(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).starts_with("magvac "));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(magvac(&[]).status.code(), Some(1));
    assert_eq!(magvac(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(magvac(&["renorm-check", "--b", "abc"]).status.code(), Some(1));
}

#[test]
fn invalid_values_are_reported_together() {
    let o = magvac(&["relation-check", "--b", "-1", "--e", "-2", "--masses", "3,2,1", "--rel-tol", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    for needle in ["masses", "rel-tol", "e must", "b must"] {
        assert!(err.contains(needle), "missing '{needle}' in {err}");
    }
    assert!(o.stdout.is_empty());
}

#[test]
fn failed_check_exits_two() {
    let o = magvac(&["relation-check", "--b", "1", "--tol", "1e-30", "--no-timings"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["passed"], false);
}

#[test]
fn fpv_table_has_requested_rows() {
    let o = magvac(&["tabulate-fpv", "--b-grid", "0.1:10:log:25", "--no-timings"]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let head: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(head, ["b", "f_pv", "weak_ratio", "strong_ratio"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 25);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.1);
    assert_eq!(rows[24][0].parse::<f64>().unwrap(), 10.0);
    let fpv: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(fpv.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn renorm_report_shape() {
    let o = magvac(&["renorm-check", "--b", "1.5", "--no-timings"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    for key in ["subcommand", "inputs", "values", "checks", "timings_s", "passed"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["subcommand"], "renorm-check");
    assert_eq!(r["inputs"]["masses"], serde_json::json!([1.0, 2.0, 3.0]));
    assert!((value(&r, "z3") - 0.912854376).abs() < 1e-9);
    assert!((value(&r, "k") - 1.0 / (180.0 * std::f64::consts::PI.powi(2))).abs() < 1e-6);
    assert!(r["values"].as_array().unwrap().iter().all(|v| v.get("tolerance").is_some() && v.get("route").is_some()));
}

#[test]
fn csv_override_for_reports() {
    let o = magvac(&["renorm-check", "--b", "1.5", "--out", "csv", "--no-timings"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("name,value,tolerance,route"));
    assert!(text.lines().any(|l| l.starts_with("z3,")));
}

#[test]
fn reruns_are_byte_identical_without_timings() {
    let args = ["kernel-check", "--samples", "6", "--seed", "11", "--no-timings"];
    let a = magvac(&args);
    let b = magvac(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert!(r["timings_s"].as_object().unwrap().values().all(|t| t.as_f64() == Some(0.0)));
}

#[test]
fn seed_changes_kernel_samples() {
    let a = magvac(&["kernel-check", "--samples", "4", "--seed", "1", "--no-timings"]);
    let b = magvac(&["kernel-check", "--samples", "4", "--seed", "2", "--no-timings"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn output_file_matches_stdout() {
    let path = scratch("landau.json");
    let args = ["landau-check", "--s-grid", "0.1:2:log:4", "--b-grid", "0.1:2:log:4", "--no-timings"];
    let direct = magvac(&args);
    let mut with_file = args.to_vec();
    let p = path.to_str().unwrap();
    with_file.extend(["--output", p]);
    let o = magvac(&with_file);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn every_subcommand_self_test_passes() {
    for cmd in [
        "tabulate-eh",
        "tabulate-fpv",
        "relation-check",
        "renorm-check",
        "landau-check",
        "kernel-check",
        "heat-trace",
        "biot-savart",
        "lda",
        "lattice-density",
        "sweep",
    ] {
        let o = magvac(&[cmd, "--self-test", "--out", "json", "--no-timings"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        let r = json(&o);
        assert_eq!(r["passed"], true, "{cmd}");
        assert!(!r["checks"].as_array().unwrap().is_empty(), "{cmd} ran no checks");
    }
}

#[test]
fn heat_trace_is_rho_independent() {
    let o = magvac(&["heat-trace", "--s", "1", "--b", "1", "--no-timings"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    let traces: Vec<f64> = r["values"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v["name"].as_str().unwrap().starts_with("localized"))
        .map(|v| v["value"].as_f64().unwrap())
        .collect();
    assert!(traces.len() >= 2);
    assert!(traces.iter().all(|t| (t - 0.0589510570429).abs() < 1e-10));
}

#[test]
fn biot_savart_writes_a_readable_potential() {
    let path = scratch("potential.grid");
    let p = path.to_str().unwrap();
    let o = magvac(&["biot-savart", "--n", "32", "--write-potential", p, "--no-timings"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(value(&json(&o), "curl_residual") < 1e-8);
    let grid = magvac::fields::read_grid(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(grid.n, 32);
}

#[test]
fn lda_from_grid_file_matches_profile() {
    use magvac::fields::{write_grid, FieldGrid, Profile};
    let profile = Profile::GaussianVortex { amplitude: 1.5, width: 0.8, centre: [4.0; 3] };
    let grid = FieldGrid::from_profile(&profile, 16, 0.5).unwrap();
    let path = scratch("vortex.grid");
    std::fs::write(&path, write_grid(&grid)).unwrap();
    let from_file = json(&magvac(&["lda", "--grid", path.to_str().unwrap(), "--no-timings"]));
    let built_in = json(&magvac(&["lda", "--n", "16", "--length", "8", "--amplitude", "1.5", "--no-timings"]));
    let (a, b) = (value(&from_file, "lda_energy"), value(&built_in, "lda_energy"));
    assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} vs {b}");
    assert!(a > 0.0);
}

#[test]
fn grid_and_profile_conflict() {
    let o = magvac(&["lda", "--grid", "x.grid", "--profile", "fourier"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_grid_file_is_an_error() {
    let o = magvac(&["lda", "--grid", "/nonexistent/field.grid"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nonexistent"));
}

#[test]
fn small_sweep_table() {
    let o = magvac(&["sweep", "--eps", "0.5,0.25", "--n", "8", "--levels", "2", "--no-timings"]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let head: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(head, ["eps", "lattice_energy_density", "lda_value", "deviation", "runtime_s"]);
    let rows: Vec<Vec<f64>> = rdr.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!((r[3] - (r[1] - r[2])).abs() < 1e-15);
        assert_eq!(r[4], 0.0);
    }
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn lattice_density_reports_continuum_check() {
    let o = magvac(&["lattice-density", "--no-timings"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    let fpv = value(&r, "f_pv");
    let ext = value(&r, "extrapolated");
    assert!(((ext - fpv) / fpv).abs() < 2e-2);
}
