use std::path::Path;
use std::process::{Command, Output};

fn nonloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonloc"))
        .args(args)
        .env_remove("NONLOC_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn solve_grid_has_one_row_per_point() {
    let o = nonloc(&[
        "solve",
        "--d",
        "2",
        "--sigma",
        "1",
        "--profile",
        "example",
        "--t",
        "0,1,2",
        "--x",
        "-5..5:21",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,u,upper_bound"));
    assert_eq!(lines.count(), 63);
}

#[test]
fn solve_origin_is_two_root_pi() {
    let o = nonloc(&["solve", "--t", "0", "--x", "0", "--profile", "example"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert!((row[2] - 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-8);
    // 17 significant digits
    let mantissa = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .split('e')
        .next()
        .unwrap()
        .to_string();
    assert_eq!(mantissa.replace(['.', '-'], "").len(), 17);
}

#[test]
fn malformed_grid_names_the_flag() {
    let o = nonloc(&["solve", "--x", "0..1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--x"), "{}", stderr(&o));
    let o = nonloc(&["solve", "--t", "1,,2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--t"));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(nonloc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(nonloc(&["solve", "--d"]).status.code(), Some(1));
    assert_eq!(nonloc(&["--help"]).status.code(), Some(0));
    assert_eq!(nonloc(&["solve", "--help"]).status.code(), Some(0));
}

#[test]
fn output_is_deterministic_and_metadata_goes_to_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = nonloc(&[
            "solve",
            "--t",
            "0,1",
            "--x",
            "-2..2:5",
            "-o",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["command"], "solve");
    assert!(meta["config"]["d"].is_number());

    let c = dir.path().join("c.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_nonloc"))
        .args([
            "solve",
            "--t",
            "0,1",
            "--x",
            "-2..2:5",
            "-o",
            c.to_str().unwrap(),
        ])
        .env("NONLOC_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_nonloc"))
        .args(["solve", "--t", "0", "--x", "0"])
        .env("NONLOC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("NONLOC_THREADS"));
}

#[test]
fn config_file_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d = 1.0\nkernel = { type = \"gaussian\", sigma = 0.5 }\nprofile = { type = \"gaussian\", s = 1.0 }\n[grids]\nt = [0.0, 2.0]\nx = \"0..1:2\"\n[output]\nformat = \"json\"\n",
    );
    let o = nonloc(&["solve", "-c", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["x_values"].as_array().unwrap().len(), 2);
    // d = 1: the bound is ‖û₀‖₁ = √π at all times
    let env = v["upper_envelope"][1].as_f64().unwrap();
    assert!((env - std::f64::consts::PI.sqrt()).abs() < 1e-14);

    let bad = write_config(dir.path(), "d = 2.0\nsigma = 1.0\n");
    let o = nonloc(&["solve", "-c", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));
}

#[test]
fn series_reports_verdicts_and_schema() {
    let o = nonloc(&["series", "--t", "1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).lines().any(|l| l.starts_with("eq7: PASS")));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["t", "x", "A", "B", "C", "u", "sandwich", "checks"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let checks = v["checks"].as_object().unwrap();
    let mut keys: Vec<&str> = checks.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        ["eq5", "eq6", "eq7", "evenness", "leibniz", "monotone", "signs"]
    );
    let s = v["sandwich"].as_array().unwrap();
    let u = v["u"].as_f64().unwrap();
    assert!(s[0].as_f64().unwrap() < u && u < s[1].as_f64().unwrap());
}

#[test]
fn series_at_time_zero_has_b_equal_to_a() {
    let o = nonloc(&["series", "--t", "0", "--x", "0.7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["A"], v["B"]);
}

#[test]
fn series_rejects_nonpositive_x() {
    assert_eq!(
        nonloc(&["series", "--t", "1", "--x", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        nonloc(&["series", "--t", "1", "--x", "-1"]).status.code(),
        Some(1)
    );
}

#[test]
fn series_exits_three_when_positivity_fails() {
    // a bounded profile fails the positivity condition at large x
    let o = nonloc(&["series", "--profile", "gaussian", "--t", "1", "--x", "5"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("h2: FAIL"));
    assert!(!stdout(&o).is_empty());
}

#[test]
fn sharpness_slopes() {
    let o = nonloc(&["sharpness", "--d", "2", "--eps", "0.1", "--x-probe", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let slope = v["fitted_slope"].as_f64().unwrap();
    assert!(slope > 0.9 && slope <= 1.0);
    assert!(v["sigma"].as_f64().unwrap() > 0.0);
    assert!(v["g"].as_f64().unwrap() > 0.0 && v["h"].as_f64().unwrap() > 0.0);

    let o = nonloc(&["sharpness", "--d", "1", "--eps", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let slope = v["fitted_slope"].as_f64().unwrap();
    assert!(slope > -0.5 && slope <= 0.0);
}

#[test]
fn sharpness_precondition_and_mistuning() {
    assert_eq!(
        nonloc(&["sharpness", "--d", "2", "--eps", "2"])
            .status
            .code(),
        Some(1)
    );
    let o = nonloc(&["sharpness", "--eps", "0.001", "--sigma", "100"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("slope: FAIL"));
}

#[test]
fn verify_default_passes() {
    let o = nonloc(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for name in [
        "h1-mass",
        "h2",
        "t1",
        "eq5",
        "eq7",
        "lower-bound",
        "sharpness-slope",
        "cross-solver",
        "mass-direct",
    ] {
        assert!(
            text.lines()
                .any(|l| l.starts_with(name) && l.contains("PASS")),
            "{name}\n{text}"
        );
    }
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_only_and_mistuned_sharpness() {
    let o = nonloc(&["verify", "--only", "h2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[sharpness]\neps = 0.001\nsigma = 100.0\n");
    let o = nonloc(&["verify", "-c", &cfg, "--only", "sharpness,h1"]);
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    assert!(text
        .lines()
        .any(|l| l.starts_with("sharpness-slope") && l.contains("FAIL")));
    assert!(text
        .lines()
        .any(|l| l.starts_with("h1-mass") && l.contains("PASS")));

    assert_eq!(nonloc(&["verify", "--only", "nope"]).status.code(), Some(1));
}

#[test]
fn direct_matches_spectral_at_the_origin() {
    let args = [
        "--d",
        "2",
        "--sigma",
        "0.5",
        "--profile",
        "gaussian",
        "--t",
        "0,2",
        "--x",
        "0",
    ];
    let o = nonloc(&[&["direct"][..], &args].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("t,x,u"));
    let direct: f64 = text
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    let o = nonloc(&[&["solve"][..], &args].concat());
    let spectral: f64 = stdout(&o)
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((direct - spectral).abs() < 1e-3 * spectral);
}

#[test]
fn direct_refuses_nonintegrable_data_and_unstable_steps() {
    let o = nonloc(&["direct", "--profile", "example"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not integrable"));
    let o = nonloc(&[
        "direct",
        "--profile",
        "gaussian",
        "--integrator",
        "euler",
        "--dt",
        "1.0",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn direct_full_grid_dump() {
    let o = nonloc(&[
        "direct",
        "--profile",
        "gaussian",
        "--t",
        "0",
        "--n-points",
        "64",
        "--full-grid",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 65);
}

#[test]
fn example_table() {
    let o = nonloc(&["example"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("x,h2_integral,lower_bound,margin,u0_closed_form,u0_quadrature\n"));
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(v[1] > v[2] && v[2] > 0.0);
        assert!((v[4] - v[5]).abs() < 1e-6);
    }
    assert!(stderr(&o).contains("FresnelC(1) = 0.77989340"));
}
