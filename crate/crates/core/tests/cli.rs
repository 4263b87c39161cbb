use std::path::{Path, PathBuf};
use std::process::Command;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_calkin-lift"));
    c.env("CALKIN_LIFT_THREADS", "2");
    c
}

fn run(input: &str, extra: &[&str], dir: &Path) -> (i32, Option<serde_json::Value>) {
    let report = dir.join(format!("{input}.json"));
    let out = bin()
        .arg("--input")
        .arg(data(input))
        .arg("--report")
        .arg(&report)
        .args(extra)
        .output()
        .unwrap();
    let value = std::fs::read_to_string(&report)
        .ok()
        .map(|s| serde_json::from_str(&s).unwrap());
    (out.status.code().unwrap(), value)
}

fn validate(report: &serde_json::Value) {
    let schema: serde_json::Value = serde_json::from_str(calkin_lift::cli::report::SCHEMA).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = v.iter_errors(report).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn lattice_lifts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run("two_pi_i_z.toml", &["--depth", "5"], dir.path());
    assert_eq!(code, 0);
    let r = report.unwrap();
    validate(&r);
    let c = r["verdict"]["classification"].as_str().unwrap();
    assert!(c == "LIFT_EXISTS_C0" || c == "LIFT_EXISTS_DYADIC", "{c}");
}

#[test]
fn imaginary_axis_is_dyadic_and_discontinuous() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run("imaginary_axis.toml", &[], dir.path());
    assert_eq!(code, 0);
    let r = report.unwrap();
    validate(&r);
    assert_eq!(r["verdict"]["classification"], "LIFT_EXISTS_DYADIC");
    assert_eq!(r["continuity"]["necessary"]["status"], "fails");
}

#[test]
fn shift_model_is_obstructed() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run("shift_model.toml", &["--depth", "2"], dir.path());
    assert_eq!(code, 2);
    let r = report.unwrap();
    validate(&r);
    assert_eq!(r["verdict"]["classification"], "OBSTRUCTED_INDEX");
    assert_eq!(r["kernel"]["status"]["index"], -1);
}

#[test]
fn rectangle_without_assumption_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run("rectangle.toml", &["--depth", "4"], dir.path());
    assert_eq!(code, 3);
    validate(&report.unwrap());
}

#[test]
fn malformed_input_leaves_no_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run("malformed.toml", &[], dir.path());
    assert_eq!(code, 1);
    assert!(report.is_none());
    let (code, report) = run("does_not_exist.toml", &[], dir.path());
    assert_eq!(code, 1);
    assert!(report.is_none());
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn bad_flags_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for extra in [
        &["--theta-cells", "1000"][..],
        &["--fibers", "0"],
        &["--threshold", "nonsense=1"],
        &["--depth", "0"],
        &["--unknown-flag"],
    ] {
        let (code, report) = run("imaginary_axis.toml", extra, dir.path());
        assert_eq!(code, 1, "{extra:?}");
        assert!(report.is_none());
    }
}

#[test]
fn svg_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("plots");
    let (code, _) = run(
        "rectangle.toml",
        &["--depth", "3", "--assume-normal-lifts", "--svg-dir", svg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code, 0);
    for n in 0..=3 {
        let s = std::fs::read_to_string(svg.join(format!("level_{n:02}.svg"))).unwrap();
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        // from level 2 on the level lies in the right half-plane
        assert_eq!(s.contains("#d1495b"), n < 2, "antipodal overlay at level {n}");
    }
}

#[test]
fn report_to_stdout() {
    let out = bin()
        .arg("--input")
        .arg(data("two_pi_i_z.toml"))
        .args(["--depth", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    validate(&r);
}

#[test]
fn threshold_override_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let (_, report) = run(
        "two_pi_i_z.toml",
        &["--depth", "3", "--threshold", "o2n_ratio=3.5", "--fibers", "4,6", "--seed", "9"],
        dir.path(),
    );
    let r = report.unwrap();
    assert_eq!(r["meta"]["thresholds"]["o2n_ratio"], 3.5);
    assert_eq!(r["meta"]["canonical_fibers"], 4);
    assert_eq!(r["meta"]["twisted_fibers"], 6);
    assert_eq!(r["continuity"]["fiber_count"], 10);
}
