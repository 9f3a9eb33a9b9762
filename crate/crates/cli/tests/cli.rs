use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn adiabat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adiabat")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_on(cmd: &str, name: &str) -> Output {
    adiabat(&[cmd, scenario(name).to_str().unwrap()])
}

const BUNDLED: [&str; 9] =
    ["chain3", "fork", "cancellation", "stability", "potential", "incomparable", "wedge", "charts", "loop-mismatch"];

#[test]
fn validate_chain3_passes() {
    let o = run_on("validate", "chain3");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("transitivity: pass"));
}

#[test]
fn meter_rows_on_potential() {
    let o = run_on("meter", "potential");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("sys:a, 1.0, 1.0, gap 0.0, comparable"), "{out}");
    assert!(out.contains("sys:b, 1.4, 1.4, gap 0.0, comparable"), "{out}");
    assert!(out.contains("law reference-shift: pass"), "{out}");
}

#[test]
fn meter_reports_incomparable_state() {
    let o = run_on("meter", "incomparable");
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("sys:x, 0.5, 0.9, gap 0.4, incomparable"), "{out}");
    assert!(out.contains("law equality: inapplicable"), "{out}");
}

#[test]
fn noneq_wedge_bounds() {
    let o = run_on("noneq", "wedge");
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("hat:xhat, 0.4, 0.6, gap 0.2, incomparable"), "{out}");
    assert!(out.contains("cross-check: pass (constant 0.1"), "{out}");
}

#[test]
fn canonical_matches_affine_rescaling() {
    let o = run_on("canonical", "potential");
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1.5, 1.5, 1.5, [1.5, 1.5], agree"));
}

#[test]
fn charts_glue_and_loop_mismatch() {
    let o = run_on("charts", "charts");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("offset D: 1.6"));
    let o = run_on("charts", "loop-mismatch");
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("gluing refused"));
}

#[test]
fn oracle_diff_agrees_on_every_bundled_scenario() {
    for name in BUNDLED {
        let o = run_on("oracle-diff", name);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        assert!(stdout(&o).contains("oracle agreement: pass"), "{name}");
    }
}

#[test]
fn schema_error_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("incomparable")).unwrap().replacen("\"0.1\"", "0.1", 1);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, text).unwrap();
    let o = adiabat(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("spaces[1].interval.step"), "{err}");
}

#[test]
fn unknown_state_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("chain3")).unwrap().replacen("g:c", "g:q", 1);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, text).unwrap();
    let o = adiabat(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("generators[1]"));
}

#[test]
fn missing_section_is_an_input_error() {
    assert_eq!(run_on("meter", "chain3").status.code(), Some(2));
    assert_eq!(adiabat(&["validate", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, name) in [("meter", "incomparable"), ("noneq", "wedge"), ("charts", "charts"), ("validate", "stability")]
    {
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        for p in [&a, &b] {
            let o = adiabat(&[cmd, scenario(name).to_str().unwrap(), "--report", p.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0));
        }
        let ra = std::fs::read(&a).unwrap();
        assert_eq!(ra, std::fs::read(&b).unwrap(), "{cmd} {name}");
        let v: serde_json::Value = serde_json::from_slice(&ra).unwrap();
        assert_eq!(v["ok"], true);
    }
}

#[test]
fn csv_output_has_header() {
    let o = adiabat(&["meter", scenario("incomparable").to_str().unwrap(), "--csv"]);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("state,s_minus,s_plus,gap,comparable"));
    assert_eq!(lines.nth(1), Some("sys:x,0.5,0.9,0.4,false"));
}
