//! End-to-end runs of the binary: artifact writing, verdict lines, and
//! the exit-code contract (0 success, 1 failed run, 2 usage).

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use tfractal_core::output::{parse_orbit_json, TerminationDoc};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfractal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tfractal-cli-{name}"));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn geometry_writes_boundary_artifacts() {
    let dir = out_dir("geometry");
    let o = run(&["geometry", "--level", "0", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let json = fs::read_to_string(dir.join("T_0.boundary.json")).unwrap();
    assert!(json.contains("\"sigma\": \"3/2\""));
    assert!(json.contains("\"-1/2\""));
    let svg = fs::read_to_string(dir.join("T_0.boundary.svg")).unwrap();
    assert!(svg.starts_with("<svg "));
    assert!(svg.contains("3/2"));
}

#[test]
fn vertex_start_is_a_singular_verdict() {
    let o = run(&["orbit", "--level", "0", "--x0", "0/1", "--slope", "1/1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict: singular"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&["verify", "nosuch"])), 2);
    assert_eq!(code(&run(&["geometry", "--level", "-1"])), 2);
    assert_eq!(
        code(&run(&["orbit", "--level", "0", "--x0", "1/3+", "--slope", "1/1"])),
        2
    );
    assert_eq!(
        code(&run(&[
            "path", "--x0", "1/3", "--slope", "1/3", "--sign", "x"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "orbit", "--level", "0", "--x0", "1/3", "--slope", "0/1"
        ])),
        2,
        "horizontal launch from the base is unusable"
    );
}

#[test]
fn suite_run_passes_and_writes_report() {
    let dir = out_dir("verify");
    let o = run(&[
        "verify",
        "prop32",
        "--seed",
        "11",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("prop32: PASS"));
    let json = fs::read_to_string(dir.join("suites.json")).unwrap();
    assert!(json.contains("\"suite\": \"prop32\""));
}

#[test]
fn path_without_escape_reports_and_fails() {
    let dir = out_dir("path-stuck");
    let o = run(&[
        "path",
        "--x0",
        "1/2",
        "--slope",
        "1/4",
        "--levels",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("never escapes"));
    assert!(dir.join("sequence.json").exists(), "the level report is still written");
}

#[test]
fn path_certificate_artifacts() {
    let dir = out_dir("path-ok");
    let o = run(&[
        "path",
        "--x0",
        "1/3",
        "--slope",
        "1/3",
        "--levels",
        "3",
        "--cap",
        "600",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("address (LLRR)*"));
    for name in ["sequence.json", "path.json", "path.svg", "escape-distances.csv"] {
        assert!(dir.join(name).exists(), "missing {name}");
    }
    let csv = fs::read_to_string(dir.join("escape-distances.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn orbit_json_artifact_parses_exactly() {
    let dir = out_dir("orbit");
    let o = run(&[
        "orbit",
        "--level",
        "0",
        "--x0",
        "2/3",
        "--slope",
        "1/1",
        "--cap",
        "100",
        "--out",
        dir.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = parse_orbit_json(&fs::read_to_string(dir.join("orbit.json")).unwrap()).unwrap();
    assert_eq!(doc.termination, TerminationDoc::Periodic { period: 14 });
    assert_eq!(doc.states.len(), 15);
    let states = doc.states_exact().unwrap();
    assert_eq!(states[0].pos.x.to_string(), "2/3");
    // Unspaced sqrt input is accepted and re-emitted in canonical form.
    let o2 = run(&[
        "orbit",
        "--level",
        "1",
        "--x0",
        "1/3",
        "--slope",
        "0/1+1/34*sqrt(2)",
        "--cap",
        "20",
        "--out",
        dir.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o2), 0, "{}", stderr(&o2));
    let doc2 = parse_orbit_json(&fs::read_to_string(dir.join("orbit.json")).unwrap()).unwrap();
    assert_eq!(
        doc2.states[0].dir.slope.as_deref(),
        Some("0/1 + 1/34*sqrt(2)")
    );
}
