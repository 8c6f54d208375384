use std::fs;
use std::path::Path;
use std::process::Command;

use delone_rectify::matching::DisplacementMap;
use delone_rectify::rectify::HomeoPlan;
use delone_rectify::verify::VerificationReport;
use delone_rectify::PointSet;

fn delone(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_delone"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

const SPEC_2D: &str = r#"{"kind":"perturbed_lattice","dim":2,"window":{"lower":[0,0],"upper":[8,8]},"delta":0.35,"seed":7}"#;

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(delone(&["frobnicate"]), 2);
    assert_eq!(delone(&[]), 2);
    assert_eq!(delone(&["--help"]), 0);
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "plan.json");
    assert_eq!(delone(&["rectify", "--map", "/nonexistent/map.json", "--out", &out]), 3);
    assert!(!dir.path().join("plan.json").exists());
}

#[test]
fn malformed_input_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.json");
    fs::write(&bad, r#"{"kind":"lattice","dim":2,"window":{"lower":[0,0],"upper":[4,4]},"extra":1}"#).unwrap();
    assert_eq!(delone(&["gen", "--spec", &bad, "--out", &path(dir.path(), "p.json")]), 3);
}

#[test]
fn pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let spec = path(dir.path(), "spec.json");
    fs::write(&spec, SPEC_2D).unwrap();
    let out = dir.path().join("out");
    assert_eq!(delone(&["pipeline", "--spec", &spec, "--out-dir", out.to_str().unwrap()]), 0);
    for name in ["points.json", "points.csv", "map.json", "plan.json", "report.json", "figure.svg"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let report = VerificationReport::from_json(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.pass && report.bijection_ok);
}

#[test]
fn stages_chain_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("spec.json"), SPEC_2D).unwrap();
    assert_eq!(delone(&["gen", "--spec", &path(d, "spec.json"), "--out", &path(d, "pts.json")]), 0);
    assert_eq!(delone(&["gen", "--spec", &path(d, "spec.json"), "--out", &path(d, "pts.csv")]), 0);
    let json = PointSet::from_json(&fs::read_to_string(d.join("pts.json")).unwrap()).unwrap();
    assert_eq!(PointSet::from_json(&json.to_json()).unwrap(), json);
    let csv_pts = fs::read_to_string(d.join("pts.csv")).unwrap().lines().count();
    assert_eq!(csv_pts, json.len());

    assert_eq!(
        delone(&["match", "--in", &path(d, "pts.csv"), "--margin", "2", "--out", &path(d, "map_csv.json")]),
        0
    );
    assert_eq!(delone(&["match", "--in", &path(d, "pts.json"), "--margin", "2", "--out", &path(d, "map.json")]), 0);
    let text = fs::read_to_string(d.join("map.json")).unwrap();
    let m = DisplacementMap::from_json(&text).unwrap();
    assert_eq!(m.to_json(), text);

    let args = ["rectify", "--map", &path(d, "map.json"), "--seed", "3", "--out", &path(d, "plan.json")];
    assert_eq!(delone(&args), 0);
    let text = fs::read_to_string(d.join("plan.json")).unwrap();
    let plan = HomeoPlan::from_json(&text).unwrap();
    assert_eq!(plan.to_json(), text);
    assert_eq!(plan.params().seed, 3);

    let verify = [
        "verify", "--plan", &path(d, "plan.json"), "--map", &path(d, "map.json"), "--samples", "500", "--seed", "1",
        "--out", &path(d, "report.json"),
    ];
    assert_eq!(delone(&verify), 0);

    let render = |name: &str| {
        let args = ["render", "--plan", &path(d, "plan.json"), "--map", &path(d, "map.json"), "--out", &path(d, name)];
        assert_eq!(delone(&args), 0);
        fs::read(d.join(name)).unwrap()
    };
    assert_eq!(render("a.svg"), render("b.svg"));
}

#[test]
fn verification_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("spec.json"), SPEC_2D).unwrap();
    let shifted = SPEC_2D.replace("\"seed\":7", "\"seed\":8");
    fs::write(d.join("other.json"), shifted).unwrap();
    for (spec, pts, map) in [("spec.json", "a.json", "ma.json"), ("other.json", "b.json", "mb.json")] {
        assert_eq!(delone(&["gen", "--spec", &path(d, spec), "--out", &path(d, pts)]), 0);
        assert_eq!(delone(&["match", "--in", &path(d, pts), "--margin", "2", "--out", &path(d, map)]), 0);
    }
    assert_eq!(delone(&["rectify", "--map", &path(d, "ma.json"), "--out", &path(d, "plan.json")]), 0);
    let args = [
        "verify", "--plan", &path(d, "plan.json"), "--map", &path(d, "mb.json"), "--samples", "200", "--out",
        &path(d, "report.json"),
    ];
    assert_eq!(delone(&args), 1);
    let report = VerificationReport::from_json(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert!(!report.bijection_ok && !report.pass);
}

#[test]
fn infeasible_matching_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // every other column of a 16 x 16 grid
    let rows: String = (0..16)
        .flat_map(|x| (0..16).map(move |y| (x, y)))
        .filter(|(x, _)| x % 2 == 0)
        .map(|(x, y)| format!("{x},{y}\n"))
        .collect();
    fs::write(d.join("half.csv"), rows).unwrap();
    assert_eq!(delone(&["match", "--in", &path(d, "half.csv"), "--margin", "2", "--out", &path(d, "m.json")]), 1);
}

#[test]
fn bad_parameters_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("spec.json"), SPEC_2D).unwrap();
    assert_eq!(delone(&["gen", "--spec", &path(d, "spec.json"), "--out", &path(d, "pts.json")]), 0);
    assert_eq!(delone(&["match", "--in", &path(d, "pts.json"), "--margin", "-1", "--out", &path(d, "m.json")]), 2);
    assert_eq!(delone(&["match", "--in", &path(d, "pts.json"), "--margin", "2", "--out", &path(d, "m.json")]), 0);
    assert_eq!(delone(&["rectify", "--map", &path(d, "m.json"), "--eps", "5", "--out", &path(d, "p.json")]), 2);
}

#[test]
fn one_dimensional_pipeline_skips_the_figure() {
    let dir = tempfile::tempdir().unwrap();
    let spec = path(dir.path(), "spec.json");
    fs::write(&spec, r#"{"kind":"fibonacci1d","dim":1,"window":{"lower":[0],"upper":[40]}}"#).unwrap();
    let out = dir.path().join("out");
    assert_eq!(delone(&["pipeline", "--spec", &spec, "--out-dir", out.to_str().unwrap()]), 0);
    assert!(out.join("plan.json").exists());
    assert!(!out.join("figure.svg").exists());
}
