//! Replays the checked-in fuzz corpus through the same checks the fuzz
//! targets perform, so the seeds stay valid without a fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use delone_rectify::cli::PipelineConfig;
use delone_rectify::generators::GeneratorSpec;
use delone_rectify::matching::{verify_bd, DisplacementMap};
use delone_rectify::rectify::HomeoPlan;
use delone_rectify::{Point, PointSet, Window};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn point_set_json_seeds() {
    for (name, text) in seeds("point_set_json") {
        let s = PointSet::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(PointSet::from_json(&s.to_json()).unwrap(), s, "{name}");
    }
}

#[test]
fn point_set_csv_seeds() {
    let window = Window::cube(2, -64.0, 64.0).unwrap();
    let mut parsed = 0;
    for (_, text) in seeds("point_set_csv") {
        if let Ok(s) = PointSet::from_csv(&text, window.clone()) {
            assert_eq!(PointSet::from_csv(&s.to_csv(), window.clone()).unwrap(), s);
            parsed += 1;
        }
    }
    assert!(parsed >= 2);
}

#[test]
fn displacement_map_seeds() {
    for (name, text) in seeds("displacement_map_json") {
        let m = DisplacementMap::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(DisplacementMap::from_json(&m.to_json()).unwrap(), m);
        let report = verify_bd(&m, m.bound);
        assert!(report.targets_distinct && report.targets_integral && report.pass, "{name}");
    }
}

#[test]
fn homeo_plan_seeds() {
    for (name, text) in seeds("homeo_plan_json") {
        let plan = HomeoPlan::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let json = plan.to_json();
        assert_eq!(HomeoPlan::from_json(&json).unwrap().to_json(), json);
        let far = Point::new(plan.bounding_region().upper.coords().iter().map(|x| x + 1.0).collect());
        assert_eq!(plan.evaluate_naive(&far), far, "{name}");
    }
}

#[test]
fn generator_spec_seeds() {
    for (name, text) in seeds("generator_spec_json") {
        GeneratorSpec::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn pipeline_config_seeds() {
    for (name, text) in seeds("pipeline_config_json") {
        let c: PipelineConfig = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let c = c.into_run_config();
        c.generator.validate().unwrap();
        c.verify.validate().unwrap();
    }
}

#[test]
fn corrupted_seeds_are_rejected_cleanly() {
    for target in ["point_set_json", "displacement_map_json", "homeo_plan_json"] {
        for (_, text) in seeds(target) {
            let cut = &text[..text.len() / 2];
            assert!(PointSet::from_json(cut).is_err());
            assert!(DisplacementMap::from_json(cut).is_err());
            assert!(HomeoPlan::from_json(cut).is_err());
        }
    }
}
