use delone_rectify::generators::{generate, GeneratorKind, GeneratorSpec};
use delone_rectify::matching::{bottleneck_match, DisplacementMap};
use delone_rectify::rectify::{build_plan, source_separation, GeneralPositionParams, HomeoPlan};
use delone_rectify::{Point, PointSet, Window};
use proptest::prelude::*;

fn window() -> Window {
    Window::cube(2, -8.0, 8.0).unwrap()
}

fn point_sets() -> impl Strategy<Value = PointSet> {
    prop::collection::vec((-8.0f64..8.0, -8.0f64..8.0), 0..40).prop_filter_map("distinct", |raw| {
        let pts = raw.into_iter().map(|(x, y)| Point::new(vec![x, y])).collect();
        PointSet::with_default_index(pts, window()).ok()
    })
}

fn maps() -> impl Strategy<Value = DisplacementMap> {
    prop::collection::btree_set((-6i32..6, -6i32..6), 1..20).prop_flat_map(|targets| {
        let n = targets.len();
        (Just(targets), prop::collection::vec((-0.45f64..0.45, -0.45f64..0.45), n))
    })
    .prop_map(|(targets, noise)| {
        let pairs = targets
            .into_iter()
            .zip(noise)
            .map(|((x, y), (dx, dy))| {
                let z = Point::new(vec![x as f64, y as f64]);
                (Point::new(vec![z[0] + dx, z[1] + dy]), z)
            })
            .collect();
        DisplacementMap::new(pairs, window()).unwrap()
    })
}

proptest! {
    #[test]
    fn point_set_json_round_trips(s in point_sets()) {
        prop_assert_eq!(PointSet::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn point_set_csv_round_trips(s in point_sets()) {
        prop_assert_eq!(PointSet::from_csv(&s.to_csv(), window()).unwrap(), s);
    }

    #[test]
    fn displacement_map_round_trips(m in maps()) {
        let back = DisplacementMap::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_json(), m.to_json());
    }
}

#[test]
fn plan_round_trip_preserves_evaluation() {
    let mut spec = GeneratorSpec::new(GeneratorKind::PerturbedLattice, Window::cube(2, 0.0, 10.0).unwrap());
    spec.delta = 0.35;
    spec.seed = 21;
    let (pts, _) = generate(&spec).unwrap();
    let m = bottleneck_match(&pts, 2.0).unwrap();
    let r_sep = source_separation(&m).unwrap();
    let plan = build_plan(&m, &GeneralPositionParams::for_separation(r_sep), r_sep).unwrap();
    let back = HomeoPlan::from_json(&plan.to_json()).unwrap();
    assert_eq!(back.data(), plan.data());
    for p in pts.points() {
        assert_eq!(back.evaluate(p), plan.evaluate(p));
    }
}

#[test]
fn generator_output_is_reproducible() {
    let mut spec = GeneratorSpec::new(GeneratorKind::PerturbedLattice, Window::cube(3, 0.0, 5.0).unwrap());
    spec.delta = 0.3;
    spec.seed = 99;
    let (a, _) = generate(&spec).unwrap();
    let (b, _) = generate(&spec).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}
