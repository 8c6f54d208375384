#![no_main]

use delone_rectify::rectify::HomeoPlan;
use delone_rectify::Point;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(plan) = HomeoPlan::from_json(text) else { return };
    let json = plan.to_json();
    let again = HomeoPlan::from_json(&json).expect("serialized plan parses");
    assert_eq!(json, again.to_json());
    let center = plan.bounding_region().center();
    let image = plan.evaluate(&center);
    assert_eq!(image.dim(), plan.dim());
    let far = Point::new(plan.bounding_region().upper.coords().iter().map(|x| x + 1.0).collect());
    assert_eq!(plan.evaluate_naive(&far), far);
});
