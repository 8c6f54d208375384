#![no_main]

use delone_rectify::PointSet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = PointSet::from_json(text) {
        let again = PointSet::from_json(&s.to_json()).expect("serialized point set parses");
        assert_eq!(s, again);
    }
});
