#![no_main]

use delone_rectify::matching::{verify_bd, DisplacementMap};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = DisplacementMap::from_json(text) {
        let again = DisplacementMap::from_json(&m.to_json()).expect("serialized map parses");
        assert_eq!(m, again);
        let report = verify_bd(&m, m.bound);
        assert!(report.targets_distinct && report.targets_integral);
    }
});
