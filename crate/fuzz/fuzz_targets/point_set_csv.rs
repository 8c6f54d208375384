#![no_main]

use delone_rectify::{PointSet, Window};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let window = Window::cube(2, -64.0, 64.0).unwrap();
    if let Ok(s) = PointSet::from_csv(text, window.clone()) {
        let again = PointSet::from_csv(&s.to_csv(), window).expect("written csv parses");
        assert_eq!(s, again);
    }
});
