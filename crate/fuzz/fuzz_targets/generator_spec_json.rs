#![no_main]

use delone_rectify::generators::{generate, GeneratorSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = GeneratorSpec::from_json(text) else { return };
    let volume: f64 = (0..spec.dim).map(|a| spec.window.extent(a)).product();
    if volume <= 4096.0 && spec.iterations <= 5 {
        let _ = generate(&spec);
    }
});
