#![no_main]

use delone_rectify::cli::PipelineConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = serde_json::from_str::<PipelineConfig>(text) {
        let c = config.into_run_config();
        let _ = c.generator.validate();
        let _ = c.verify.validate();
        let _ = c.render.validate();
    }
});
