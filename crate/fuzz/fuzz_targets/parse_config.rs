#![no_main]
use capillary_harness::{parse_config, resolve};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text) {
        // resolution only validates; it must not panic on anything that parsed
        let _ = resolve(&cfg, "out".into());
    }
});
