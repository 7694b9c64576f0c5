#![no_main]

use libfuzzer_sys::fuzz_target;
use pcrlab::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_toml_str(text) {
        // Accepted documents must serialize and parse back to the same value.
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).expect("round trip");
        assert_eq!(again, cfg);
    }
});
