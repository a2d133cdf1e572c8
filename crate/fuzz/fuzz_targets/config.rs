#![no_main]

use gsign_harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        let _ = cfg.violations();
        let echo = ExperimentConfig::parse(&cfg.to_toml()).expect("resolved config parses");
        assert_eq!(echo.violations(), cfg.violations());
    }
});
