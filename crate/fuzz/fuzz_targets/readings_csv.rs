#![no_main]

use gsign_harness::dataset::{fill_gaps, parse_readings_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((stamps, columns)) = parse_readings_csv(text) {
        for col in &columns {
            assert_eq!(col.len(), stamps.len());
            if let Some(filled) = fill_gaps(col) {
                assert_eq!(filled.len(), col.len());
                assert!(filled.iter().all(|v| v.is_finite()));
            }
        }
    }
});
