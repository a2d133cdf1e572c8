#![no_main]

use gsign_core::io::{parse_coords_csv, write_coords_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = parse_coords_csv(text) {
        assert!(c.iter().all(|p| p[0].is_finite() && p[1].is_finite()));
        assert_eq!(parse_coords_csv(&write_coords_csv(&c)).expect("written coords parse"), c);
    }
});
