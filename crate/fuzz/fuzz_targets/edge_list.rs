#![no_main]

use gsign_core::io::{parse_edge_list, write_edge_list};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_edge_list(text, None) {
        let again = parse_edge_list(&write_edge_list(&g), Some(g.n_nodes())).expect("written edge list parses");
        assert_eq!(again.edges(), g.edges());
    }
    let _ = parse_edge_list(text, Some(16));
});
