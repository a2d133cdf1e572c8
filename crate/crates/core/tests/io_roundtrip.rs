use std::collections::BTreeMap;

use gsign_core::graph::{build_laplacian, random_sensor_graph, Edge, Graph};
use gsign_core::io::{
    decode_spectral_cache, encode_spectral_cache, parse_coords_csv, parse_edge_list, write_coords_csv, write_edge_list,
};
use gsign_core::spectral::eigendecompose;
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..20).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 0.0f64..1e6), 0..40).prop_map(move |raw| {
            let mut uniq = BTreeMap::new();
            for (i, j, w) in raw {
                if i != j {
                    uniq.entry((i.min(j), i.max(j))).or_insert(w);
                }
            }
            Graph::new(n, uniq.into_iter().map(|((i, j), weight)| Edge { i, j, weight }), None).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn edge_list_roundtrip(g in graph_strategy()) {
        let back = parse_edge_list(&write_edge_list(&g), Some(g.n_nodes())).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn coords_roundtrip(c in prop::collection::vec((-1e9f64..1e9, -1e9f64..1e9).prop_map(|(x, y)| [x, y]), 1..40)) {
        prop_assert_eq!(parse_coords_csv(&write_coords_csv(&c)).unwrap(), c);
    }

    #[test]
    fn parsers_never_panic(s in "\\PC*") {
        let _ = parse_edge_list(&s, None);
        let _ = parse_coords_csv(&s);
        let _ = decode_spectral_cache(s.as_bytes());
    }

    #[test]
    fn edge_list_line_noise(lines in prop::collection::vec("[0-9 #.eE+-]{0,12}", 0..10)) {
        let text = lines.join("\n");
        match parse_edge_list(&text, None) {
            Ok(g) => prop_assert!(g.n_nodes() >= 1),
            Err(e) => prop_assert!(!e.to_string().is_empty()),
        }
    }

    #[test]
    fn corrupted_cache_is_rejected_or_valid(seed in 0u64..50, pos in 0usize..10_000, flip in 1u8..=255) {
        let l = build_laplacian(&random_sensor_graph(8, seed).unwrap()).unwrap();
        let basis = eigendecompose(&l).unwrap();
        let mut blob = encode_spectral_cache(&l, &basis);
        let pos = pos % blob.len();
        blob[pos] ^= flip;
        if let Ok((_, b)) = decode_spectral_cache(&blob) {
            // a flip in the key or a tiny mantissa change may still decode
            prop_assert_eq!(b.n(), 8);
        }
    }
}
