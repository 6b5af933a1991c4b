#![no_main]
use libfuzzer_sys::fuzz_target;
use specred::io::{parse_matrix_market, write_graph, GraphFormat, ParseLimits};

const LIMITS: ParseLimits = ParseLimits { max_nodes: 1 << 16 };

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_matrix_market(text, LIMITS) {
        // anything accepted must survive a write/read round trip
        let again = parse_matrix_market(&write_graph(&g, GraphFormat::MatrixMarket), LIMITS).expect("reparse");
        assert_eq!(again.n(), g.n());
        assert_eq!(again.num_edges(), g.num_edges());
    }
});
