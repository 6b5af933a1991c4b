#![no_main]
use libfuzzer_sys::fuzz_target;
use specred::io::{parse_edge_list, ParseLimits};
use specred::sparsify::parse_sparsifier;

// input: graph edge list, NUL, sparsifier edge list, NUL, tree flags
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut parts = text.splitn(3, '\0');
    let (Some(g), Some(p), Some(flags)) = (parts.next(), parts.next(), parts.next()) else { return };
    let Ok(g) = parse_edge_list(g, ParseLimits { max_nodes: 1 << 16 }) else { return };
    if let Ok(s) = parse_sparsifier(p, flags, &g) {
        assert_eq!(s.base().n(), g.n());
        assert_eq!(s.tree_mask().len(), s.num_edges());
    }
});
