#![no_main]
use libfuzzer_sys::fuzz_target;
use specred::io::parse_mapping;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_mapping(text) {
        assert!(m.cluster_of().iter().all(|&c| c < m.n_coarse()));
    }
});
