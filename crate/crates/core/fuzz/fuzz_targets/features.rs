#![no_main]
use libfuzzer_sys::fuzz_target;
use specred::io::parse_features;

fuzz_target!(|data: &[u8]| {
    let Some((&first, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let column = (first < 8).then_some(first as usize);
    if let Ok(f) = parse_features(text, column) {
        assert_eq!(f.data().len(), f.n() * f.d());
        assert!(f.data().iter().all(|v| v.is_finite()));
    }
});
