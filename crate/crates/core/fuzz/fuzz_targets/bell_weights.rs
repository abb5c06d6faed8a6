//! Fuzz target for the comma-separated Bell weight parser behind `--q`.
//!
//! Run with:
//!   cargo +nightly fuzz run bell_weights fuzz/corpus/bell_weights/

#![no_main]

use libfuzzer_sys::fuzz_target;
use qrev::io::parse_weights;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(q) = parse_weights(text) {
            let sum: f64 = q.as_array().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }
});
