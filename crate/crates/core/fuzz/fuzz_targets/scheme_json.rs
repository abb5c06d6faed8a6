//! Fuzz target for teleportation scheme documents.
//!
//! Run with:
//!   cargo +nightly fuzz run scheme_json fuzz/corpus/scheme_json/

#![no_main]

use libfuzzer_sys::fuzz_target;
use qrev::io::{scheme_from_json_slice, scheme_to_json};
use qrev::teleport::induced_channels;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1024 * 1024 {
        return;
    }
    if let Ok(scheme) = scheme_from_json_slice(data) {
        let back = scheme_from_json_slice(scheme_to_json(&scheme).as_bytes())
            .expect("written scheme parses");
        assert_eq!(back, scheme);
        let _ = induced_channels(&scheme);
    }
});
