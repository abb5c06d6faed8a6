//! Fuzz target for channel documents.
//!
//! Run with:
//!   cargo +nightly fuzz run channel_json fuzz/corpus/channel_json/

#![no_main]

use libfuzzer_sys::fuzz_target;
use qrev::io::channel_from_json_slice;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1024 * 1024 {
        return;
    }
    if let Ok(doc) = channel_from_json_slice(data) {
        // anything accepted must survive a write and a second read unchanged
        let back = channel_from_json_slice(doc.to_json_string().as_bytes())
            .expect("written channel parses");
        assert_eq!(back, doc);
    }
});
