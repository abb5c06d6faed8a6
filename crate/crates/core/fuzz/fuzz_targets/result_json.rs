//! Fuzz target for reversal result documents and the reversal reader that
//! accepts either a result or a channel.
//!
//! Run with:
//!   cargo +nightly fuzz run result_json fuzz/corpus/result_json/

#![no_main]

use libfuzzer_sys::fuzz_target;
use qrev::io::{result_from_json_slice, reversal_from_json_slice};

fuzz_target!(|data: &[u8]| {
    if data.len() > 1024 * 1024 {
        return;
    }
    let _ = result_from_json_slice(data);
    let _ = reversal_from_json_slice(data);
});
