//! Arbitrary bytes through the workbook JSON decoder.

#![no_main]

use libfuzzer_sys::fuzz_target;
use stc::ingest::parse_workbook_json;

fuzz_target!(|data: &[u8]| {
    let _ = parse_workbook_json(data, "fuzz.json");
});
