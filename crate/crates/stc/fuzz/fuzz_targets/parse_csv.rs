//! Arbitrary bytes through the CSV parser: must never panic, only error.

#![no_main]

use libfuzzer_sys::fuzz_target;
use stc::ingest::{parse_csv, CsvOptions};

fuzz_target!(|data: &[u8]| {
    let _ = parse_csv(data, "fuzz.csv", &CsvOptions::default());
    let semicolon = CsvOptions {
        delimiter: ';',
        has_header: false,
    };
    let _ = parse_csv(data, "fuzz.csv", &semicolon);
});
