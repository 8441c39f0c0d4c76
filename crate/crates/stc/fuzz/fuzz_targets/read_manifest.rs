//! Arbitrary bytes through the JSONL manifest reader.

#![no_main]

use libfuzzer_sys::fuzz_target;
use stc::manifest::read_manifest;

fuzz_target!(|data: &[u8]| {
    let _ = read_manifest(std::io::BufReader::new(data));
});
