//! Arbitrary bytes through the MAUD CSV loader (column mapping included).

#![no_main]

use libfuzzer_sys::fuzz_target;
use stc::ingest::{load_maud_bytes, MaudColumns};

fuzz_target!(|data: &[u8]| {
    let _ = load_maud_bytes(data, "fuzz.csv", &MaudColumns::default());
    let relabeled = MaudColumns {
        label: Some("question".to_string()),
        ..MaudColumns::default()
    };
    let _ = load_maud_bytes(data, "fuzz.csv", &relabeled);
});
