//! End-to-end: fuzzed CSV through the whole chunking pipeline with the
//! invariant checkers on. The first two bytes pick the budget so small
//! budgets (heavy splitting) and large ones both get explored.

#![no_main]

use libfuzzer_sys::fuzz_target;
use stc::chunker::Budget;
use stc::ingest::{parse_csv, CsvOptions};
use stc::invariants::check_document;
use stc::tokens::{TokenCounter, TokenScheme};

fuzz_target!(|data: &[u8]| {
    let Some((prefix, csv)) = data.split_first_chunk::<2>() else {
        return;
    };
    let budget = 1 + (u16::from_le_bytes(*prefix) as usize) % 1024;
    let Ok(doc) = parse_csv(csv, "fuzz.csv", &CsvOptions::default()) else {
        return;
    };
    for scheme in [TokenScheme::WordPunct, TokenScheme::Chars4] {
        let counter = TokenCounter::new(scheme);
        if let Err(msg) = check_document(&doc, Budget::new(budget).unwrap(), &counter) {
            panic!("invariant violated at budget {budget} ({scheme}): {msg}");
        }
    }
});
