//! Structure-aware chunking for tabular documents.
//!
//! The pipeline turns a [`TabularDocument`](ingest::TabularDocument) into a
//! [`RowTree`](row_tree::RowTree) of key-value blocks, splits rows that bust the
//! token budget at pair boundaries, and greedily merges sibling leaves back into
//! dense, non-overlapping chunks. Two linearize-then-split baselines
//! ([`baselines`]), chunk-level statistics ([`metrics`]), and a BM25 retrieval
//! harness ([`retrieval`]) sit alongside it so strategies can be compared on the
//! same corpus end to end.
//!
//! Everything is deterministic: no randomness outside the seeded
//! [`rng::XorShift64Star`], stable tie-breaking everywhere, and chunking itself
//! is single-threaded so manifests are byte-identical across runs and thread
//! counts.

pub mod baselines;
pub mod chunker;
pub mod ingest;
pub mod invariants;
pub mod manifest;
pub mod metrics;
pub mod retrieval;
pub mod rng;
pub mod row_tree;
pub mod synth;
pub mod tokens;
