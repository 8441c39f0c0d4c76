//! BM25 retrieval and recall evaluation over chunk corpora.
//!
//! [`Bm25Index`] is a plain Okapi BM25 index (`idf = ln((N - df + 0.5) /
//! (df + 0.5) + 1)`, defaults `k1 = 1.2`, `b = 0.75`) over analyzed chunk
//! texts: lowercase, split on any non-alphanumeric character. Ranking is
//! fully deterministic — per-document scores accumulate in query-term order
//! and ties break toward the lower chunk id — so results are reproducible
//! across runs and thread counts.
//!
//! [`evaluate`] scores sampled QA queries against an index: a chunk is
//! relevant to a query when its normalized text (lowercased, whitespace runs
//! collapsed) contains both the contract name and the question label.
//! Metrics are Recall@{1,3,5}, MRR, and hit rate, all computed within the
//! top-`cutoff` ranks.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::MaudDataset;
use crate::rng::XorShift64Star;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("asked for {requested} queries but only {available} records are available")]
    SampleSize { requested: usize, available: usize },
    #[error("got {got} rankings for {expected} queries")]
    RankingCount { expected: usize, got: usize },
    #[error("ranking references chunk {index} but the corpus has {len} chunks")]
    UnknownChunk { index: usize, len: usize },
}

/// Query terms / index terms: lowercase, split on non-alphanumerics.
pub fn analyze(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug)]
pub struct Bm25Index {
    params: Bm25Params,
    postings: HashMap<String, Vec<(u32, u32)>>,
    doc_len: Vec<u32>,
    avg_len: f64,
    texts: Vec<String>,
}

impl Bm25Index {
    pub fn build(texts: Vec<String>, params: Bm25Params) -> Result<Bm25Index, RetrievalError> {
        if texts.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        assert!(texts.len() <= u32::MAX as usize, "corpus too large for u32 ids");
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut doc_len = Vec::with_capacity(texts.len());
        for (doc, text) in texts.iter().enumerate() {
            let mut counts: HashMap<String, u32> = HashMap::new();
            let mut len = 0u32;
            for term in analyze(text) {
                *counts.entry(term).or_insert(0) += 1;
                len += 1;
            }
            doc_len.push(len);
            for (term, tf) in counts {
                postings.entry(term).or_default().push((doc as u32, tf));
            }
        }
        let total: u64 = doc_len.iter().map(|&l| l as u64).sum();
        let avg_len = if total == 0 {
            1.0
        } else {
            total as f64 / texts.len() as f64
        };
        Ok(Bm25Index {
            params,
            postings,
            doc_len,
            avg_len,
            texts,
        })
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    /// Top-`cutoff` chunks for `query`, best first, scores attached.
    /// Repeated query terms contribute once per occurrence.
    pub fn rank(&self, query: &str, cutoff: usize) -> Vec<(usize, f64)> {
        let n = self.texts.len();
        let mut scores = vec![0.0f64; n];
        for term in analyze(query) {
            let Some(postings) = self.postings.get(&term) else {
                continue;
            };
            let df = postings.len() as f64;
            let idf = (((n as f64 - df + 0.5) / (df + 0.5)) + 1.0).ln();
            for &(doc, tf) in postings {
                let tf = tf as f64;
                let dl = self.doc_len[doc as usize] as f64;
                let denom =
                    tf + self.params.k1 * (1.0 - self.params.b + self.params.b * dl / self.avg_len);
                scores[doc as usize] += idf * tf * (self.params.k1 + 1.0) / denom;
            }
        }
        // every matched document has a strictly positive score (idf > 0)
        let mut ranked: Vec<(usize, f64)> = scores
            .into_iter()
            .enumerate()
            .filter(|&(_, s)| s > 0.0)
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(cutoff);
        ranked
    }
}

/// Lowercase and collapse each whitespace run to a single space.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_whitespace = false;
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !in_whitespace {
                out.push(' ');
                in_whitespace = true;
            }
        } else {
            in_whitespace = false;
            out.extend(ch.to_lowercase());
        }
    }
    out
}

/// A chunk answers a query when its normalized text contains both the
/// contract name and the question label.
pub fn is_relevant(chunk_text: &str, contract_name: &str, question_label: &str) -> bool {
    let hay = normalize(chunk_text);
    hay.contains(&normalize(contract_name)) && hay.contains(&normalize(question_label))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub query_id: usize,
    /// Retrieval text: `<question> <contract name>`.
    pub text: String,
    pub contract_name: String,
    /// The label column when the dataset has one, else the question text.
    pub question_label: String,
    pub source_row: usize,
}

/// Sample `n` distinct records as queries, deterministically in `seed`.
pub fn sample_queries(
    dataset: &MaudDataset,
    n: usize,
    seed: u64,
) -> Result<Vec<Query>, RetrievalError> {
    let records = &dataset.records;
    if n > records.len() {
        return Err(RetrievalError::SampleSize {
            requested: n,
            available: records.len(),
        });
    }
    let mut rng = XorShift64Star::new(seed);
    let indices = rng.sample_indices(records.len(), n);
    Ok(indices
        .into_iter()
        .enumerate()
        .map(|(query_id, idx)| {
            let record = &records[idx];
            Query {
                query_id,
                text: format!("{} {}", record.question, record.contract_name),
                contract_name: record.contract_name.clone(),
                question_label: record
                    .label
                    .clone()
                    .unwrap_or_else(|| record.question.clone()),
                source_row: record.row_index,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub n_queries: usize,
    pub cutoff: usize,
    /// Sampling seed behind the query set, when the queries came from
    /// [`sample_queries`]. Stamped by the caller; `None` for external
    /// ranked lists.
    pub seed: Option<u64>,
    /// Recall at ranks 1, 3, and 5 (ranks past `cutoff` count as misses).
    pub recall_at: BTreeMap<usize, f64>,
    /// Mean reciprocal rank of the first relevant chunk within `cutoff`.
    pub mrr: f64,
    /// Share of queries with any relevant chunk within `cutoff`.
    pub hit_rate_at_cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryTrace {
    pub query_id: usize,
    pub source_row: usize,
    pub first_hit_rank: Option<usize>,
    pub top1_chunk: Option<usize>,
}

/// Rank every query against the index (in parallel) and score the results.
pub fn evaluate(
    index: &Bm25Index,
    queries: &[Query],
    cutoff: usize,
) -> (EvalResult, Vec<QueryTrace>) {
    let rankings: Vec<Vec<usize>> = queries
        .par_iter()
        .map(|q| index.rank(&q.text, cutoff).into_iter().map(|(id, _)| id).collect())
        .collect();
    evaluate_ranked_lists(index.texts(), &rankings, queries, cutoff)
        .expect("index rankings are valid by construction")
}

/// Score externally produced rankings (chunk ids, best first) against the
/// chunk texts. [`evaluate`] is this function fed by [`Bm25Index::rank`].
pub fn evaluate_ranked_lists(
    texts: &[String],
    rankings: &[Vec<usize>],
    queries: &[Query],
    cutoff: usize,
) -> Result<(EvalResult, Vec<QueryTrace>), RetrievalError> {
    if rankings.len() != queries.len() {
        return Err(RetrievalError::RankingCount {
            expected: queries.len(),
            got: rankings.len(),
        });
    }
    let mut candidates: HashSet<usize> = HashSet::new();
    for ranking in rankings {
        for &id in ranking {
            if id >= texts.len() {
                return Err(RetrievalError::UnknownChunk {
                    index: id,
                    len: texts.len(),
                });
            }
        }
        candidates.extend(ranking.iter().take(cutoff).copied());
    }
    // only ranked candidates ever get relevance-checked, so normalize just those
    let normalized: HashMap<usize, String> = candidates
        .into_par_iter()
        .map(|id| (id, normalize(&texts[id])))
        .collect();

    let mut hits = [0usize; 3]; // ranks 1, 3, 5
    let mut hits_at_cutoff = 0usize;
    let mut mrr_sum = 0.0f64;
    let mut traces = Vec::with_capacity(queries.len());
    for (query, ranking) in queries.iter().zip(rankings) {
        let contract = normalize(&query.contract_name);
        let label = normalize(&query.question_label);
        let first_hit_rank = ranking
            .iter()
            .take(cutoff)
            .position(|id| {
                let text = &normalized[id];
                text.contains(&contract) && text.contains(&label)
            })
            .map(|p| p + 1);
        if let Some(rank) = first_hit_rank {
            for (slot, k) in [1usize, 3, 5].into_iter().enumerate() {
                if rank <= k {
                    hits[slot] += 1;
                }
            }
            hits_at_cutoff += 1;
            mrr_sum += 1.0 / rank as f64;
        }
        traces.push(QueryTrace {
            query_id: query.query_id,
            source_row: query.source_row,
            first_hit_rank,
            top1_chunk: ranking.first().copied(),
        });
    }

    let denom = queries.len().max(1) as f64;
    let recall_at: BTreeMap<usize, f64> = [1usize, 3, 5]
        .into_iter()
        .zip(hits)
        .map(|(k, h)| (k, h as f64 / denom))
        .collect();
    let result = EvalResult {
        n_queries: queries.len(),
        cutoff,
        seed: None,
        mrr: mrr_sum / denom,
        hit_rate_at_cutoff: hits_at_cutoff as f64 / denom,
        recall_at,
    };
    debug_assert!(result.recall_at[&1] <= result.recall_at[&3]);
    debug_assert!(result.recall_at[&3] <= result.recall_at[&5]);
    debug_assert!(result.recall_at[&5] <= result.hit_rate_at_cutoff);
    debug_assert!(result.recall_at[&1] <= result.mrr + 1e-12);
    debug_assert!(result.mrr <= result.hit_rate_at_cutoff + 1e-12);
    Ok((result, traces))
}
