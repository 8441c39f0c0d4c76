//! Deterministic synthetic corpora.
//!
//! Three generators, all driven by [`XorShift64Star`] so every byte is a
//! pure function of the seed:
//!
//! * [`maud_corpus`]: a QA table shaped like a merger-agreement review
//!   dataset — one row per (contract, question) extract with clause text,
//!   question, answer, and contract metadata columns. Rows are grouped by
//!   contract and ordered by question id within each group, the way such
//!   exports usually arrive. Used by the benchmark comparisons and the
//!   retrieval evaluation.
//! * [`uniform_document`]: a flat table of small look-alike rows for
//!   timing runs, where row width barely varies.
//! * [`random_document`]: adversarial little tables (empty cells, embedded
//!   newlines, unicode, the occasional enormous value) for property tests
//!   and fuzzing.
//!
//! Clause text is built from sentences over a fixed legal-flavored word
//! pool. Each question carries a small topic phrase; sentences in a row's
//! clause lean on that row's topic, and some sentences mention the
//! contract by name — so lexical retrieval sees realistic bait: text that
//! shares vocabulary with a query without being the extract the query
//! asks about. Newlines are inserted every `words_per_line` words, giving
//! the raw CSV the paragraph structure long clauses have in practice.

use crate::ingest::{normalize_headers, Cell, MaudDataset, MaudRecord, Sheet, TabularDocument};
use crate::rng::XorShift64Star;

/// Knobs for [`maud_corpus`]. Lengths are in words of clause text; each
/// question id is bound to one length class (short ids first, long ids
/// last), so a contract's rows run short → medium → long.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub rows: usize,
    pub seed: u64,
    /// Distinct contracts; rows are split into this many contiguous blocks.
    pub contracts: usize,
    /// Distinct questions, at most [`question_pool_size`] — they cycle in
    /// ascending order within each contract block.
    pub questions: usize,
    /// How many of the lowest question ids get short clause text.
    pub short_questions: usize,
    /// How many of the highest question ids get long clause text.
    pub long_questions: usize,
    pub short_words: (usize, usize),
    pub medium_words: (usize, usize),
    pub long_words: (usize, usize),
    /// Answer length in words for long-class rows, which restate the
    /// extracted clause in the answer column the way extraction exports
    /// carry the matched span. Short and medium rows keep one-sentence
    /// answers.
    pub long_answer_words: (usize, usize),
    /// Clause text gets a newline roughly every this many words.
    pub words_per_line: (usize, usize),
    /// Chance that a sentence embeds the row's topic phrase.
    pub topic_sentence_prob: f64,
    /// Chance that a sentence names the contract. Kept rare: clause text
    /// refers to the parties by defined terms ("the Company", "Parent"),
    /// and spelled-out party names mostly live in the name column.
    pub name_mention_prob: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rows: 25_827,
            seed: 1,
            contracts: 281,
            questions: 92,
            short_questions: 20,
            long_questions: 20,
            short_words: (15, 60),
            medium_words: (150, 170),
            long_words: (1500, 3200),
            long_answer_words: (365, 395),
            words_per_line: (90, 150),
            topic_sentence_prob: 0.35,
            name_mention_prob: 0.02,
        }
    }
}

impl SynthConfig {
    /// A small corpus with the default shape, for tests.
    pub fn small(rows: usize, seed: u64) -> Self {
        SynthConfig {
            rows,
            seed,
            contracts: (rows / 20).clamp(1, 150),
            ..SynthConfig::default()
        }
    }
}

const ONSETS: [&str; 15] = [
    "Vel", "Dor", "Mar", "Kel", "Tor", "Bran", "Cald", "Fen", "Gor", "Hale", "Jun", "Lom", "Nor",
    "Quil", "Sor",
];
const MIDS: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 10] = [
    "trix", "vane", "mont", "dale", "crest", "field", "hart", "wick", "burn", "ford",
];
const SUFFIX_A: [&str; 6] = [
    "Holdings",
    "Industries",
    "Technologies",
    "Resources",
    "Systems",
    "Partners",
];
const SUFFIX_B: [&str; 4] = ["Corp", "Inc", "Group", "LLC"];

/// Most distinct contract names [`contract_name`] can produce.
pub const CONTRACT_POOL_SIZE: usize = ONSETS.len() * MIDS.len() * CODAS.len();

/// Deterministic, pairwise-distinct contract name for an index below
/// [`CONTRACT_POOL_SIZE`]: an invented coined core ("Velatrix") keeps the
/// names lexically separable, while the corporate suffixes repeat the way
/// real fillings do.
pub fn contract_name(index: usize) -> String {
    assert!(index < CONTRACT_POOL_SIZE, "contract pool exhausted");
    let coined = format!(
        "{}{}{}",
        ONSETS[index % ONSETS.len()],
        MIDS[(index / ONSETS.len()) % MIDS.len()],
        CODAS[index / (ONSETS.len() * MIDS.len())]
    );
    format!(
        "{coined} {} {}",
        SUFFIX_A[index % SUFFIX_A.len()],
        SUFFIX_B[index % SUFFIX_B.len()]
    )
}

const OPENERS: [&str; 4] = [
    "Does the agreement include",
    "How does the agreement define",
    "What conditions apply to",
    "When may the buyer invoke",
];

const TOPICS: [&str; 92] = [
    "material adverse effect carveout",
    "termination fee obligations",
    "antitrust divestiture commitments",
    "specific performance remedies",
    "financing cooperation covenants",
    "fiduciary out provisions",
    "matching rights window",
    "go shop period",
    "no shop restrictions",
    "superior proposal definition",
    "intervening event standard",
    "ordinary course covenants",
    "regulatory efforts standard",
    "closing condition certificates",
    "drop dead date extension",
    "stockholder approval threshold",
    "proxy statement obligations",
    "appraisal rights procedure",
    "confidentiality carveout terms",
    "employee benefit continuation",
    "tail insurance coverage",
    "knowledge qualifier scope",
    "disclosure schedule updates",
    "reverse breakup fee",
    "financing failure remedy",
    "marketing period mechanics",
    "debt commitment letters",
    "equity rollover arrangements",
    "voting agreement scope",
    "support agreement duration",
    "exclusivity extension triggers",
    "window shop allowance",
    "force the vote requirement",
    "recommendation change limits",
    "board recusal rules",
    "special committee mandate",
    "majority of minority vote",
    "dissenters rights waiver",
    "escrow holdback ratio",
    "purchase price adjustment",
    "working capital peg",
    "earnout milestone schedule",
    "contingent value rights",
    "collar mechanism bounds",
    "exchange ratio formula",
    "cash election cap",
    "dividend accrual treatment",
    "fractional share settlement",
    "warrant assumption terms",
    "option cashout treatment",
    "restricted unit conversion",
    "severance protection period",
    "retention bonus pool",
    "pension plan freeze",
    "labor union notification",
    "works council consultation",
    "immigration compliance audit",
    "sanctions screening protocol",
    "export control certification",
    "foreign investment clearance",
    "national security review",
    "competition remedy package",
    "behavioral remedy limits",
    "hell or high water clause",
    "ticking fee accrual",
    "outside date extension payments",
    "solvency certificate delivery",
    "legal opinion condition",
    "comfort letter requirement",
    "audited statement deadline",
    "interim financial covenants",
    "capex approval threshold",
    "leakage indemnity terms",
    "locked box mechanism",
    "transition services outline",
    "reverse transition obligations",
    "intellectual property assignment",
    "patent license grantback",
    "trademark phase out period",
    "domain name transfer",
    "open source disclosure",
    "data room completeness",
    "privacy compliance representation",
    "cybersecurity incident disclosure",
    "insurance claims cooperation",
    "litigation control rights",
    "settlement consent rights",
    "tax gross up provisions",
    "transfer tax allocation",
    "section 338 election",
    "real property consents",
    "environmental liability retention",
];

const CATEGORIES: [&str; 8] = [
    "Conditions to Closing",
    "Deal Protection",
    "Remedies",
    "Operating Covenants",
    "Regulatory Matters",
    "Termination Rights",
    "Disclosure Obligations",
    "Employee Matters",
];

/// Most distinct questions [`question_text`] can produce.
pub const QUESTION_POOL_SIZE: usize = TOPICS.len();

/// Deterministic question for an id below [`QUESTION_POOL_SIZE`]: every id
/// owns one deal-point topic, phrased with a rotating opener.
pub fn question_text(id: usize) -> String {
    assert!(id < QUESTION_POOL_SIZE, "question pool exhausted");
    format!("{} the {}?", OPENERS[id % OPENERS.len()], topic(id))
}

fn topic(question_id: usize) -> &'static str {
    TOPICS[question_id]
}

fn answer_text(question_id: usize) -> String {
    let t = topic(question_id);
    match question_id % 4 {
        0 => format!("Yes; the {t} provision applies as written."),
        1 => format!("No; the agreement omits the {t} entirely."),
        2 => format!("Yes, subject to exceptions covering the {t}."),
        _ => format!("Only in part; the {t} is addressed indirectly."),
    }
}

/// Verbose answer for long-class rows: the one-sentence verdict followed by
/// a restatement of the extracted clause, built from the same sentence pool
/// as the clause text but kept on a single line.
fn long_answer_text(
    rng: &mut XorShift64Star,
    question_id: usize,
    name: &str,
    config: &SynthConfig,
) -> String {
    let target = range(rng, config.long_answer_words);
    let mut words: Vec<String> = answer_text(question_id)
        .split(' ')
        .map(str::to_string)
        .collect();
    while words.len() < target {
        push_sentence(&mut words, rng, topic(question_id), name, config);
    }
    words.join(" ")
}

const FILLER: [&str; 96] = [
    "the", "of", "to", "and", "in", "shall", "party", "parties", "agreement", "merger", "company",
    "buyer", "seller", "closing", "date", "notice", "period", "consent", "board", "directors",
    "stockholders", "shares", "capital", "stock", "business", "effect", "change", "action",
    "obligation", "covenant", "representation", "warranty", "condition", "waiver", "amendment",
    "section", "clause", "schedule", "exhibit", "applicable", "law", "regulation", "authority",
    "governmental", "filing", "approval", "required", "reasonable", "best", "efforts", "material",
    "respect", "subsidiaries", "affiliates", "officers", "employees", "benefit", "plans",
    "payment", "fee", "expenses", "liability", "damages", "breach", "cure", "terminate",
    "termination", "survive", "pursuant", "hereof", "thereof", "herein", "provided", "however",
    "notwithstanding", "subject", "accordance", "connection", "transaction", "contemplated",
    "prior", "written", "delivered", "executed", "performed", "outstanding", "entitled",
    "permitted", "restricted", "disclosed", "records", "books", "assets", "liabilities",
    "indebtedness", "taxes",
];

fn chance(rng: &mut XorShift64Star, p: f64) -> bool {
    rng.next_below(1_000_000) < (p * 1_000_000.0) as u64
}

fn range(rng: &mut XorShift64Star, (lo, hi): (usize, usize)) -> usize {
    debug_assert!(lo <= hi);
    lo + rng.next_below((hi - lo + 1) as u64) as usize
}

/// Append one sentence (9–15 words plus a period) to `words`.
fn push_sentence(
    words: &mut Vec<String>,
    rng: &mut XorShift64Star,
    topic: &str,
    name: &str,
    config: &SynthConfig,
) {
    let target = 9 + rng.next_below(7) as usize;
    let start = words.len();
    if chance(rng, config.name_mention_prob) {
        words.push("under".to_string());
        words.push("the".to_string());
        words.extend(name.split(' ').map(str::to_string));
        words.push("agreement".to_string());
    }
    if chance(rng, config.topic_sentence_prob) {
        words.extend(topic.split(' ').map(str::to_string));
    }
    while words.len() - start < target {
        words.push(FILLER[rng.next_below(FILLER.len() as u64) as usize].to_string());
    }
    if let Some(last) = words.last_mut() {
        last.push('.');
    }
}

/// Clause text of roughly `target_words` words: sentences over the filler
/// pool, salted with the row's topic phrase and contract name, broken into
/// lines every `words_per_line` words.
fn clause_text(
    rng: &mut XorShift64Star,
    target_words: usize,
    topic: &str,
    name: &str,
    config: &SynthConfig,
) -> String {
    let mut words: Vec<String> = Vec::with_capacity(target_words + 24);
    while words.len() < target_words {
        push_sentence(&mut words, rng, topic, name, config);
    }
    let mut out = String::with_capacity(words.len() * 8);
    let mut line_budget = range(rng, config.words_per_line);
    let mut words_in_line = 0usize;
    for word in &words {
        if words_in_line == 0 {
            // start of text or of a fresh line
        } else if words_in_line >= line_budget {
            out.push('\n');
            line_budget = range(rng, config.words_per_line);
            words_in_line = 0;
        } else {
            out.push(' ');
        }
        out.push_str(word);
        words_in_line += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LengthClass {
    Short,
    Medium,
    Long,
}

/// Length class of a question id: short ids ask for brief extracts, the
/// highest ids for long ones. Ids ascend within a contract block, so each
/// contract's rows run short → medium → long, the way exports sorted by
/// question id do.
fn question_class(question_id: usize, config: &SynthConfig) -> LengthClass {
    if question_id < config.short_questions {
        LengthClass::Short
    } else if question_id + config.long_questions >= config.questions {
        LengthClass::Long
    } else {
        LengthClass::Medium
    }
}

fn word_target(rng: &mut XorShift64Star, question_id: usize, config: &SynthConfig) -> usize {
    match question_class(question_id, config) {
        LengthClass::Short => range(rng, config.short_words),
        LengthClass::Medium => range(rng, config.medium_words),
        LengthClass::Long => range(rng, config.long_words),
    }
}

/// Headers of the generated QA table, matching
/// [`crate::ingest::MaudColumns::default`].
pub const MAUD_HEADERS: [&str; 6] = [
    "text",
    "question",
    "answer",
    "contract_name",
    "deal_point_category",
    "deal_point_type",
];

/// Generate a QA corpus per `config`. The document and the records are
/// built side by side and stay row-aligned; `load_maud_bytes` over the
/// CSV serialization of the document yields the same records.
pub fn maud_corpus(config: &SynthConfig) -> MaudDataset {
    assert!(config.contracts >= 1, "need at least one contract");
    assert!(
        config.contracts <= CONTRACT_POOL_SIZE,
        "at most {CONTRACT_POOL_SIZE} contracts"
    );
    assert!(
        (1..=QUESTION_POOL_SIZE).contains(&config.questions),
        "questions must be 1..={QUESTION_POOL_SIZE}"
    );
    assert!(
        config.short_questions + config.long_questions <= config.questions,
        "length classes exceed the question count"
    );
    let mut rng = XorShift64Star::new(config.seed);
    let names: Vec<String> = (0..config.contracts).map(contract_name).collect();
    let questions: Vec<String> = (0..config.questions).map(question_text).collect();

    let mut rows: Vec<Vec<Cell>> = Vec::with_capacity(config.rows);
    let mut records: Vec<MaudRecord> = Vec::with_capacity(config.rows);
    let block = config.rows.div_ceil(config.contracts).max(1);
    for row_index in 0..config.rows {
        let contract = (row_index / block).min(config.contracts - 1);
        let within = row_index % block;
        // ascending question ids inside a block, spread across all of them
        let question_id = (within * config.questions / block).min(config.questions - 1);
        let name = &names[contract];
        let question = &questions[question_id];
        let words = word_target(&mut rng, question_id, config);
        // Long rows read like definitional boilerplate: they refer to the
        // agreement through defined terms, so the filed name shows up only
        // in the contract_name column, not in the clause text.
        let quiet = SynthConfig {
            name_mention_prob: 0.0,
            ..config.clone()
        };
        let (text, answer) = match question_class(question_id, config) {
            LengthClass::Long => (
                clause_text(&mut rng, words, topic(question_id), name, &quiet),
                long_answer_text(&mut rng, question_id, name, &quiet),
            ),
            _ => (
                clause_text(&mut rng, words, topic(question_id), name, config),
                answer_text(question_id),
            ),
        };
        let category = CATEGORIES[(question_id / OPENERS.len()) % CATEGORIES.len()].to_string();
        let point_type = topic(question_id).to_string();
        rows.push(vec![
            Cell::new(text.clone()),
            Cell::new(question.clone()),
            Cell::new(answer.clone()),
            Cell::new(name.clone()),
            Cell::new(category.clone()),
            Cell::new(point_type.clone()),
        ]);
        records.push(MaudRecord {
            row_index,
            text,
            question: question.clone(),
            answer,
            contract_name: name.clone(),
            deal_point_category: Some(category),
            deal_point_type: Some(point_type),
            label: None,
        });
    }
    let document = TabularDocument {
        source_id: format!("synthetic-maud-{}r-seed{}", config.rows, config.seed),
        sheets: vec![Sheet {
            name: "train".to_string(),
            headers: MAUD_HEADERS.iter().map(|h| h.to_string()).collect(),
            rows,
        }],
    };
    MaudDataset { document, records }
}

const FIRST_NAMES: [&str; 12] = [
    "Ada", "Ben", "Cleo", "Dev", "Edna", "Finn", "Gwen", "Hugo", "Iris", "Jack", "Kira", "Liam",
];
const LAST_NAMES: [&str; 12] = [
    "Archer", "Bell", "Chen", "Dawson", "Eng", "Flores", "Gray", "Hobbs", "Iwata", "Jensen",
    "Katz", "Lund",
];

/// A flat table of `rows` small rows (six narrow columns) for timing runs;
/// every row renders to a few dozen tokens.
pub fn uniform_document(rows: usize, seed: u64) -> TabularDocument {
    let mut rng = XorShift64Star::new(seed);
    let mut out_rows: Vec<Vec<Cell>> = Vec::with_capacity(rows);
    for id in 0..rows {
        let name = format!(
            "{} {}",
            FIRST_NAMES[rng.next_below(FIRST_NAMES.len() as u64) as usize],
            LAST_NAMES[rng.next_below(LAST_NAMES.len() as u64) as usize]
        );
        let category = CATEGORIES[rng.next_below(CATEGORIES.len() as u64) as usize];
        let qty = 1 + rng.next_below(500);
        let price = format!("{}.{:02}", 1 + rng.next_below(900), rng.next_below(100));
        let note_len = 8 + rng.next_below(13) as usize;
        let note: Vec<&str> = (0..note_len)
            .map(|_| FILLER[rng.next_below(FILLER.len() as u64) as usize])
            .collect();
        out_rows.push(vec![
            Cell::new(id.to_string()),
            Cell::new(name),
            Cell::new(category),
            Cell::new(qty.to_string()),
            Cell::new(price),
            Cell::new(note.join(" ")),
        ]);
    }
    TabularDocument {
        source_id: format!("uniform-{rows}r-seed{seed}"),
        sheets: vec![Sheet {
            name: "default".to_string(),
            headers: ["id", "name", "category", "qty", "price", "note"]
                .iter()
                .map(|h| h.to_string())
                .collect(),
            rows: out_rows,
        }],
    }
}

const UNICODE_WORDS: [&str; 6] = ["日本語", "データ", "Bêta", "naïve", "Δelta", "москва"];

fn random_cell(rng: &mut XorShift64Star) -> Cell {
    let class = rng.next_below(100);
    let word = |rng: &mut XorShift64Star| FILLER[rng.next_below(FILLER.len() as u64) as usize];
    let text = match class {
        0..=19 => String::new(),
        20..=64 => {
            let n = 1 + rng.next_below(8) as usize;
            (0..n).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
        }
        65..=74 => {
            // embedded line breaks, sometimes CRLF
            let sep = if chance(rng, 0.3) { "\r\n" } else { "\n" };
            let n = 2 + rng.next_below(4) as usize;
            (0..n).map(|_| word(rng)).collect::<Vec<_>>().join(sep)
        }
        75..=79 => {
            let n = 1 + rng.next_below(3) as usize;
            (0..n)
                .map(|_| UNICODE_WORDS[rng.next_below(UNICODE_WORDS.len() as u64) as usize])
                .collect::<Vec<_>>()
                .join(" ")
        }
        80..=91 => format!("{}", rng.next_below(1_000_000)),
        92..=94 => {
            // one enormous value to force emergency splitting
            let n = 200 + rng.next_below(400) as usize;
            (0..n).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
        }
        _ => format!("say \"{}\", {}; done", word(rng), word(rng)),
    };
    Cell::new(text)
}

/// An adversarial little table: 1–2 sheets, 1–6 columns, 0–25 rows, cells
/// spanning empties, newlines, unicode, numbers, quotes, and the odd
/// enormous value. Drives the chunking property tests and fuzz targets.
pub fn random_document(rng: &mut XorShift64Star) -> TabularDocument {
    let sheet_count = 1 + rng.next_below(2) as usize;
    let mut sheets = Vec::with_capacity(sheet_count);
    for s in 0..sheet_count {
        let cols = 1 + rng.next_below(6) as usize;
        let rows = rng.next_below(26) as usize;
        let raw_headers: Vec<String> = (0..cols)
            .map(|c| match rng.next_below(10) {
                0 => String::new(),
                1 => format!("col {c}\nnext"),
                2 => UNICODE_WORDS[rng.next_below(UNICODE_WORDS.len() as u64) as usize].to_string(),
                _ => format!(
                    "{}_{c}",
                    FILLER[rng.next_below(FILLER.len() as u64) as usize]
                ),
            })
            .collect();
        let headers = normalize_headers(&raw_headers);
        let rows: Vec<Vec<Cell>> = (0..rows)
            .map(|_| (0..cols).map(|_| random_cell(rng)).collect())
            .collect();
        let name = match rng.next_below(6) {
            0 => format!("sheet {s}\u{a0}x"),
            1 => format!("Ярус {s}"),
            _ => format!("sheet{s}"),
        };
        sheets.push(Sheet {
            name,
            headers,
            rows,
        });
    }
    TabularDocument {
        source_id: "fuzz".to_string(),
        sheets,
    }
}
