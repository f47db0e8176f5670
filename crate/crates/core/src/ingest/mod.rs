//! Report loading: Impression isolation, sentence segmentation, and
//! dependency parses read from CoNLL-U.

mod conllu;
mod text;

use std::io::Read;
use std::ops::Range;

use serde::Deserialize;

pub use conllu::{
    attach_parses, read_conllu, ConlluBlock, ConlluRow, DependencyGraph, ParseIndex,
};
pub use text::{extract_impression, segment, tokenize_lower};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("report {report_id:?}, sentence {sent_index}: CoNLL-U block has {found} tokens, sentence has {expected}")]
    TokenCountMismatch {
        report_id: String,
        sent_index: usize,
        expected: usize,
        found: usize,
    },
    #[error("report {report_id:?}: CoNLL-U block refers to sentence {sent_index}, but the report has {sentences} sentences")]
    UnknownSentence {
        report_id: String,
        sent_index: usize,
        sentences: usize,
    },
    #[error("malformed CoNLL-U at line {line}: {reason}")]
    MalformedConllu { line: usize, reason: String },
    #[error("invalid dependency graph: {0}")]
    InvalidGraph(String),
    #[error("reports CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    /// Case-folded `surface`.
    pub lower: String,
    /// Position within the sentence.
    pub index: usize,
    /// Byte range within the text the sentence was segmented from.
    pub span: Range<usize>,
}

impl Token {
    pub fn new(surface: &str, index: usize, span: Range<usize>) -> Self {
        Token {
            surface: surface.to_string(),
            lower: surface.to_lowercase(),
            index,
            span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// Byte range within the segmented text.
    pub span: Range<usize>,
    pub parse: Option<DependencyGraph>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>, span: Range<usize>) -> Self {
        assert!(!tokens.is_empty(), "a sentence has at least one token");
        Sentence {
            tokens,
            span,
            parse: None,
        }
    }

    /// Builds a sentence from whitespace-separated tokens; test and tooling helper.
    pub fn from_words(text: &str) -> Self {
        let mut offset = 0;
        let tokens = text
            .split_whitespace()
            .enumerate()
            .map(|(i, w)| {
                let start = offset;
                offset += w.len() + 1;
                Token::new(w, i, start..start + w.len())
            })
            .collect();
        Sentence::new(tokens, 0..offset.saturating_sub(1))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Lemma used for dependency-rule triggers: the parse's LEMMA column when
    /// present, the case-folded form otherwise.
    pub fn lemma(&self, index: usize) -> &str {
        self.parse
            .as_ref()
            .and_then(|g| g.lemma(index))
            .unwrap_or(&self.tokens[index].lower)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    pub report_id: String,
    pub raw_text: String,
    pub impression: String,
    /// Sentences of `impression`; token and sentence spans index into it.
    pub sentences: Vec<Sentence>,
}

impl ReportDocument {
    pub fn new(report_id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        let impression = extract_impression(&raw_text).to_string();
        let sentences = segment(&impression);
        ReportDocument {
            report_id: report_id.into(),
            raw_text,
            impression,
            sentences,
        }
    }
}

/// One row of the reports CSV (`report_id,text`).
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ReportRecord {
    pub report_id: String,
    pub text: String,
}

/// Streams report rows from a CSV with header `report_id,text`.
pub fn read_reports<R: Read>(reader: R) -> impl Iterator<Item = Result<ReportRecord, IngestError>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader)
        .into_deserialize::<ReportRecord>()
        .map(|r| r.map_err(IngestError::from))
}
