//! CoNLL-U reading and alignment of parses with segmented reports.
//!
//! Each sentence block must carry `# report_id = ...` and `# sent_index = ...`
//! comment lines naming the report and the 0-based sentence it parses. Only
//! the ID, FORM, LEMMA, HEAD and DEPREL columns are used; multiword-token
//! ranges (`1-2`) and empty nodes (`1.1`) are skipped.

use std::collections::HashMap;
use std::io::BufRead;

use super::{IngestError, ReportDocument};

/// Head/relation structure of one sentence. Indices are 0-based token
/// positions; `None` marks the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    heads: Vec<Option<usize>>,
    relations: Vec<String>,
    lemmas: Vec<Option<String>>,
}

impl DependencyGraph {
    /// Validates that the heads form a single tree with exactly one root.
    pub fn new(
        heads: Vec<Option<usize>>,
        relations: Vec<String>,
        lemmas: Vec<Option<String>>,
    ) -> Result<Self, IngestError> {
        let invalid = |msg: String| Err(IngestError::InvalidGraph(msg));
        let n = heads.len();
        if n == 0 {
            return invalid("graph has no nodes".into());
        }
        if relations.len() != n || lemmas.len() != n {
            return invalid("heads, relations and lemmas differ in length".into());
        }
        let roots = heads.iter().filter(|h| h.is_none()).count();
        if roots != 1 {
            return invalid(format!("expected exactly one root, found {roots}"));
        }
        for (i, head) in heads.iter().enumerate() {
            match *head {
                Some(h) if h >= n => return invalid(format!("token {i} has head {h} out of range")),
                Some(h) if h == i => return invalid(format!("token {i} is its own head")),
                _ => {}
            }
        }
        // With one root and n-1 edges, the graph is a tree iff every node reaches the root.
        for start in 0..n {
            let mut node = start;
            let mut steps = 0;
            while let Some(h) = heads[node] {
                node = h;
                steps += 1;
                if steps > n {
                    return invalid(format!("cycle through token {start}"));
                }
            }
        }
        Ok(DependencyGraph {
            heads,
            relations,
            lemmas: lemmas
                .into_iter()
                .map(|l| l.map(|l| l.to_lowercase()))
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn head(&self, index: usize) -> Option<usize> {
        self.heads[index]
    }

    pub fn relation(&self, index: usize) -> &str {
        &self.relations[index]
    }

    /// Lowercased LEMMA column, if the parse supplied one.
    pub fn lemma(&self, index: usize) -> Option<&str> {
        self.lemmas[index].as_deref()
    }

    pub fn root(&self) -> usize {
        self.heads.iter().position(Option::is_none).unwrap()
    }

    /// Number of edges between `index` and the root.
    pub fn depth(&self, index: usize) -> usize {
        let mut depth = 0;
        let mut node = index;
        while let Some(h) = self.heads[node] {
            node = h;
            depth += 1;
        }
        depth
    }

    pub fn dependents(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.heads
            .iter()
            .enumerate()
            .filter(move |(_, h)| **h == Some(index))
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConlluRow {
    pub form: String,
    pub lemma: Option<String>,
    /// 1-based head id; 0 is ROOT.
    pub head: usize,
    pub deprel: String,
}

/// One sentence block with its alignment metadata and validated graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConlluBlock {
    pub report_id: String,
    pub sent_index: usize,
    pub rows: Vec<ConlluRow>,
    pub graph: DependencyGraph,
    /// 1-based line of the block's first line in the source.
    pub line: usize,
}

#[derive(Default)]
struct PendingBlock {
    report_id: Option<String>,
    sent_index: Option<usize>,
    rows: Vec<ConlluRow>,
    line: Option<usize>,
}

impl PendingBlock {
    fn is_empty(&self) -> bool {
        self.line.is_none()
    }

    fn finish(self) -> Result<ConlluBlock, IngestError> {
        let line = self.line.unwrap_or(0);
        let malformed = |reason: String| IngestError::MalformedConllu { line, reason };
        let report_id = self
            .report_id
            .ok_or_else(|| malformed("block lacks a `# report_id = ...` comment".into()))?;
        let sent_index = self
            .sent_index
            .ok_or_else(|| malformed("block lacks a `# sent_index = ...` comment".into()))?;
        if self.rows.is_empty() {
            return Err(malformed("block has no token rows".into()));
        }
        let n = self.rows.len();
        let mut heads = Vec::with_capacity(n);
        for (i, row) in self.rows.iter().enumerate() {
            if row.head > n {
                return Err(malformed(format!("token {} has HEAD {} beyond the sentence", i + 1, row.head)));
            }
            heads.push(row.head.checked_sub(1));
        }
        let graph = DependencyGraph::new(
            heads,
            self.rows.iter().map(|r| r.deprel.clone()).collect(),
            self.rows.iter().map(|r| r.lemma.clone()).collect(),
        )
        .map_err(|e| match e {
            IngestError::InvalidGraph(reason) => malformed(reason),
            other => other,
        })?;
        Ok(ConlluBlock {
            report_id,
            sent_index,
            rows: self.rows,
            graph,
            line,
        })
    }
}

fn parse_row(line_no: usize, line: &str, expected_id: usize) -> Result<Option<ConlluRow>, IngestError> {
    let malformed = |reason: String| IngestError::MalformedConllu { line: line_no, reason };
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(malformed(format!("expected 10 tab-separated columns, found {}", cols.len())));
    }
    if cols[0].contains(['-', '.']) {
        return Ok(None);
    }
    let id: usize = cols[0]
        .parse()
        .map_err(|_| malformed(format!("invalid ID {:?}", cols[0])))?;
    if id != expected_id {
        return Err(malformed(format!("expected token ID {expected_id}, found {id}")));
    }
    let head: usize = cols[6]
        .parse()
        .map_err(|_| malformed(format!("invalid HEAD {:?}", cols[6])))?;
    let deprel = cols[7];
    if deprel.is_empty() || deprel == "_" {
        return Err(malformed("missing DEPREL".into()));
    }
    let lemma = match cols[2] {
        "" | "_" => None,
        l => Some(l.to_string()),
    };
    Ok(Some(ConlluRow {
        form: cols[1].to_string(),
        lemma,
        head,
        deprel: deprel.to_string(),
    }))
}

/// Reads every sentence block of a CoNLL-U stream.
pub fn read_conllu<R: BufRead>(reader: R) -> Result<Vec<ConlluBlock>, IngestError> {
    let mut blocks = Vec::new();
    let mut pending = PendingBlock::default();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');

        if line.trim().is_empty() {
            if !pending.is_empty() {
                blocks.push(std::mem::take(&mut pending).finish()?);
            }
            continue;
        }
        pending.line.get_or_insert(line_no);

        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "report_id" => pending.report_id = Some(value.to_string()),
                    "sent_index" => {
                        let idx = value.parse().map_err(|_| IngestError::MalformedConllu {
                            line: line_no,
                            reason: format!("invalid sent_index {value:?}"),
                        })?;
                        pending.sent_index = Some(idx);
                    }
                    _ => {}
                }
            }
            continue;
        }

        if let Some(row) = parse_row(line_no, line, pending.rows.len() + 1)? {
            pending.rows.push(row);
        }
    }
    if !pending.is_empty() {
        blocks.push(pending.finish()?);
    }
    Ok(blocks)
}

/// Blocks grouped by report, for looking up the parses of one document.
#[derive(Debug, Default, Clone)]
pub struct ParseIndex {
    by_report: HashMap<String, Vec<ConlluBlock>>,
}

impl ParseIndex {
    pub fn from_blocks(blocks: impl IntoIterator<Item = ConlluBlock>) -> Self {
        let mut by_report: HashMap<String, Vec<ConlluBlock>> = HashMap::new();
        for block in blocks {
            by_report.entry(block.report_id.clone()).or_default().push(block);
        }
        ParseIndex { by_report }
    }

    pub fn get(&self, report_id: &str) -> &[ConlluBlock] {
        self.by_report.get(report_id).map_or(&[], Vec::as_slice)
    }

    pub fn report_count(&self) -> usize {
        self.by_report.len()
    }
}

/// Attaches the parses in `blocks` that belong to `doc`. Blocks for other
/// reports are ignored; sentences without a block keep `parse = None`.
pub fn attach_parses(mut doc: ReportDocument, blocks: &[ConlluBlock]) -> Result<ReportDocument, IngestError> {
    let mut seen = vec![false; doc.sentences.len()];
    for block in blocks.iter().filter(|b| b.report_id == doc.report_id) {
        let Some(sentence) = doc.sentences.get_mut(block.sent_index) else {
            return Err(IngestError::UnknownSentence {
                report_id: doc.report_id.clone(),
                sent_index: block.sent_index,
                sentences: seen.len(),
            });
        };
        if block.rows.len() != sentence.tokens.len() {
            return Err(IngestError::TokenCountMismatch {
                report_id: doc.report_id.clone(),
                sent_index: block.sent_index,
                expected: sentence.tokens.len(),
                found: block.rows.len(),
            });
        }
        if std::mem::replace(&mut seen[block.sent_index], true) {
            return Err(IngestError::MalformedConllu {
                line: block.line,
                reason: format!(
                    "duplicate block for report {:?} sentence {}",
                    doc.report_id, block.sent_index
                ),
            });
        }
        sentence.parse = Some(block.graph.clone());
    }
    Ok(doc)
}
