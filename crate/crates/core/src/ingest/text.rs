//! Impression isolation and the built-in sentence splitter / tokenizer.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

use super::{Sentence, Token};

static IMPRESSION_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^[^\S\n]*impression[^\S\n]*:").unwrap());

// Any line-initial all-caps word (or several) followed by a colon.
static SECTION_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[^\S\n]*[A-Z]{2,}(?:[^\S\n]+[A-Z]{2,})*[^\S\n]*:").unwrap());

fn line_starts(text: &str) -> impl Iterator<Item = usize> + '_ {
    std::iter::once(0).chain(text.match_indices('\n').map(|(i, _)| i + 1))
}

fn is_stop_header(line: &str) -> bool {
    SECTION_HEADER.is_match(line) || IMPRESSION_HEADER.is_match(line)
}

/// Returns the Impression section of a report, trimmed.
///
/// The section starts after a line-initial `IMPRESSION:` header (any case)
/// and runs to the next line-initial section header or the end of the text.
/// Without an Impression header the whole (trimmed) text is returned.
pub fn extract_impression(raw_text: &str) -> &str {
    let Some((header_line, mut body_start)) = line_starts(raw_text).find_map(|start| {
        IMPRESSION_HEADER
            .find(&raw_text[start..])
            .map(|m| (start, start + m.end()))
    }) else {
        return raw_text.trim();
    };

    // Collapse repeated headers on the header line, e.g. "IMPRESSION: Impression: ...".
    loop {
        let rest = &raw_text[body_start..];
        let skipped = rest.len() - rest.trim_start_matches(|c: char| c != '\n' && c.is_whitespace()).len();
        match IMPRESSION_HEADER.find(&rest[skipped..]) {
            Some(m) => body_start += skipped + m.end(),
            None => break,
        }
    }

    let body_end = line_starts(raw_text)
        .filter(|&start| start > header_line && start >= body_start)
        .find(|&start| is_stop_header(&raw_text[start..]))
        .unwrap_or(raw_text.len());

    raw_text[body_start..body_end.max(body_start)].trim()
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits text into sentences of tokens.
///
/// Word tokens are maximal alphanumeric runs; every other non-whitespace
/// character is a token of its own. A `.`, `!` or `?` token followed by
/// whitespace or the end of the text closes the sentence.
pub fn segment(text: &str) -> Vec<Sentence> {
    let mut sentences = Vec::new();
    let mut current: Vec<(Range<usize>, &str)> = Vec::new();

    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        let mut end = start + c.len_utf8();
        if c.is_alphanumeric() {
            while let Some(&(i, next)) = chars.peek() {
                if !next.is_alphanumeric() {
                    break;
                }
                end = i + next.len_utf8();
                chars.next();
            }
        }
        current.push((start..end, &text[start..end]));

        let closes = is_terminator(c) && chars.peek().is_none_or(|&(_, next)| next.is_whitespace());
        if closes {
            sentences.push(build_sentence(std::mem::take(&mut current)));
        }
    }
    if !current.is_empty() {
        sentences.push(build_sentence(current));
    }
    sentences
}

fn build_sentence(pieces: Vec<(Range<usize>, &str)>) -> Sentence {
    let span = pieces[0].0.start..pieces[pieces.len() - 1].0.end;
    let tokens = pieces
        .into_iter()
        .enumerate()
        .map(|(index, (span, surface))| Token::new(surface, index, span))
        .collect();
    Sentence::new(tokens, span)
}

/// Lowercased token strings of a phrase or rule fragment, using the same
/// token boundaries as [`segment`] but ignoring sentence breaks.
pub fn tokenize_lower(text: &str) -> Vec<String> {
    segment(text)
        .into_iter()
        .flat_map(|s| s.tokens.into_iter().map(|t| t.lower))
        .collect()
}
