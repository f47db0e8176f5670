use std::path::{Path, PathBuf};

use super::{
    Direction, PathStep, DependencyRule, PatternElement, Phase, PhrasePattern, Rule, RuleError,
    RulePattern, SurfaceRule,
};
use crate::ingest::tokenize_lower;
use crate::observation::Observation;

fn is_comment(line: &str) -> bool {
    line.trim_start().starts_with('#')
}

/// Parses one observation's phrase list.
///
/// Empty lines and `#` comments are skipped. A line holding nothing but
/// whitespace is reported as [`RuleError::EmptyPhrase`].
pub fn parse_phrase_str(
    observation: Observation,
    text: &str,
    source: impl AsRef<Path>,
) -> Result<Vec<PhrasePattern>, RuleError> {
    let mut out: Vec<PhrasePattern> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() || is_comment(line) {
            continue;
        }
        let phrase = PhrasePattern::new(observation, line).ok_or_else(|| RuleError::EmptyPhrase {
            path: source.as_ref().to_path_buf(),
            line: i + 1,
        })?;
        if !out.contains(&phrase) {
            out.push(phrase);
        }
    }
    Ok(out)
}

/// Reads every `<slug>.txt` file in `dir`. Other files are ignored.
/// Phrases come back in observation order, then file order.
pub fn parse_phrase_dir(dir: &Path) -> Result<Vec<PhrasePattern>, RuleError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RuleError::Io { path, source }
    };
    let mut files: Vec<(Observation, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if !path.is_file() || path.extension().is_none_or(|e| e != "txt") {
            continue;
        }
        let slug = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        match Observation::from_slug(&slug) {
            Some(obs) if !obs.is_derived() => files.push((obs, path)),
            _ => return Err(RuleError::UnknownObservationFile { path, slug }),
        }
    }
    files.sort();

    let mut phrases = Vec::new();
    for (obs, path) in files {
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        phrases.extend(parse_phrase_str(obs, &text, &path)?);
    }
    Ok(phrases)
}

fn parse_surface(body: &str, path: &Path, line: usize) -> Result<SurfaceRule, RuleError> {
    let mut elements = Vec::new();
    for piece in body.split_whitespace() {
        match piece {
            "{M}" => elements.push(PatternElement::Mention),
            "..." => elements.push(PatternElement::Gap),
            lit => elements.extend(tokenize_lower(lit).into_iter().map(PatternElement::Literal)),
        }
    }
    match elements.iter().filter(|e| **e == PatternElement::Mention).count() {
        0 => Err(RuleError::MissingMentionPlaceholder {
            path: path.to_path_buf(),
            line,
        }),
        1 => Ok(SurfaceRule::new(elements).expect("exactly one placeholder")),
        n => Err(RuleError::MalformedRule {
            path: path.to_path_buf(),
            line,
            reason: format!("{n} {{M}} placeholders; exactly one is allowed"),
        }),
    }
}

fn parse_dependency(body: &str, path: &Path, line: usize) -> Result<DependencyRule, RuleError> {
    let malformed = |reason: String| RuleError::MalformedRule {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut pieces = body.split_whitespace();
    let trigger = pieces
        .next()
        .ok_or_else(|| malformed("missing trigger lemma".into()))?;
    let path_text: String = pieces.collect();
    if path_text.is_empty() {
        return Err(malformed("missing relation path".into()));
    }
    let mut steps = Vec::new();
    for step in path_text.split(',') {
        let (relation, dir) = step
            .rsplit_once(':')
            .ok_or_else(|| malformed(format!("path step {step:?} is not <rel>:<dir>")))?;
        let direction = match dir {
            "h" => Direction::ToHead,
            "d" => Direction::ToDependent,
            other => return Err(malformed(format!("direction {other:?} is not `h` or `d`"))),
        };
        if relation.is_empty() {
            return Err(malformed(format!("path step {step:?} has no relation")));
        }
        steps.push(PathStep::new(relation, direction));
    }
    let len = steps.len();
    DependencyRule::new(trigger, steps).ok_or_else(|| {
        malformed(format!(
            "path has {len} steps; at most {} are allowed",
            super::MAX_PATH_LEN
        ))
    })
}

/// Parses rule-file text for one phase. `source` names the file in errors.
pub fn parse_rule_str(text: &str, phase: Phase, source: impl AsRef<Path>) -> Result<Vec<Rule>, RuleError> {
    let path = source.as_ref();
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || is_comment(trimmed) {
            continue;
        }
        let Some((kind, body)) = trimmed.split_once(':') else {
            return Err(RuleError::MalformedRule {
                path: path.to_path_buf(),
                line,
                reason: "expected `surface:` or `dep:`".into(),
            });
        };
        let pattern = match kind.trim() {
            "surface" => RulePattern::Surface(parse_surface(body, path, line)?),
            "dep" => RulePattern::Dependency(parse_dependency(body, path, line)?),
            other => {
                return Err(RuleError::MalformedRule {
                    path: path.to_path_buf(),
                    line,
                    reason: format!("unknown rule kind {other:?}"),
                })
            }
        };
        rules.push(Rule { phase, pattern });
    }
    Ok(rules)
}

pub fn parse_rule_file(path: &Path, phase: Phase) -> Result<Vec<Rule>, RuleError> {
    let text = std::fs::read_to_string(path).map_err(|source| RuleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_rule_str(&text, phase, path)
}
