//! Rule model: observation phrase lists and the three-phase classification
//! rules.
//!
//! Rule directory layout:
//!
//! ```text
//! phrases/<observation_slug>.txt        one phrase per line
//! rules/pre_negation_uncertainty.rules
//! rules/negation.rules
//! rules/post_negation_uncertainty.rules
//! ```
//!
//! Rule lines are either `surface: <pattern>` or
//! `dep: <lemma> <rel>:<dir>[,<rel>:<dir>...]`. A surface pattern is a
//! whitespace-separated list of literal tokens, exactly one `{M}` (the
//! mention) and any number of `...` gaps. In a dependency path `d` steps from
//! a token down to one of its dependents and `h` steps up to its head.

mod demo;
mod parse;

use std::fmt;
use std::path::PathBuf;

use crate::classify::Assertion;
use crate::observation::Observation;

pub use parse::{parse_phrase_dir, parse_phrase_str, parse_rule_file, parse_rule_str};

/// Longest dependency path a rule may use.
pub const MAX_PATH_LEN: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("{path}: no observation has the phrase file slug {slug:?}")]
    UnknownObservationFile { path: PathBuf, slug: String },
    #[error("{path}:{line}: blank phrase")]
    EmptyPhrase { path: PathBuf, line: usize },
    #[error("{path}:{line}: malformed rule: {reason}")]
    MalformedRule {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: surface rule has no {{M}} placeholder")]
    MissingMentionPlaceholder { path: PathBuf, line: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Classification phases, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    PreNegationUncertainty,
    Negation,
    PostNegationUncertainty,
}

impl Phase {
    pub const ALL: [Phase; 3] = [
        Phase::PreNegationUncertainty,
        Phase::Negation,
        Phase::PostNegationUncertainty,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Phase::PreNegationUncertainty => "pre_negation_uncertainty.rules",
            Phase::Negation => "negation.rules",
            Phase::PostNegationUncertainty => "post_negation_uncertainty.rules",
        }
    }

    /// The class a mention receives when a rule of this phase matches it.
    pub fn assertion(self) -> Assertion {
        match self {
            Phase::Negation => Assertion::Negative,
            _ => Assertion::Uncertain,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::PreNegationUncertainty => "pre-negation uncertainty",
            Phase::Negation => "negation",
            Phase::PostNegationUncertainty => "post-negation uncertainty",
        })
    }
}

/// A phrase that names an observation, as lowercase tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhrasePattern {
    pub observation: Observation,
    pub tokens: Vec<String>,
}

impl PhrasePattern {
    /// Tokenizes and case-folds `text`. Returns `None` if it has no tokens.
    pub fn new(observation: Observation, text: &str) -> Option<Self> {
        let tokens = crate::ingest::tokenize_lower(text);
        (!tokens.is_empty()).then_some(PhrasePattern {
            observation,
            tokens,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternElement {
    Literal(String),
    Mention,
    Gap,
}

/// Token pattern around a mention; see the module docs for the syntax.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SurfaceRule {
    elements: Vec<PatternElement>,
    mention_at: usize,
}

impl SurfaceRule {
    /// Returns `None` unless `elements` has exactly one [`PatternElement::Mention`].
    /// Literals are case-folded and runs of gaps collapse to one.
    pub fn new(elements: Vec<PatternElement>) -> Option<Self> {
        let mut normalized: Vec<PatternElement> = Vec::with_capacity(elements.len());
        for el in elements {
            match el {
                PatternElement::Gap if normalized.last() == Some(&PatternElement::Gap) => {}
                PatternElement::Literal(s) => normalized.push(PatternElement::Literal(s.to_lowercase())),
                other => normalized.push(other),
            }
        }
        let mut mentions = normalized
            .iter()
            .enumerate()
            .filter(|(_, e)| **e == PatternElement::Mention);
        let (mention_at, _) = mentions.next()?;
        if mentions.next().is_some() {
            return None;
        }
        Some(SurfaceRule {
            elements: normalized,
            mention_at,
        })
    }

    pub fn elements(&self) -> &[PatternElement] {
        &self.elements
    }

    /// Elements before the mention placeholder.
    pub fn before(&self) -> &[PatternElement] {
        &self.elements[..self.mention_at]
    }

    /// Elements after the mention placeholder.
    pub fn after(&self) -> &[PatternElement] {
        &self.elements[self.mention_at + 1..]
    }
}

impl fmt::Display for SurfaceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, el) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match el {
                PatternElement::Literal(s) => f.write_str(s)?,
                PatternElement::Mention => f.write_str("{M}")?,
                PatternElement::Gap => f.write_str("...")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `h`: move from a token to its head.
    ToHead,
    /// `d`: move from a token to one of its dependents.
    ToDependent,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathStep {
    pub relation: String,
    pub direction: Direction,
}

impl PathStep {
    pub fn new(relation: impl Into<String>, direction: Direction) -> Self {
        PathStep {
            relation: relation.into(),
            direction,
        }
    }
}

/// A trigger lemma connected to the mention head by a fixed relation path.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DependencyRule {
    trigger: String,
    path: Vec<PathStep>,
}

impl DependencyRule {
    /// Returns `None` for an empty trigger or a path outside `1..=MAX_PATH_LEN`.
    pub fn new(trigger: &str, path: Vec<PathStep>) -> Option<Self> {
        let ok = !trigger.is_empty()
            && !trigger.contains(char::is_whitespace)
            && (1..=MAX_PATH_LEN).contains(&path.len())
            && path
                .iter()
                .all(|s| !s.relation.is_empty() && !s.relation.contains([',', ' ', '\t']));
        ok.then(|| DependencyRule {
            trigger: trigger.to_lowercase(),
            path,
        })
    }

    pub fn trigger(&self) -> &str {
        &self.trigger
    }

    pub fn path(&self) -> &[PathStep] {
        &self.path
    }
}

impl fmt::Display for DependencyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.trigger)?;
        for (i, step) in self.path.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            let dir = match step.direction {
                Direction::ToHead => 'h',
                Direction::ToDependent => 'd',
            };
            write!(f, "{}:{dir}", step.relation)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RulePattern {
    Surface(SurfaceRule),
    Dependency(DependencyRule),
}

impl fmt::Display for RulePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RulePattern::Surface(r) => write!(f, "surface: {r}"),
            RulePattern::Dependency(r) => write!(f, "dep: {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub phase: Phase,
    pub pattern: RulePattern,
}

/// Identifies a rule by its phase and its position within that phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId {
    pub phase: Phase,
    pub index: usize,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.phase.file_name(), self.index + 1)
    }
}

/// Compiled phrases and phase-ordered rules. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RuleSet {
    phrases: Vec<PhrasePattern>,
    rules: Vec<Rule>,
}

impl RuleSet {
    /// Groups `rules` by phase (stable within a phase) and drops duplicate phrases.
    pub fn new(phrases: Vec<PhrasePattern>, mut rules: Vec<Rule>) -> Self {
        let mut seen = std::collections::HashSet::new();
        let phrases = phrases.into_iter().filter(|p| seen.insert(p.clone())).collect();
        rules.sort_by_key(|r| r.phase);
        RuleSet { phrases, rules }
    }

    /// Loads `phrases_dir/*.txt` and the three phase files in `rules_dir`.
    /// A missing phase file contributes no rules.
    pub fn load(phrases_dir: impl AsRef<std::path::Path>, rules_dir: impl AsRef<std::path::Path>) -> Result<Self, RuleError> {
        let phrases = parse_phrase_dir(phrases_dir.as_ref())?;
        let rules_dir = rules_dir.as_ref();
        if !rules_dir.is_dir() {
            return Err(RuleError::Io {
                path: rules_dir.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "rules directory not found"),
            });
        }
        let mut rules = Vec::new();
        for phase in Phase::ALL {
            let path = rules_dir.join(phase.file_name());
            if path.exists() {
                rules.extend(parse_rule_file(&path, phase)?);
            }
        }
        Ok(RuleSet::new(phrases, rules))
    }

    /// Loads a directory holding `phrases/` and `rules/`.
    pub fn load_root(root: impl AsRef<std::path::Path>) -> Result<Self, RuleError> {
        let root = root.as_ref();
        Self::load(root.join("phrases"), root.join("rules"))
    }

    /// The small demonstration rule set bundled with the crate.
    pub fn demo() -> Self {
        demo::rule_set()
    }

    pub fn phrases(&self) -> &[PhrasePattern] {
        &self.phrases
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Rules in evaluation order with their ids.
    pub fn iter_rules(&self) -> impl Iterator<Item = (RuleId, &Rule)> {
        let mut phase = None;
        let mut index = 0;
        self.rules.iter().map(move |r| {
            if phase != Some(r.phase) {
                phase = Some(r.phase);
                index = 0;
            }
            let id = RuleId {
                phase: r.phase,
                index,
            };
            index += 1;
            (id, r)
        })
    }

    pub fn rule(&self, id: RuleId) -> Option<&Rule> {
        self.rules
            .iter()
            .filter(|r| r.phase == id.phase)
            .nth(id.index)
    }

    pub fn rules_in(&self, phase: Phase) -> impl Iterator<Item = &RulePattern> {
        self.rules
            .iter()
            .filter(move |r| r.phase == phase)
            .map(|r| &r.pattern)
    }

    /// Contents of one phase's rule file.
    pub fn rules_text(&self, phase: Phase) -> String {
        self.rules_in(phase).map(|r| format!("{r}\n")).collect()
    }

    /// Contents of one observation's phrase file.
    pub fn phrases_text(&self, observation: Observation) -> String {
        self.phrases
            .iter()
            .filter(|p| p.observation == observation)
            .map(|p| format!("{}\n", p.tokens.join(" ")))
            .collect()
    }

    /// Writes the rule set in the directory layout read by [`RuleSet::load_root`].
    pub fn write_root(&self, root: impl AsRef<std::path::Path>) -> Result<(), RuleError> {
        let root = root.as_ref();
        let write = |path: PathBuf, text: String| {
            std::fs::write(&path, text).map_err(|source| RuleError::Io { path, source })
        };
        for dir in ["phrases", "rules"] {
            let path = root.join(dir);
            std::fs::create_dir_all(&path).map_err(|source| RuleError::Io { path, source })?;
        }
        for obs in Observation::mentionable() {
            let text = self.phrases_text(obs);
            if !text.is_empty() {
                write(root.join("phrases").join(format!("{}.txt", obs.slug())), text)?;
            }
        }
        for phase in Phase::ALL {
            write(root.join("rules").join(phase.file_name()), self.rules_text(phase))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surface(text: &str) -> RulePattern {
        parse_rule_str(text, Phase::Negation, "t").unwrap().remove(0).pattern
    }

    #[test]
    fn surface_rule_requires_one_mention() {
        use PatternElement::*;
        assert!(SurfaceRule::new(vec![Literal("no".into())]).is_none());
        assert!(SurfaceRule::new(vec![Mention, Mention]).is_none());
        let r = SurfaceRule::new(vec![Literal("No".into()), Gap, Gap, Mention]).unwrap();
        assert_eq!(r.elements(), [Literal("no".into()), Gap, Mention]);
        assert_eq!(r.before().len(), 2);
        assert!(r.after().is_empty());
    }

    #[test]
    fn dependency_path_length_is_capped() {
        let step = || PathStep::new("dobj", Direction::ToDependent);
        assert!(DependencyRule::new("exclude", vec![]).is_none());
        assert!(DependencyRule::new("exclude", vec![step(); 3]).is_some());
        assert!(DependencyRule::new("exclude", vec![step(); 4]).is_none());
    }

    #[test]
    fn phases_are_grouped_in_fixed_order() {
        let neg = Rule { phase: Phase::Negation, pattern: surface("surface: no {M}") };
        let pre = Rule { phase: Phase::PreNegationUncertainty, pattern: surface("surface: cannot exclude {M}") };
        let post = Rule { phase: Phase::PostNegationUncertainty, pattern: surface("surface: may represent ... {M}") };
        let a = RuleSet::new(vec![], vec![post.clone(), neg.clone(), pre.clone()]);
        let b = RuleSet::new(vec![], vec![pre.clone(), post.clone(), neg.clone()]);
        assert_eq!(a, b);
        let phases: Vec<_> = a.rules().iter().map(|r| r.phase).collect();
        assert_eq!(phases, Phase::ALL);
    }

    #[test]
    fn rule_ids_restart_per_phase() {
        let rs = RuleSet::demo();
        let ids: Vec<RuleId> = rs.iter_rules().map(|(id, _)| id).collect();
        assert_eq!(ids[0], RuleId { phase: Phase::PreNegationUncertainty, index: 0 });
        for (id, rule) in rs.iter_rules() {
            assert_eq!(rs.rule(id), Some(rule));
        }
        let first_neg = ids.iter().find(|id| id.phase == Phase::Negation).unwrap();
        assert_eq!(first_neg.index, 0);
    }

    #[test]
    fn duplicate_phrases_dropped() {
        let p = PhrasePattern::new(Observation::Edema, "Pulmonary edema").unwrap();
        let q = PhrasePattern::new(Observation::Edema, "pulmonary  EDEMA").unwrap();
        let rs = RuleSet::new(vec![p, q], vec![]);
        assert_eq!(rs.phrases().len(), 1);
        assert_eq!(rs.phrases()[0].tokens, ["pulmonary", "edema"]);
    }

    #[test]
    fn write_and_load_root() {
        let dir = tempfile::tempdir().unwrap();
        let rs = RuleSet::demo();
        rs.write_root(dir.path()).unwrap();
        assert_eq!(RuleSet::load_root(dir.path()).unwrap(), rs);
    }
}
