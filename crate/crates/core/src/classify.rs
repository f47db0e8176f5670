//! Three-phase mention classification.
//!
//! Rules run in phase order (pre-negation uncertainty, negation,
//! post-negation uncertainty) and in file order within a phase. The first
//! rule that matches decides the class; a mention no rule matches is positive.

use std::collections::HashSet;

use crate::extract::Mention;
use crate::ingest::Sentence;
use crate::rules::{DependencyRule, Direction, PatternElement, RuleId, RulePattern, RuleSet, SurfaceRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assertion {
    Positive,
    Negative,
    Uncertain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MentionClass {
    pub value: Assertion,
    /// The rule that produced `value`; `None` for the positive default.
    pub deciding_rule: Option<RuleId>,
}

impl MentionClass {
    pub const DEFAULT_POSITIVE: MentionClass = MentionClass {
        value: Assertion::Positive,
        deciding_rule: None,
    };
}

// Whether `elements` match a prefix of `tokens`. Gaps absorb any number of
// tokens; the match need not reach the end of `tokens`.
fn matches_prefix<'a, I>(elements: I, tokens: &[&str]) -> bool
where
    I: IntoIterator<Item = &'a PatternElement>,
{
    let mut positions = vec![0usize];
    for el in elements {
        positions = match el {
            PatternElement::Literal(lit) => positions
                .into_iter()
                .filter(|&p| p < tokens.len() && tokens[p] == lit)
                .map(|p| p + 1)
                .collect(),
            PatternElement::Gap => match positions.first() {
                Some(&lo) => (lo..=tokens.len()).collect(),
                None => return false,
            },
            PatternElement::Mention => unreachable!("placeholder is split off by the caller"),
        };
        if positions.is_empty() {
            return false;
        }
    }
    true
}

/// Whether a surface rule aligns with the sentence so that `{M}` covers
/// exactly the mention span.
pub fn match_surface(rule: &SurfaceRule, mention: &Mention, sentence: &Sentence) -> bool {
    let lower: Vec<&str> = sentence.tokens.iter().map(|t| t.lower.as_str()).collect();
    let (start, end) = (mention.span.start, mention.span.end);
    if end > lower.len() || start >= end {
        return false;
    }
    let before: Vec<&str> = lower[..start].iter().rev().copied().collect();
    matches_prefix(rule.before().iter().rev(), &before) && matches_prefix(rule.after(), &lower[end..])
}

/// The mention token closest to the root; leftmost on ties.
pub fn mention_head(mention: &Mention, sentence: &Sentence) -> Option<usize> {
    let graph = sentence.parse.as_ref()?;
    mention.span.clone().min_by_key(|&i| graph.depth(i))
}

/// Whether a token with the rule's trigger lemma reaches the mention head by
/// exactly the rule's relation path. Always false without a parse.
pub fn match_dependency(rule: &DependencyRule, mention: &Mention, sentence: &Sentence) -> bool {
    let (Some(graph), Some(head)) = (sentence.parse.as_ref(), mention_head(mention, sentence)) else {
        return false;
    };
    (0..sentence.len())
        .filter(|&i| sentence.lemma(i) == rule.trigger())
        .any(|trigger| {
            let mut frontier: HashSet<usize> = HashSet::from([trigger]);
            for step in rule.path() {
                frontier = match step.direction {
                    Direction::ToHead => frontier
                        .iter()
                        .filter(|&&n| graph.relation(n) == step.relation)
                        .filter_map(|&n| graph.head(n))
                        .collect(),
                    Direction::ToDependent => frontier
                        .iter()
                        .flat_map(|&n| graph.dependents(n))
                        .filter(|&d| graph.relation(d) == step.relation)
                        .collect(),
                };
                if frontier.is_empty() {
                    return false;
                }
            }
            frontier.contains(&head)
        })
}

pub fn matches(pattern: &RulePattern, mention: &Mention, sentence: &Sentence) -> bool {
    match pattern {
        RulePattern::Surface(r) => match_surface(r, mention, sentence),
        RulePattern::Dependency(r) => match_dependency(r, mention, sentence),
    }
}

pub fn classify_mention(mention: &Mention, sentence: &Sentence, rules: &RuleSet) -> MentionClass {
    rules
        .iter_rules()
        .find(|(_, rule)| matches(&rule.pattern, mention, sentence))
        .map(|(id, rule)| MentionClass {
            value: rule.phase.assertion(),
            deciding_rule: Some(id),
        })
        .unwrap_or(MentionClass::DEFAULT_POSITIVE)
}

/// Classifies every mention in place. Mentions index into `sentences`.
pub fn classify_mentions(mentions: &mut [Mention], sentences: &[Sentence], rules: &RuleSet) {
    for m in mentions {
        m.class = Some(classify_mention(m, &sentences[m.sentence_index], rules));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{read_conllu, DependencyGraph};
    use crate::observation::Observation;
    use crate::rules::{parse_rule_str, Phase, PhrasePattern};

    fn mention(obs: Observation, start: usize, end: usize) -> Mention {
        Mention {
            observation: obs,
            sentence_index: 0,
            span: start..end,
            matched_phrase: PhrasePattern::new(obs, "x").unwrap(),
            class: None,
        }
    }

    fn surface(text: &str) -> SurfaceRule {
        match parse_rule_str(&format!("surface: {text}"), Phase::Negation, "t").unwrap().remove(0).pattern {
            RulePattern::Surface(r) => r,
            _ => unreachable!(),
        }
    }

    fn dep(text: &str) -> DependencyRule {
        match parse_rule_str(&format!("dep: {text}"), Phase::Negation, "t").unwrap().remove(0).pattern {
            RulePattern::Dependency(r) => r,
            _ => unreachable!(),
        }
    }

    fn rules(pre: &str, neg: &str, post: &str) -> RuleSet {
        let mut all = Vec::new();
        for (text, phase) in [(pre, Phase::PreNegationUncertainty), (neg, Phase::Negation), (post, Phase::PostNegationUncertainty)] {
            all.extend(parse_rule_str(text, phase, "t").unwrap());
        }
        RuleSet::new(vec![], all)
    }

    fn parsed(words: &str, heads: &[usize], rels: &[&str]) -> Sentence {
        let mut s = Sentence::from_words(words);
        let graph = DependencyGraph::new(
            heads.iter().map(|&h| h.checked_sub(1)).collect(),
            rels.iter().map(|r| r.to_string()).collect(),
            vec![None; heads.len()],
        )
        .unwrap();
        s.parse = Some(graph);
        s
    }

    #[test]
    fn surface_literal_then_mention() {
        let s = Sentence::from_words("no pneumothorax");
        assert!(match_surface(&surface("no {M}"), &mention(Observation::Pneumothorax, 1, 2), &s));
        let s = Sentence::from_words("pneumothorax");
        assert!(!match_surface(&surface("no {M}"), &mention(Observation::Pneumothorax, 0, 1), &s));
    }

    #[test]
    fn surface_gap_consumes_modifiers() {
        let s = Sentence::from_words("no evidence of pulmonary edema");
        let r = surface("no evidence of ... {M}");
        assert!(match_surface(&r, &mention(Observation::Edema, 4, 5), &s));
        assert!(match_surface(&r, &mention(Observation::Edema, 3, 5), &s));
        assert!(!match_surface(&surface("no evidence of {M}"), &mention(Observation::Edema, 4, 5), &s));
    }

    #[test]
    fn surface_mention_must_be_exact_span() {
        let s = Sentence::from_words("no pulmonary edema");
        // `{M}` may not swallow a literal the pattern expects next to it.
        assert!(!match_surface(&surface("no {M}"), &mention(Observation::Edema, 2, 3), &s));
        assert!(match_surface(&surface("no ... {M}"), &mention(Observation::Edema, 2, 3), &s));
    }

    #[test]
    fn surface_trailing_context() {
        let s = Sentence::from_words("heart size is stable .");
        assert!(match_surface(&surface("{M} ... stable"), &mention(Observation::Cardiomegaly, 0, 2), &s));
        assert!(!match_surface(&surface("{M} stable"), &mention(Observation::Cardiomegaly, 0, 2), &s));
        assert!(!match_surface(&surface("{M} ... enlarged"), &mention(Observation::Cardiomegaly, 0, 2), &s));
    }

    #[test]
    fn surface_literals_are_case_folded() {
        let s = Sentence::from_words("NO Pneumothorax");
        assert!(match_surface(&surface("No {M}"), &mention(Observation::Pneumothorax, 1, 2), &s));
    }

    #[test]
    fn dependency_single_edge() {
        // cannot <-aux- exclude -dobj-> pneumothorax
        let s = parsed("cannot exclude pneumothorax", &[2, 0, 2], &["aux", "root", "dobj"]);
        let m = mention(Observation::Pneumothorax, 2, 3);
        assert!(match_dependency(&dep("exclude dobj:d"), &m, &s));
        assert!(!match_dependency(&dep("exclude nsubj:d"), &m, &s));
        assert!(!match_dependency(&dep("exclude dobj:h"), &m, &s));
    }

    #[test]
    fn dependency_trigger_absent_or_unparsed() {
        let s = parsed("rule out pneumothorax", &[0, 1, 1], &["root", "compound:prt", "dobj"]);
        let m = mention(Observation::Pneumothorax, 2, 3);
        assert!(!match_dependency(&dep("exclude dobj:d"), &m, &s));
        let unparsed = Sentence::from_words("cannot exclude pneumothorax");
        assert!(!match_dependency(&dep("exclude dobj:d"), &m, &unparsed));
    }

    #[test]
    fn dependency_multi_step_via_head() {
        // no -det-> evidence ; edema -nmod-> evidence (edema is nmod of evidence)
        let s = parsed(
            "no evidence of pulmonary edema",
            &[2, 0, 5, 5, 2],
            &["det", "root", "case", "amod", "nmod"],
        );
        let m = mention(Observation::Edema, 3, 5);
        assert_eq!(mention_head(&m, &s), Some(4));
        assert!(match_dependency(&dep("no det:h,nmod:d"), &m, &s));
        assert!(!match_dependency(&dep("no det:h"), &m, &s));
    }

    #[test]
    fn dependency_uses_conllu_lemma() {
        let text = "# report_id = r\n# sent_index = 0\n1\tcannot\tcan\t_\t_\t_\t2\taux\t_\t_\n2\texcluded\texclude\t_\t_\t_\t0\troot\t_\t_\n3\tpneumothorax\t_\t_\t_\t_\t2\tdobj\t_\t_\n";
        let block = read_conllu(text.as_bytes()).unwrap().remove(0);
        let mut s = Sentence::from_words("cannot excluded pneumothorax");
        s.parse = Some(block.graph);
        assert!(match_dependency(&dep("exclude dobj:d"), &mention(Observation::Pneumothorax, 2, 3), &s));
    }

    #[test]
    fn pre_negation_beats_negation() {
        let rs = rules("surface: cannot exclude {M}", "dep: exclude dobj:d\nsurface: exclude {M}", "");
        let s = parsed("cannot exclude pneumothorax", &[2, 0, 2], &["aux", "root", "dobj"]);
        let class = classify_mention(&mention(Observation::Pneumothorax, 2, 3), &s, &rs);
        assert_eq!(class.value, Assertion::Uncertain);
        assert_eq!(class.deciding_rule, Some(RuleId { phase: Phase::PreNegationUncertainty, index: 0 }));

        let neg_only = rules("", "dep: exclude dobj:d", "");
        let class = classify_mention(&mention(Observation::Pneumothorax, 2, 3), &s, &neg_only);
        assert_eq!(class.value, Assertion::Negative);
    }

    #[test]
    fn post_negation_uncertainty() {
        let rs = rules("", "surface: no {M}", "surface: may represent ... {M}");
        let s = Sentence::from_words("diffuse reticular pattern may represent mild interstitial pulmonary edema");
        let class = classify_mention(&mention(Observation::Edema, 7, 9), &s, &rs);
        assert_eq!(class.value, Assertion::Uncertain);
        assert_eq!(class.deciding_rule.unwrap().phase, Phase::PostNegationUncertainty);
    }

    #[test]
    fn first_rule_in_file_order_decides() {
        let rs = rules("", "surface: no ... {M}\nsurface: no {M}", "");
        let s = Sentence::from_words("no pneumothorax");
        let class = classify_mention(&mention(Observation::Pneumothorax, 1, 2), &s, &rs);
        assert_eq!(class.deciding_rule, Some(RuleId { phase: Phase::Negation, index: 0 }));
    }

    #[test]
    fn unmatched_is_positive() {
        let s = Sentence::from_words("moderate bilateral effusions and bibasilar opacities");
        let class = classify_mention(&mention(Observation::PleuralEffusion, 2, 3), &s, &RuleSet::demo());
        assert_eq!(class, MentionClass::DEFAULT_POSITIVE);
        let class = classify_mention(&mention(Observation::PleuralEffusion, 2, 3), &s, &RuleSet::default());
        assert_eq!(class, MentionClass::DEFAULT_POSITIVE);
    }
}
