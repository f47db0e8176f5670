//! Phrase matching of observation mentions.
//!
//! Each observation is matched independently: scanning left to right, the
//! longest phrase starting at the leftmost unconsumed position wins and the
//! scan resumes after it. Mentions of different observations may overlap.

use std::collections::HashMap;
use std::ops::Range;

use crate::classify::MentionClass;
use crate::ingest::{ReportDocument, Sentence};
use crate::observation::Observation;
use crate::rules::{PhrasePattern, RuleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct Mention {
    pub observation: Observation,
    pub sentence_index: usize,
    /// Token range within the sentence; never empty.
    pub span: Range<usize>,
    pub matched_phrase: PhrasePattern,
    /// Set by classification.
    pub class: Option<MentionClass>,
}

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: HashMap<String, usize>,
    /// Phrases ending here, as (observation, index into the phrase list).
    terminals: Vec<(Observation, usize)>,
}

/// Token trie over all phrases of a rule set.
#[derive(Debug, Clone)]
pub struct PhraseMatcher {
    nodes: Vec<TrieNode>,
    phrases: Vec<PhrasePattern>,
}

impl PhraseMatcher {
    pub fn new(phrases: &[PhrasePattern]) -> Self {
        let mut nodes = vec![TrieNode::default()];
        for (idx, phrase) in phrases.iter().enumerate() {
            let mut node = 0;
            for tok in &phrase.tokens {
                node = match nodes[node].children.get(tok) {
                    Some(&next) => next,
                    None => {
                        nodes.push(TrieNode::default());
                        let next = nodes.len() - 1;
                        nodes[node].children.insert(tok.clone(), next);
                        next
                    }
                };
            }
            nodes[node].terminals.push((phrase.observation, idx));
        }
        PhraseMatcher {
            nodes,
            phrases: phrases.to_vec(),
        }
    }

    /// Mentions in one sentence, ordered by (start token, observation name).
    pub fn match_sentence(&self, sentence: &Sentence, sentence_index: usize) -> Vec<Mention> {
        let n = sentence.tokens.len();
        let mut resume_at = [0usize; Observation::COUNT];
        let mut out = Vec::new();

        for start in 0..n {
            // Longest phrase per observation starting at `start`: (end, phrase index).
            let mut longest: [Option<(usize, usize)>; Observation::COUNT] = [None; Observation::COUNT];
            let mut node = 0;
            for pos in start..n {
                let Some(&next) = self.nodes[node].children.get(&sentence.tokens[pos].lower) else {
                    break;
                };
                node = next;
                for &(obs, idx) in &self.nodes[node].terminals {
                    longest[obs.index()] = Some((pos + 1, idx));
                }
            }
            for obs in Observation::ALL {
                let i = obs.index();
                if let Some((end, idx)) = longest[i] {
                    if start >= resume_at[i] {
                        resume_at[i] = end;
                        out.push(Mention {
                            observation: obs,
                            sentence_index,
                            span: start..end,
                            matched_phrase: self.phrases[idx].clone(),
                            class: None,
                        });
                    }
                }
            }
        }
        out.sort_by(|a, b| {
            (a.span.start, a.observation.name()).cmp(&(b.span.start, b.observation.name()))
        });
        out
    }

    /// Mentions across a document, ordered by (sentence, start token, observation name).
    pub fn match_document(&self, doc: &ReportDocument) -> Vec<Mention> {
        doc.sentences
            .iter()
            .enumerate()
            .flat_map(|(i, s)| self.match_sentence(s, i))
            .collect()
    }
}

/// Extracts mentions of every observation from a segmented document.
pub fn extract_mentions(doc: &ReportDocument, rules: &RuleSet) -> Vec<Mention> {
    PhraseMatcher::new(rules.phrases()).match_document(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phrase(obs: Observation, text: &str) -> PhrasePattern {
        PhrasePattern::new(obs, text).unwrap()
    }

    fn spans(ms: &[Mention]) -> Vec<(Observation, Range<usize>)> {
        ms.iter().map(|m| (m.observation, m.span.clone())).collect()
    }

    #[test]
    fn two_observations_in_one_sentence() {
        let rules = RuleSet::new(
            vec![
                phrase(Observation::PleuralEffusion, "effusions"),
                phrase(Observation::LungOpacity, "opacities"),
            ],
            vec![],
        );
        let doc = ReportDocument::new("r", "moderate bilateral effusions and bibasilar opacities");
        let ms = extract_mentions(&doc, &rules);
        assert_eq!(
            spans(&ms),
            [(Observation::PleuralEffusion, 2..3), (Observation::LungOpacity, 5..6)]
        );
    }

    #[test]
    fn empty_phrase_set() {
        let doc = ReportDocument::new("r", "large pleural effusion");
        assert!(extract_mentions(&doc, &RuleSet::default()).is_empty());
    }

    #[test]
    fn longest_phrase_wins() {
        let rules = RuleSet::new(
            vec![
                phrase(Observation::PleuralEffusion, "effusion"),
                phrase(Observation::PleuralEffusion, "pleural effusion"),
            ],
            vec![],
        );
        let doc = ReportDocument::new("r", "small left pleural effusion.");
        let ms = extract_mentions(&doc, &rules);
        assert_eq!(spans(&ms), [(Observation::PleuralEffusion, 2..4)]);
        assert_eq!(ms[0].matched_phrase.tokens, ["pleural", "effusion"]);
        assert!(ms[0].class.is_none());
    }

    #[test]
    fn observations_may_share_tokens() {
        let rules = RuleSet::new(
            vec![
                phrase(Observation::LungOpacity, "opacity"),
                phrase(Observation::Consolidation, "consolidative opacity"),
            ],
            vec![],
        );
        let doc = ReportDocument::new("r", "Consolidative opacity at the base");
        let ms = extract_mentions(&doc, &rules);
        assert_eq!(
            spans(&ms),
            [(Observation::Consolidation, 0..2), (Observation::LungOpacity, 1..2)]
        );
    }

    #[test]
    fn same_observation_matches_do_not_overlap() {
        let rules = RuleSet::new(
            vec![phrase(Observation::LungLesion, "a b"), phrase(Observation::LungLesion, "b c")],
            vec![],
        );
        let doc = ReportDocument::new("r", "a b c b c");
        assert_eq!(
            spans(&extract_mentions(&doc, &rules)),
            [(Observation::LungLesion, 0..2), (Observation::LungLesion, 3..5)]
        );
    }

    #[test]
    fn mentions_in_later_sentences_keep_their_index() {
        let doc = ReportDocument::new("r", "No edema. Small effusion.");
        let ms = extract_mentions(&doc, &RuleSet::demo());
        assert_eq!(ms.len(), 2);
        assert_eq!((ms[0].observation, ms[0].sentence_index), (Observation::Edema, 0));
        assert_eq!((ms[1].observation, ms[1].sentence_index), (Observation::PleuralEffusion, 1));
    }
}
