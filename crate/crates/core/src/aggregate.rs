//! Mention aggregation into per-report observation labels.

use std::collections::BTreeMap;
use std::fmt;

use crate::classify::{classify_mentions, Assertion};
use crate::extract::{Mention, PhraseMatcher};
use crate::ingest::ReportDocument;
use crate::observation::Observation;
use crate::rules::RuleSet;

/// A report-level label. Ordered `Blank < Negative < Uncertain < Positive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum ObservationLabel {
    #[default]
    Blank,
    Negative,
    Uncertain,
    Positive,
}

impl ObservationLabel {
    pub const ALL: [ObservationLabel; 4] = [
        ObservationLabel::Blank,
        ObservationLabel::Negative,
        ObservationLabel::Uncertain,
        ObservationLabel::Positive,
    ];

    /// CSV cell: `1.0`, `0.0`, `-1.0` or empty.
    pub fn as_cell(self) -> &'static str {
        match self {
            ObservationLabel::Blank => "",
            ObservationLabel::Negative => "0.0",
            ObservationLabel::Uncertain => "-1.0",
            ObservationLabel::Positive => "1.0",
        }
    }

    /// Accepts any numeric spelling of 1, 0 and -1, `u`, or an empty cell.
    pub fn from_cell(cell: &str) -> Option<Self> {
        let cell = cell.trim();
        if cell.is_empty() {
            return Some(ObservationLabel::Blank);
        }
        if cell.eq_ignore_ascii_case("u") {
            return Some(ObservationLabel::Uncertain);
        }
        match cell.parse::<f64>().ok()? {
            1.0 => Some(ObservationLabel::Positive),
            0.0 => Some(ObservationLabel::Negative),
            -1.0 => Some(ObservationLabel::Uncertain),
            _ => None,
        }
    }
}

impl From<Assertion> for ObservationLabel {
    fn from(a: Assertion) -> Self {
        match a {
            Assertion::Positive => ObservationLabel::Positive,
            Assertion::Negative => ObservationLabel::Negative,
            Assertion::Uncertain => ObservationLabel::Uncertain,
        }
    }
}

impl fmt::Display for ObservationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObservationLabel::Blank => "blank",
            ObservationLabel::Negative => "0",
            ObservationLabel::Uncertain => "u",
            ObservationLabel::Positive => "1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AggregateError {
    #[error("mention of {observation} in sentence {sentence_index} has not been classified")]
    UnclassifiedMention {
        observation: Observation,
        sentence_index: usize,
    },
    #[error("{0} is derived from the other labels and cannot be mentioned directly")]
    DerivedObservation(Observation),
}

/// Labels of the 13 mentionable observations.
pub type MentionLabels = BTreeMap<Observation, ObservationLabel>;

/// Combines classified mentions: any positive mention gives 1, otherwise any
/// uncertain gives u, otherwise any negative gives 0, otherwise blank.
pub fn aggregate(mentions: &[Mention]) -> Result<MentionLabels, AggregateError> {
    let mut labels: MentionLabels = Observation::mentionable()
        .map(|o| (o, ObservationLabel::Blank))
        .collect();
    for m in mentions {
        let class = m.class.ok_or(AggregateError::UnclassifiedMention {
            observation: m.observation,
            sentence_index: m.sentence_index,
        })?;
        let slot = labels
            .get_mut(&m.observation)
            .ok_or(AggregateError::DerivedObservation(m.observation))?;
        *slot = (*slot).max(class.value.into());
    }
    Ok(labels)
}

/// `No Finding` is 1 when no pathology is 1 or u, blank otherwise.
/// `Support Devices` does not count as a pathology.
pub fn derive_no_finding(labels: &MentionLabels) -> ObservationLabel {
    let blocked = labels.iter().any(|(obs, label)| {
        obs.is_pathology()
            && matches!(label, ObservationLabel::Positive | ObservationLabel::Uncertain)
    });
    if blocked {
        ObservationLabel::Blank
    } else {
        ObservationLabel::Positive
    }
}

/// The 14 labels the labeler assigns to one report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    report_id: String,
    labels: [ObservationLabel; Observation::COUNT],
}

impl LabelVector {
    /// Fills in `No Finding` from the mention labels; observations missing
    /// from the map are blank.
    pub fn from_mention_labels(report_id: impl Into<String>, mention_labels: &MentionLabels) -> Self {
        let mut labels = [ObservationLabel::Blank; Observation::COUNT];
        for (obs, label) in mention_labels {
            if !obs.is_derived() {
                labels[obs.index()] = *label;
            }
        }
        labels[Observation::NoFinding.index()] = derive_no_finding(mention_labels);
        LabelVector {
            report_id: report_id.into(),
            labels,
        }
    }

    pub fn report_id(&self) -> &str {
        &self.report_id
    }

    pub fn get(&self, obs: Observation) -> ObservationLabel {
        self.labels[obs.index()]
    }

    /// Labels in [`Observation::ALL`] order.
    pub fn labels(&self) -> &[ObservationLabel; Observation::COUNT] {
        &self.labels
    }
}

/// Extraction, classification and aggregation over one rule set. The phrase
/// trie is built once, so prefer this over [`label_study`] for corpora.
#[derive(Debug, Clone)]
pub struct Labeler {
    rules: RuleSet,
    matcher: PhraseMatcher,
}

impl Labeler {
    pub fn new(rules: RuleSet) -> Self {
        let matcher = PhraseMatcher::new(rules.phrases());
        Labeler { rules, matcher }
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    /// Extracted and classified mentions of `doc`.
    pub fn mentions(&self, doc: &ReportDocument) -> Vec<Mention> {
        let mut mentions = self.matcher.match_document(doc);
        classify_mentions(&mut mentions, &doc.sentences, &self.rules);
        mentions
    }

    pub fn label(&self, doc: &ReportDocument) -> LabelVector {
        let mentions = self.mentions(doc);
        let labels = aggregate(&mentions).expect("phrase matching only yields mentionable observations, all classified");
        LabelVector::from_mention_labels(doc.report_id.clone(), &labels)
    }
}

/// Labels one document: extract, classify, aggregate, derive `No Finding`.
pub fn label_study(doc: &ReportDocument, rules: &RuleSet) -> LabelVector {
    let matcher = PhraseMatcher::new(rules.phrases());
    let mut mentions = matcher.match_document(doc);
    classify_mentions(&mut mentions, &doc.sentences, rules);
    let labels = aggregate(&mentions).expect("phrase matching only yields mentionable observations, all classified");
    LabelVector::from_mention_labels(doc.report_id.clone(), &labels)
}
