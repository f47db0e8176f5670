//! Rule-based labeler that reads free-text chest radiograph reports and
//! assigns each of 14 observations a positive, negative, uncertain or blank
//! label.
//!
//! The pipeline is [`ingest`] (Impression section, sentences, optional
//! CoNLL-U parses) → [`extract`] (phrase matching) → [`classify`]
//! (pre-negation uncertainty, negation, post-negation uncertainty rules) →
//! [`aggregate`](mod@aggregate) (per-report labels and the derived `No Finding`).
//! [`eval`] scores labels and probabilities against gold annotations, and
//! [`policy`] turns labels with uncertain cells into training targets.
//!
//! ```
//! use cxr_labeler::{label_study, Observation, ObservationLabel, ReportDocument, RuleSet};
//!
//! let doc = ReportDocument::new("r1", "IMPRESSION: cannot exclude pneumothorax.");
//! let labels = label_study(&doc, &RuleSet::demo());
//! assert_eq!(labels.get(Observation::Pneumothorax), ObservationLabel::Uncertain);
//! ```

pub mod aggregate;
pub mod classify;
pub mod cli;
pub mod eval;
pub mod extract;
pub mod ingest;
pub mod observation;
pub mod policy;
pub mod rules;
pub mod table;

pub use aggregate::{aggregate, derive_no_finding, label_study, LabelVector, Labeler, ObservationLabel};
pub use classify::{classify_mention, Assertion, MentionClass};
pub use extract::{extract_mentions, Mention};
pub use ingest::{ReportDocument, Sentence, Token};
pub use observation::Observation;
pub use rules::{Phase, RuleSet};
