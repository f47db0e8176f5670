//! Reference implementations used by the integration tests. Each oracle is
//! written the slow, obvious way and shares no code with the library.

#![allow(dead_code)]

use std::ops::Range;

use cxr_labeler::{Assertion, Observation, ObservationLabel};
use rand::seq::SliceRandom;
use rand::Rng;

/// Every `(start, end)` span whose lowercased tokens equal some phrase of
/// `obs`, then leftmost-longest non-overlapping selection.
pub fn extraction_oracle(tokens: &[String], phrases: &[(Observation, Vec<String>)]) -> Vec<(usize, Observation, Range<usize>)> {
    let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut out = Vec::new();
    for obs in Observation::ALL {
        let mut candidates = Vec::new();
        for start in 0..lower.len() {
            for end in start + 1..=lower.len() {
                let span = &lower[start..end];
                if phrases.iter().any(|(o, p)| *o == obs && p.as_slice() == span) {
                    candidates.push(start..end);
                }
            }
        }
        let mut pos = 0;
        loop {
            let leftmost = candidates.iter().filter(|s| s.start >= pos).map(|s| s.start).min();
            let Some(start) = leftmost else { break };
            let end = candidates.iter().filter(|s| s.start == start).map(|s| s.end).max().unwrap();
            out.push((start, obs, start..end));
            pos = end;
        }
    }
    out.sort_by(|a, b| (a.0, a.1.name()).cmp(&(b.0, b.1.name())));
    out
}

/// Report-level label for one observation from the classes of its mentions.
pub fn precedence_oracle(classes: &[Assertion]) -> ObservationLabel {
    if classes.contains(&Assertion::Positive) {
        ObservationLabel::Positive
    } else if classes.contains(&Assertion::Uncertain) {
        ObservationLabel::Uncertain
    } else if classes.contains(&Assertion::Negative) {
        ObservationLabel::Negative
    } else {
        ObservationLabel::Blank
    }
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting 1/2.
pub fn auroc_pairs(scores: &[f64], truths: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if truths[i] && !truths[j] {
                pairs += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

/// Unmasked binary cross-entropy, summed.
pub fn plain_bce(targets: &[f64], preds: &[f64]) -> f64 {
    let eps = 1e-7;
    targets
        .iter()
        .zip(preds)
        .map(|(&t, &p)| {
            let p = p.max(eps).min(1.0 - eps);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum()
}

pub fn random_label<R: Rng>(rng: &mut R) -> ObservationLabel {
    *ObservationLabel::ALL.choose(rng).unwrap()
}

pub fn random_assertion<R: Rng>(rng: &mut R) -> Assertion {
    *[Assertion::Positive, Assertion::Negative, Assertion::Uncertain].choose(rng).unwrap()
}

/// Tiny vocabulary so that random phrases actually occur in random sentences.
pub const VOCAB: [&str; 5] = ["a", "b", "c", "d", "e"];

/// A random sentence of 1..=12 tokens and a random phrase set over three
/// observations.
pub fn random_extraction_case<R: Rng>(rng: &mut R) -> (Vec<String>, Vec<(Observation, Vec<String>)>) {
    let n = rng.gen_range(1..=12);
    let tokens = (0..n).map(|_| VOCAB.choose(rng).unwrap().to_string()).collect();
    let observations = [Observation::Edema, Observation::Atelectasis, Observation::PleuralEffusion];
    let n_phrases = rng.gen_range(0..=6);
    let phrases = (0..n_phrases)
        .map(|_| {
            let len = rng.gen_range(1..=3);
            let obs = *observations.choose(rng).unwrap();
            (obs, (0..len).map(|_| VOCAB.choose(rng).unwrap().to_string()).collect())
        })
        .collect();
    (tokens, phrases)
}

const FINDINGS: [&str; 16] = [
    "pulmonary edema",
    "edema",
    "pleural effusions",
    "effusion",
    "pneumothorax",
    "atelectasis",
    "consolidation",
    "pneumonia",
    "cardiomegaly",
    "opacities",
    "nodule",
    "rib fracture",
    "heart size",
    "endotracheal tube",
    "widened mediastinum",
    "pleural thickening",
];

const TEMPLATES: [&str; 12] = [
    "No evidence of {}.",
    "No {}.",
    "There is {}.",
    "Cannot exclude {}.",
    "Findings may represent {} versus {}.",
    "Possible {}.",
    "{} is unchanged.",
    "Moderate bilateral {} and {}.",
    "Resolution of {}.",
    "Suspicious for {}.",
    "Without {}.",
    "Lungs are clear.",
];

/// A synthetic report with a findings section and an impression of 1 to 4
/// sentences built from templates.
pub fn synthetic_report<R: Rng>(rng: &mut R) -> String {
    let mut impression = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let mut s = TEMPLATES.choose(rng).unwrap().to_string();
        while s.contains("{}") {
            s = s.replacen("{}", FINDINGS.choose(rng).unwrap(), 1);
        }
        if rng.gen_bool(0.2) {
            s = s.to_uppercase();
        }
        impression.push(s);
    }
    let findings = TEMPLATES.choose(rng).unwrap().replace("{}", FINDINGS.choose(rng).unwrap());
    format!("FINDINGS: {findings}\nIMPRESSION: {}\nSIGNED: Dr. X", impression.join(" "))
}

/// Writes `n` synthetic reports as a `report_id,text` CSV.
pub fn synthetic_corpus<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["report_id", "text"]).unwrap();
    for i in 0..n {
        w.write_record([format!("syn-{i:05}"), synthetic_report(rng)]).unwrap();
    }
    w.into_inner().unwrap()
}

/// Directory holding the shipped demonstration rules, phrases and reports.
pub fn demo_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("demo")
}
