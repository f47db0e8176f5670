//! Scoring labels against gold annotations: F1 on the mention, negation and
//! uncertainty tasks, plus AUROC and Brier scores for probabilities.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::aggregate::{LabelVector, ObservationLabel};
use crate::observation::Observation;
use crate::table::LabelRow;

/// Gold rows use the same layout as labeler output.
pub type GoldAnnotation = LabelRow;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("prediction and gold report ids differ ({} only in predictions, {} only in gold; first: {first:?})", only_pred, only_gold)]
    ReportIdMismatch {
        only_pred: usize,
        only_gold: usize,
        first: String,
    },
    #[error("report id {0:?} appears more than once")]
    DuplicateReportId(String),
    #[error("need at least one positive and one negative example")]
    DegenerateClass,
    #[error("{scores} scores but {truths} truth values")]
    LengthMismatch { scores: usize, truths: usize },
    #[error("score {0} is not a number")]
    InvalidScore(f64),
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("no examples")]
    Empty,
}

/// Anything that carries one label per observation for a report.
pub trait LabeledReport {
    fn report_id(&self) -> &str;
    fn label(&self, obs: Observation) -> ObservationLabel;
}

impl LabeledReport for LabelVector {
    fn report_id(&self) -> &str {
        LabelVector::report_id(self)
    }
    fn label(&self, obs: Observation) -> ObservationLabel {
        self.get(obs)
    }
}

impl LabeledReport for LabelRow {
    fn report_id(&self) -> &str {
        &self.report_id
    }
    fn label(&self, obs: Observation) -> ObservationLabel {
        self.get(obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    /// Any assigned label (1, 0, u) is positive; blank is negative.
    Mention,
    /// 0 is positive.
    Negation,
    /// u is positive.
    Uncertainty,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Mention, Task::Negation, Task::Uncertainty];

    pub fn name(self) -> &'static str {
        match self {
            Task::Mention => "mention",
            Task::Negation => "negation",
            Task::Uncertainty => "uncertainty",
        }
    }

    fn column_title(self) -> &'static str {
        match self {
            Task::Mention => "Mention F1",
            Task::Negation => "Negation F1",
            Task::Uncertainty => "Uncertain F1",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task {s:?} (expected mention, negation or uncertainty)"))
    }
}

pub fn binarize(label: ObservationLabel, task: Task) -> bool {
    match task {
        Task::Mention => label != ObservationLabel::Blank,
        Task::Negation => label == ObservationLabel::Negative,
        Task::Uncertainty => label == ObservationLabel::Uncertain,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, predicted: bool, gold: bool) {
        match (predicted, gold) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => {}
        }
    }

    /// `2tp / (2tp + fp + fn)`, or `None` when all three counts are zero.
    pub fn f1(&self) -> Option<f64> {
        let denom = 2 * self.tp + self.fp + self.fn_;
        (denom > 0).then(|| (2 * self.tp) as f64 / denom as f64)
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, rhs: Self) -> Self {
        ConfusionCounts {
            tp: self.tp + rhs.tp,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationScore {
    pub observation: Observation,
    pub counts: ConfusionCounts,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub task: Task,
    /// One entry per observation, in [`Observation::ALL`] order.
    pub per_observation: Vec<ObservationScore>,
    /// Mean of the defined per-observation F1 values.
    pub macro_average: Option<f64>,
    /// F1 of the counts pooled over all observations.
    pub micro_average: Option<f64>,
    pub pooled: ConfusionCounts,
}

impl MetricReport {
    pub fn f1(&self, obs: Observation) -> Option<f64> {
        self.per_observation[obs.index()].f1
    }
}

fn index_by_id<T: LabeledReport>(rows: &[T]) -> Result<HashMap<&str, &T>, EvalError> {
    let mut map = HashMap::with_capacity(rows.len());
    for row in rows {
        if map.insert(row.report_id(), row).is_some() {
            return Err(EvalError::DuplicateReportId(row.report_id().to_string()));
        }
    }
    Ok(map)
}

/// Per-observation and averaged F1 for one task. Both sides must cover the
/// same report ids; row order does not matter.
pub fn f1_report<P: LabeledReport, G: LabeledReport>(pred: &[P], gold: &[G], task: Task) -> Result<MetricReport, EvalError> {
    let pred_by_id = index_by_id(pred)?;
    let gold_by_id = index_by_id(gold)?;
    let only_pred: BTreeSet<&str> = pred_by_id.keys().filter(|id| !gold_by_id.contains_key(*id)).copied().collect();
    let only_gold: BTreeSet<&str> = gold_by_id.keys().filter(|id| !pred_by_id.contains_key(*id)).copied().collect();
    if !only_pred.is_empty() || !only_gold.is_empty() {
        return Err(EvalError::ReportIdMismatch {
            only_pred: only_pred.len(),
            only_gold: only_gold.len(),
            first: only_pred.iter().chain(&only_gold).next().unwrap().to_string(),
        });
    }

    let mut counts = [ConfusionCounts::default(); Observation::COUNT];
    for g in gold {
        let p = pred_by_id[g.report_id()];
        for obs in Observation::ALL {
            counts[obs.index()].record(binarize(p.label(obs), task), binarize(g.label(obs), task));
        }
    }

    let per_observation: Vec<ObservationScore> = Observation::ALL
        .into_iter()
        .map(|observation| {
            let c = counts[observation.index()];
            ObservationScore { observation, counts: c, f1: c.f1() }
        })
        .collect();
    let defined: Vec<f64> = per_observation.iter().filter_map(|s| s.f1).collect();
    let macro_average = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    let pooled = counts.iter().fold(ConfusionCounts::default(), |acc, c| acc + *c);

    Ok(MetricReport {
        task,
        per_observation,
        macro_average,
        micro_average: pooled.f1(),
        pooled,
    })
}

fn format_f1(v: Option<f64>) -> String {
    v.map_or_else(|| "N/A".to_string(), |f| format!("{f:.3}"))
}

/// Human-readable table: one row per observation and the two averages, one
/// column per task.
pub fn format_table(reports: &[MetricReport]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<28}", "Category");
    for r in reports {
        let _ = write!(out, "{:>14}", r.task.column_title());
    }
    out.push('\n');
    for obs in Observation::ALL {
        let _ = write!(out, "{:<28}", obs.name());
        for r in reports {
            let _ = write!(out, "{:>14}", format_f1(r.f1(obs)));
        }
        out.push('\n');
    }
    for (title, pick) in [
        ("Macro-average", (|r: &MetricReport| r.macro_average) as fn(&MetricReport) -> Option<f64>),
        ("Micro-average", |r: &MetricReport| r.micro_average),
    ] {
        let _ = write!(out, "{title:<28}");
        for r in reports {
            let _ = write!(out, "{:>14}", format_f1(pick(r)));
        }
        out.push('\n');
    }
    out
}

/// Machine-readable report: `task,category,tp,fp,fn,f1`, one record per
/// observation per task, then the macro and micro averages. Undefined F1 is `N/A`.
pub fn write_metric_csv<W: std::io::Write>(writer: W, reports: &[MetricReport]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["task", "category", "tp", "fp", "fn", "f1"])?;
    let f1_cell = |v: Option<f64>| v.map_or_else(|| "N/A".to_string(), |f| f.to_string());
    for r in reports {
        for s in &r.per_observation {
            w.write_record([
                r.task.name(),
                s.observation.name(),
                &s.counts.tp.to_string(),
                &s.counts.fp.to_string(),
                &s.counts.fn_.to_string(),
                &f1_cell(s.f1),
            ])?;
        }
        w.write_record([r.task.name(), "Macro-average", "", "", "", &f1_cell(r.macro_average)])?;
        w.write_record([
            r.task.name(),
            "Micro-average",
            &r.pooled.tp.to_string(),
            &r.pooled.fp.to_string(),
            &r.pooled.fn_.to_string(),
            &f1_cell(r.micro_average),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Area under the ROC curve: the probability that a random positive scores
/// above a random negative, counting ties as one half.
pub fn auroc(scores: &[f64], truths: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != truths.len() {
        return Err(EvalError::LengthMismatch { scores: scores.len(), truths: truths.len() });
    }
    if let Some(&bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(EvalError::InvalidScore(bad));
    }
    let n_pos = truths.iter().filter(|&&t| t).count() as u128;
    let n_neg = truths.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::DegenerateClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the Mann-Whitney U, accumulated exactly over groups of tied scores.
    let mut twice_u: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if truths[order[j]] { pos += 1 } else { neg += 1 }
            j += 1;
        }
        twice_u += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        i = j;
    }
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

fn check_probabilities(probs: &[f64], truths: &[bool]) -> Result<(), EvalError> {
    if probs.len() != truths.len() {
        return Err(EvalError::LengthMismatch { scores: probs.len(), truths: truths.len() });
    }
    if probs.is_empty() {
        return Err(EvalError::Empty);
    }
    match probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(&bad) => Err(EvalError::InvalidProbability(bad)),
        None => Ok(()),
    }
}

/// Mean squared error of probabilities against 0/1 outcomes.
pub fn brier_score(probs: &[f64], truths: &[bool]) -> Result<f64, EvalError> {
    check_probabilities(probs, truths)?;
    let sum: f64 = probs
        .iter()
        .zip(truths)
        .map(|(&p, &t)| {
            let y = if t { 1.0 } else { 0.0 };
            (p - y) * (p - y)
        })
        .sum();
    Ok(sum / probs.len() as f64)
}

/// `1 - brier / (prevalence * (1 - prevalence))`; higher is better, and a
/// constant prediction at the prevalence scores 0.
pub fn scaled_brier_score(probs: &[f64], truths: &[bool]) -> Result<f64, EvalError> {
    let brier = brier_score(probs, truths)?;
    let prevalence = truths.iter().filter(|&&t| t).count() as f64 / truths.len() as f64;
    if prevalence == 0.0 || prevalence == 1.0 {
        return Err(EvalError::DegenerateClass);
    }
    Ok(1.0 - brier / (prevalence * (1.0 - prevalence)))
}

/// Brier and scaled Brier together.
pub fn brier_scores(probs: &[f64], truths: &[bool]) -> Result<(f64, f64), EvalError> {
    Ok((brier_score(probs, truths)?, scaled_brier_score(probs, truths)?))
}

/// Probability-quality scores for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityScore {
    pub observation: Observation,
    pub positives: usize,
    pub negatives: usize,
    /// `None` unless both classes are present.
    pub auroc: Option<f64>,
    pub brier: Option<f64>,
    pub scaled_brier: Option<f64>,
}

/// Predicted probabilities for one report, one per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRow {
    pub report_id: String,
    pub probs: [Option<f64>; Observation::COUNT],
}

/// Scores probabilities against gold labels per observation. Gold 1 is a
/// positive and 0 a negative; u and blank cells, and cells with no
/// probability, are left out.
pub fn score_probabilities(probs: &[ProbabilityRow], gold: &[GoldAnnotation]) -> Result<Vec<ProbabilityScore>, EvalError> {
    let mut by_id = HashMap::with_capacity(probs.len());
    for row in probs {
        if by_id.insert(row.report_id.as_str(), row).is_some() {
            return Err(EvalError::DuplicateReportId(row.report_id.clone()));
        }
    }
    let gold_ids: BTreeSet<&str> = gold.iter().map(|g| g.report_id.as_str()).collect();
    if gold_ids.len() != gold.len() {
        let mut seen = BTreeSet::new();
        let dup = gold.iter().find(|g| !seen.insert(g.report_id.as_str())).unwrap();
        return Err(EvalError::DuplicateReportId(dup.report_id.clone()));
    }
    let only_pred = by_id.keys().filter(|id| !gold_ids.contains(*id)).count();
    let missing: Vec<&str> = gold_ids.iter().filter(|id| !by_id.contains_key(*id)).copied().collect();
    if only_pred > 0 || !missing.is_empty() {
        let first = missing
            .first()
            .copied()
            .or_else(|| by_id.keys().find(|id| !gold_ids.contains(*id)).copied())
            .unwrap_or_default();
        return Err(EvalError::ReportIdMismatch { only_pred, only_gold: missing.len(), first: first.to_string() });
    }

    Observation::ALL
        .into_iter()
        .map(|observation| {
            let (mut p, mut t) = (Vec::new(), Vec::new());
            for g in gold {
                let truth = match g.get(observation) {
                    ObservationLabel::Positive => true,
                    ObservationLabel::Negative => false,
                    _ => continue,
                };
                if let Some(prob) = by_id[g.report_id.as_str()].probs[observation.index()] {
                    p.push(prob);
                    t.push(truth);
                }
            }
            let positives = t.iter().filter(|&&x| x).count();
            let negatives = t.len() - positives;
            let both = positives > 0 && negatives > 0;
            Ok(ProbabilityScore {
                observation,
                positives,
                negatives,
                auroc: if both { Some(auroc(&p, &t)?) } else { None },
                brier: if t.is_empty() { None } else { Some(brier_score(&p, &t)?) },
                scaled_brier: if both { Some(scaled_brier_score(&p, &t)?) } else { None },
            })
        })
        .collect()
}
