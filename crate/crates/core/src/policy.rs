//! Training targets for uncertain labels, the masked losses that consume
//! them, and the multi-view / three-class probability read-outs.
//!
//! Blank cells never supervise: every policy masks them out.

use std::fmt;
use std::str::FromStr;

use crate::aggregate::ObservationLabel;

/// Predictions are clamped to `[EPSILON, 1 - EPSILON]` before taking logs.
pub const EPSILON: f64 = 1e-7;

/// Tolerance on `p0 + p1 + pu = 1` for three-class predictions.
pub const TRIPLE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("row {row} has {found} cells, expected {expected}")]
    NotRectangular { row: usize, expected: usize, found: usize },
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("three-class probabilities ({0}, {1}, {2}) must lie in [0, 1] and sum to 1")]
    InvalidTriple(f64, f64, f64),
    #[error("p0 + p1 is zero; the positive probability is undefined")]
    DegenerateTriple,
    #[error("no views to combine")]
    EmptyViews,
    #[error("{0} targets cannot be scored with this loss")]
    WrongTargetMode(Policy),
}

/// Row-major matrix of report labels (rows) by observations (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    n_cols: usize,
    cells: Vec<ObservationLabel>,
}

impl LabelMatrix {
    pub fn from_rows<R: AsRef<[ObservationLabel]>>(rows: &[R]) -> Result<Self, PolicyError> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut cells = Vec::with_capacity(rows.len() * n_cols);
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(PolicyError::NotRectangular { row, expected: n_cols, found: r.len() });
            }
            cells.extend_from_slice(r);
        }
        Ok(LabelMatrix { n_cols, cells })
    }

    pub fn n_rows(&self) -> usize {
        self.cells.len().checked_div(self.n_cols).unwrap_or(0)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn cells(&self) -> &[ObservationLabel] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> ObservationLabel {
        self.cells[row * self.n_cols + col]
    }

    fn shape(&self) -> String {
        format!("{}x{}", self.n_rows(), self.n_cols)
    }
}

/// Row-major matrix of `p(y = 1 | x)` values.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    n_cols: usize,
    probs: Vec<f64>,
}

impl PredictionMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, PolicyError> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut probs = Vec::with_capacity(rows.len() * n_cols);
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(PolicyError::NotRectangular { row, expected: n_cols, found: r.len() });
            }
            if let Some(&bad) = r.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(PolicyError::InvalidProbability(bad));
            }
            probs.extend_from_slice(r);
        }
        Ok(PredictionMatrix { n_cols, probs })
    }

    pub fn n_rows(&self) -> usize {
        self.probs.len().checked_div(self.n_cols).unwrap_or(0)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn shape(&self) -> String {
        format!("{}x{}", self.n_rows(), self.n_cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Ignore,
    Zeros,
    Ones,
    SelfTrained,
    MultiClass,
}

impl Policy {
    pub const ALL: [Policy; 5] = [Policy::Ignore, Policy::Zeros, Policy::Ones, Policy::SelfTrained, Policy::MultiClass];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Ignore => "ignore",
            Policy::Zeros => "zeros",
            Policy::Ones => "ones",
            Policy::SelfTrained => "self-trained",
            Policy::MultiClass => "multiclass",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown policy {s:?}"))
    }
}

/// Target class under the three-class policy; the discriminant is the class
/// index used in targets files, matching the `(p0, p1, pu)` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThreeClass {
    Negative = 0,
    Positive = 1,
    Uncertain = 2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetCell {
    /// Excluded from the loss.
    Masked,
    /// Binary target; soft (in `[0, 1]`) only under self-training.
    Value(f64),
    Class(ThreeClass),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub policy: Policy,
    n_cols: usize,
    targets: Vec<TargetCell>,
}

impl PolicyOutput {
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len().checked_div(self.n_cols).unwrap_or(0)
    }

    pub fn targets(&self) -> &[TargetCell] {
        &self.targets
    }

    pub fn target(&self, row: usize, col: usize) -> TargetCell {
        self.targets[row * self.n_cols + col]
    }

    /// `true` where the cell contributes to the loss.
    pub fn mask(&self) -> Vec<bool> {
        self.targets.iter().map(|t| !matches!(t, TargetCell::Masked)).collect()
    }

    /// Binary targets with masked cells set to 0; pair with [`PolicyOutput::mask`].
    pub fn binary_targets(&self) -> Result<Vec<f64>, PolicyError> {
        self.targets
            .iter()
            .map(|t| match t {
                TargetCell::Masked => Ok(0.0),
                TargetCell::Value(v) => Ok(*v),
                TargetCell::Class(_) => Err(PolicyError::WrongTargetMode(self.policy)),
            })
            .collect()
    }

    /// Masked binary cross-entropy of `preds` against these targets.
    pub fn loss(&self, preds: &PredictionMatrix, reduction: Reduction) -> Result<f64, PolicyError> {
        if preds.n_cols() != self.n_cols || preds.n_rows() != self.n_rows() {
            return Err(PolicyError::ShapeMismatch {
                expected: format!("{}x{}", self.n_rows(), self.n_cols),
                found: preds.shape(),
            });
        }
        masked_bce(&self.binary_targets()?, &self.mask(), preds.probs(), reduction)
    }
}

/// The policies that need nothing beyond the labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasicPolicy {
    Ignore,
    Zeros,
    Ones,
    MultiClass,
}

impl From<BasicPolicy> for Policy {
    fn from(p: BasicPolicy) -> Self {
        match p {
            BasicPolicy::Ignore => Policy::Ignore,
            BasicPolicy::Zeros => Policy::Zeros,
            BasicPolicy::Ones => Policy::Ones,
            BasicPolicy::MultiClass => Policy::MultiClass,
        }
    }
}

pub fn apply_policy(labels: &LabelMatrix, policy: BasicPolicy) -> PolicyOutput {
    use ObservationLabel::*;
    let targets = labels
        .cells()
        .iter()
        .map(|&label| match (policy, label) {
            (_, Blank) => TargetCell::Masked,
            (BasicPolicy::MultiClass, Negative) => TargetCell::Class(ThreeClass::Negative),
            (BasicPolicy::MultiClass, Positive) => TargetCell::Class(ThreeClass::Positive),
            (BasicPolicy::MultiClass, Uncertain) => TargetCell::Class(ThreeClass::Uncertain),
            (_, Negative) => TargetCell::Value(0.0),
            (_, Positive) => TargetCell::Value(1.0),
            (BasicPolicy::Ignore, Uncertain) => TargetCell::Masked,
            (BasicPolicy::Zeros, Uncertain) => TargetCell::Value(0.0),
            (BasicPolicy::Ones, Uncertain) => TargetCell::Value(1.0),
        })
        .collect();
    PolicyOutput {
        policy: policy.into(),
        n_cols: labels.n_cols(),
        targets,
    }
}

/// Replaces each u label with the model's probability at that cell; 0 and 1
/// labels are kept and blanks masked.
pub fn apply_selftrain(labels: &LabelMatrix, preds: &PredictionMatrix) -> Result<PolicyOutput, PolicyError> {
    if labels.n_rows() != preds.n_rows() || labels.n_cols() != preds.n_cols() {
        return Err(PolicyError::ShapeMismatch {
            expected: labels.shape(),
            found: preds.shape(),
        });
    }
    let targets = labels
        .cells()
        .iter()
        .zip(preds.probs())
        .map(|(&label, &p)| match label {
            ObservationLabel::Blank => TargetCell::Masked,
            ObservationLabel::Negative => TargetCell::Value(0.0),
            ObservationLabel::Positive => TargetCell::Value(1.0),
            ObservationLabel::Uncertain => TargetCell::Value(p),
        })
        .collect();
    Ok(PolicyOutput {
        policy: Policy::SelfTrained,
        n_cols: labels.n_cols(),
        targets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    #[default]
    Sum,
    /// Divides by the number of unmasked cells (0 when there are none).
    Mean,
}

fn clamp(p: f64) -> f64 {
    p.clamp(EPSILON, 1.0 - EPSILON)
}

/// `-Σ mask · [t ln p + (1 - t) ln(1 - p)]` with `p` clamped away from 0 and 1.
/// Targets may be soft.
pub fn masked_bce(targets: &[f64], mask: &[bool], preds: &[f64], reduction: Reduction) -> Result<f64, PolicyError> {
    if targets.len() != mask.len() || targets.len() != preds.len() {
        return Err(PolicyError::ShapeMismatch {
            expected: format!("{} targets and mask cells", targets.len()),
            found: format!("{} mask cells, {} predictions", mask.len(), preds.len()),
        });
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for ((&t, &keep), &p) in targets.iter().zip(mask).zip(preds) {
        if !keep {
            continue;
        }
        let p = clamp(p);
        total -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        count += 1;
    }
    Ok(match reduction {
        Reduction::Sum => total,
        Reduction::Mean if count == 0 => 0.0,
        Reduction::Mean => total / count as f64,
    })
}

/// A validated `(p0, p1, pu)` prediction for one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProbabilities {
    pub p0: f64,
    pub p1: f64,
    pub pu: f64,
}

impl ClassProbabilities {
    pub fn new(p0: f64, p1: f64, pu: f64) -> Result<Self, PolicyError> {
        let in_range = [p0, p1, pu].iter().all(|p| (0.0..=1.0).contains(p));
        if !in_range || (p0 + p1 + pu - 1.0).abs() > TRIPLE_SUM_TOLERANCE {
            return Err(PolicyError::InvalidTriple(p0, p1, pu));
        }
        Ok(ClassProbabilities { p0, p1, pu })
    }

    fn of(self, class: ThreeClass) -> f64 {
        match class {
            ThreeClass::Negative => self.p0,
            ThreeClass::Positive => self.p1,
            ThreeClass::Uncertain => self.pu,
        }
    }
}

/// Positive probability with the uncertain class dropped: `p1 / (p0 + p1)`.
pub fn multiclass_positive_probability(p0: f64, p1: f64, pu: f64) -> Result<f64, PolicyError> {
    let probs = ClassProbabilities::new(p0, p1, pu)?;
    let denom = probs.p0 + probs.p1;
    if denom == 0.0 {
        return Err(PolicyError::DegenerateTriple);
    }
    Ok(probs.p1 / denom)
}

/// Masked three-class cross-entropy `-Σ ln p_class` over unmasked cells.
pub fn masked_multiclass_ce(output: &PolicyOutput, preds: &[ClassProbabilities], reduction: Reduction) -> Result<f64, PolicyError> {
    if preds.len() != output.targets.len() {
        return Err(PolicyError::ShapeMismatch {
            expected: format!("{} cells", output.targets.len()),
            found: format!("{} predictions", preds.len()),
        });
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (target, probs) in output.targets.iter().zip(preds) {
        match target {
            TargetCell::Masked => {}
            TargetCell::Class(c) => {
                total -= clamp(probs.of(*c)).ln();
                count += 1;
            }
            TargetCell::Value(_) => return Err(PolicyError::WrongTargetMode(output.policy)),
        }
    }
    Ok(match reduction {
        Reduction::Sum => total,
        Reduction::Mean if count == 0 => 0.0,
        Reduction::Mean => total / count as f64,
    })
}

/// Element-wise maximum of per-view probability vectors.
pub fn combine_views<V: AsRef<[f64]>>(views: &[V]) -> Result<Vec<f64>, PolicyError> {
    let (first, rest) = views.split_first().ok_or(PolicyError::EmptyViews)?;
    let mut out = first.as_ref().to_vec();
    for view in rest {
        let view = view.as_ref();
        if view.len() != out.len() {
            return Err(PolicyError::ShapeMismatch {
                expected: format!("{} probabilities per view", out.len()),
                found: view.len().to_string(),
            });
        }
        for (o, &p) in out.iter_mut().zip(view) {
            *o = o.max(p);
        }
    }
    Ok(out)
}
