use std::ops::Add;

use crate::stats;
use crate::{Error, Result};

/// Counts at the implant decision threshold; "positive" means the classifier
/// recommends implantation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tp: usize,
}

impl ConfusionMatrix {
    pub fn new(tn: usize, fp: usize, fn_: usize, tp: usize) -> Self {
        ConfusionMatrix { tn, fp, fn_, tp }
    }

    pub fn from_predictions(labels: &[u8], predicted: &[bool]) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (&l, &p) in labels.iter().zip(predicted) {
            match (l == 1, p) {
                (false, false) => cm.tn += 1,
                (false, true) => cm.fp += 1,
                (true, false) => cm.fn_ += 1,
                (true, true) => cm.tp += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn correct(&self) -> usize {
        self.tn + self.tp
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, o: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix::new(
            self.tn + o.tn,
            self.fp + o.fp,
            self.fn_ + o.fn_,
            self.tp + o.tp,
        )
    }
}

/// Percentages derived from a confusion matrix. A ratio with a zero
/// denominator is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// tn / (tn + fn).
    pub npv: Option<f64>,
    /// tp / (tp + fp).
    pub ppv: Option<f64>,
    /// (tn + fn) / total: patients spared an implant.
    pub implant_reduction: Option<f64>,
    pub correctly_classified: usize,
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    Metrics {
        npv: percent(cm.tn, cm.tn + cm.fn_),
        ppv: percent(cm.tp, cm.tp + cm.fp),
        implant_reduction: percent(cm.tn + cm.fn_, cm.total()),
        correctly_classified: cm.correct(),
    }
}

/// Element-wise sum.
pub fn aggregate(matrices: &[ConfusionMatrix]) -> Result<ConfusionMatrix> {
    if matrices.is_empty() {
        return Err(Error::InsufficientData(
            "no confusion matrices to aggregate".into(),
        ));
    }
    Ok(matrices
        .iter()
        .copied()
        .fold(ConfusionMatrix::default(), Add::add))
}

/// Mean and sample standard deviation over the defined values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std_dev: Option<f64>,
    pub n_defined: usize,
    pub n_undefined: usize,
}

pub fn summarize(values: &[Option<f64>]) -> Summary {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    Summary {
        mean: stats::mean(&defined),
        std_dev: stats::std_dev(&defined),
        n_defined: defined.len(),
        n_undefined: values.len() - defined.len(),
    }
}

/// Largest fold count enumerated by [`compare_classifiers`].
pub const MAX_SIGN_FLIP_FOLDS: usize = 24;

/// One-sided exact sign-flip test of "b classifies more patients correctly
/// than a", paired by fold. Returns the fraction of the 2^K sign assignments
/// of the paired differences whose sum is at least the observed sum.
pub fn compare_classifiers(correct_a: &[f64], correct_b: &[f64]) -> Result<f64> {
    if correct_a.len() != correct_b.len() {
        return Err(Error::Dimension {
            expected: correct_a.len(),
            got: correct_b.len(),
        });
    }
    let k = correct_a.len();
    if k < 2 {
        return Err(Error::InsufficientData(
            "the paired test needs at least 2 folds".into(),
        ));
    }
    if k > MAX_SIGN_FLIP_FOLDS {
        return Err(Error::Config(format!(
            "exact sign-flip test limited to {MAX_SIGN_FLIP_FOLDS} folds"
        )));
    }
    let d: Vec<f64> = correct_b
        .iter()
        .zip(correct_a)
        .map(|(b, a)| b - a)
        .collect();
    let observed: f64 = d.iter().sum();
    let scale: f64 = d.iter().map(|x| x.abs()).sum();
    let tol = 1e-9 * scale.max(1.0);
    let mut hits = 0u64;
    for mask in 0u64..(1 << k) {
        let s: f64 = d
            .iter()
            .enumerate()
            .map(|(i, x)| {
                if mask >> i & 1 == 1 {
                    -x.abs()
                } else {
                    x.abs()
                }
            })
            .sum();
        if s >= observed - tol {
            hits += 1;
        }
    }
    Ok(hits as f64 / (1u64 << k) as f64)
}
