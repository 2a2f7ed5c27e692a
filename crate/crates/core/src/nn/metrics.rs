//! Confusion matrix and the accuracy metrics reported by the harness.

use crate::error::{Error, Result};

/// Square confusion matrix; rows are ground truth, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_counts(classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != classes * classes {
            return Err(Error::Contract(format!(
                "{} counts for a {classes}x{classes} matrix",
                counts.len()
            )));
        }
        Ok(Self { classes, counts })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.classes + predicted] += 1;
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Overall accuracy, average accuracy and per-class accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// trace / total: pixel-weighted accuracy.
    pub overall_accuracy: f64,
    /// Unweighted mean of per-class accuracies over classes with samples.
    pub average_accuracy: f64,
    /// diagonal / row sum; NaN-free: classes without samples are None.
    pub per_class: Vec<Option<f64>>,
}

/// Computes OA, AA and per-class accuracy from a confusion matrix.
pub fn metrics(confusion: &ConfusionMatrix) -> Result<Metrics> {
    let total = confusion.total();
    if total == 0 {
        return Err(Error::UndefinedMetric(
            "confusion matrix has no samples".into(),
        ));
    }
    let k = confusion.classes();
    let mut trace = 0u64;
    let mut per_class = Vec::with_capacity(k);
    let mut aa_sum = 0.0;
    let mut aa_n = 0usize;
    for t in 0..k {
        trace += confusion.count(t, t);
        let row: u64 = (0..k).map(|p| confusion.count(t, p)).sum();
        if row == 0 {
            per_class.push(None);
        } else {
            let acc = confusion.count(t, t) as f64 / row as f64;
            per_class.push(Some(acc));
            aa_sum += acc;
            aa_n += 1;
        }
    }
    Ok(Metrics {
        overall_accuracy: trace as f64 / total as f64,
        average_accuracy: aa_sum / aa_n as f64,
        per_class,
    })
}
