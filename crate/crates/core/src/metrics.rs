//! Top-1 accuracy, per-subset macro recall/precision/F1 and prediction-bias
//! statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::{Subset, SubsetPartition};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{predictions} predictions but {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("class id {id} outside [0, {classes})")]
    IdOutOfRange { id: usize, classes: usize },
    #[error("partition covers {partition} classes, stats have {stats}")]
    PartitionMismatch { partition: usize, stats: usize },
}

/// One-vs-rest counts per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionStats {
    pub tp: Vec<usize>,
    pub fp: Vec<usize>,
    #[serde(rename = "fn")]
    pub fn_: Vec<usize>,
    pub n_samples: usize,
}

impl ConfusionStats {
    pub fn classes(&self) -> usize {
        self.tp.len()
    }

    pub fn correct(&self) -> usize {
        self.tp.iter().sum()
    }

    pub fn accuracy(&self) -> f64 {
        if self.n_samples == 0 {
            return 0.0;
        }
        self.correct() as f64 / self.n_samples as f64
    }

    /// `tp/(tp+fn)`, 0 for a class with no samples.
    pub fn recall(&self, c: usize) -> f64 {
        ratio(self.tp[c], self.tp[c] + self.fn_[c])
    }

    /// `tp/(tp+fp)`, 0 for a class that is never predicted.
    pub fn precision(&self, c: usize) -> f64 {
        ratio(self.tp[c], self.tp[c] + self.fp[c])
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_inputs(predictions: &[usize], labels: &[usize], classes: usize) -> Result<(), MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if let Some(&id) = predictions.iter().chain(labels).find(|&&id| id >= classes) {
        return Err(MetricsError::IdOutOfRange { id, classes });
    }
    Ok(())
}

pub fn confusion(predictions: &[usize], labels: &[usize], classes: usize) -> Result<ConfusionStats, MetricsError> {
    check_inputs(predictions, labels, classes)?;
    let mut stats = ConfusionStats {
        tp: vec![0; classes],
        fp: vec![0; classes],
        fn_: vec![0; classes],
        n_samples: labels.len(),
    };
    for (&p, &y) in predictions.iter().zip(labels) {
        if p == y {
            stats.tp[y] += 1;
        } else {
            stats.fp[p] += 1;
            stats.fn_[y] += 1;
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetScores {
    pub classes: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

/// Macro scores per subset; `None` for a subset with no classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetMacro {
    pub many: Option<SubsetScores>,
    pub medium: Option<SubsetScores>,
    pub few: Option<SubsetScores>,
}

impl SubsetMacro {
    pub fn get(&self, subset: Subset) -> Option<SubsetScores> {
        match subset {
            Subset::Many => self.many,
            Subset::Medium => self.medium,
            Subset::Few => self.few,
        }
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1(recall: f64, precision: f64) -> f64 {
    if recall + precision == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    }
}

/// Macro recall and precision over `classes`, and F1 from those two
/// aggregates.
pub fn macro_scores(stats: &ConfusionStats, classes: &[usize]) -> Option<SubsetScores> {
    if classes.is_empty() {
        return None;
    }
    let n = classes.len() as f64;
    let recall = classes.iter().map(|&c| stats.recall(c)).sum::<f64>() / n;
    let precision = classes.iter().map(|&c| stats.precision(c)).sum::<f64>() / n;
    Some(SubsetScores {
        classes: classes.len(),
        recall,
        precision,
        f1: f1(recall, precision),
    })
}

pub fn subset_macro(stats: &ConfusionStats, partition: &SubsetPartition) -> Result<SubsetMacro, MetricsError> {
    if partition.assignment.len() != stats.classes() {
        return Err(MetricsError::PartitionMismatch {
            partition: partition.assignment.len(),
            stats: stats.classes(),
        });
    }
    let scores = |s| macro_scores(stats, &partition.classes(s));
    Ok(SubsetMacro {
        many: scores(Subset::Many),
        medium: scores(Subset::Medium),
        few: scores(Subset::Few),
    })
}

/// Predicted-class histogram and the L1 distance between the normalized
/// predicted and true label distributions.
pub fn prediction_bias(
    predictions: &[usize],
    labels: &[usize],
    classes: usize,
) -> Result<(Vec<usize>, f64), MetricsError> {
    check_inputs(predictions, labels, classes)?;
    let (pred_hist, true_hist) = histograms(predictions, labels, classes);
    Ok((pred_hist.clone(), l1_distance(&pred_hist, &true_hist)))
}

fn histograms(predictions: &[usize], labels: &[usize], classes: usize) -> (Vec<usize>, Vec<usize>) {
    let mut pred_hist = vec![0; classes];
    let mut true_hist = vec![0; classes];
    for (&p, &y) in predictions.iter().zip(labels) {
        pred_hist[p] += 1;
        true_hist[y] += 1;
    }
    (pred_hist, true_hist)
}

fn l1_distance(a: &[usize], b: &[usize]) -> f64 {
    let na = a.iter().sum::<usize>().max(1) as f64;
    let nb = b.iter().sum::<usize>().max(1) as f64;
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 / na - y as f64 / nb).abs())
        .sum()
}

/// Everything reported for one (model, test suite) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub subsets: SubsetMacro,
    /// Macro scores over all classes.
    pub overall: SubsetScores,
    pub per_class: ConfusionStats,
    pub prediction_histogram: Vec<usize>,
    /// Realized class counts of the evaluated suite.
    pub label_histogram: Vec<usize>,
    pub l1_to_truth: f64,
}

pub fn evaluate(
    predictions: &[usize],
    labels: &[usize],
    classes: usize,
    partition: &SubsetPartition,
) -> Result<MetricsReport, MetricsError> {
    let stats = confusion(predictions, labels, classes)?;
    let subsets = subset_macro(&stats, partition)?;
    let all: Vec<usize> = (0..classes).collect();
    let overall = macro_scores(&stats, &all).ok_or(MetricsError::IdOutOfRange { id: 0, classes })?;
    let (prediction_histogram, label_histogram) = histograms(predictions, labels, classes);
    let l1_to_truth = l1_distance(&prediction_histogram, &label_histogram);
    Ok(MetricsReport {
        accuracy: stats.accuracy(),
        subsets,
        overall,
        per_class: stats,
        prediction_histogram,
        label_histogram,
        l1_to_truth,
    })
}

impl MetricsReport {
    /// `class,subset,support,predicted,tp,fp,fn,recall,precision` rows.
    pub fn per_class_csv(&self, partition: &SubsetPartition) -> Vec<u8> {
        let mut out = Vec::new();
        writeln!(out, "class,subset,support,predicted,tp,fp,fn,recall,precision").unwrap();
        let s = &self.per_class;
        for c in 0..s.classes() {
            writeln!(
                out,
                "{c},{},{},{},{},{},{},{},{}",
                partition.assignment[c],
                self.label_histogram[c],
                self.prediction_histogram[c],
                s.tp[c],
                s.fp[c],
                s.fn_[c],
                s.recall(c),
                s.precision(c)
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::partition_subsets;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let labels = [0, 1, 2, 2, 1];
        let stats = confusion(&labels, &labels, 3).unwrap();
        assert!(stats.fp.iter().chain(&stats.fn_).all(|&v| v == 0));
        assert_eq!(stats.accuracy(), 1.0);
        let part = partition_subsets(&[200, 50, 5], 100, 20).unwrap();
        let m = subset_macro(&stats, &part).unwrap();
        for s in Subset::ALL {
            let scores = m.get(s).unwrap();
            assert_eq!((scores.recall, scores.precision, scores.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn two_class_hand_count() {
        let stats = confusion(&[0, 1, 1], &[0, 0, 1], 2).unwrap();
        assert_eq!((stats.tp[0], stats.fn_[0], stats.fp[0]), (1, 1, 0));
        assert_eq!((stats.tp[1], stats.fp[1], stats.fn_[1]), (1, 1, 0));
        let part = partition_subsets(&[50, 50], 100, 20).unwrap();
        let medium = subset_macro(&stats, &part).unwrap().medium.unwrap();
        assert_eq!(medium.recall, 0.75);
        assert_eq!(medium.precision, 0.75);
        assert_eq!(medium.f1, 0.75);
    }

    #[test]
    fn degenerate_predictor() {
        let labels = [0, 0, 1, 2, 2, 2];
        let preds = [2; 6];
        let stats = confusion(&preds, &labels, 3).unwrap();
        assert_eq!(stats.recall(2), 1.0);
        assert_eq!(stats.precision(2), 0.5);
        // never-predicted classes get precision 0
        assert_eq!(stats.precision(0), 0.0);
    }

    #[test]
    fn empty_subset_is_absent() {
        let stats = confusion(&[0, 1], &[0, 1], 2).unwrap();
        let part = partition_subsets(&[500, 400], 100, 20).unwrap();
        let m = subset_macro(&stats, &part).unwrap();
        assert!(m.many.is_some());
        assert!(m.medium.is_none() && m.few.is_none());
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"medium\":null"));
    }

    #[test]
    fn input_errors() {
        assert!(matches!(
            confusion(&[0], &[0, 1], 2),
            Err(MetricsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            confusion(&[0, 5], &[0, 1], 2),
            Err(MetricsError::IdOutOfRange { id: 5, classes: 2 })
        ));
        assert!(prediction_bias(&[0, 3], &[0, 1], 2).is_err());
    }

    #[test]
    fn bias_examples() {
        let labels = [0, 1, 2, 0, 1, 2];
        assert_eq!(prediction_bias(&labels, &labels, 3).unwrap().1, 0.0);
        let (hist, l1) = prediction_bias(&[0; 6], &labels, 3).unwrap();
        assert_eq!(hist, vec![6, 0, 0]);
        assert!((l1 - 2.0 * (1.0 - 1.0 / 3.0)).abs() < 1e-15);

        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let preds = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1];
        let (_, l1) = prediction_bias(&preds, &labels, 2).unwrap();
        assert!((l1 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn per_class_csv_has_row_per_class() {
        let part = partition_subsets(&[150, 50, 10], 100, 20).unwrap();
        let report = evaluate(&[0, 1, 1, 2], &[0, 1, 2, 2], 3, &part).unwrap();
        let csv = String::from_utf8(report.per_class_csv(&part)).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(3).unwrap().starts_with("2,few,2,1,1,0,1,"));
    }

    fn pairs() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (1usize..60).prop_flat_map(|n| {
            (
                proptest::collection::vec(0usize..5, n),
                proptest::collection::vec(0usize..5, n),
            )
        })
    }

    proptest! {
        #[test]
        fn report_invariants((preds, labels) in pairs(), seed in any::<u64>()) {
            let part = partition_subsets(&[300, 120, 60, 30, 10], 100, 20).unwrap();
            let r = evaluate(&preds, &labels, 5, &part).unwrap();
            let s = &r.per_class;
            prop_assert_eq!(s.correct() as f64 / labels.len() as f64, r.accuracy);
            prop_assert_eq!(s.tp.iter().zip(&s.fn_).map(|(a, b)| a + b).sum::<usize>(), labels.len());
            prop_assert_eq!(s.tp.iter().zip(&s.fp).map(|(a, b)| a + b).sum::<usize>(), labels.len());
            for sub in Subset::ALL {
                if let Some(sc) = r.subsets.get(sub) {
                    prop_assert_eq!(sc.f1, f1(sc.recall, sc.precision));
                }
            }
            prop_assert!((0.0..=2.0 + 1e-12).contains(&r.l1_to_truth));
            prop_assert_eq!(r.l1_to_truth == 0.0, r.prediction_histogram == r.label_histogram);

            // joint shuffle leaves every metric unchanged
            use rand::{seq::SliceRandom, SeedableRng};
            let mut idx: Vec<usize> = (0..labels.len()).collect();
            idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let sp: Vec<usize> = idx.iter().map(|&i| preds[i]).collect();
            let sl: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            prop_assert_eq!(evaluate(&sp, &sl, 5, &part).unwrap(), r);
        }
    }
}
