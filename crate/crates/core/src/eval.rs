//! Cross-validation protocols and classification metrics.
//!
//! Two averaging families are reported:
//!
//! - *micro*: computed once over every evaluated sample
//! - *subject macro*: computed per subject, then averaged with equal weight
//!   per subject
//!
//! Per-class precision, recall and F1 come from the pooled confusion matrix;
//! their unweighted mean over classes is reported separately as *class macro*.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::svm::{check_features, train_linear_svm, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Protocol {
    /// Leave one subject out.
    Loso,
    /// Leave one video out.
    Lovo,
}

/// One held-out group and the dataset indices it contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub held_out: String,
    pub test: Vec<usize>,
}

/// Splits the dataset into folds. Every index lands in exactly one fold.
pub fn fold_plan(dataset: &[FeatureVector], protocol: Protocol) -> Result<Vec<Fold>> {
    match protocol {
        Protocol::Loso => {
            let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, s) in dataset.iter().enumerate() {
                groups.entry(&s.subject_id).or_default().push(i);
            }
            if groups.len() < 2 {
                return Err(Error::ProtocolPrecondition("LOSO needs at least two subjects"));
            }
            Ok(groups
                .into_iter()
                .map(|(subject, test)| Fold {
                    held_out: subject.into(),
                    test,
                })
                .collect())
        }
        Protocol::Lovo => {
            if dataset.len() < 2 {
                return Err(Error::ProtocolPrecondition("LOVO needs at least two videos"));
            }
            Ok(dataset
                .iter()
                .enumerate()
                .map(|(i, s)| Fold {
                    held_out: s.video_id.clone(),
                    test: vec![i],
                })
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Prediction {
    pub video_id: String,
    pub subject_id: String,
    pub fold: usize,
    pub actual: String,
    pub predicted: String,
}

/// Trains on everything outside `fold` and predicts the fold's samples.
pub fn run_fold(dataset: &[FeatureVector], fold_index: usize, fold: &Fold, params: &SvmParams) -> Result<Vec<Prediction>> {
    let held: BTreeSet<usize> = fold.test.iter().copied().collect();
    let train: Vec<&FeatureVector> = dataset
        .iter()
        .enumerate()
        .filter(|(i, _)| !held.contains(i))
        .map(|(_, s)| s)
        .collect();
    let model = train_linear_svm(&train, params)?;
    Ok(fold
        .test
        .iter()
        .map(|&i| {
            let s = &dataset[i];
            Prediction {
                video_id: s.video_id.clone(),
                subject_id: s.subject_id.clone(),
                fold: fold_index,
                actual: s.label.clone(),
                predicted: model.predict(&s.values).into(),
            }
        })
        .collect())
}

/// Precision, recall and F1 under one averaging scheme.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[inline]
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != classes.len() || counts.iter().any(|r| r.len() != classes.len()) {
            return Err(Error::InvalidParameter("confusion matrix must be square over the classes"));
        }
        Ok(Self { classes, counts })
    }

    /// Counts `(actual, predicted)` label pairs; labels outside `classes` are an error.
    pub fn from_pairs<'a>(classes: &[String], pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut counts = vec![vec![0u64; classes.len()]; classes.len()];
        for (a, p) in pairs {
            let (Some(&ai), Some(&pi)) = (index.get(a), index.get(p)) else {
                return Err(Error::InvalidParameter("label outside the class list"));
            };
            counts[ai][pi] += 1;
        }
        Ok(Self {
            classes: classes.to_vec(),
            counts,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|k| self.counts[k][k]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }

    pub fn support(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn predicted_count(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }

    pub fn precision(&self, k: usize) -> f64 {
        ratio(self.counts[k][k], self.predicted_count(k))
    }

    pub fn recall(&self, k: usize) -> f64 {
        ratio(self.counts[k][k], self.support(k))
    }

    pub fn f1(&self, k: usize) -> f64 {
        f1_score(self.precision(k), self.recall(k))
    }

    /// Classes that occur as an actual or a predicted label.
    fn active_classes(&self) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&k| self.support(k) > 0 || self.predicted_count(k) > 0)
            .collect()
    }

    /// Unweighted mean over active classes of per-class scores.
    pub fn class_macro(&self) -> Prf {
        let active = self.active_classes();
        if active.is_empty() {
            return Prf::default();
        }
        let n = active.len() as f64;
        Prf {
            precision: active.iter().map(|&k| self.precision(k)).sum::<f64>() / n,
            recall: active.iter().map(|&k| self.recall(k)).sum::<f64>() / n,
            f1: active.iter().map(|&k| self.f1(k)).sum::<f64>() / n,
        }
    }

    /// Pooled true/false positives over all classes.
    pub fn micro(&self) -> Prf {
        let tp = self.trace();
        let total = self.total();
        // Each misclassification is one false positive and one false negative.
        let p = ratio(tp, total);
        Prf {
            precision: p,
            recall: p,
            f1: f1_score(p, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub held_out: String,
    pub samples: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SubjectSummary {
    pub subject_id: String,
    pub samples: usize,
    pub accuracy: f64,
    pub class_averaged: Prf,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub classes: Vec<String>,
    pub samples: usize,
    pub confusion: ConfusionMatrix,
    /// Correct predictions over all samples.
    pub micro_accuracy: f64,
    /// Mean of per-subject accuracies.
    pub macro_accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Pooled over classes and samples.
    pub micro: Prf,
    /// Mean over classes of the pooled per-class scores.
    pub class_macro: Prf,
    /// Class-averaged scores per subject, then mean over subjects.
    pub subject_macro: Prf,
    pub subjects: Vec<SubjectSummary>,
    pub folds: Vec<FoldSummary>,
    pub predictions: Vec<Prediction>,
}

impl EvalReport {
    /// Aggregates predictions. `folds` gives each fold's held-out name; the
    /// result does not depend on the order of `predictions`.
    pub fn from_predictions(protocol: Protocol, classes: Vec<String>, folds: &[String], mut predictions: Vec<Prediction>) -> Result<Self> {
        predictions.sort_by(|a, b| (a.fold, &a.video_id).cmp(&(b.fold, &b.video_id)));
        let confusion = ConfusionMatrix::from_pairs(&classes, predictions.iter().map(|p| (p.actual.as_str(), p.predicted.as_str())))?;

        let mut by_subject: BTreeMap<&str, Vec<&Prediction>> = BTreeMap::new();
        for p in &predictions {
            by_subject.entry(&p.subject_id).or_default().push(p);
        }
        let subjects = by_subject
            .iter()
            .map(|(subject, preds)| {
                let cm = ConfusionMatrix::from_pairs(&classes, preds.iter().map(|p| (p.actual.as_str(), p.predicted.as_str())))?;
                Ok(SubjectSummary {
                    subject_id: (*subject).into(),
                    samples: preds.len(),
                    accuracy: cm.accuracy(),
                    class_averaged: cm.class_macro(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let n_subj = subjects.len().max(1) as f64;
        let macro_accuracy = subjects.iter().map(|s| s.accuracy).sum::<f64>() / n_subj;
        let subject_macro = Prf {
            precision: subjects.iter().map(|s| s.class_averaged.precision).sum::<f64>() / n_subj,
            recall: subjects.iter().map(|s| s.class_averaged.recall).sum::<f64>() / n_subj,
            f1: subjects.iter().map(|s| s.class_averaged.f1).sum::<f64>() / n_subj,
        };

        let fold_summaries = folds
            .iter()
            .enumerate()
            .map(|(k, held_out)| {
                let in_fold: Vec<&Prediction> = predictions.iter().filter(|p| p.fold == k).collect();
                let correct = in_fold.iter().filter(|p| p.actual == p.predicted).count();
                FoldSummary {
                    fold: k,
                    held_out: held_out.clone(),
                    samples: in_fold.len(),
                    accuracy: ratio(correct as u64, in_fold.len() as u64),
                }
            })
            .collect();

        let per_class = (0..classes.len())
            .map(|k| ClassMetrics {
                label: classes[k].clone(),
                support: confusion.support(k),
                precision: confusion.precision(k),
                recall: confusion.recall(k),
                f1: confusion.f1(k),
            })
            .collect();

        Ok(Self {
            protocol,
            samples: predictions.len(),
            micro_accuracy: confusion.accuracy(),
            macro_accuracy,
            micro: confusion.micro(),
            class_macro: confusion.class_macro(),
            subject_macro,
            per_class,
            subjects,
            folds: fold_summaries,
            confusion,
            classes,
            predictions,
        })
    }
}

/// Sorted distinct labels of a dataset.
pub fn class_list(dataset: &[FeatureVector]) -> Vec<String> {
    dataset
        .iter()
        .map(|s| s.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Runs every fold in order and aggregates the report.
pub fn cross_validate(dataset: &[FeatureVector], protocol: Protocol, params: &SvmParams) -> Result<EvalReport> {
    params.validate()?;
    check_features(&dataset.iter().collect::<Vec<_>>())?;
    let folds = fold_plan(dataset, protocol)?;
    let mut predictions = Vec::with_capacity(dataset.len());
    for (k, fold) in folds.iter().enumerate() {
        predictions.extend(run_fold(dataset, k, fold, params)?);
    }
    let names: Vec<String> = folds.into_iter().map(|f| f.held_out).collect();
    EvalReport::from_predictions(protocol, class_list(dataset), &names, predictions)
}
