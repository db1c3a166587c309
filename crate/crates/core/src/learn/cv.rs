use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::svc::{classify_train_labels, Scheme, SvcParams};
use super::svr::{svr_train, SvrParams};
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::model::{Condition, NoticeabilitySample};

pub type Metric = fn(&[f64], &[f64]) -> f64;

pub fn mse(truth: &[f64], pred: &[f64]) -> f64 {
    truth.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / truth.len() as f64
}

pub fn accuracy(truth: &[f64], pred: &[f64]) -> f64 {
    truth.iter().zip(pred).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

/// Unweighted mean of per-class F1 over classes present in truth or prediction.
pub fn macro_f1(truth: &[f64], pred: &[f64]) -> f64 {
    let mut classes: Vec<i64> = truth.iter().chain(pred).map(|c| *c as i64).collect();
    classes.sort_unstable();
    classes.dedup();
    let mut total = 0.0;
    for &c in &classes {
        let c = c as f64;
        let tp = truth.iter().zip(pred).filter(|(t, p)| **t == c && **p == c).count() as f64;
        let fp = truth.iter().zip(pred).filter(|(t, p)| **t != c && **p == c).count() as f64;
        let fn_ = truth.iter().zip(pred).filter(|(t, p)| **t == c && **p != c).count() as f64;
        let denom = 2.0 * tp + fp + fn_;
        total += if denom > 0.0 { 2.0 * tp / denom } else { 0.0 };
    }
    total / classes.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prediction {
    pub user_id: String,
    pub condition: Condition,
    pub truth: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Fold {
    pub user_id: String,
    pub n_test: usize,
    /// One value per entry of [`CvReport::metrics`].
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvReport {
    pub metrics: Vec<String>,
    pub folds: Vec<Fold>,
    /// Mean over folds, per metric.
    pub mean: Vec<f64>,
    /// Population std over folds, per metric.
    pub std: Vec<f64>,
    pub predictions: Vec<Prediction>,
}

impl CvReport {
    pub fn mean_of(&self, metric: &str) -> Option<f64> {
        self.metrics.iter().position(|m| m == metric).map(|i| self.mean[i])
    }
}

pub(crate) fn rows_of(samples: &[&NoticeabilitySample], set: FeatureSet) -> Result<Vec<alloc::vec::Vec<f64>>> {
    samples
        .iter()
        .map(|s| {
            s.features
                .as_ref()
                .map(|f| set.select(f))
                .ok_or_else(|| Error::Invalid(format!("sample {}/{} has no features", s.user_id, s.condition)))
        })
        .collect()
}

/// Distinct users in sorted order.
pub fn users_of(samples: &[NoticeabilitySample]) -> Vec<String> {
    samples.iter().map(|s| s.user_id.clone()).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Leave-one-user-out cross-validation. `fit_predict` receives training
/// rows, training labels and test rows and returns test predictions; it must
/// fit any preprocessing on the training rows only.
pub fn louo_cv<F>(
    samples: &[NoticeabilitySample],
    set: FeatureSet,
    metrics: &[(&str, Metric)],
    mut fit_predict: F,
) -> Result<CvReport>
where
    F: FnMut(&[Vec<f64>], &[f64], &[Vec<f64>]) -> Result<Vec<f64>>,
{
    let users = users_of(samples);
    if users.len() < 2 {
        return Err(Error::TooFewUsers { needed: 2, got: users.len() });
    }
    let mut folds = Vec::with_capacity(users.len());
    let mut predictions = Vec::with_capacity(samples.len());
    for u in &users {
        let (test, train): (Vec<&NoticeabilitySample>, Vec<&NoticeabilitySample>) =
            samples.iter().partition(|s| &s.user_id == u);
        let train_rows = rows_of(&train, set)?;
        let train_labels: Vec<f64> = train.iter().map(|s| s.label).collect();
        let test_rows = rows_of(&test, set)?;
        let pred = fit_predict(&train_rows, &train_labels, &test_rows)?;
        if pred.len() != test.len() {
            return Err(Error::Invalid(format!("trainer returned {} predictions for {} rows", pred.len(), test.len())));
        }
        let truth: Vec<f64> = test.iter().map(|s| s.label).collect();
        folds.push(Fold {
            user_id: u.clone(),
            n_test: test.len(),
            values: metrics.iter().map(|(_, m)| m(&truth, &pred)).collect(),
        });
        for (s, p) in test.iter().zip(&pred) {
            predictions.push(Prediction { user_id: s.user_id.clone(), condition: s.condition, truth: s.label, predicted: *p });
        }
    }
    let k = folds.len() as f64;
    let mean: Vec<f64> = (0..metrics.len()).map(|m| folds.iter().map(|f| f.values[m]).sum::<f64>() / k).collect();
    let std = (0..metrics.len())
        .map(|m| libm::sqrt(folds.iter().map(|f| (f.values[m] - mean[m]) * (f.values[m] - mean[m])).sum::<f64>() / k))
        .collect();
    Ok(CvReport {
        metrics: metrics.iter().map(|(n, _)| String::from(*n)).collect(),
        folds,
        mean,
        std,
        predictions,
    })
}

/// LOUO regression with the SVR; the single metric is `mse`.
pub fn louo_svr(samples: &[NoticeabilitySample], set: FeatureSet, params: &SvrParams) -> Result<CvReport> {
    louo_cv(samples, set, &[("mse", mse)], |tr, y, te| {
        let m = svr_train(tr, y, set, params)?;
        te.iter().map(|r| m.predict_row(r)).collect()
    })
}

/// LOUO classification; truth and predictions are class indices, metrics
/// are `accuracy` and `f1` (macro).
pub fn louo_classify(
    samples: &[NoticeabilitySample],
    set: FeatureSet,
    scheme: Scheme,
    params: &SvcParams,
) -> Result<CvReport> {
    let discretized: Vec<NoticeabilitySample> = samples
        .iter()
        .map(|s| NoticeabilitySample { label: scheme.class_of(s.label) as f64, ..s.clone() })
        .collect();
    louo_cv(&discretized, set, &[("accuracy", accuracy), ("f1", macro_f1)], |tr, y, te| {
        let classes: Vec<usize> = y.iter().map(|c| *c as usize).collect();
        let m = classify_train_labels(tr, &classes, set, scheme, params)?;
        te.iter().map(|r| m.predict_row(r).map(|c| c as f64)).collect()
    })
}
