//! CSV tables: feature matrices, cross-validation reports, predictions,
//! detected events, controller traces and psychometric responses.
//!
//! Floats are written in shortest round-trip form and parsed back exactly.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use gazenotice_core::events::{EventKind, GazeEvent};
use gazenotice_core::features::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use gazenotice_core::learn::{CvReport, Fold, Prediction};
use gazenotice_core::model::{Condition, NoticeabilitySample};

use crate::error::{Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| Error::write(path, e.into()))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::Reader::from_path(path).map_err(|e| Error::read(path, e.into()))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(path, line, e)
}

fn finish(path: &Path, mut w: csv::Writer<File>) -> Result<()> {
    w.flush().map_err(|e| Error::write(path, e))
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let line = rec.position().map_or(0, |p| p.line() as usize);
    let raw = rec.get(i).ok_or_else(|| Error::parse(path, line, format!("missing column '{what}'")))?;
    raw.parse().map_err(|e| Error::parse(path, line, format!("column '{what}' = '{raw}': {e}")))
}

/// Serialize a whole table of serde rows.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::write(path, e.into()))?;
    }
    finish(path, w)
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = reader(path)?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

const FEATURE_PREFIX: [&str; 6] = ["user_id", "condition", "label", "n_trials", "window_start", "window_end"];

/// One row per (user, condition): label, trial count, window and the 21
/// feature values.
pub fn write_features(path: &Path, samples: &[NoticeabilitySample]) -> Result<()> {
    let mut w = writer(path)?;
    let header: Vec<&str> = FEATURE_PREFIX.iter().chain(FEATURE_NAMES.iter()).copied().collect();
    w.write_record(&header).map_err(|e| Error::write(path, e.into()))?;
    for s in samples {
        let f = s.features.as_ref().ok_or_else(|| Error::Usage(format!("sample {} {} has no features", s.user_id, s.condition)))?;
        let mut rec = vec![
            s.user_id.clone(),
            s.condition.to_string(),
            s.label.to_string(),
            s.n_trials.to_string(),
            f.window.0.to_string(),
            f.window.1.to_string(),
        ];
        rec.extend(f.values.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| Error::write(path, e.into()))?;
    }
    finish(path, w)
}

pub fn read_features(path: &Path) -> Result<Vec<NoticeabilitySample>> {
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let expected: Vec<&str> = FEATURE_PREFIX.iter().chain(FEATURE_NAMES.iter()).copied().collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::schema(path, "header does not match the feature table layout"));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let condition: String = field(path, &rec, 1, "condition")?;
        let condition: Condition = condition.parse().map_err(|e| {
            Error::parse(path, rec.position().map_or(0, |p| p.line() as usize), e)
        })?;
        let mut values = [0.0; FEATURE_COUNT];
        for (k, v) in values.iter_mut().enumerate() {
            *v = field(path, &rec, FEATURE_PREFIX.len() + k, FEATURE_NAMES[k])?;
        }
        out.push(NoticeabilitySample {
            user_id: field(path, &rec, 0, "user_id")?,
            condition,
            label: field(path, &rec, 2, "label")?,
            n_trials: field(path, &rec, 3, "n_trials")?,
            features: Some(FeatureVector {
                values,
                window: (field(path, &rec, 4, "window_start")?, field(path, &rec, 5, "window_end")?),
            }),
        });
    }
    Ok(out)
}

/// Report rows: `fold` per held-out user, then `mean` and `std`.
pub fn write_cv_report(path: &Path, report: &CvReport) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["row".to_string(), "user_id".into(), "n_test".into()];
    header.extend(report.metrics.iter().cloned());
    w.write_record(&header).map_err(|e| Error::write(path, e.into()))?;
    let mut put = |kind: &str, user: &str, n: String, values: &[f64]| {
        let mut rec = vec![kind.to_string(), user.to_string(), n];
        rec.extend(values.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| Error::write(path, e.into()))
    };
    for f in &report.folds {
        put("fold", &f.user_id, f.n_test.to_string(), &f.values)?;
    }
    put("mean", "", String::new(), &report.mean)?;
    put("std", "", String::new(), &report.std)?;
    finish(path, w)
}

/// Reads a report table back; predictions are not part of it.
pub fn read_cv_report(path: &Path) -> Result<CvReport> {
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() < 4 || &header[0] != "row" || &header[1] != "user_id" || &header[2] != "n_test" {
        return Err(Error::schema(path, "expected columns row,user_id,n_test,<metrics...>"));
    }
    let metrics: Vec<String> = header.iter().skip(3).map(String::from).collect();
    let mut report = CvReport { metrics, folds: Vec::new(), mean: Vec::new(), std: Vec::new(), predictions: Vec::new() };
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let values = (0..report.metrics.len())
            .map(|k| field(path, &rec, 3 + k, &report.metrics[k]))
            .collect::<Result<Vec<f64>>>()?;
        match &rec[0] {
            "fold" => report.folds.push(Fold {
                user_id: rec[1].to_string(),
                n_test: field(path, &rec, 2, "n_test")?,
                values,
            }),
            "mean" => report.mean = values,
            "std" => report.std = values,
            other => {
                let line = rec.position().map_or(0, |p| p.line() as usize);
                return Err(Error::parse(path, line, format!("unknown row kind '{other}'")));
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub user_id: String,
    pub condition: String,
    pub truth: f64,
    pub predicted: f64,
}

impl From<&Prediction> for PredictionRow {
    fn from(p: &Prediction) -> Self {
        PredictionRow { user_id: p.user_id.clone(), condition: p.condition.to_string(), truth: p.truth, predicted: p.predicted }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub trial_id: u32,
    pub kind: EventKind,
    pub onset: f64,
    pub offset: f64,
    pub onset_index: usize,
    pub offset_index: usize,
    pub amplitude: f64,
    pub dispersion: f64,
}

impl EventRow {
    pub fn new(trial_id: u32, e: &GazeEvent) -> Self {
        EventRow {
            trial_id,
            kind: e.kind,
            onset: e.onset,
            offset: e.offset,
            onset_index: e.onset_index,
            offset_index: e.offset_index,
            amplitude: e.amplitude,
            dispersion: e.dispersion,
        }
    }
}

/// One streamed prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamRow {
    pub window_start: f64,
    pub window_end: f64,
    pub prediction: f64,
}

/// One controller step of a replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub moving: bool,
    pub class: String,
    pub theta_target: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub user_id: String,
    pub condition: String,
    pub label: f64,
}

/// A yes/no response to a redirection magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub magnitude: f64,
    pub noticed: bool,
}
