//! End-to-end operations on files and sessions. The CLI only parses
//! arguments, calls one of these and writes the result.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use gazenotice_core::events::{detect_fixations, detect_saccades};
use gazenotice_core::features::{session_samples, FeatureConfig, FeatureSet, RollingExtractor};
use gazenotice_core::learn::{
    classify_train, louo_classify, louo_svr, psychometric_fit, select_features, svr_train, CvReport, Psychometric,
    Scheme, Selection,
};
use gazenotice_core::model::{Condition, NoticeabilitySample, Session, StimulusKind};
use gazenotice_core::redirect::{
    cluster_poses, motion_state, select_poses, ArmPose, Clustering, Controller, DistanceMatrix, HdbscanParams, Pose,
};
use gazenotice_core::sim::{simulate_study, SimulatedStudy, StudyConfig};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::io::read_sessions;
use crate::model::Trained;
use crate::report::{read_features, EventRow, OracleRow, PredictionRow, ResponseRow, StreamRow, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    /// Six ring conditions with short and long stimuli.
    Collection,
    /// Nine candidate-layout conditions plus a no-stimulus baseline.
    Confirmation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOptions {
    pub users: usize,
    pub trials: usize,
    pub magnitude: f64,
    pub kind: StimulusKind,
    pub grid: Grid,
    pub duration: f64,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            users: 12,
            trials: 24,
            magnitude: 20.0,
            kind: StimulusKind::Opacity,
            grid: Grid::Collection,
            duration: 8.0,
        }
    }
}

pub fn simulate(opts: &SimulateOptions, seed: u64) -> Result<SimulatedStudy> {
    if opts.users == 0 || opts.trials == 0 {
        return Err(Error::Usage("--users and --trials must be at least 1".into()));
    }
    let conditions = match opts.grid {
        Grid::Collection => Condition::collection_grid(opts.kind).to_vec(),
        Grid::Confirmation => Condition::confirmation_grid(opts.kind),
    };
    let config = StudyConfig {
        n_users: opts.users,
        conditions,
        trials_per_condition: opts.trials,
        magnitude: opts.magnitude,
        trial_duration: opts.duration,
        ..StudyConfig::default()
    };
    Ok(simulate_study(&config, seed)?)
}

pub fn oracle_rows(study: &SimulatedStudy) -> Vec<OracleRow> {
    study
        .oracle_labels()
        .into_iter()
        .map(|c| OracleRow { user_id: c.user_id, condition: c.condition.to_string(), label: c.label })
        .collect()
}

/// Saccades and fixations of every trial, ordered by trial then onset.
pub fn detect_events(session: &Session, config: &FeatureConfig) -> Result<Vec<EventRow>> {
    let mut rows = Vec::new();
    for trial in &session.trials {
        let mut events = detect_saccades(&trial.gaze, &config.saccade)?;
        events.extend(detect_fixations(&trial.gaze, &config.fixation)?);
        events.sort_by(|a, b| a.onset.total_cmp(&b.onset).then(a.onset_index.cmp(&b.onset_index)));
        rows.extend(events.iter().map(|e| EventRow::new(trial.id, e)));
    }
    Ok(rows)
}

pub fn extract_features(sessions: &[Session], config: &FeatureConfig) -> Result<Vec<NoticeabilitySample>> {
    let mut out = Vec::new();
    for s in sessions {
        out.extend(session_samples(s, config)?);
    }
    Ok(out)
}

/// Labeled feature rows from a feature table (`.csv`) or from session
/// files (a `.jsonl` file or a directory of them).
pub fn load_samples(path: &Path, config: &FeatureConfig) -> Result<Vec<NoticeabilitySample>> {
    if path.extension().is_some_and(|e| e == "csv") {
        read_features(path)
    } else {
        extract_features(&read_sessions(path)?, config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Regression,
    Binary,
    Three,
}

fn rows(samples: &[NoticeabilitySample], set: FeatureSet) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut x = Vec::with_capacity(samples.len());
    for s in samples {
        let f = s
            .features
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("sample {} {} has no features", s.user_id, s.condition)))?;
        x.push(set.select(f));
    }
    Ok((x, samples.iter().map(|s| s.label).collect()))
}

pub fn train(samples: &[NoticeabilitySample], set: FeatureSet, task: Task, config: &Config) -> Result<Trained> {
    let (x, y) = rows(samples, set)?;
    Ok(match task {
        Task::Regression => Trained::Svr { params: config.svr, model: svr_train(&x, &y, set, &config.svr)? },
        Task::Binary | Task::Three => {
            let scheme = if task == Task::Binary { Scheme::Binary } else { Scheme::Three };
            Trained::Classifier { params: config.svc, model: classify_train(&x, &y, set, scheme, &config.svc)? }
        }
    })
}

pub fn select(samples: &[NoticeabilitySample], config: &Config) -> Result<Selection> {
    Ok(select_features(samples, &config.svr)?)
}

/// Leave-one-user-out evaluation, retraining with the model's own
/// feature set and parameters in every fold.
pub fn evaluate_louo(samples: &[NoticeabilitySample], trained: &Trained) -> Result<CvReport> {
    Ok(match trained {
        Trained::Svr { params, model } => louo_svr(samples, model.feature_set, params)?,
        Trained::Classifier { params, model } => louo_classify(samples, model.feature_set, model.scheme, params)?,
    })
}

/// Applies a model to every sample. For classifiers `truth` is the
/// sample's class under the model's scheme.
pub fn predict(samples: &[NoticeabilitySample], trained: &Trained) -> Result<Vec<PredictionRow>> {
    samples
        .iter()
        .map(|s| {
            let f = s
                .features
                .as_ref()
                .ok_or_else(|| Error::Usage(format!("sample {} {} has no features", s.user_id, s.condition)))?;
            let truth = match trained.scheme() {
                Some(scheme) => scheme.class_of(s.label) as f64,
                None => s.label,
            };
            Ok(PredictionRow {
                user_id: s.user_id.clone(),
                condition: s.condition.to_string(),
                truth,
                predicted: trained.predict(f)?,
            })
        })
        .collect()
}

/// Mean squared error for regressors, accuracy for classifiers.
pub fn score(rows: &[PredictionRow], trained: &Trained) -> (&'static str, f64) {
    let n = rows.len().max(1) as f64;
    match trained {
        Trained::Svr { .. } => ("mse", rows.iter().map(|r| (r.truth - r.predicted).powi(2)).sum::<f64>() / n),
        Trained::Classifier { .. } => ("accuracy", rows.iter().filter(|r| r.truth == r.predicted).count() as f64 / n),
    }
}

/// Feeds a session's concatenated streams through a rolling extractor and
/// hands each emitted window, with the index of its last sample, to
/// `on_window`. Returns how many windows failed extraction.
fn stream_windows<F>(session: &Session, config: &Config, mut on_window: F) -> Result<usize>
where
    F: FnMut(usize, Result<gazenotice_core::features::FeatureVector>) -> Result<()>,
{
    let mut ex = RollingExtractor::new(session.sample_rate, config.stream.window, config.stream.hop, config.features);
    let mut k = 0;
    let mut skipped = 0;
    for trial in &session.trials {
        for (g, b) in trial.gaze.iter().zip(&trial.body) {
            if let Some(fv) = ex.push(*g, *b) {
                if fv.is_err() {
                    skipped += 1;
                }
                on_window(k, fv.map_err(Error::from))?;
            }
            k += 1;
        }
    }
    Ok(skipped)
}

/// Sliding-window predictions over a session's concatenated streams.
/// Returns the rows and the number of windows skipped.
pub fn stream_predict(session: &Session, trained: &Trained, config: &Config) -> Result<(Vec<StreamRow>, usize)> {
    let mut out = Vec::new();
    let skipped = stream_windows(session, config, |_, fv| {
        if let Ok(fv) = fv {
            out.push(StreamRow { window_start: fv.window.0, window_end: fv.window.1, prediction: trained.predict(&fv)? });
        }
        Ok(())
    })?;
    Ok((out, skipped))
}

/// Replays a session through the streaming classifier, motion gate and
/// redirection controller; one row per body sample.
pub fn adapt_replay(session: &Session, trained: &Trained, config: &Config) -> Result<Vec<TraceRow>> {
    config.policy.validate()?;
    if let Trained::Classifier { model, .. } = trained {
        if model.scheme != Scheme::Three {
            return Err(Error::Usage("adapt-replay needs a three-class classifier or a regressor".into()));
        }
    }
    let mut classes = Vec::new();
    stream_windows(session, config, |k, fv| {
        if let Ok(fv) = fv {
            classes.push((k, trained.notice_class(&fv)?));
        }
        Ok(())
    })?;
    let body: Vec<_> = session.trials.iter().flat_map(|t| t.body.iter().take(t.gaze.len()).copied()).collect();
    let moving = motion_state(&body, &config.motion);
    let max_step = 2.0 / session.sample_rate;

    let mut ctl = Controller::new(config.policy);
    let mut next = classes.iter().peekable();
    let mut class = None;
    let mut rows = Vec::with_capacity(body.len());
    for (k, b) in body.iter().enumerate() {
        while let Some((_, c)) = next.next_if(|(at, _)| *at <= k) {
            class = Some(*c);
        }
        let dt = if k == 0 { 0.0 } else { b.t - body[k - 1].t };
        // gaps between trials are not tracked motion
        let theta = ctl.step(class, moving[k] && dt <= max_step, dt);
        rows.push(TraceRow {
            t: b.t,
            moving: moving[k],
            class: class.map(|c| c.to_string()).unwrap_or_default(),
            theta_target: ctl.state.theta_target,
            theta,
        });
    }
    Ok(rows)
}

/// Physical arm poses sampled every `stride` body samples.
pub fn session_poses(sessions: &[Session], stride: usize) -> Result<Vec<Pose>> {
    if stride == 0 {
        return Err(Error::Usage("--stride must be at least 1".into()));
    }
    Ok(sessions
        .iter()
        .flat_map(|s| s.trials.iter())
        .flat_map(|t| t.body.iter())
        .step_by(stride)
        .map(|b| ArmPose::physical(b).to_pose())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseReport {
    pub clustering: Clustering,
    /// Indices of the representative poses, in selection order.
    pub selected: Vec<usize>,
    pub poses: Vec<Pose>,
}

pub fn cluster(poses: Vec<Pose>, params: &HdbscanParams, k: usize) -> Result<PoseReport> {
    let clustering = cluster_poses(&poses, params)?;
    let dm = DistanceMatrix::poses(&poses)?;
    let selected = select_poses(&dm, &clustering, k)?;
    Ok(PoseReport { clustering, selected, poses })
}

pub fn responses_from_sessions(sessions: &[Session]) -> Vec<ResponseRow> {
    sessions
        .iter()
        .flat_map(|s| s.trials.iter())
        .map(|t| ResponseRow { magnitude: t.redir_magnitude, noticed: t.noticed })
        .collect()
}

/// Yes/no responses drawn from a logistic observer at magnitudes
/// 0, 5, ..., 30 degrees.
pub fn simulate_responses(alpha: f64, beta: f64, per_level: usize, seed: u64) -> Result<Vec<ResponseRow>> {
    if !(beta > 0.0) || !alpha.is_finite() {
        return Err(Error::Usage("--alpha must be finite and --beta positive".into()));
    }
    let observer = Psychometric { alpha, beta, log_likelihood: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(7 * per_level);
    for level in 0..=6 {
        let magnitude = 5.0 * level as f64;
        for _ in 0..per_level {
            out.push(ResponseRow { magnitude, noticed: rng.random::<f64>() < observer.p(magnitude) });
        }
    }
    Ok(out)
}

pub fn fit_responses(rows: &[ResponseRow]) -> Result<Psychometric> {
    let m: Vec<f64> = rows.iter().map(|r| r.magnitude).collect();
    let y: Vec<bool> = rows.iter().map(|r| r.noticed).collect();
    Ok(psychometric_fit(&m, &y)?)
}
