//! The canonical 21-feature description of gaze behavior over a window:
//! IPA, gaze-to-hand and gaze-to-elbow angular distance (five summary
//! statistics each), plus saccade and fixation frequency/duration/interval.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::events::{detect_fixations, detect_saccades, FixationParams, GazeEvent, SaccadeParams};
use crate::geom::{angle_deg, Vec3};
use crate::ipa::{ipa_series, preprocess_pupil, PupilPolicy};
use crate::model::{group_by_condition, noticeability_label, BodySample, GazeSample, NoticeabilitySample, Session};
use crate::stats::{summary_stats, Summary};

pub const FEATURE_COUNT: usize = 21;

/// Canonical feature identifiers, in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "ipa.mean",
    "ipa.std",
    "ipa.median",
    "ipa.max",
    "ipa.min",
    "dist_hand.mean",
    "dist_hand.std",
    "dist_hand.median",
    "dist_hand.max",
    "dist_hand.min",
    "dist_elbow.mean",
    "dist_elbow.std",
    "dist_elbow.median",
    "dist_elbow.max",
    "dist_elbow.min",
    "saccade.frequency",
    "saccade.duration",
    "saccade.interval",
    "fixation.frequency",
    "fixation.duration",
    "fixation.interval",
];

pub const IPA_MEAN: usize = 0;
pub const DIST_HAND_MEAN: usize = 5;
pub const DIST_ELBOW_MEAN: usize = 10;
pub const SACCADE_FREQUENCY: usize = 15;
pub const FIXATION_FREQUENCY: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Category {
    Ipa,
    Distance,
    Saccade,
    Fixation,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Ipa, Category::Distance, Category::Saccade, Category::Fixation];

    /// Feature indices belonging to the category.
    pub fn range(self) -> core::ops::Range<usize> {
        match self {
            Category::Ipa => 0..5,
            Category::Distance => 5..15,
            Category::Saccade => 15..18,
            Category::Fixation => 18..21,
        }
    }

    pub fn of(index: usize) -> Category {
        Category::ALL
            .into_iter()
            .find(|c| c.range().contains(&index))
            .expect("index below FEATURE_COUNT")
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Ipa => "ipa",
            Category::Distance => "distance",
            Category::Saccade => "saccade",
            Category::Fixation => "fixation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    /// First and last timestamp of the window.
    pub window: (f64, f64),
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.values[i])
    }

    /// Checks finiteness, non-negative frequencies and spreads, and the
    /// min <= median <= max ordering of each summary group.
    pub fn validate(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector"));
        }
        for base in [0, 5, 10] {
            let v = &self.values[base..base + 5];
            if v[1] < 0.0 || !(v[4] <= v[2] && v[2] <= v[3]) {
                return Err(Error::Invalid(format!("summary group {} out of order", FEATURE_NAMES[base])));
            }
        }
        if self.values[15..].iter().any(|v| *v < 0.0) {
            return Err(Error::Invalid("negative event feature".into()));
        }
        Ok(())
    }

    fn put_summary(&mut self, base: usize, s: &Summary) {
        self.values[base..base + 5].copy_from_slice(&[s.mean, s.std, s.median, s.max, s.min]);
    }
}

/// A subset of the 21 canonical features, kept in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSet(u32);

impl FeatureSet {
    pub fn all() -> Self {
        FeatureSet((1 << FEATURE_COUNT) - 1)
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let mut mask = 0u32;
        for &i in indices {
            if i >= FEATURE_COUNT {
                return Err(Error::UnknownFeature(format!("#{i}")));
            }
            mask |= 1 << i;
        }
        Self::from_mask(mask)
    }

    pub fn from_mask(mask: u32) -> Result<Self> {
        if mask == 0 {
            return Err(Error::Empty("feature set"));
        }
        if mask >> FEATURE_COUNT != 0 {
            return Err(Error::Invalid(format!("feature mask {mask:#x} names unknown features")));
        }
        Ok(FeatureSet(mask))
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut idx = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            let i = FEATURE_NAMES
                .iter()
                .position(|c| *c == n)
                .ok_or_else(|| Error::UnknownFeature(n.into()))?;
            idx.push(i);
        }
        Self::from_indices(&idx)
    }

    pub fn category(c: Category) -> Self {
        let idx: Vec<usize> = c.range().collect();
        Self::from_indices(&idx).expect("non-empty category")
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn union(self, other: FeatureSet) -> FeatureSet {
        FeatureSet(self.0 | other.0)
    }

    pub fn indices(self) -> Vec<usize> {
        (0..FEATURE_COUNT).filter(|i| self.0 & (1 << i) != 0).collect()
    }

    pub fn names(self) -> Vec<&'static str> {
        self.indices().into_iter().map(|i| FEATURE_NAMES[i]).collect()
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn categories(self) -> Vec<Category> {
        Category::ALL
            .into_iter()
            .filter(|c| c.range().any(|i| self.0 & (1 << i) != 0))
            .collect()
    }

    /// Projects a full feature vector onto this subset.
    pub fn select(self, v: &FeatureVector) -> Vec<f64> {
        self.indices().into_iter().map(|i| v.values[i]).collect()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.names();
        let mut s = String::new();
        for (i, n) in names.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(n);
        }
        f.write_str(&s)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for FeatureSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.names())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for FeatureSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let names: Vec<String> = serde::Deserialize::deserialize(d)?;
        FeatureSet::from_names(&names).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Joint {
    Hand,
    Elbow,
}

/// Angle (degrees) between the gaze ray and the eye-to-joint ray for each
/// valid gaze sample, using the virtual joint linearly interpolated to the
/// gaze timestamp. Gaze samples outside the body stream's span are skipped.
pub fn angular_distance_series(
    gaze: &[GazeSample],
    body: &[BodySample],
    joint: Joint,
) -> Result<Vec<(f64, f64)>> {
    if body.is_empty() {
        return Err(Error::Empty("body samples"));
    }
    let pick = |b: &BodySample| match joint {
        Joint::Hand => b.v_hand,
        Joint::Elbow => b.v_elbow,
    };
    let (b0, b1) = (body[0].t, body[body.len() - 1].t);
    let mut out = Vec::with_capacity(gaze.len());
    let mut j = 0;
    for g in gaze.iter().filter(|g| g.valid) {
        if g.t < b0 - 1e-9 || g.t > b1 + 1e-9 {
            continue;
        }
        while j + 1 < body.len() && body[j + 1].t < g.t {
            j += 1;
        }
        let p = if j + 1 < body.len() && body[j + 1].t > body[j].t {
            let s = ((g.t - body[j].t) / (body[j + 1].t - body[j].t)).clamp(0.0, 1.0);
            pick(&body[j]).lerp(pick(&body[j + 1]), s)
        } else {
            pick(&body[j])
        };
        let to_joint: Vec3 = p - g.gaze_origin;
        if to_joint.norm() < 1e-9 {
            return Err(Error::Degenerate("joint coincides with gaze origin"));
        }
        out.push((g.t, angle_deg(g.gaze_dir, to_joint)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum IntervalMode {
    /// Gap from one event's offset to the next event's onset.
    #[default]
    OffsetToOnset,
    OnsetToOnset,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EventStats {
    pub frequency: f64,
    pub duration: f64,
    pub interval: f64,
}

/// Frequency, mean duration and mean inter-event interval for one window.
pub fn event_features(events: &[GazeEvent], window_duration: f64, mode: IntervalMode) -> EventStats {
    pooled_event_features(&[(events, window_duration)], mode)
}

/// Pools several disjoint segments: counts and durations add up, intervals
/// are only measured between events of the same segment.
pub fn pooled_event_features(segments: &[(&[GazeEvent], f64)], mode: IntervalMode) -> EventStats {
    let total: f64 = segments.iter().map(|s| s.1).sum();
    let count: usize = segments.iter().map(|s| s.0.len()).sum();
    let mut durations = 0.0;
    let mut intervals = 0.0;
    let mut n_intervals = 0usize;
    for (events, _) in segments {
        durations += events.iter().map(GazeEvent::duration).sum::<f64>();
        for w in events.windows(2) {
            intervals += match mode {
                IntervalMode::OffsetToOnset => w[1].onset - w[0].offset,
                IntervalMode::OnsetToOnset => w[1].onset - w[0].onset,
            };
            n_intervals += 1;
        }
    }
    EventStats {
        frequency: if total > 0.0 { count as f64 / total } else { 0.0 },
        duration: if count > 0 { durations / count as f64 } else { 0.0 },
        interval: if n_intervals > 0 { intervals / n_intervals as f64 } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FeatureConfig {
    pub saccade: SaccadeParams,
    pub fixation: FixationParams,
    pub pupil: PupilPolicy,
    pub ipa_subwindow: f64,
    pub ipa_hop: f64,
    pub interval: IntervalMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            saccade: SaccadeParams::default(),
            fixation: FixationParams::default(),
            pupil: PupilPolicy::default(),
            ipa_subwindow: 2.0,
            ipa_hop: 0.5,
            interval: IntervalMode::default(),
        }
    }
}

/// One contiguous recording slice.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    pub gaze: &'a [GazeSample],
    pub body: &'a [BodySample],
}

impl Segment<'_> {
    fn span(&self) -> f64 {
        match (self.gaze.first(), self.gaze.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

/// Per-segment intermediate results, exposed for inspection and testing.
#[derive(Debug, Clone, Default)]
pub struct WindowParts {
    pub ipa: Vec<f64>,
    pub dist_hand: Vec<f64>,
    pub dist_elbow: Vec<f64>,
    pub saccades: Vec<Vec<GazeEvent>>,
    pub fixations: Vec<Vec<GazeEvent>>,
    pub spans: Vec<f64>,
}

/// Runs every component operation over the segments of a window.
pub fn window_parts(segments: &[Segment<'_>], config: &FeatureConfig) -> Result<WindowParts> {
    let mut parts = WindowParts::default();
    for seg in segments {
        if let Ok(series) = preprocess_pupil(seg.gaze, &config.pupil) {
            for s in series {
                if let Ok(v) = ipa_series(&s, config.ipa_subwindow, config.ipa_hop) {
                    parts.ipa.extend(v.into_iter().map(|(_, x)| x));
                }
            }
        }
        parts.dist_hand.extend(angular_distance_series(seg.gaze, seg.body, Joint::Hand)?.into_iter().map(|p| p.1));
        parts.dist_elbow.extend(angular_distance_series(seg.gaze, seg.body, Joint::Elbow)?.into_iter().map(|p| p.1));
        parts.saccades.push(detect_saccades(seg.gaze, &config.saccade)?);
        parts.fixations.push(detect_fixations(seg.gaze, &config.fixation)?);
        parts.spans.push(seg.span());
    }
    Ok(parts)
}

/// Builds the 21-feature vector for a window made of one or more segments.
pub fn assemble_features(segments: &[Segment<'_>], config: &FeatureConfig) -> Result<FeatureVector> {
    let first = segments
        .iter()
        .find_map(|s| s.gaze.first())
        .ok_or(Error::Empty("feature window"))?;
    let last = segments
        .iter()
        .rev()
        .find_map(|s| s.gaze.last())
        .expect("window has a first sample");
    let parts = window_parts(segments, config)?;
    if parts.ipa.is_empty() {
        return Err(Error::TooShort {
            needed: format!("{} s of gap-free pupil data", config.ipa_subwindow),
            got: "none".into(),
        });
    }
    let mut fv = FeatureVector { values: [0.0; FEATURE_COUNT], window: (first.t, last.t) };
    fv.put_summary(IPA_MEAN, &summary_stats(&parts.ipa)?);
    fv.put_summary(DIST_HAND_MEAN, &summary_stats(&parts.dist_hand)?);
    fv.put_summary(DIST_ELBOW_MEAN, &summary_stats(&parts.dist_elbow)?);
    let pooled = |events: &[Vec<GazeEvent>]| {
        let segs: Vec<(&[GazeEvent], f64)> =
            events.iter().zip(&parts.spans).map(|(e, s)| (e.as_slice(), *s)).collect();
        pooled_event_features(&segs, config.interval)
    };
    let sac = pooled(&parts.saccades);
    let fix = pooled(&parts.fixations);
    fv.values[SACCADE_FREQUENCY..].copy_from_slice(&[
        sac.frequency,
        sac.duration,
        sac.interval,
        fix.frequency,
        fix.duration,
        fix.interval,
    ]);
    fv.validate()?;
    Ok(fv)
}

/// One labeled feature sample per condition of a session, each window being
/// the union of that condition's trials.
pub fn session_samples(session: &Session, config: &FeatureConfig) -> Result<Vec<NoticeabilitySample>> {
    group_by_condition(&session.trials)
        .into_iter()
        .map(|(_, trials)| {
            let mut sample = noticeability_label(&session.user_id, &trials)?;
            let segments: Vec<Segment<'_>> =
                trials.iter().map(|t| Segment { gaze: &t.gaze, body: &t.body }).collect();
            sample.features = Some(assemble_features(&segments, config)?);
            Ok(sample)
        })
        .collect()
}

/// Streaming extractor: buffers one window of paired gaze/body samples and
/// emits a feature vector every `hop` once the first window is full.
#[derive(Debug, Clone)]
pub struct RollingExtractor {
    config: FeatureConfig,
    window: usize,
    hop: usize,
    gaze: VecDeque<GazeSample>,
    body: VecDeque<BodySample>,
    seen: usize,
}

impl RollingExtractor {
    pub fn new(rate: f64, window: f64, hop: f64, config: FeatureConfig) -> Self {
        let window = (libm::round(window * rate) as usize).max(1);
        RollingExtractor {
            config,
            window,
            hop: (libm::round(hop * rate) as usize).max(1),
            gaze: VecDeque::with_capacity(window),
            body: VecDeque::with_capacity(window),
            seen: 0,
        }
    }

    /// Window length in samples.
    pub fn window_len(&self) -> usize {
        self.window
    }

    pub fn push(&mut self, gaze: GazeSample, body: BodySample) -> Option<Result<FeatureVector>> {
        if self.gaze.len() == self.window {
            self.gaze.pop_front();
            self.body.pop_front();
        }
        self.gaze.push_back(gaze);
        self.body.push_back(body);
        self.seen += 1;
        if self.seen < self.window || !(self.seen - self.window).is_multiple_of(self.hop) {
            return None;
        }
        let g = self.gaze.make_contiguous();
        let b = self.body.make_contiguous();
        Some(assemble_features(&[Segment { gaze: g, body: b }], &self.config))
    }
}

/// Replays paired streams through a [`RollingExtractor`].
pub fn rolling_extract(
    gaze: &[GazeSample],
    body: &[BodySample],
    rate: f64,
    window: f64,
    hop: f64,
    config: &FeatureConfig,
) -> Vec<Result<FeatureVector>> {
    let mut ex = RollingExtractor::new(rate, window, hop, *config);
    gaze.iter()
        .zip(body)
        .filter_map(|(g, b)| ex.push(*g, *b))
        .collect()
}
