//! Shared domain types: recorded (or simulated) dual-task trials, sessions,
//! per-condition noticeability labels, and trajectory metrics.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::geom::Vec3;

/// Nominal recording rate of the gaze and body streams.
pub const DEFAULT_SAMPLE_RATE: f64 = 60.0;

const UNIT_TOLERANCE: f64 = 1e-6;
const PUPIL_MAX_MM: f64 = 12.0;
const SEGMENT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GazeSample {
    /// Seconds from trial start.
    pub t: f64,
    pub gaze_origin: Vec3,
    pub gaze_dir: Vec3,
    /// Pupil diameters in millimeters; `None` during blinks or dropouts.
    pub pupil_left: Option<f64>,
    pub pupil_right: Option<f64>,
    pub valid: bool,
}

impl GazeSample {
    /// Mean of the available pupil diameters.
    pub fn pupil(&self) -> Option<f64> {
        match (self.pupil_left, self.pupil_right) {
            (Some(l), Some(r)) => Some(0.5 * (l + r)),
            (Some(p), None) | (None, Some(p)) => Some(p),
            (None, None) => None,
        }
    }
}

/// Physical arm joints together with the redirected (virtual) ones.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BodySample {
    pub t: f64,
    pub shoulder: Vec3,
    pub elbow: Vec3,
    pub hand: Vec3,
    pub v_shoulder: Vec3,
    pub v_elbow: Vec3,
    pub v_hand: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum StimulusKind {
    Opacity,
    Color,
    Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum DurationLevel {
    Short,
    Medium,
    Long,
}

impl DurationLevel {
    /// Animation length in seconds.
    pub fn seconds(self) -> f64 {
        match self {
            DurationLevel::Short => 0.2,
            DurationLevel::Medium => 1.0,
            DurationLevel::Long => 2.0,
        }
    }
}

/// Stimulus placement. `Central`/`Near`/`Mid` are the eccentricity rings of
/// the data-collection design; `Sparse`/`Median`/`Dense` are the candidate
/// layouts of the confirmation design. A session uses one family only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Layout {
    Central,
    Near,
    Mid,
    Sparse,
    Median,
    Dense,
}

impl Layout {
    pub fn is_ring(self) -> bool {
        matches!(self, Layout::Central | Layout::Near | Layout::Mid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RedirDirection {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StimulusEvent {
    pub onset: f64,
    pub duration: f64,
    /// Degrees from the head direction.
    pub eccentricity: f64,
    /// Degrees around the eccentricity ring.
    pub azimuth: f64,
    pub kind: StimulusKind,
    /// Button-press time, when the participant responded.
    pub response_time: Option<f64>,
}

/// Experimental condition. The no-stimulus baseline has every field `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Condition {
    pub stimulus_kind: Option<StimulusKind>,
    pub duration_level: Option<DurationLevel>,
    pub layout: Option<Layout>,
}

impl Condition {
    pub const BASELINE: Condition = Condition {
        stimulus_kind: None,
        duration_level: None,
        layout: None,
    };

    pub fn new(kind: StimulusKind, duration: DurationLevel, layout: Layout) -> Self {
        Condition {
            stimulus_kind: Some(kind),
            duration_level: Some(duration),
            layout: Some(layout),
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.stimulus_kind.is_none() && self.duration_level.is_none() && self.layout.is_none()
    }

    /// Two-letter grid label (`CS`, `CL`, `NS`, `NL`, `MS`, `ML`) for the
    /// ring layouts with short or long stimuli.
    pub fn grid_label(&self) -> Option<&'static str> {
        let label = match (self.layout?, self.duration_level?) {
            (Layout::Central, DurationLevel::Short) => "CS",
            (Layout::Central, DurationLevel::Long) => "CL",
            (Layout::Near, DurationLevel::Short) => "NS",
            (Layout::Near, DurationLevel::Long) => "NL",
            (Layout::Mid, DurationLevel::Short) => "MS",
            (Layout::Mid, DurationLevel::Long) => "ML",
            _ => return None,
        };
        Some(label)
    }

    /// The six-cell data-collection grid in canonical order.
    pub fn collection_grid(kind: StimulusKind) -> [Condition; 6] {
        use DurationLevel::*;
        use Layout::*;
        [
            Condition::new(kind, Short, Central),
            Condition::new(kind, Long, Central),
            Condition::new(kind, Short, Near),
            Condition::new(kind, Long, Near),
            Condition::new(kind, Short, Mid),
            Condition::new(kind, Long, Mid),
        ]
    }

    /// The ten confirmation conditions: 3 durations x 3 layouts + baseline.
    pub fn confirmation_grid(kind: StimulusKind) -> Vec<Condition> {
        let mut out = Vec::with_capacity(10);
        for layout in [Layout::Sparse, Layout::Median, Layout::Dense] {
            for d in [DurationLevel::Short, DurationLevel::Medium, DurationLevel::Long] {
                out.push(Condition::new(kind, d, layout));
            }
        }
        out.push(Condition::BASELINE);
        out
    }
}

fn kind_str(k: StimulusKind) -> &'static str {
    match k {
        StimulusKind::Opacity => "opacity",
        StimulusKind::Color => "color",
        StimulusKind::Scale => "scale",
    }
}

fn duration_str(d: DurationLevel) -> &'static str {
    match d {
        DurationLevel::Short => "short",
        DurationLevel::Medium => "medium",
        DurationLevel::Long => "long",
    }
}

fn layout_str(l: Layout) -> &'static str {
    match l {
        Layout::Central => "central",
        Layout::Near => "near",
        Layout::Mid => "mid",
        Layout::Sparse => "sparse",
        Layout::Median => "median",
        Layout::Dense => "dense",
    }
}

impl FromStr for StimulusKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "opacity" => Ok(StimulusKind::Opacity),
            "color" => Ok(StimulusKind::Color),
            "scale" => Ok(StimulusKind::Scale),
            _ => Err(Error::Invalid(format!("unknown stimulus kind '{s}'"))),
        }
    }
}

/// `baseline` or `kind:duration:layout`, e.g. `opacity:short:central`.
impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.stimulus_kind, self.duration_level, self.layout) {
            (None, None, None) => f.write_str("baseline"),
            (k, d, l) => write!(
                f,
                "{}:{}:{}",
                k.map_or("none", kind_str),
                d.map_or("none", duration_str),
                l.map_or("none", layout_str)
            ),
        }
    }
}

impl FromStr for Condition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "baseline" {
            return Ok(Condition::BASELINE);
        }
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Invalid(format!("malformed condition '{s}'")));
        }
        let kind = match parts[0] {
            "none" => None,
            k => Some(k.parse()?),
        };
        let duration = match parts[1] {
            "none" => None,
            "short" => Some(DurationLevel::Short),
            "medium" => Some(DurationLevel::Medium),
            "long" => Some(DurationLevel::Long),
            d => return Err(Error::Invalid(format!("unknown duration level '{d}'"))),
        };
        let layout = match parts[2] {
            "none" => None,
            "central" => Some(Layout::Central),
            "near" => Some(Layout::Near),
            "mid" => Some(Layout::Mid),
            "sparse" => Some(Layout::Sparse),
            "median" => Some(Layout::Median),
            "dense" => Some(Layout::Dense),
            l => return Err(Error::Invalid(format!("unknown layout '{l}'"))),
        };
        Ok(Condition {
            stimulus_kind: kind,
            duration_level: duration,
            layout,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trial {
    pub id: u32,
    pub condition: Condition,
    /// Maximum redirection at the target pose, degrees.
    pub redir_magnitude: f64,
    pub redir_direction: RedirDirection,
    pub gaze: Vec<GazeSample>,
    pub body: Vec<BodySample>,
    pub stimuli: Vec<StimulusEvent>,
    pub noticed: bool,
}

impl Trial {
    /// Checks every per-trial invariant. `sample_period` is the nominal
    /// spacing used for the gaze/body span agreement check.
    pub fn validate(&self, sample_period: f64) -> Result<()> {
        if !(0.0..=30.0).contains(&self.redir_magnitude) {
            return Err(Error::Invalid(format!(
                "trial {}: redirection magnitude {} outside [0, 30] degrees",
                self.id, self.redir_magnitude
            )));
        }
        for (i, w) in self.gaze.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::NonMonotone {
                    index: i + 1,
                    prev: w[0].t,
                    next: w[1].t,
                });
            }
        }
        for (i, g) in self.gaze.iter().enumerate() {
            let norm = g.gaze_dir.norm();
            if !norm.is_finite() || libm::fabs(norm - 1.0) > UNIT_TOLERANCE {
                return Err(Error::NotUnit { index: i, norm });
            }
            if !g.t.is_finite() || !g.gaze_origin.is_finite() {
                return Err(Error::NonFinite("gaze sample"));
            }
            for p in [g.pupil_left, g.pupil_right].into_iter().flatten() {
                if !(p > 0.0 && p < PUPIL_MAX_MM) {
                    return Err(Error::Invalid(format!(
                        "trial {}: pupil diameter {p} mm at sample {i} outside (0, 12)",
                        self.id
                    )));
                }
            }
        }
        for (i, w) in self.body.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::NonMonotone {
                    index: i + 1,
                    prev: w[0].t,
                    next: w[1].t,
                });
            }
        }
        if let Some(first) = self.body.first() {
            let upper = (first.elbow - first.shoulder).norm();
            let fore = (first.hand - first.elbow).norm();
            for (i, b) in self.body.iter().enumerate() {
                let u = (b.elbow - b.shoulder).norm();
                let f = (b.hand - b.elbow).norm();
                if libm::fabs(u - upper) > SEGMENT_TOLERANCE * upper
                    || libm::fabs(f - fore) > SEGMENT_TOLERANCE * fore
                {
                    return Err(Error::Invalid(format!(
                        "trial {}: arm segment length changes by more than 5% at body sample {i}",
                        self.id
                    )));
                }
            }
        }
        if let (Some(g0), Some(g1), Some(b0), Some(b1)) = (
            self.gaze.first(),
            self.gaze.last(),
            self.body.first(),
            self.body.last(),
        ) {
            let tol = sample_period * 1.0001;
            if libm::fabs(g0.t - b0.t) > tol || libm::fabs(g1.t - b1.t) > tol {
                return Err(Error::Invalid(format!(
                    "trial {}: gaze and body streams cover different time spans",
                    self.id
                )));
            }
        }
        for s in &self.stimuli {
            let ok = s.duration > 0.0
                && s.eccentricity >= 0.0
                && s.onset.is_finite()
                && s.response_time.is_none_or(|r| r >= s.onset);
            if !ok {
                return Err(Error::Invalid(format!(
                    "trial {}: invalid stimulus event at onset {}",
                    self.id, s.onset
                )));
            }
        }
        Ok(())
    }

    /// Duration covered by the gaze stream.
    pub fn span(&self) -> f64 {
        match (self.gaze.first(), self.gaze.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Session {
    pub user_id: String,
    pub sample_rate: f64,
    pub trials: Vec<Trial>,
}

impl Session {
    pub fn new(user_id: impl Into<String>) -> Self {
        Session {
            user_id: user_id.into(),
            sample_rate: DEFAULT_SAMPLE_RATE,
            trials: Vec::new(),
        }
    }

    /// Validates the session; on failure returns the offending trial index
    /// together with the error.
    pub fn validate(&self) -> core::result::Result<(), (Option<usize>, Error)> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err((
                None,
                Error::Invalid(format!("sample rate {} must be positive", self.sample_rate)),
            ));
        }
        let ring = self
            .trials
            .iter()
            .filter_map(|t| t.condition.layout)
            .map(Layout::is_ring)
            .collect::<Vec<_>>();
        if ring.iter().any(|&r| r) && ring.iter().any(|&r| !r) {
            return Err((
                None,
                Error::Invalid("session mixes ring and candidate layout families".into()),
            ));
        }
        let period = 1.0 / self.sample_rate;
        for (i, t) in self.trials.iter().enumerate() {
            t.validate(period).map_err(|e| (Some(i), e))?;
        }
        Ok(())
    }
}

/// Per-(user, condition) noticeability estimated from yes/no responses.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoticeabilitySample {
    pub user_id: String,
    pub condition: Condition,
    pub label: f64,
    pub n_trials: usize,
    pub features: Option<FeatureVector>,
}

/// Fraction of trials in which the redirection was reported as noticed.
///
/// All trials must share one condition.
pub fn noticeability_label(user_id: &str, trials: &[&Trial]) -> Result<NoticeabilitySample> {
    let first = trials.first().ok_or(Error::Empty("trial group"))?;
    if trials.iter().any(|t| t.condition != first.condition) {
        return Err(Error::Invalid(format!(
            "trial group mixes conditions (first is {})",
            first.condition
        )));
    }
    let noticed = trials.iter().filter(|t| t.noticed).count();
    Ok(NoticeabilitySample {
        user_id: user_id.into(),
        condition: first.condition,
        label: noticed as f64 / trials.len() as f64,
        n_trials: trials.len(),
        features: None,
    })
}

/// Groups a session's trials by condition (first-appearance order) and labels each group.
pub fn session_labels(session: &Session) -> Vec<NoticeabilitySample> {
    group_by_condition(&session.trials)
        .into_iter()
        .filter_map(|(_, group)| noticeability_label(&session.user_id, &group).ok())
        .collect()
}

/// Trials grouped by condition, groups in order of first appearance.
pub fn group_by_condition(trials: &[Trial]) -> Vec<(Condition, Vec<&Trial>)> {
    let mut groups: Vec<(Condition, Vec<&Trial>)> = Vec::new();
    for t in trials {
        match groups.iter_mut().find(|(c, _)| *c == t.condition) {
            Some((_, g)) => g.push(t),
            None => groups.push((t.condition, alloc::vec![t])),
        }
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmFrame {
    Physical,
    Virtual,
}

/// Hand path length divided by the straight start-to-end distance.
pub fn trajectory_ratio(samples: &[BodySample], which: ArmFrame) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooShort {
            needed: "2 body samples".into(),
            got: format!("{}", samples.len()),
        });
    }
    let hand = |b: &BodySample| match which {
        ArmFrame::Physical => b.hand,
        ArmFrame::Virtual => b.v_hand,
    };
    let path: f64 = samples
        .windows(2)
        .map(|w| (hand(&w[1]) - hand(&w[0])).norm())
        .sum();
    let chord = (hand(&samples[samples.len() - 1]) - hand(&samples[0])).norm();
    if !(chord > 1e-12) {
        return Err(Error::Degenerate("trajectory start and end coincide"));
    }
    Ok(path / chord)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn trial(noticed: bool, cond: Condition) -> Trial {
        Trial {
            id: 0,
            condition: cond,
            redir_magnitude: 20.0,
            redir_direction: RedirDirection::Horizontal,
            gaze: vec![],
            body: vec![],
            stimuli: vec![],
            noticed,
        }
    }

    fn body_at(hand: Vec3) -> BodySample {
        BodySample {
            t: 0.0,
            shoulder: Vec3::ZERO,
            elbow: Vec3::ZERO,
            hand,
            v_shoulder: Vec3::ZERO,
            v_elbow: Vec3::ZERO,
            v_hand: hand,
        }
    }

    #[test]
    fn label_is_count_ratio() {
        let c = Condition::collection_grid(StimulusKind::Opacity)[0];
        for (noticed, expected) in [(12, 0.5), (4, 4.0 / 24.0), (0, 0.0)] {
            let trials: Vec<Trial> = (0..24).map(|i| trial(i < noticed, c)).collect();
            let refs: Vec<&Trial> = trials.iter().collect();
            let s = noticeability_label("u", &refs).unwrap();
            assert_eq!(s.label, expected);
            assert_eq!(s.n_trials, 24);
        }
        // 4 of 24 sits inside the reported 16.7% to 79.2% range
        let trials: Vec<Trial> = (0..24).map(|i| trial(i < 4, c)).collect();
        let refs: Vec<&Trial> = trials.iter().collect();
        let l = noticeability_label("u", &refs).unwrap().label;
        assert!((l - 0.1667).abs() < 1e-4);
    }

    #[test]
    fn label_rejects_empty_and_mixed() {
        assert!(noticeability_label("u", &[]).is_err());
        let g = Condition::collection_grid(StimulusKind::Opacity);
        let a = trial(true, g[0]);
        let b = trial(true, g[1]);
        assert!(noticeability_label("u", &[&a, &b]).is_err());
    }

    #[test]
    fn straight_and_right_angle_paths() {
        let s: Vec<BodySample> = (0..5)
            .map(|i| body_at(Vec3::new(i as f64 * 0.1, 0.0, 0.0)))
            .collect();
        assert!((trajectory_ratio(&s, ArmFrame::Physical).unwrap() - 1.0).abs() < 1e-12);
        let s = vec![
            body_at(Vec3::ZERO),
            body_at(Vec3::new(1.0, 0.0, 0.0)),
            body_at(Vec3::new(1.0, 1.0, 0.0)),
        ];
        let r = trajectory_ratio(&s, ArmFrame::Virtual).unwrap();
        assert!((r - 2.0 / libm::sqrt(2.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_path_is_error() {
        let s = vec![body_at(Vec3::ZERO), body_at(Vec3::new(1.0, 0.0, 0.0)), body_at(Vec3::ZERO)];
        assert!(matches!(
            trajectory_ratio(&s, ArmFrame::Physical),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn grid_labels() {
        let labels: Vec<&str> = Condition::collection_grid(StimulusKind::Opacity)
            .iter()
            .map(|c| c.grid_label().unwrap())
            .collect();
        assert_eq!(labels, ["CS", "CL", "NS", "NL", "MS", "ML"]);
        assert!(Condition::BASELINE.grid_label().is_none());
    }

    #[test]
    fn condition_string_round_trip() {
        let mut all = Condition::confirmation_grid(StimulusKind::Scale);
        all.extend(Condition::collection_grid(StimulusKind::Color));
        for c in all {
            let s = alloc::string::ToString::to_string(&c);
            assert_eq!(s.parse::<Condition>().unwrap(), c);
        }
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn ratio_never_below_one(pts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 2..30)) {
            let s: Vec<BodySample> = pts.iter().map(|&(x, y, z)| body_at(Vec3::new(x, y, z))).collect();
            if let Ok(r) = trajectory_ratio(&s, ArmFrame::Physical) {
                prop_assert!(r >= 1.0 - 1e-9);
            }
        }

        #[test]
        fn label_matches_count(flags in proptest::collection::vec(any::<bool>(), 1..60)) {
            let c = Condition::collection_grid(StimulusKind::Opacity)[3];
            let trials: Vec<Trial> = flags.iter().map(|&f| trial(f, c)).collect();
            let refs: Vec<&Trial> = trials.iter().collect();
            let l = noticeability_label("u", &refs).unwrap().label;
            let brute = flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64;
            prop_assert!((0.0..=1.0).contains(&l));
            prop_assert_eq!(l, brute);
        }
    }
}
