//! Saccade and fixation detection on 3-D gaze direction streams.
//!
//! Saccades use an adaptive velocity threshold; fixations use dispersion
//! windows (I-DT). All angles are great-circle angles between gaze
//! directions, in degrees.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{angle_deg, Vec3};
use crate::model::GazeSample;
use crate::stats::median;

/// Invalid-sample gaps longer than this split detection segments.
pub const MAX_BRIDGED_GAP: f64 = 0.05;
/// Minimum trace length accepted by [`detect_saccades`].
pub const MIN_SACCADE_TRACE: f64 = 0.5;
/// Scales a median absolute deviation to a normal-consistent sigma.
const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EventKind {
    Saccade,
    Fixation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GazeEvent {
    pub kind: EventKind,
    pub onset: f64,
    pub offset: f64,
    /// Index of the first and last sample of the event in the input slice.
    pub onset_index: usize,
    pub offset_index: usize,
    /// Degrees; zero for fixations.
    pub amplitude: f64,
    /// Degrees; zero for saccades.
    pub dispersion: f64,
    /// Mean gaze direction of a fixation.
    pub centroid_dir: Option<Vec3>,
}

impl GazeEvent {
    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SaccadeParams {
    /// Multiplier on the robust velocity deviation.
    pub threshold_multiplier: f64,
    pub min_duration: f64,
    pub min_amplitude: f64,
}

impl Default for SaccadeParams {
    fn default() -> Self {
        SaccadeParams {
            threshold_multiplier: 6.0,
            min_duration: 0.02,
            min_amplitude: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FixationParams {
    pub dispersion_threshold: f64,
    pub min_duration: f64,
}

impl Default for FixationParams {
    fn default() -> Self {
        FixationParams {
            dispersion_threshold: 1.5,
            min_duration: 0.1,
        }
    }
}

/// Moving average of gaze direction over `window` samples, renormalized.
///
/// Windows shrink symmetrically at the ends. Invalid samples are passed
/// through untouched and excluded from neighboring averages.
pub fn smooth_gaze(samples: &[GazeSample], window: usize) -> Result<Vec<GazeSample>> {
    if samples.is_empty() {
        return Err(Error::Empty("gaze samples"));
    }
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Invalid(format!("smoothing window {window} must be odd and >= 1")));
    }
    let half = window / 2;
    let n = samples.len();
    let mut out = samples.to_vec();
    for i in 0..n {
        let h = half.min(i).min(n - 1 - i);
        if !samples[i].valid || h == 0 {
            continue;
        }
        let mut acc = Vec3::ZERO;
        for s in &samples[i - h..=i + h] {
            if s.valid {
                acc += s.gaze_dir;
            }
        }
        if let Some(d) = acc.try_normalize() {
            out[i].gaze_dir = d;
        }
    }
    Ok(out)
}

/// Angular speed (deg/s) per sample by central differences, one-sided at
/// the ends.
pub fn angular_velocity(samples: &[GazeSample]) -> Result<Vec<(f64, f64)>> {
    if samples.len() < 3 {
        return Err(Error::TooShort {
            needed: "3 gaze samples".into(),
            got: format!("{}", samples.len()),
        });
    }
    for (i, w) in samples.windows(2).enumerate() {
        if !(w[1].t > w[0].t) {
            return Err(Error::NonMonotone {
                index: i + 1,
                prev: w[0].t,
                next: w[1].t,
            });
        }
    }
    let n = samples.len();
    let speed = |a: &GazeSample, b: &GazeSample| angle_deg(a.gaze_dir, b.gaze_dir) / (b.t - a.t);
    let mut out = Vec::with_capacity(n);
    out.push((samples[0].t, speed(&samples[0], &samples[1])));
    for i in 1..n - 1 {
        out.push((samples[i].t, speed(&samples[i - 1], &samples[i + 1])));
    }
    out.push((samples[n - 1].t, speed(&samples[n - 2], &samples[n - 1])));
    Ok(out)
}

/// Splits the valid samples into runs of input indices whose consecutive
/// timestamps are at most [`MAX_BRIDGED_GAP`] apart.
pub fn valid_segments(samples: &[GazeSample]) -> Vec<Vec<usize>> {
    let mut segments: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if !s.valid {
            continue;
        }
        if let Some(&last) = current.last() {
            if s.t - samples[last].t > MAX_BRIDGED_GAP + 1e-9 {
                segments.push(core::mem::take(&mut current));
            }
        }
        current.push(i);
    }
    if !current.is_empty() {
        segments.push(current);
    }
    segments
}

/// Robust velocity threshold: `median(v) + λ · 1.4826 · MAD(v)`.
pub fn saccade_threshold(speeds: &[f64], multiplier: f64) -> f64 {
    if speeds.is_empty() {
        return 0.0;
    }
    let med = median(speeds);
    let dev: Vec<f64> = speeds.iter().map(|v| libm::fabs(v - med)).collect();
    med + multiplier * MAD_SCALE * median(&dev)
}

fn check_span(samples: &[GazeSample], needed: f64, what: &str) -> Result<()> {
    let span = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0.0,
    };
    if span + 1e-9 < needed {
        return Err(Error::TooShort {
            needed: format!("{needed} s of gaze for {what}"),
            got: format!("{span} s"),
        });
    }
    Ok(())
}

/// Per-segment speeds, keyed by the segment's input indices.
fn segment_speeds(samples: &[GazeSample]) -> Result<Vec<(Vec<usize>, Vec<f64>)>> {
    let mut out = Vec::new();
    for seg in valid_segments(samples) {
        if seg.len() < 3 {
            continue;
        }
        let picked: Vec<GazeSample> = seg.iter().map(|&i| samples[i]).collect();
        let v = angular_velocity(&picked)?.into_iter().map(|(_, v)| v).collect();
        out.push((seg, v));
    }
    Ok(out)
}

/// Velocity-threshold saccade detection.
///
/// Maximal runs of samples faster than the adaptive threshold become
/// saccades when they last at least `min_duration` and their endpoint
/// directions are at least `min_amplitude` apart.
pub fn detect_saccades(samples: &[GazeSample], params: &SaccadeParams) -> Result<Vec<GazeEvent>> {
    check_span(samples, MIN_SACCADE_TRACE, "saccade detection")?;
    let segments = segment_speeds(samples)?;
    let all: Vec<f64> = segments.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let threshold = saccade_threshold(&all, params.threshold_multiplier);

    let mut events = Vec::new();
    for (seg, speeds) in &segments {
        let mut k = 0;
        while k < seg.len() {
            if speeds[k] <= threshold {
                k += 1;
                continue;
            }
            let start = k;
            while k + 1 < seg.len() && speeds[k + 1] > threshold {
                k += 1;
            }
            let (a, b) = (seg[start], seg[k]);
            let duration = samples[b].t - samples[a].t;
            let amplitude = angle_deg(samples[a].gaze_dir, samples[b].gaze_dir);
            if duration >= params.min_duration && amplitude >= params.min_amplitude {
                events.push(GazeEvent {
                    kind: EventKind::Saccade,
                    onset: samples[a].t,
                    offset: samples[b].t,
                    onset_index: a,
                    offset_index: b,
                    amplitude,
                    dispersion: 0.0,
                    centroid_dir: None,
                });
            }
            k += 1;
        }
    }
    Ok(events)
}

/// Incrementally tracked maximum pairwise angle of a growing window.
struct Spread<'a> {
    dirs: &'a [Vec3],
    max: f64,
}

impl<'a> Spread<'a> {
    fn of(dirs: &'a [Vec3]) -> Self {
        let mut max: f64 = 0.0;
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                max = max.max(angle_deg(dirs[i], dirs[j]));
            }
        }
        Spread { dirs, max }
    }

    /// Spread after appending `next` to the window.
    fn with(&self, next: Vec3) -> f64 {
        self.dirs
            .iter()
            .fold(self.max, |m, &d| m.max(angle_deg(d, next)))
    }
}

/// Dispersion-threshold (I-DT) fixation detection.
pub fn detect_fixations(samples: &[GazeSample], params: &FixationParams) -> Result<Vec<GazeEvent>> {
    check_span(samples, params.min_duration, "fixation detection")?;
    let mut events = Vec::new();
    for seg in valid_segments(samples) {
        let t: Vec<f64> = seg.iter().map(|&i| samples[i].t).collect();
        let dirs: Vec<Vec3> = seg.iter().map(|&i| samples[i].gaze_dir).collect();
        let n = seg.len();
        let mut i = 0;
        while i < n {
            let Some(mut j) = (i..n).find(|&j| t[j] - t[i] >= params.min_duration) else {
                break;
            };
            let mut spread = Spread::of(&dirs[i..=j]);
            if spread.max > params.dispersion_threshold {
                i += 1;
                continue;
            }
            while j + 1 < n {
                let grown = spread.with(dirs[j + 1]);
                if grown > params.dispersion_threshold {
                    break;
                }
                j += 1;
                spread = Spread { dirs: &dirs[i..=j], max: grown };
            }
            let mut acc = Vec3::ZERO;
            for d in &dirs[i..=j] {
                acc += *d;
            }
            events.push(GazeEvent {
                kind: EventKind::Fixation,
                onset: t[i],
                offset: t[j],
                onset_index: seg[i],
                offset_index: seg[j],
                amplitude: 0.0,
                dispersion: spread.max,
                centroid_dir: acc.try_normalize(),
            });
            i = j + 1;
        }
    }
    Ok(events)
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::geom::direction_from_angles;

    pub fn sample(t: f64, az: f64, el: f64) -> GazeSample {
        GazeSample {
            t,
            gaze_origin: Vec3::ZERO,
            gaze_dir: direction_from_angles(az, el),
            pupil_left: Some(3.0),
            pupil_right: Some(3.0),
            valid: true,
        }
    }

    /// Azimuth trace at 60 Hz from an angle function.
    pub fn trace(seconds: f64, f: impl Fn(f64) -> f64) -> Vec<GazeSample> {
        let n = libm::round(seconds * 60.0) as usize;
        (0..n)
            .map(|k| {
                let t = k as f64 / 60.0;
                sample(t, f(t), 0.0)
            })
            .collect()
    }

    /// Linear ramp of `amp` degrees over `dur` seconds starting at `t0`.
    pub fn step(t: f64, t0: f64, dur: f64, amp: f64) -> f64 {
        if t <= t0 {
            0.0
        } else if t >= t0 + dur {
            amp
        } else {
            amp * (t - t0) / dur
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use alloc::vec;

    #[test]
    fn smoothing_identity_and_constant() {
        let s = trace(1.0, |t| 5.0 * t);
        assert_eq!(smooth_gaze(&s, 1).unwrap(), s);
        let c = trace(1.0, |_| 3.0);
        let sm = smooth_gaze(&c, 5).unwrap();
        for (a, b) in sm.iter().zip(&c) {
            assert!(angle_deg(a.gaze_dir, b.gaze_dir) < 1e-9);
        }
        assert!(smooth_gaze(&[], 3).is_err());
        assert!(smooth_gaze(&c, 4).is_err());
    }

    #[test]
    fn smoothing_reduces_jitter() {
        let s: Vec<GazeSample> = (0..60)
            .map(|k| sample(k as f64 / 60.0, if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let mean_dir = direction_from_angles(0.0, 0.0);
        let max_dev = |xs: &[GazeSample]| {
            xs.iter()
                .skip(2)
                .take(xs.len() - 4)
                .map(|g| angle_deg(g.gaze_dir, mean_dir))
                .fold(0.0, f64::max)
        };
        let before = max_dev(&s);
        let after = max_dev(&smooth_gaze(&s, 5).unwrap());
        // interior window of 5 alternating samples leaves 1/5 of the jitter
        assert!(before / after >= 3.0, "{before} vs {after}");
    }

    use crate::geom::direction_from_angles;

    #[test]
    fn velocity_constant_and_uniform_rotation() {
        let c = trace(1.0, |_| 2.0);
        assert!(angular_velocity(&c).unwrap().iter().all(|&(_, v)| v == 0.0));
        let r = trace(1.0, |t| 30.0 * t);
        let v = angular_velocity(&r).unwrap();
        for &(_, s) in &v[1..v.len() - 1] {
            assert!((s - 30.0).abs() < 0.1, "{s}");
        }
    }

    #[test]
    fn velocity_rejects_duplicates() {
        let mut s = trace(0.1, |_| 0.0);
        s[3].t = s[2].t;
        assert!(matches!(angular_velocity(&s), Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn constant_gaze_has_no_saccades() {
        let s = trace(2.0, |_| 4.0);
        assert!(detect_saccades(&s, &SaccadeParams::default()).unwrap().is_empty());
    }

    #[test]
    fn single_step_is_one_saccade() {
        let s = trace(2.0, |t| step(t, 1.0, 0.04, 10.0));
        let ev = detect_saccades(&s, &SaccadeParams::default()).unwrap();
        assert_eq!(ev.len(), 1);
        assert!((ev[0].amplitude - 10.0).abs() <= 0.5);
        assert!(ev[0].onset < 1.0 + 1e-9 && ev[0].offset >= 1.04 - 1e-9);
    }

    #[test]
    fn three_steps_in_order() {
        let s = trace(4.0, |t| step(t, 0.8, 0.04, 8.0) + step(t, 2.0, 0.04, -12.0) + step(t, 3.2, 0.05, 6.0));
        let ev = detect_saccades(&s, &SaccadeParams::default()).unwrap();
        assert_eq!(ev.len(), 3);
        assert!(ev.windows(2).all(|w| w[0].offset < w[1].onset));
        for (e, amp) in ev.iter().zip([8.0, 12.0, 6.0]) {
            assert!((e.amplitude - amp).abs() < 0.5);
        }
    }

    #[test]
    fn short_trace_is_error() {
        let s = trace(0.3, |_| 0.0);
        assert!(detect_saccades(&s, &SaccadeParams::default()).is_err());
    }

    #[test]
    fn still_second_is_one_fixation() {
        let s = trace(1.0, |_| 0.0);
        let f = detect_fixations(&s, &FixationParams::default()).unwrap();
        assert_eq!(f.len(), 1);
        assert!((f[0].duration() - 59.0 / 60.0).abs() < 1e-9);
        assert_eq!(f[0].dispersion, 0.0);
    }

    #[test]
    fn two_epochs_two_fixations() {
        let s = trace(2.0, |t| step(t, 1.0, 0.03, 20.0));
        let f = detect_fixations(&s, &FixationParams::default()).unwrap();
        assert_eq!(f.len(), 2);
        let sac = detect_saccades(&s, &SaccadeParams::default()).unwrap();
        assert_eq!(sac.len(), 1);
        // fixations may touch the saccade only at a boundary sample
        for fx in &f {
            let overlap_lo = fx.onset_index.max(sac[0].onset_index);
            let overlap_hi = fx.offset_index.min(sac[0].offset_index);
            assert!(overlap_hi < overlap_lo + 1 || overlap_hi == overlap_lo);
        }
    }

    #[test]
    fn drift_fixations() {
        // 10 deg/s covers 1.0 deg in 0.1 s, under the 1.5 deg threshold, so
        // only short fixations survive; 20 deg/s exceeds it and none do.
        let slow = trace(3.0, |t| 10.0 * t);
        let f = detect_fixations(&slow, &FixationParams::default()).unwrap();
        assert!(f.iter().all(|e| e.duration() <= 0.15 + 1e-9));
        let fast = trace(3.0, |t| 20.0 * t);
        assert!(detect_fixations(&fast, &FixationParams::default()).unwrap().is_empty());
    }

    #[test]
    fn long_invalid_gap_splits_events() {
        let mut s = trace(2.0, |_| 0.0);
        for g in &mut s[55..65] {
            g.valid = false;
        }
        let f = detect_fixations(&s, &FixationParams::default()).unwrap();
        assert_eq!(f.len(), 2);
        assert!(f[0].offset_index < 55 && f[1].onset_index >= 65);
        let segs = valid_segments(&s);
        assert_eq!(segs.len(), 2);
        // a single dropped sample is bridged
        let mut s = trace(2.0, |_| 0.0);
        s[30].valid = false;
        assert_eq!(valid_segments(&s).len(), 1);
        assert_eq!(detect_fixations(&s, &FixationParams::default()).unwrap().len(), 1);
        let _ = vec![0];
    }
}
