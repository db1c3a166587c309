//! Synthetic dual-task study generator.
//!
//! A seated agent sweeps the left forearm from left to right while a gaze
//! agent pursues the rendered (virtual) hand. Stimuli flash around the head
//! direction; captured ones pull gaze away for a saccade, a dwell and a
//! return saccade, and dilate the pupil. Whether a trial's redirection is
//! noticed is drawn from a logistic oracle of the fraction of time the
//! gaze stayed on the arm.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geom::{angle_deg, any_orthogonal, direction_from_angles, slerp, Vec3, UP};
use crate::model::{
    BodySample, Condition, GazeSample, Layout, RedirDirection, Session, StimulusEvent, StimulusKind, Trial,
    DEFAULT_SAMPLE_RATE,
};
use crate::redirect::{apply_offset, redirect_progress, ArmPose};

/// Eye position (m) in the world frame.
pub const EYE: Vec3 = Vec3::new(0.0, 1.6, 0.0);
pub const SHOULDER: Vec3 = Vec3::new(-0.18, 1.45, 0.0);
pub const UPPER_ARM: f64 = 0.30;
pub const FOREARM: f64 = 0.28;
/// Head pitch below the horizon, degrees.
pub const HEAD_PITCH: f64 = 30.0;
/// Shortest allowed stimulus response latency, seconds.
pub const MIN_LATENCY: f64 = 0.08;

/// Rate (per second) of small load-driven pupil pulses: at rest, and the
/// increase while attending a stimulus.
const LOAD_PULSE_RATE: (f64, f64) = (1.0, 3.0);

/// Eccentricity rings (degrees) for the ring layouts.
pub const RING_ECCENTRICITY: [f64; 3] = [5.0, 30.0, 60.0];

fn duration_index(seconds: f64) -> usize {
    if seconds < 0.6 {
        0
    } else if seconds < 1.5 {
        1
    } else {
        2
    }
}

fn ring_index(eccentricity: f64) -> usize {
    if eccentricity <= 17.5 {
        0
    } else if eccentricity <= 45.0 {
        1
    } else {
        2
    }
}

/// Eccentricities a layout draws from. The confirmation layouts cover the
/// outer ring only, the two outer rings, or all three.
pub fn layout_eccentricities(layout: Layout) -> &'static [f64] {
    match layout {
        Layout::Central => &RING_ECCENTRICITY[0..1],
        Layout::Near => &RING_ECCENTRICITY[1..2],
        Layout::Mid | Layout::Sparse => &RING_ECCENTRICITY[2..3],
        Layout::Median => &RING_ECCENTRICITY[1..3],
        Layout::Dense => &RING_ECCENTRICITY[..],
    }
}

fn logit(p: f64) -> f64 {
    libm::log(p / (1.0 - p))
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("finite, non-negative sd")
}

/// Behavioral parameters of one simulated participant.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentProfile {
    /// Capture probability indexed by ring (central, near, mid) then
    /// duration (short, medium, long).
    pub capture: [[f64; 3]; 3],
    pub latency_mean: f64,
    pub latency_sd: f64,
    /// Extra dwell after the stimulus disappears, uniform range in seconds.
    pub dwell: (f64, f64),
    pub dwell_scale: f64,
    pub pupil_baseline: f64,
    /// Peak dilation (mm) following a captured stimulus.
    pub pupil_gain: f64,
    /// Stationary sd (degrees) of the fixational gaze noise per axis.
    pub gaze_noise: f64,
    /// Blinks per second.
    pub blink_rate: f64,
}

impl Default for AgentProfile {
    fn default() -> Self {
        AgentProfile {
            capture: [[0.95, 0.97, 0.98], [0.5, 0.65, 0.8], [0.17, 0.28, 0.4]],
            latency_mean: 0.327,
            latency_sd: 0.168,
            dwell: (0.15, 0.35),
            dwell_scale: 1.0,
            pupil_baseline: 3.5,
            pupil_gain: 0.25,
            gaze_noise: 0.18,
            blink_rate: 0.2,
        }
    }
}

impl AgentProfile {
    /// Draws a participant around the default profile: a shared logit shift
    /// of every capture probability, a dwell scale, and pupil parameters.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let base = AgentProfile::default();
        let shift = normal(0.0, 0.3).sample(rng);
        let mut capture = base.capture;
        for p in capture.iter_mut().flatten() {
            *p = sigmoid(logit(*p) + shift);
        }
        AgentProfile {
            capture,
            dwell_scale: rng.random_range(0.85..=1.15),
            pupil_baseline: rng.random_range(3.0..=4.5),
            pupil_gain: rng.random_range(0.15..=0.35),
            ..base
        }
    }

    pub fn capture_probability(&self, eccentricity: f64, duration: f64) -> f64 {
        self.capture[ring_index(eccentricity)][duration_index(duration)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.capture.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Invalid("capture probabilities must lie in [0, 1]".into()));
        }
        let positive = [self.latency_sd, self.dwell_scale, self.pupil_baseline, self.gaze_noise];
        if positive.iter().any(|v| !(*v >= 0.0)) || !(self.dwell.0 >= 0.0 && self.dwell.1 >= self.dwell.0) {
            return Err(Error::Invalid("agent profile has a negative or inverted parameter".into()));
        }
        if !(self.blink_rate >= 0.0) || !self.latency_mean.is_finite() || !self.pupil_gain.is_finite() {
            return Err(Error::Invalid("agent profile has a non-finite parameter".into()));
        }
        Ok(())
    }
}

/// Ground-truth noticeability as a logistic function of attention on the arm.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleParams {
    pub floor: f64,
    pub ceiling: f64,
    pub slope: f64,
    pub midpoint: f64,
    /// Logit change per degree of redirection above `reference_magnitude`.
    pub magnitude_gain: f64,
    pub reference_magnitude: f64,
    pub user_offset: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            floor: 0.05,
            ceiling: 0.95,
            slope: 10.0,
            midpoint: 0.8,
            magnitude_gain: 0.15,
            reference_magnitude: 20.0,
            user_offset: 0.0,
        }
    }
}

impl OracleParams {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        OracleParams { user_offset: normal(0.0, 0.15).sample(rng), ..OracleParams::default() }
    }

    /// Noticing probability for an attention-on-arm fraction and magnitude.
    pub fn probability(&self, fraction: f64, magnitude: f64) -> f64 {
        let z = self.slope * (fraction - self.midpoint)
            + self.magnitude_gain * (magnitude - self.reference_magnitude)
            + self.user_offset;
        (self.floor + (self.ceiling - self.floor) * sigmoid(z)).clamp(0.0, 1.0)
    }
}

/// Stimulus onsets for one trial: first onset uniform in [1, 3] s, then each
/// next onset follows the previous offset by another uniform [1, 3] s.
/// Only stimuli that finish inside the trial are kept. Times are relative
/// to the trial start.
pub fn schedule_stimuli<R: Rng + ?Sized>(
    trial_duration: f64,
    duration: f64,
    layout: Layout,
    kind: StimulusKind,
    rng: &mut R,
) -> Vec<StimulusEvent> {
    let eccs = layout_eccentricities(layout);
    let mut out = Vec::new();
    let mut onset = rng.random_range(1.0..=3.0);
    while onset + duration <= trial_duration {
        let eccentricity = eccs[rng.random_range(0..eccs.len())];
        let azimuth = rng.random_range(0.0..360.0);
        out.push(StimulusEvent { onset, duration, eccentricity, azimuth, kind, response_time: None });
        onset += duration + rng.random_range(1.0..=3.0);
    }
    out
}

/// Head-frame axes: forward, right, up.
fn head_frame() -> (Vec3, Vec3, Vec3) {
    let f = direction_from_angles(0.0, -HEAD_PITCH);
    let r = UP.cross(f).try_normalize().expect("forward is not vertical");
    (f, r, f.cross(r))
}

/// World direction of a stimulus at `eccentricity` from the head direction
/// and `azimuth` around it (0 = right, 90 = up).
pub fn stimulus_direction(eccentricity: f64, azimuth: f64) -> Vec3 {
    let (f, r, u) = head_frame();
    let (e, a) = (eccentricity.to_radians(), azimuth.to_radians());
    f * libm::cos(e) + (r * libm::cos(a) + u * libm::sin(a)) * libm::sin(e)
}

/// Main-sequence saccade duration for an amplitude in degrees.
pub fn saccade_duration(amplitude: f64) -> f64 {
    0.02 + 0.002 * amplitude
}

/// Position along a saccade with a raised-cosine velocity profile.
fn saccade_profile(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s - libm::sin(core::f64::consts::TAU * s) / core::f64::consts::TAU
}

/// Physical sweep of the left forearm about a fixed elbow.
#[derive(Debug, Clone, Copy)]
struct ArmPlan {
    elbow: Vec3,
    az_start: f64,
    az_end: f64,
    elevation: f64,
    t_start: f64,
    t_end: f64,
    magnitude: f64,
    direction: RedirDirection,
}

impl ArmPlan {
    fn sample<R: Rng + ?Sized>(duration: f64, magnitude: f64, direction: RedirDirection, rng: &mut R) -> Self {
        let upper = Vec3::new(0.0, -0.8, 0.6);
        ArmPlan {
            elbow: SHOULDER + upper * UPPER_ARM,
            az_start: -35.0 + rng.random_range(-5.0..=5.0),
            az_end: 35.0 + rng.random_range(-5.0..=5.0),
            elevation: 5.0 + rng.random_range(-3.0..=3.0),
            t_start: rng.random_range(0.3..=0.8),
            t_end: duration - rng.random_range(0.5..=1.0),
            magnitude,
            direction,
        }
    }

    fn pose_at_azimuth(&self, az: f64) -> ArmPose {
        ArmPose {
            shoulder: SHOULDER,
            elbow: self.elbow,
            hand: self.elbow + direction_from_angles(az, self.elevation) * FOREARM,
        }
    }

    /// Physical and virtual arm at trial-relative time `t`.
    fn at(&self, t: f64) -> (ArmPose, ArmPose) {
        let s = ((t - self.t_start) / (self.t_end - self.t_start)).clamp(0.0, 1.0);
        let ramp = 0.5 * (1.0 - libm::cos(core::f64::consts::PI * s));
        let phys = self.pose_at_azimuth(self.az_start + (self.az_end - self.az_start) * ramp);
        let start = self.pose_at_azimuth(self.az_start);
        let target = self.pose_at_azimuth(self.az_end);
        let progress = redirect_progress(&start, &target, &phys).unwrap_or(0.0);
        let virt = apply_offset(&phys, progress, self.magnitude, self.direction).unwrap_or(phys);
        (phys, virt)
    }

    fn virtual_hand_dir(&self, t: f64) -> Vec3 {
        (self.at(t).1.hand - EYE).try_normalize().expect("hand is away from the eye")
    }
}

/// A small refixation saccade while inspecting a stimulus.
#[derive(Debug, Clone, Copy)]
struct Hop {
    start: f64,
    end: f64,
    from: Vec3,
    to: Vec3,
}

/// One gaze excursion to a stimulus and back (trial-relative times).
#[derive(Debug, Clone)]
struct Excursion {
    start: f64,
    arrive: f64,
    leave: f64,
    end: f64,
    from: Vec3,
    target: Vec3,
    hops: Vec<Hop>,
}

impl Excursion {
    /// Where gaze rests at the end of the dwell.
    fn last_point(&self) -> Vec3 {
        self.hops.last().map_or(self.target, |h| h.to)
    }

    fn dwell_dir(&self, t: f64) -> Vec3 {
        match self.hops.iter().rev().find(|h| h.start <= t) {
            None => self.target,
            Some(h) if t < h.end => slerp(h.from, h.to, saccade_profile((t - h.start) / (h.end - h.start))),
            Some(h) => h.to,
        }
    }
}

/// `center` displaced by `radius` degrees toward angle `angle` (radians).
fn displaced(center: Vec3, radius: f64, angle: f64) -> Vec3 {
    let u = any_orthogonal(center);
    let w = center.cross(u);
    let axis = u * libm::cos(angle) + w * libm::sin(angle);
    center.rotate_about(axis.cross(center).try_normalize().unwrap_or(u), radius.to_radians())
}

/// Everything needed to generate a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSpec {
    pub id: u32,
    pub condition: Condition,
    pub magnitude: f64,
    pub direction: RedirDirection,
    /// Absolute start time of the trial, seconds.
    pub t0: f64,
    pub duration: f64,
    pub sample_rate: f64,
}

impl TrialSpec {
    pub fn new(id: u32, condition: Condition, magnitude: f64) -> Self {
        TrialSpec {
            id,
            condition,
            magnitude,
            direction: RedirDirection::Horizontal,
            t0: 0.0,
            duration: 8.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

/// A generated trial with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedTrial {
    pub trial: Trial,
    /// Per gaze sample: whether the agent was attending the arm.
    pub attending_arm: Vec<bool>,
    pub attention_fraction: f64,
    pub oracle_probability: f64,
}

/// Ground-truth noticeability of a simulated trial.
pub fn oracle_label(sim: &SimulatedTrial, oracle: &OracleParams) -> f64 {
    oracle.probability(sim.attention_fraction, sim.trial.redir_magnitude)
}

/// Generates one dual-task trial.
pub fn simulate_trial<R: Rng + ?Sized>(
    spec: &TrialSpec,
    profile: &AgentProfile,
    oracle: &OracleParams,
    rng: &mut R,
) -> Result<SimulatedTrial> {
    if !(spec.duration > 0.0 && spec.sample_rate > 0.0) {
        return Err(Error::Invalid("trial duration and sample rate must be positive".into()));
    }
    if !(0.0..=30.0).contains(&spec.magnitude) {
        return Err(Error::Invalid(format!("redirection magnitude {} outside [0, 30]", spec.magnitude)));
    }
    profile.validate()?;
    let plan = ArmPlan::sample(spec.duration, spec.magnitude, spec.direction, rng);

    let mut stimuli = match (spec.condition.stimulus_kind, spec.condition.duration_level, spec.condition.layout) {
        (Some(kind), Some(level), Some(layout)) => {
            schedule_stimuli(spec.duration, level.seconds(), layout, kind, rng)
        }
        (None, None, None) => Vec::new(),
        _ => return Err(Error::Invalid(format!("incomplete condition '{}'", spec.condition))),
    };

    let latency = normal(profile.latency_mean, profile.latency_sd);
    let mut excursions: Vec<Excursion> = Vec::new();
    let mut busy_until = f64::NEG_INFINITY;
    for s in stimuli.iter_mut() {
        let captured = rng.random::<f64>() < profile.capture_probability(s.eccentricity, s.duration);
        let lat = latency.sample(rng).max(MIN_LATENCY);
        let extra = rng.random_range(profile.dwell.0..=profile.dwell.1) * profile.dwell_scale;
        if !captured {
            continue;
        }
        s.response_time = Some(s.onset + lat);
        let start = s.onset + lat;
        if start < busy_until || start >= spec.duration {
            continue;
        }
        let from = plan.virtual_hand_dir(start);
        let target = stimulus_direction(s.eccentricity, s.azimuth);
        let arrive = start + saccade_duration(angle_deg(from, target));
        let leave = arrive.max(s.onset + s.duration) + extra;
        // inspect a lasting stimulus with refixations on alternating sides
        let mut hops = Vec::new();
        let mut at = target;
        let mut angle = rng.random_range(0.0..core::f64::consts::TAU);
        let mut tau = arrive + rng.random_range(0.25..=0.45);
        loop {
            let to = displaced(target, rng.random_range(2.0..=3.5), angle);
            let d = saccade_duration(angle_deg(at, to));
            if tau + d >= leave - 0.1 {
                break;
            }
            hops.push(Hop { start: tau, end: tau + d, from: at, to });
            at = to;
            angle += core::f64::consts::PI + rng.random_range(-0.5..=0.5);
            tau += d + rng.random_range(0.25..=0.45);
        }
        let end = leave + saccade_duration(angle_deg(at, plan.virtual_hand_dir(leave)));
        excursions.push(Excursion { start, arrive, leave, end, from, target, hops });
        busy_until = end;
    }

    let n = libm::round(spec.duration * spec.sample_rate) as usize;
    let dt = 1.0 / spec.sample_rate;
    let rho: f64 = 0.95;
    let innov = libm::sqrt(1.0 - rho * rho);
    let unit = normal(0.0, 1.0);
    let (mut nx, mut ny) = (unit.sample(rng) * profile.gaze_noise, unit.sample(rng) * profile.gaze_noise);
    let drift_rho: f64 = 0.995;
    let mut drift = 0.0;
    let mut blink_left = 0.0;
    let mut pulses: Vec<(f64, f64)> = Vec::new();

    let mut gaze = Vec::with_capacity(n);
    let mut body = Vec::with_capacity(n);
    let mut attending = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        let (phys, virt) = plan.at(t);
        body.push(BodySample {
            t: spec.t0 + t,
            shoulder: phys.shoulder,
            elbow: phys.elbow,
            hand: phys.hand,
            v_shoulder: virt.shoulder,
            v_elbow: virt.elbow,
            v_hand: virt.hand,
        });

        let hand_dir = (virt.hand - EYE).try_normalize().expect("hand is away from the eye");
        let active = excursions.iter().find(|e| t >= e.start && t < e.end);
        let clean = match active {
            None => hand_dir,
            Some(e) if t < e.arrive => slerp(e.from, e.target, saccade_profile((t - e.start) / (e.arrive - e.start))),
            Some(e) if t < e.leave => e.dwell_dir(t),
            Some(e) => slerp(e.last_point(), hand_dir, saccade_profile((t - e.leave) / (e.end - e.leave))),
        };
        attending.push(active.is_none());

        nx = rho * nx + innov * profile.gaze_noise * unit.sample(rng);
        ny = rho * ny + innov * profile.gaze_noise * unit.sample(rng);
        let u = any_orthogonal(clean);
        let w = clean.cross(u);
        let dir = (clean + u * libm::tan(nx.to_radians()) + w * libm::tan(ny.to_radians()))
            .try_normalize()
            .unwrap_or(clean);

        drift = drift_rho * drift + libm::sqrt(1.0 - drift_rho * drift_rho) * 0.05 * unit.sample(rng);
        let dilation: f64 = excursions
            .iter()
            .map(|e| {
                let x = (t - e.start) / 0.9;
                if x > 0.0 {
                    profile.pupil_gain * x * libm::exp(1.0 - x)
                } else {
                    0.0
                }
            })
            .sum();
        let rate = LOAD_PULSE_RATE.0 + if active.is_some() { LOAD_PULSE_RATE.1 } else { 0.0 };
        if rng.random::<f64>() < rate * dt {
            pulses.push((t, rng.random_range(0.04..=0.08)));
        }
        let load: f64 = pulses
            .iter()
            .map(|(p, a)| {
                let x = (t - p) / 0.05;
                if x > 0.0 && x < 20.0 {
                    a * x * libm::exp(1.0 - x)
                } else {
                    0.0
                }
            })
            .sum();
        let pupil = (profile.pupil_baseline + drift + dilation + load).clamp(1.5, 9.0);

        if blink_left <= 0.0 && rng.random::<f64>() < profile.blink_rate * dt {
            blink_left = rng.random_range(0.08..=0.15);
        }
        let blinking = blink_left > 0.0;
        blink_left -= dt;
        let jl = 0.01 * unit.sample(rng);
        let jr = 0.01 * unit.sample(rng);
        gaze.push(GazeSample {
            t: spec.t0 + t,
            gaze_origin: EYE,
            gaze_dir: dir,
            pupil_left: (!blinking).then_some(pupil + jl),
            pupil_right: (!blinking).then_some(pupil + 0.05 + jr),
            valid: !blinking,
        });
    }

    let attention_fraction = if n == 0 {
        1.0
    } else {
        attending.iter().filter(|a| **a).count() as f64 / n as f64
    };
    let oracle_probability = oracle.probability(attention_fraction, spec.magnitude);
    let noticed = rng.random::<f64>() < oracle_probability;
    for s in stimuli.iter_mut() {
        s.onset += spec.t0;
        s.response_time = s.response_time.map(|r| r + spec.t0);
    }
    Ok(SimulatedTrial {
        trial: Trial {
            id: spec.id,
            condition: spec.condition,
            redir_magnitude: spec.magnitude,
            redir_direction: spec.direction,
            gaze,
            body,
            stimuli,
            noticed,
        },
        attending_arm: attending,
        attention_fraction,
        oracle_probability,
    })
}

/// Study-level generation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub n_users: usize,
    pub conditions: Vec<Condition>,
    pub trials_per_condition: usize,
    pub magnitude: f64,
    pub direction: RedirDirection,
    pub trial_duration: f64,
    /// Pause between consecutive trials, seconds.
    pub inter_trial: f64,
    pub sample_rate: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_users: 12,
            conditions: Condition::collection_grid(StimulusKind::Opacity).to_vec(),
            trials_per_condition: 24,
            magnitude: 20.0,
            direction: RedirDirection::Horizontal,
            trial_duration: 8.0,
            inter_trial: 2.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

/// Ground-truth label of one (user, condition) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCell {
    pub user_id: String,
    pub condition: Condition,
    /// Mean oracle probability over the cell's trials.
    pub label: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedStudy {
    pub sessions: Vec<Session>,
    pub profiles: Vec<AgentProfile>,
    pub oracles: Vec<OracleParams>,
    /// Oracle probability of every trial, parallel to `sessions[u].trials`.
    pub trial_probability: Vec<Vec<f64>>,
    /// Attention-on-arm fraction of every trial.
    pub trial_attention: Vec<Vec<f64>>,
}

impl SimulatedStudy {
    /// Mean oracle probability per (user, condition), users in order and
    /// conditions in order of first appearance.
    pub fn oracle_labels(&self) -> Vec<OracleCell> {
        let mut out = Vec::new();
        for (session, probs) in self.sessions.iter().zip(&self.trial_probability) {
            let mut cells: Vec<(Condition, f64, usize)> = Vec::new();
            for (trial, p) in session.trials.iter().zip(probs) {
                match cells.iter_mut().find(|c| c.0 == trial.condition) {
                    Some(c) => {
                        c.1 += p;
                        c.2 += 1;
                    }
                    None => cells.push((trial.condition, *p, 1)),
                }
            }
            out.extend(cells.into_iter().map(|(condition, sum, n)| OracleCell {
                user_id: session.user_id.clone(),
                condition,
                label: sum / n as f64,
            }));
        }
        out
    }
}

/// Mixes a study seed with stream coordinates into an independent RNG seed.
pub fn stream_seed(seed: u64, user: u64, stream: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(seed) ^ user) ^ stream)
}

/// Simulates every user of a study. Each user gets a sampled profile and
/// oracle offset; trials of all conditions are interleaved in a random
/// order and laid out back to back on one session clock. Every trial draws
/// from its own seeded stream, so the result depends only on `seed`.
pub fn simulate_study(config: &StudyConfig, seed: u64) -> Result<SimulatedStudy> {
    if config.conditions.is_empty() || config.trials_per_condition == 0 {
        return Err(Error::Empty("study conditions"));
    }
    let mut study = SimulatedStudy {
        sessions: Vec::with_capacity(config.n_users),
        profiles: Vec::with_capacity(config.n_users),
        oracles: Vec::with_capacity(config.n_users),
        trial_probability: Vec::with_capacity(config.n_users),
        trial_attention: Vec::with_capacity(config.n_users),
    };
    for u in 0..config.n_users {
        let mut user_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, u as u64, u64::MAX));
        let profile = AgentProfile::sample(&mut user_rng);
        let oracle = OracleParams::sample(&mut user_rng);
        let mut order: Vec<Condition> = config
            .conditions
            .iter()
            .flat_map(|c| core::iter::repeat_n(*c, config.trials_per_condition))
            .collect();
        order.shuffle(&mut user_rng);

        let mut session = Session::new(format!("u{:02}", u + 1));
        session.sample_rate = config.sample_rate;
        let mut probs = Vec::with_capacity(order.len());
        let mut attention = Vec::with_capacity(order.len());
        for (i, condition) in order.into_iter().enumerate() {
            let spec = TrialSpec {
                id: i as u32,
                condition,
                magnitude: config.magnitude,
                direction: config.direction,
                t0: i as f64 * (config.trial_duration + config.inter_trial),
                duration: config.trial_duration,
                sample_rate: config.sample_rate,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, u as u64, i as u64));
            let sim = simulate_trial(&spec, &profile, &oracle, &mut rng)?;
            probs.push(sim.oracle_probability);
            attention.push(sim.attention_fraction);
            session.trials.push(sim.trial);
        }
        study.sessions.push(session);
        study.profiles.push(profile);
        study.oracles.push(oracle);
        study.trial_probability.push(probs);
        study.trial_attention.push(attention);
    }
    Ok(study)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{trajectory_ratio, ArmFrame, DurationLevel};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn schedule_gaps_and_rings() {
        let mut r = rng(1);
        for _ in 0..200 {
            for (layout, ecc) in [(Layout::Central, 5.0), (Layout::Near, 30.0), (Layout::Mid, 60.0)] {
                let ev = schedule_stimuli(20.0, 0.2, layout, StimulusKind::Color, &mut r);
                assert!(!ev.is_empty());
                assert!((1.0..=3.0).contains(&ev[0].onset));
                for w in ev.windows(2) {
                    let gap = w[1].onset - (w[0].onset + w[0].duration);
                    assert!((1.0 - 1e-12..=3.0 + 1e-12).contains(&gap), "{gap}");
                }
                assert!(ev.iter().all(|e| e.eccentricity == ecc && (0.0..360.0).contains(&e.azimuth)));
                assert!(ev.last().unwrap().onset + 0.2 <= 20.0);
            }
        }
        let a = schedule_stimuli(30.0, 2.0, Layout::Dense, StimulusKind::Scale, &mut rng(9));
        let b = schedule_stimuli(30.0, 2.0, Layout::Dense, StimulusKind::Scale, &mut rng(9));
        assert_eq!(a, b);
    }

    #[test]
    fn baseline_gaze_tracks_virtual_hand() {
        for seed in 0..5 {
            let spec = TrialSpec::new(0, Condition::BASELINE, 20.0);
            let sim = simulate_trial(&spec, &AgentProfile::default(), &OracleParams::default(), &mut rng(seed)).unwrap();
            assert!(sim.trial.stimuli.is_empty());
            let close = sim
                .trial
                .gaze
                .iter()
                .zip(&sim.trial.body)
                .filter(|(g, b)| angle_deg(g.gaze_dir, (b.v_hand - g.gaze_origin).try_normalize().unwrap()) <= 3.0)
                .count();
            assert!(close as f64 >= 0.95 * sim.trial.gaze.len() as f64);
            assert_eq!(sim.attention_fraction, 1.0);
            sim.trial.validate(1.0 / 60.0).unwrap();
        }
    }

    #[test]
    fn full_capture_lowers_attention() {
        let profile = AgentProfile { capture: [[1.0; 3]; 3], ..AgentProfile::default() };
        let cond = Condition::new(StimulusKind::Opacity, DurationLevel::Long, Layout::Central);
        for seed in 0..20 {
            let base = simulate_trial(&TrialSpec::new(0, Condition::BASELINE, 20.0), &profile, &OracleParams::default(), &mut rng(seed))
                .unwrap();
            let stim = simulate_trial(&TrialSpec::new(0, cond, 20.0), &profile, &OracleParams::default(), &mut rng(seed)).unwrap();
            assert!(stim.attention_fraction < base.attention_fraction);
            assert!(stim.oracle_probability < base.oracle_probability);
        }
    }

    #[test]
    fn response_latency_statistics() {
        let profile = AgentProfile { capture: [[1.0; 3]; 3], ..AgentProfile::default() };
        let cond = Condition::new(StimulusKind::Color, DurationLevel::Short, Layout::Near);
        let mut lat = Vec::new();
        let mut seed = 0;
        while lat.len() < 1000 {
            let spec = TrialSpec { duration: 30.0, ..TrialSpec::new(0, cond, 10.0) };
            let sim = simulate_trial(&spec, &profile, &OracleParams::default(), &mut rng(seed)).unwrap();
            lat.extend(sim.trial.stimuli.iter().map(|s| s.response_time.unwrap() - s.onset));
            seed += 1;
        }
        let mean = lat.iter().sum::<f64>() / lat.len() as f64;
        assert!((mean - 0.327).abs() <= 0.02, "{mean}");
        assert!(lat.iter().all(|l| *l >= MIN_LATENCY - 1e-12));
    }

    #[test]
    fn oracle_is_monotone_and_saturates() {
        let o = OracleParams::default();
        let mut prev = 0.0;
        for k in 0..=100 {
            let p = o.probability(k as f64 / 100.0, 20.0);
            assert!(p >= prev && (0.0..=1.0).contains(&p));
            prev = p;
        }
        let span = o.ceiling - o.floor;
        assert!(o.probability(1.0, 20.0) > o.floor + 0.85 * span);
        assert!(o.probability(0.0, 20.0) < o.floor + 0.01 * span);
    }

    #[test]
    fn redirection_lengthens_virtual_path() {
        let spec = TrialSpec::new(0, Condition::BASELINE, 25.0);
        let sim = simulate_trial(&spec, &AgentProfile::default(), &OracleParams::default(), &mut rng(3)).unwrap();
        let phys = trajectory_ratio(&sim.trial.body, ArmFrame::Physical).unwrap();
        let virt = trajectory_ratio(&sim.trial.body, ArmFrame::Virtual).unwrap();
        assert!(virt > phys, "{virt} vs {phys}");
    }

    #[test]
    fn study_shape_and_determinism() {
        let config = StudyConfig { n_users: 2, trials_per_condition: 2, ..StudyConfig::default() };
        let a = simulate_study(&config, 11).unwrap();
        let b = simulate_study(&config, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, simulate_study(&config, 12).unwrap());
        assert_eq!(a.sessions.len(), 2);
        for s in &a.sessions {
            assert_eq!(s.trials.len(), 12);
            s.validate().unwrap();
        }
        assert_eq!(a.oracle_labels().len(), 12);
    }

    #[test]
    fn intense_conditions_lower_noticeability() {
        let config = StudyConfig { n_users: 4, trials_per_condition: 8, ..StudyConfig::default() };
        let study = simulate_study(&config, 5).unwrap();
        let cells = study.oracle_labels();
        let mean = |label: &str| {
            let v: Vec<f64> = cells.iter().filter(|c| c.condition.grid_label() == Some(label)).map(|c| c.label).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean("CL") < mean("CS"));
        assert!(mean("NL") < mean("NS"));
        assert!(mean("ML") < mean("MS"));
        assert!(mean("CL") < mean("ML"));
        assert!(mean("CS") < mean("MS"));
    }
}
