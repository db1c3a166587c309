use core::fmt;
use core::str::FromStr;

use crate::error::Error;
use crate::model::RedirDirection;

/// Three-level noticeability class driving the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NoticeClass {
    Low,
    Medium,
    High,
}

impl NoticeClass {
    /// Maps a three-class classifier index (0 = Low) to a class.
    pub fn from_index(i: usize) -> Option<Self> {
        [NoticeClass::Low, NoticeClass::Medium, NoticeClass::High].get(i).copied()
    }
}

impl fmt::Display for NoticeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoticeClass::Low => "Low",
            NoticeClass::Medium => "Medium",
            NoticeClass::High => "High",
        })
    }
}

impl FromStr for NoticeClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        [NoticeClass::Low, NoticeClass::Medium, NoticeClass::High]
            .into_iter()
            .find(|c| alloc::format!("{c}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(alloc::format!("unknown class '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RedirectionPolicy {
    pub low: f64,
    pub medium: f64,
    pub high: f64,
    pub initial: f64,
    /// Motion-seconds to move between two offsets.
    pub transition: f64,
    pub direction: RedirDirection,
    /// A new class must persist this long (wall time) before it retargets.
    pub class_hold: f64,
}

impl Default for RedirectionPolicy {
    fn default() -> Self {
        RedirectionPolicy {
            low: 25.0,
            medium: 15.0,
            high: 5.0,
            initial: 10.0,
            transition: 10.0,
            direction: RedirDirection::Horizontal,
            class_hold: 0.0,
        }
    }
}

impl RedirectionPolicy {
    pub fn tier(&self, class: NoticeClass) -> f64 {
        match class {
            NoticeClass::Low => self.low,
            NoticeClass::Medium => self.medium,
            NoticeClass::High => self.high,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if [self.low, self.medium, self.high, self.initial].iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Invalid("redirection offsets must be >= 0".into()));
        }
        if !(self.transition > 0.0) || !(self.class_hold >= 0.0) {
            return Err(Error::Invalid("transition must be > 0 and class hold >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControllerState {
    pub theta_applied: f64,
    pub theta_from: f64,
    pub theta_target: f64,
    /// Motion-seconds spent in the current transition.
    pub elapsed: f64,
    pub last_class: Option<NoticeClass>,
    pub arm_moving: bool,
    /// Candidate class and how long it has been observed, while debouncing.
    pub pending: Option<(NoticeClass, f64)>,
}

impl ControllerState {
    pub fn new(policy: &RedirectionPolicy) -> Self {
        ControllerState {
            theta_applied: policy.initial,
            theta_from: policy.initial,
            theta_target: policy.initial,
            elapsed: policy.transition,
            last_class: None,
            arm_moving: false,
            pending: None,
        }
    }
}

/// Advances the controller by `dt` seconds.
///
/// A class change retargets from the current offset and restarts the
/// transition clock; the clock (and thus the offset) only advances while
/// the arm is moving.
pub fn controller_step(
    state: &ControllerState,
    class: Option<NoticeClass>,
    arm_moving: bool,
    dt: f64,
    policy: &RedirectionPolicy,
) -> ControllerState {
    let mut s = *state;
    s.arm_moving = arm_moving;
    if let Some(c) = class.filter(|c| Some(*c) != s.last_class) {
        let seen = match s.pending {
            Some((p, t)) if p == c => t + dt,
            _ => 0.0,
        };
        if seen >= policy.class_hold {
            s.last_class = Some(c);
            s.pending = None;
            s.theta_from = s.theta_applied;
            s.theta_target = policy.tier(c);
            s.elapsed = 0.0;
        } else {
            s.pending = Some((c, seen));
        }
    } else {
        s.pending = None;
    }
    if arm_moving && dt > 0.0 {
        s.elapsed = (s.elapsed + dt).min(policy.transition);
        s.theta_applied = s.theta_from + (s.theta_target - s.theta_from) * (s.elapsed / policy.transition);
    }
    s
}

/// Owning wrapper around [`controller_step`].
#[derive(Debug, Clone)]
pub struct Controller {
    pub policy: RedirectionPolicy,
    pub state: ControllerState,
}

impl Controller {
    pub fn new(policy: RedirectionPolicy) -> Self {
        Controller { state: ControllerState::new(&policy), policy }
    }

    pub fn step(&mut self, class: Option<NoticeClass>, arm_moving: bool, dt: f64) -> f64 {
        self.state = controller_step(&self.state, class, arm_moving, dt, &self.policy);
        self.state.theta_applied
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_controller_starts_at_ten() {
        assert_eq!(Controller::new(RedirectionPolicy::default()).state.theta_applied, 10.0);
    }

    #[test]
    fn low_reaches_25_after_ten_moving_seconds() {
        let mut c = Controller::new(RedirectionPolicy::default());
        let dt = 0.01;
        let mut prev = 10.0;
        for k in 1..=1000 {
            let th = c.step(Some(NoticeClass::Low), true, dt);
            assert!((th - prev - 15.0 * dt / 10.0).abs() < 1e-6, "step {k}");
            prev = th;
        }
        assert!((prev - 25.0).abs() < 1e-6);
        assert_eq!(c.step(Some(NoticeClass::Low), true, dt), 25.0);
    }

    #[test]
    fn static_arm_freezes_offset() {
        let mut c = Controller::new(RedirectionPolicy::default());
        c.step(Some(NoticeClass::High), true, 2.0);
        let held = c.state.theta_applied;
        for _ in 0..500 {
            assert_eq!(c.step(Some(NoticeClass::High), false, 0.1), held);
        }
        assert!((held - 9.0).abs() < 1e-12);
    }

    #[test]
    fn retarget_mid_transition_is_continuous() {
        let mut c = Controller::new(RedirectionPolicy::default());
        c.step(Some(NoticeClass::Low), true, 5.0);
        assert!((c.state.theta_applied - 17.5).abs() < 1e-12);
        let th = c.step(Some(NoticeClass::High), true, 1.0);
        assert_eq!(c.state.theta_from, 17.5);
        assert!((th - (17.5 - 12.5 / 10.0)).abs() < 1e-12);
    }

    #[test]
    fn class_hold_debounces() {
        let policy = RedirectionPolicy { class_hold: 1.0, ..RedirectionPolicy::default() };
        let mut c = Controller::new(policy);
        c.step(Some(NoticeClass::Low), true, 0.5);
        c.step(Some(NoticeClass::Medium), true, 0.5);
        assert_eq!(c.state.last_class, None);
        c.step(Some(NoticeClass::Low), true, 0.5);
        c.step(Some(NoticeClass::Low), true, 0.5);
        c.step(Some(NoticeClass::Low), true, 0.5);
        assert_eq!(c.state.last_class, Some(NoticeClass::Low));
    }

    #[test]
    fn names_round_trip() {
        for c in [NoticeClass::Low, NoticeClass::Medium, NoticeClass::High] {
            assert_eq!(alloc::string::ToString::to_string(&c).parse::<NoticeClass>().unwrap(), c);
        }
    }
}
