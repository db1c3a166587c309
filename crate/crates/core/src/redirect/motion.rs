use alloc::vec::Vec;

use super::geometry::ArmPose;
use crate::geom::angle_deg;
use crate::model::BodySample;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MotionParams {
    /// Forearm angular speed (deg/s) needed to enter the moving state.
    pub speed_threshold: f64,
    /// How long the speed must stay above threshold before entering.
    pub hold: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams { speed_threshold: 5.0, hold: 0.2 }
    }
}

/// Hysteretic moving/static gate fed with timestamped angular speeds.
/// Exits when the speed drops below half the entry threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionGate {
    params: MotionParams,
    above_since: Option<f64>,
    moving: bool,
}

impl MotionGate {
    pub fn new(params: MotionParams) -> Self {
        MotionGate { params, above_since: None, moving: false }
    }

    pub fn is_moving(&self) -> bool {
        self.moving
    }

    pub fn update(&mut self, t: f64, speed: f64) -> bool {
        let thr = self.params.speed_threshold;
        if speed > thr {
            let since = *self.above_since.get_or_insert(t);
            if t - since >= self.params.hold - 1e-9 {
                self.moving = true;
            }
        } else {
            self.above_since = None;
        }
        if self.moving && speed < 0.5 * thr {
            self.moving = false;
        }
        self.moving
    }
}

/// Physical forearm angular speed (deg/s) by central differences,
/// one-sided at the ends. Samples with a degenerate forearm get speed 0.
pub fn forearm_speed(body: &[BodySample]) -> Vec<f64> {
    let dirs: Vec<Option<crate::Vec3>> = body.iter().map(|b| ArmPose::physical(b).forearm_dir().ok()).collect();
    let n = body.len();
    (0..n)
        .map(|i| {
            let (a, b) = match n {
                0 | 1 => return 0.0,
                _ if i == 0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            match (dirs[a], dirs[b]) {
                (Some(da), Some(db)) if body[b].t > body[a].t => angle_deg(da, db) / (body[b].t - body[a].t),
                _ => 0.0,
            }
        })
        .collect()
}

/// Per-sample moving flag for a recorded body stream.
pub fn motion_state(body: &[BodySample], params: &MotionParams) -> Vec<bool> {
    let mut gate = MotionGate::new(*params);
    body.iter()
        .zip(forearm_speed(body))
        .map(|(b, s)| gate.update(b.t, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Vec3, UP};

    fn stream(seconds: f64, angle_at: impl Fn(f64) -> f64) -> Vec<BodySample> {
        let n = (seconds * 60.0) as usize;
        (0..n)
            .map(|k| {
                let t = k as f64 / 60.0;
                let hand = Vec3::new(0.0, 0.0, 0.28).rotate_about(UP, angle_at(t).to_radians());
                BodySample {
                    t,
                    shoulder: Vec3::new(0.0, 0.3, 0.0),
                    elbow: Vec3::ZERO,
                    hand,
                    v_shoulder: Vec3::new(0.0, 0.3, 0.0),
                    v_elbow: Vec3::ZERO,
                    v_hand: hand,
                }
            })
            .collect()
    }

    #[test]
    fn static_arm_never_moves() {
        assert!(motion_state(&stream(3.0, |_| 10.0), &MotionParams::default()).iter().all(|m| !m));
    }

    #[test]
    fn sweep_moves_after_hold() {
        let s = stream(2.0, |t| 30.0 * t);
        let m = motion_state(&s, &MotionParams::default());
        let first = m.iter().position(|x| *x).unwrap();
        assert!((s[first].t - 0.2).abs() < 0.02);
        assert!(m[first..].iter().all(|x| *x));
    }

    #[test]
    fn twitch_is_filtered() {
        // 50 ms burst at 100°/s
        let s = stream(2.0, |t| if t < 1.0 { 0.0 } else if t < 1.05 { (t - 1.0) * 100.0 } else { 5.0 });
        assert!(motion_state(&s, &MotionParams::default()).iter().all(|m| !m));
    }

    #[test]
    fn hysteresis_keeps_moving_between_thresholds() {
        let mut g = MotionGate::new(MotionParams::default());
        for k in 0..20 {
            g.update(k as f64 * 0.05, 10.0);
        }
        assert!(g.is_moving());
        assert!(g.update(1.0, 3.0));
        assert!(!g.update(1.05, 2.0));
    }
}
