use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{angle_between, angle_deg, Vec3, RIGHT, UP};
use crate::model::{BodySample, RedirDirection};

/// Joint positions of one body configuration, in meters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pose {
    pub joints: Vec<Vec3>,
}

impl Pose {
    pub fn new(joints: Vec<Vec3>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::Empty("pose joints"));
        }
        if joints.iter().any(|j| !j.is_finite()) {
            return Err(Error::NonFinite("pose joints"));
        }
        Ok(Pose { joints })
    }
}

/// Largest per-joint L1 displacement between two poses.
pub fn skeletal_distance(a: &Pose, b: &Pose) -> Result<f64> {
    if a.joints.len() != b.joints.len() {
        return Err(Error::Invalid(format!(
            "joint counts differ ({} vs {})",
            a.joints.len(),
            b.joints.len()
        )));
    }
    Ok(a.joints
        .iter()
        .zip(&b.joints)
        .map(|(p, q)| libm::fabs(p.x - q.x) + libm::fabs(p.y - q.y) + libm::fabs(p.z - q.z))
        .fold(0.0, f64::max))
}

/// Shoulder, elbow and hand of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArmPose {
    pub shoulder: Vec3,
    pub elbow: Vec3,
    pub hand: Vec3,
}

impl ArmPose {
    pub fn physical(b: &BodySample) -> Self {
        ArmPose { shoulder: b.shoulder, elbow: b.elbow, hand: b.hand }
    }

    pub fn virtual_of(b: &BodySample) -> Self {
        ArmPose { shoulder: b.v_shoulder, elbow: b.v_elbow, hand: b.v_hand }
    }

    pub fn forearm_dir(&self) -> Result<Vec3> {
        (self.hand - self.elbow)
            .try_normalize()
            .ok_or(Error::Degenerate("hand coincides with elbow"))
    }

    pub fn to_pose(&self) -> Pose {
        Pose { joints: alloc::vec![self.shoulder, self.elbow, self.hand] }
    }
}

/// Fraction of the start-to-target forearm rotation covered by `current`,
/// clamped to [0, 1].
pub fn redirect_progress(start: &ArmPose, target: &ArmPose, current: &ArmPose) -> Result<f64> {
    let s = start.forearm_dir()?;
    let total = angle_between(s, target.forearm_dir()?);
    if total < 1e-9 {
        return Err(Error::Degenerate("start and target forearm directions coincide"));
    }
    let done = angle_between(s, current.forearm_dir()?);
    Ok((done / total).clamp(0.0, 1.0))
}

/// Rotation axis used for an offset in `direction` given the physical
/// forearm direction. Vertical uses `up × forearm`, falling back to world
/// right when the forearm is (nearly) vertical.
pub fn offset_axis(direction: RedirDirection, forearm: Vec3) -> Vec3 {
    match direction {
        RedirDirection::Horizontal => UP,
        RedirDirection::Vertical => {
            let axis = UP.cross(forearm);
            if axis.norm() > 1e-6 {
                axis * (1.0 / axis.norm())
            } else {
                RIGHT
            }
        }
    }
}

/// Rotates the forearm about the elbow by `progress × θ_max` degrees.
/// Shoulder and elbow are unchanged; forearm length is preserved.
pub fn apply_offset(physical: &ArmPose, progress: f64, theta_max: f64, direction: RedirDirection) -> Result<ArmPose> {
    let forearm = physical.hand - physical.elbow;
    let dir = physical.forearm_dir()?;
    let axis = offset_axis(direction, dir);
    let angle = (progress * theta_max).to_radians();
    Ok(ArmPose {
        shoulder: physical.shoulder,
        elbow: physical.elbow,
        hand: physical.elbow + forearm.rotate_about(axis, angle),
    })
}

/// Azimuth (degrees) of a vector's horizontal projection; 0 is +z, positive toward +x.
pub fn azimuth_deg(v: Vec3) -> f64 {
    libm::atan2(v.x, v.z).to_degrees()
}

/// Angle in degrees between two arm poses' forearms.
pub fn forearm_angle(a: &ArmPose, b: &ArmPose) -> Result<f64> {
    Ok(angle_deg(a.forearm_dir()?, b.forearm_dir()?))
}
