//! Minimal 3-vector algebra used by the gaze and arm geometry.

use core::ops::{Add, AddAssign, Mul, Neg, Sub};

/// World up axis. Positions are meters with `y` up, `x` right, `z` forward.
pub const UP: Vec3 = Vec3::new(0.0, 1.0, 0.0);
/// World right axis.
pub const RIGHT: Vec3 = Vec3::new(1.0, 0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "[f64; 3]", into = "[f64; 3]"))]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn try_normalize(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 1e-12 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(self, o: Vec3, s: f64) -> Vec3 {
        self + (o - self) * s
    }

    /// Rodrigues rotation of `self` about the unit `axis` by `angle` radians.
    pub fn rotate_about(self, axis: Vec3, angle: f64) -> Vec3 {
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        self * c + axis.cross(self) * s + axis * (axis.dot(self) * (1.0 - c))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Great-circle angle between two vectors in radians, in `[0, π]`.
///
/// Uses `atan2(|a×b|, a·b)`, which stays accurate for nearly parallel inputs.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    libm::atan2(a.cross(b).norm(), a.dot(b))
}

/// Same as [`angle_between`] but in degrees.
pub fn angle_deg(a: Vec3, b: Vec3) -> f64 {
    angle_between(a, b).to_degrees()
}

/// Unit direction at the given azimuth/elevation (degrees). Azimuth 0 is
/// forward (+z), positive azimuth turns toward +x; elevation is up from the
/// horizontal plane.
pub fn direction_from_angles(azimuth_deg: f64, elevation_deg: f64) -> Vec3 {
    let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
    Vec3::new(
        libm::cos(el) * libm::sin(az),
        libm::sin(el),
        libm::cos(el) * libm::cos(az),
    )
}

/// Any unit vector orthogonal to `v` (which must be unit length).
pub fn any_orthogonal(v: Vec3) -> Vec3 {
    let helper = if libm::fabs(v.y) < 0.9 { UP } else { RIGHT };
    v.cross(helper).try_normalize().unwrap_or(RIGHT)
}

/// Spherical interpolation between unit vectors.
pub fn slerp(a: Vec3, b: Vec3, s: f64) -> Vec3 {
    let theta = angle_between(a, b);
    if theta < 1e-12 {
        return a;
    }
    let axis = a.cross(b).try_normalize().unwrap_or_else(|| any_orthogonal(a));
    a.rotate_about(axis, theta * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_of_orthogonal_vectors() {
        let a = Vec3::new(1.0, 0.0, 0.0);
        let b = Vec3::new(0.0, 0.0, 2.0);
        assert!((angle_deg(a, b) - 90.0).abs() < 1e-12);
        assert_eq!(angle_deg(a, a), 0.0);
    }

    #[test]
    fn rotation_preserves_length() {
        let v = Vec3::new(0.3, -0.2, 0.9);
        let r = v.rotate_about(UP, 0.7);
        assert!((r.norm() - v.norm()).abs() < 1e-12);
        assert!((r.y - v.y).abs() < 1e-12);
    }

    #[test]
    fn slerp_halfway() {
        let a = Vec3::new(1.0, 0.0, 0.0);
        let b = Vec3::new(0.0, 1.0, 0.0);
        let m = slerp(a, b, 0.5);
        assert!((angle_deg(a, m) - 45.0).abs() < 1e-9);
        assert!((angle_deg(m, b) - 45.0).abs() < 1e-9);
    }
}
