//! Rigid-body poses parameterized by a translation and three Euler angles.
//!
//! The Euler convention is intrinsic Z-Y-X: the object is first yawed by `psi`
//! about its z axis, then pitched by `theta` about the new y axis, then rolled
//! by `phi` about the resulting x axis. Equivalently `R = Rz(psi) * Ry(theta) * Rx(phi)`.
//! [`rotation_from_euler`] and [`euler_from_rotation`] are the only places that
//! encode this order.

use nalgebra::{Matrix3, Matrix4, Point3, Rotation3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

/// Human-readable name of the Euler convention, recorded in reports.
pub const EULER_CONVENTION: &str = "intrinsic-ZYX (yaw psi, pitch theta, roll phi)";

/// `R = Rz(psi) * Ry(theta) * Rx(phi)`.
#[inline]
pub fn rotation_from_euler(phi: f64, theta: f64, psi: f64) -> Matrix3<f64> {
    Rotation3::from_euler_angles(phi, theta, psi).into_inner()
}

/// Inverse of [`rotation_from_euler`], returning `(phi, theta, psi)` with
/// `theta` in `[-pi/2, pi/2]` and `phi`, `psi` in `(-pi, pi]`.
pub fn euler_from_rotation(r: &Matrix3<f64>) -> (f64, f64, f64) {
    let (phi, theta, psi) = Rotation3::from_matrix_unchecked(*r).euler_angles();
    (wrap_angle(phi), theta, wrap_angle(psi))
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    // rem_euclid maps -pi to pi already; guard the float edge case.
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

/// Object pose: position in meters, orientation as Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, z: f64, phi: f64, theta: f64, psi: f64) -> Self {
        Self {
            x,
            y,
            z,
            phi,
            theta,
            psi,
        }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.x, self.y, self.z, self.phi, self.theta, self.psi)
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        rotation_from_euler(self.phi, self.theta, self.psi)
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|c| c.is_finite())
    }

    /// Same rigid transform with angles brought into their canonical ranges.
    pub fn canonical(&self) -> Self {
        let (phi, theta, psi) = euler_from_rotation(&self.rotation());
        Self::new(self.x, self.y, self.z, phi, theta, psi)
    }

    /// 4x4 homogeneous object-to-world transform.
    pub fn to_transform(&self) -> Matrix4<f64> {
        let mut t = Matrix4::identity();
        t.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation());
        t.fixed_view_mut::<3, 1>(0, 3)
            .copy_from(&self.translation());
        t
    }

    /// Maps a point from the object frame into the world frame.
    pub fn to_world(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation() * p.coords + self.translation())
    }

    /// Expresses a world-frame point in the object frame (inverse transform).
    pub fn to_object(&self, y: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation().transpose() * (y.coords - self.translation()))
    }
}

/// Homogeneous transform for `p`.
pub fn pose_to_transform(p: &Pose) -> Matrix4<f64> {
    p.to_transform()
}

/// A world-frame measurement expressed in the object frame of pose `p`.
pub fn transform_point_into_object_frame(y: &Point3<f64>, p: &Pose) -> Point3<f64> {
    p.to_object(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rx(a: f64) -> Matrix3<f64> {
        let (s, c) = a.sin_cos();
        Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
    }
    fn ry(a: f64) -> Matrix3<f64> {
        let (s, c) = a.sin_cos();
        Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
    }
    fn rz(a: f64) -> Matrix3<f64> {
        let (s, c) = a.sin_cos();
        Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    }

    #[test]
    fn zero_pose_is_identity() {
        assert_eq!(pose_to_transform(&Pose::default()), Matrix4::identity());
    }

    #[test]
    fn pure_translation() {
        let t = pose_to_transform(&Pose::new(1.0, 2.0, 3.0, 0.0, 0.0, 0.0));
        assert_eq!(t.fixed_view::<3, 3>(0, 0).into_owned(), Matrix3::identity());
        assert_eq!(t[(0, 3)], 1.0);
        assert_eq!(t[(1, 3)], 2.0);
        assert_eq!(t[(2, 3)], 3.0);
        assert_eq!(t[(3, 3)], 1.0);
    }

    #[test]
    fn translation_cancels_in_object_frame() {
        let y = Point3::new(1.0, 0.0, 0.0);
        let p = Pose::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(transform_point_into_object_frame(&y, &p), Point3::origin());
        assert_eq!(
            transform_point_into_object_frame(&Point3::origin(), &Pose::default()),
            Point3::origin()
        );
    }

    #[test]
    fn gimbal_lock_extraction_reproduces_rotation() {
        let p = Pose::new(0.0, 0.0, 0.0, 0.3, FRAC_PI_2, -0.7);
        let c = p.canonical();
        assert!((c.rotation() - p.rotation()).amax() < 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.5) - 0.5).abs() < 1e-15);
        assert!((wrap_angle(-0.5 - 4.0 * PI) + 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn transform_matches_composed_axis_rotations(
            x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64,
            phi in -4.0..4.0f64, theta in -4.0..4.0f64, psi in -4.0..4.0f64,
        ) {
            let p = Pose::new(x, y, z, phi, theta, psi);
            let t = pose_to_transform(&p);
            let oracle = rz(psi) * ry(theta) * rx(phi);
            let r = t.fixed_view::<3, 3>(0, 0).into_owned();
            prop_assert!((r - oracle).amax() < 1e-12);
            prop_assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-12);
            prop_assert_eq!(t[(0, 3)], x);
            prop_assert_eq!(t[(1, 3)], y);
            prop_assert_eq!(t[(2, 3)], z);
        }

        #[test]
        fn euler_round_trip_in_interior(
            phi in -3.1..3.1f64, theta in -1.5..1.5f64, psi in -3.1..3.1f64,
        ) {
            let (a, b, c) = euler_from_rotation(&rotation_from_euler(phi, theta, psi));
            prop_assert!((a - phi).abs() < 1e-9);
            prop_assert!((b - theta).abs() < 1e-9);
            prop_assert!((c - psi).abs() < 1e-9);
        }

        #[test]
        fn canonical_angles_in_range(
            phi in -20.0..20.0f64, theta in -20.0..20.0f64, psi in -20.0..20.0f64,
        ) {
            let p = Pose::new(0.0, 0.0, 0.0, phi, theta, psi);
            let c = p.canonical();
            prop_assert!(c.theta >= -FRAC_PI_2 && c.theta <= FRAC_PI_2);
            prop_assert!(c.phi > -PI && c.phi <= PI);
            prop_assert!(c.psi > -PI && c.psi <= PI);
            prop_assert!((c.rotation() - p.rotation()).amax() < 1e-9);
        }

        #[test]
        fn world_object_round_trip(
            px in -2.0..2.0f64, py in -2.0..2.0f64, pz in -2.0..2.0f64,
            x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64,
            phi in -4.0..4.0f64, theta in -4.0..4.0f64, psi in -4.0..4.0f64,
        ) {
            let p = Pose::new(x, y, z, phi, theta, psi);
            let q = Point3::new(px, py, pz);
            let back = p.to_object(&p.to_world(&q));
            prop_assert!((back - q).amax() < 1e-12);
        }
    }
}
