//! Unit vectors on the sphere and the two rotation families every backend
//! shares: rotations about the x axis and about the z axis.
//!
//! Conventions, fixed here once for the whole crate:
//!
//! * rotations are right-handed, so `rotate_x(Z, pi/2) == -Y`,
//! * `rotate_z` adds its angle to the azimuth,
//! * angles are radians; normalized angles live in `[0, 2*pi)`,
//! * spherical coordinates are `(theta, phi)` with `theta` the polar angle
//!   from +z and `phi` the azimuth; at the poles `phi` is reported as 0.

use std::f64::consts::TAU;
use std::ops::Neg;

use thiserror::Error;

/// Absolute per-component tolerance for comparing vectors.
pub const VEC_TOL: f64 = 1e-9;

/// Tolerance on the unit-norm invariant of [`UnitVec3`].
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("cannot normalize a vector with norm {0:e}")]
    DegenerateVector(f64),
}

/// Reduce an angle into `[0, 2*pi)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let reduced = angle.rem_euclid(TAU);
    // rem_euclid of a tiny negative number can round up to 2*pi itself.
    if reduced >= TAU {
        0.0
    } else {
        reduced
    }
}

/// Distance between two angles on the circle, in `[0, pi]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let diff = (a - b).rem_euclid(TAU);
    diff.min(TAU - diff)
}

pub(crate) fn rotate_x_components(v: [f64; 3], angle: f64) -> [f64; 3] {
    let (sin, cos) = angle.sin_cos();
    [v[0], v[1] * cos - v[2] * sin, v[1] * sin + v[2] * cos]
}

pub(crate) fn rotate_z_components(v: [f64; 3], angle: f64) -> [f64; 3] {
    let (sin, cos) = angle.sin_cos();
    [v[0] * cos - v[1] * sin, v[0] * sin + v[1] * cos, v[2]]
}

/// A point on the unit sphere.
///
/// The components always satisfy `x^2 + y^2 + z^2 = 1` within [`NORM_TOL`];
/// construction normalizes and rotations preserve the norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3 {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitVec3 {
    pub const X: UnitVec3 = UnitVec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: UnitVec3 = UnitVec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: UnitVec3 = UnitVec3 { x: 0.0, y: 0.0, z: 1.0 };

    /// Normalize `(x, y, z)` onto the sphere.
    pub fn new(x: f64, y: f64, z: f64) -> Result<UnitVec3, GeometryError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(GeometryError::DegenerateVector(norm));
        }
        Ok(UnitVec3 { x: x / norm, y: y / norm, z: z / norm })
    }

    pub(crate) fn from_components_unchecked(c: [f64; 3]) -> UnitVec3 {
        let v = UnitVec3 { x: c[0], y: c[1], z: c[2] };
        debug_assert!((v.norm() - 1.0).abs() < NORM_TOL);
        v
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &UnitVec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Right-handed rotation about the x axis.
    pub fn rotate_x(&self, angle: f64) -> UnitVec3 {
        UnitVec3::from_components_unchecked(rotate_x_components(self.components(), angle))
    }

    /// Right-handed rotation about the z axis (adds `angle` to the azimuth).
    pub fn rotate_z(&self, angle: f64) -> UnitVec3 {
        UnitVec3::from_components_unchecked(rotate_z_components(self.components(), angle))
    }

    /// Polar and azimuthal angles of the vector.
    pub fn to_spherical(&self) -> Spherical {
        let theta = self.z.clamp(-1.0, 1.0).acos();
        let phi = if self.x == 0.0 && self.y == 0.0 {
            0.0
        } else {
            normalize_angle(self.y.atan2(self.x))
        };
        Spherical { theta, phi }
    }

    pub fn from_spherical(s: Spherical) -> UnitVec3 {
        let (sin_theta, cos_theta) = s.theta.sin_cos();
        let (sin_phi, cos_phi) = s.phi.sin_cos();
        UnitVec3::from_components_unchecked([sin_theta * cos_phi, sin_theta * sin_phi, cos_theta])
    }

    /// Componentwise comparison within [`VEC_TOL`].
    pub fn approx_eq(&self, other: &UnitVec3) -> bool {
        (self.x - other.x).abs() <= VEC_TOL
            && (self.y - other.y).abs() <= VEC_TOL
            && (self.z - other.z).abs() <= VEC_TOL
    }
}

impl Neg for UnitVec3 {
    type Output = UnitVec3;

    fn neg(self) -> UnitVec3 {
        UnitVec3 { x: -self.x, y: -self.y, z: -self.z }
    }
}

/// Spherical coordinates `(theta, phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spherical {
    pub theta: f64,
    pub phi: f64,
}

impl Spherical {
    pub fn new(theta: f64, phi: f64) -> Spherical {
        Spherical { theta, phi }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn rotate_x_takes_north_pole_to_minus_y() {
        // This sign fixes the handedness convention for the whole crate.
        let v = UnitVec3::Z.rotate_x(FRAC_PI_2);
        assert!(v.approx_eq(&-UnitVec3::Y), "got {v:?}");
    }

    #[test]
    fn rotate_x_quarter_turns_cycle() {
        assert!(UnitVec3::Y.rotate_x(FRAC_PI_2).approx_eq(&UnitVec3::Z));
        assert!(UnitVec3::Z.rotate_x(PI).approx_eq(&-UnitVec3::Z));
        assert!(UnitVec3::X.rotate_x(1.234).approx_eq(&UnitVec3::X));
    }

    #[test]
    fn rotate_z_adds_to_azimuth() {
        let v = UnitVec3::X.rotate_z(FRAC_PI_2);
        assert!(v.approx_eq(&UnitVec3::Y), "got {v:?}");
        let w = UnitVec3::from_spherical(Spherical::new(1.0, 0.3)).rotate_z(0.4);
        assert_abs_diff_eq!(w.to_spherical().phi, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(w.to_spherical().theta, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spherical_of_minus_y() {
        let s = (-UnitVec3::Y).to_spherical();
        assert_abs_diff_eq!(s.theta, FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.phi, 3.0 * FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn poles_report_zero_azimuth() {
        assert_eq!(UnitVec3::Z.to_spherical().phi, 0.0);
        assert_eq!((-UnitVec3::Z).to_spherical().phi, 0.0);
        assert_eq!((-UnitVec3::Z).to_spherical().theta, PI);
    }

    #[test]
    fn tilt_then_swing_reaches_target_direction() {
        // Rotating the pole down by theta and then around by phi + pi/2
        // lands exactly on the (theta, phi) direction.
        for &(theta, phi) in &[(0.7, 0.0), (1.1, 2.5), (2.9, 5.9), (FRAC_PI_4, PI)] {
            let reached = UnitVec3::Z.rotate_x(theta).rotate_z(phi + FRAC_PI_2);
            let target = UnitVec3::from_spherical(Spherical::new(theta, phi));
            assert!(reached.approx_eq(&target), "theta={theta} phi={phi}: {reached:?}");
        }
    }

    #[test]
    fn degenerate_vectors_are_rejected() {
        assert!(UnitVec3::new(0.0, 0.0, 0.0).is_err());
        assert!(UnitVec3::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn normalize_angle_wraps_into_half_open_range() {
        assert_abs_diff_eq!(normalize_angle(-FRAC_PI_2), 3.0 * FRAC_PI_2, epsilon = 1e-12);
        assert_eq!(normalize_angle(TAU), 0.0);
        assert_eq!(normalize_angle(-1e-20), 0.0);
        assert!(normalize_angle(7.0 * PI) < TAU);
    }

    #[test]
    fn angle_distance_is_symmetric_across_the_wrap() {
        assert_abs_diff_eq!(angle_distance(0.01, TAU - 0.01), 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(angle_distance(PI, 0.0), PI, epsilon = 1e-12);
    }

    fn arb_unit_vec() -> impl Strategy<Value = UnitVec3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter_map("vector too short to normalize", |(x, y, z)| {
                UnitVec3::new(x, y, z).ok()
            })
    }

    proptest! {
        #[test]
        fn rotations_preserve_the_norm(v in arb_unit_vec(), a in -10.0f64..10.0) {
            prop_assert!((v.rotate_x(a).norm() - 1.0).abs() < NORM_TOL);
            prop_assert!((v.rotate_z(a).norm() - 1.0).abs() < NORM_TOL);
        }

        #[test]
        fn rotations_compose_additively(v in arb_unit_vec(), a in -6.0f64..6.0, b in -6.0f64..6.0) {
            prop_assert!(v.rotate_x(a).rotate_x(b).approx_eq(&v.rotate_x(a + b)));
            prop_assert!(v.rotate_z(a).rotate_z(b).approx_eq(&v.rotate_z(a + b)));
        }

        #[test]
        fn rotations_invert(v in arb_unit_vec(), a in -6.0f64..6.0) {
            prop_assert!(v.rotate_x(a).rotate_x(-a).approx_eq(&v));
            prop_assert!(v.rotate_z(a).rotate_z(-a).approx_eq(&v));
        }

        #[test]
        fn spherical_round_trip(v in arb_unit_vec()) {
            let back = UnitVec3::from_spherical(v.to_spherical());
            prop_assert!(back.approx_eq(&v), "{v:?} -> {back:?}");
        }

        #[test]
        fn rotate_z_fixes_polar_angle(v in arb_unit_vec(), a in -6.0f64..6.0) {
            prop_assert!((v.rotate_z(a).z() - v.z()).abs() < 1e-12);
        }
    }
}
