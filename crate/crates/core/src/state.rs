//! Cartesian and spherical state representations.

use core::f64::consts::{FRAC_PI_2, TAU};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

/// Position (km) and velocity (km/s) in the body-centred inertial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateCartesian {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl StateCartesian {
    pub fn new(position: Vec3, velocity: Vec3) -> Self {
        StateCartesian { position, velocity }
    }

    pub(crate) fn to_array(self) -> [f64; 6] {
        let (r, v) = (self.position, self.velocity);
        [r.x, r.y, r.z, v.x, v.y, v.z]
    }

    pub(crate) fn from_array(y: &[f64; 6]) -> Self {
        StateCartesian {
            position: Vec3::new(y[0], y[1], y[2]),
            velocity: Vec3::new(y[3], y[4], y[5]),
        }
    }
}

/// A 3-vector as magnitude, azimuth in `[0, 2π)` and elevation in `[-π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalVector {
    pub magnitude: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

impl SphericalVector {
    pub fn to_array(self) -> [f64; 3] {
        [self.magnitude, self.azimuth, self.elevation]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        SphericalVector {
            magnitude: a[0],
            azimuth: a[1],
            elevation: a[2],
        }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_two_pi(angle: f64) -> f64 {
    let mut a = angle % TAU;
    if a < 0.0 {
        a += TAU;
    }
    // -tiny % TAU + TAU rounds to TAU
    if a >= TAU {
        a = 0.0;
    }
    a
}

/// The zero vector maps to magnitude 0 with both angles 0; the poles have azimuth 0.
pub fn cart_to_spherical(v: &Vec3) -> SphericalVector {
    let rho = v.x.hypot(v.y);
    let magnitude = rho.hypot(v.z);
    if magnitude == 0.0 {
        return SphericalVector {
            magnitude: 0.0,
            azimuth: 0.0,
            elevation: 0.0,
        };
    }
    let azimuth = if rho == 0.0 {
        0.0
    } else {
        wrap_two_pi(v.y.atan2(v.x))
    };
    let elevation = v.z.atan2(rho).clamp(-FRAC_PI_2, FRAC_PI_2);
    SphericalVector {
        magnitude,
        azimuth,
        elevation,
    }
}

pub fn spherical_to_cart(s: &SphericalVector) -> Vec3 {
    let (sa, ca) = s.azimuth.sin_cos();
    let (se, ce) = s.elevation.sin_cos();
    Vec3::new(
        s.magnitude * ce * ca,
        s.magnitude * ce * sa,
        s.magnitude * se,
    )
}
