//! Point-mass plus J2 gravity.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::body::BodyParams;
use crate::error::{Error, Result};
use crate::state::{StateCartesian, Vec3};

/// Gravitational acceleration (km/s^2) including the J2 zonal term.
pub fn j2_acceleration(state: &StateCartesian, body: &BodyParams) -> Result<Vec3> {
    let p = state.position;
    let r2 = p.norm_squared();
    if !(r2 > 0.0) {
        return Err(Error::ZeroRadius);
    }
    let a = accel(p.x, p.y, p.z, r2, body);
    Ok(Vec3::new(a[0], a[1], a[2]))
}

#[inline(always)]
fn accel(x: f64, y: f64, z: f64, r2: f64, body: &BodyParams) -> [f64; 3] {
    let r = r2.sqrt();
    let k = body.mu / (r2 * r);
    if body.j2 == 0.0 {
        return [-k * x, -k * y, -k * z];
    }
    let c = 1.5 * body.j2 * body.radius * body.radius / r2;
    let zr = z * z / r2;
    let fxy = k * (1.0 + c * (1.0 - 5.0 * zr));
    let fz = k * (1.0 + c * (3.0 - 5.0 * zr));
    [-fxy * x, -fxy * y, -fz * z]
}

/// Time derivative of the flat state `[x, y, z, vx, vy, vz]`.
///
/// Callers guarantee a nonzero radius; a zero radius yields non-finite output
/// which the integrator rejects.
#[inline]
pub(crate) fn rhs(y: &[f64; 6], body: &BodyParams) -> [f64; 6] {
    let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    let a = accel(y[0], y[1], y[2], r2, body);
    [y[3], y[4], y[5], a[0], a[1], a[2]]
}

/// Specific orbital energy including the J2 potential term, km^2/s^2.
pub fn j2_energy(state: &StateCartesian, body: &BodyParams) -> f64 {
    let r = state.position.norm();
    let z = state.position.z;
    let rr = body.radius / r;
    let potential =
        -(body.mu / r) * (1.0 - 0.5 * body.j2 * rr * rr * (3.0 * z * z / (r * r) - 1.0));
    0.5 * state.velocity.norm_squared() + potential
}

/// Polar component of the specific angular momentum, conserved by the
/// axisymmetric field.
pub fn angular_momentum_z(state: &StateCartesian) -> f64 {
    let (p, v) = (state.position, state.velocity);
    p.x * v.y - p.y * v.x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(x: f64, y: f64, z: f64) -> StateCartesian {
        StateCartesian::new(Vec3::new(x, y, z), Vec3::zeros())
    }

    #[test]
    fn two_body_limit() {
        let body = BodyParams::new(3.0, 1.0, 0.0).unwrap();
        let a = j2_acceleration(&at(2.0, 0.0, 0.0), &body).unwrap();
        assert_eq!(a, Vec3::new(-3.0 / 4.0, 0.0, 0.0));
    }

    #[test]
    fn equatorial_point_has_no_vertical_component() {
        let a = j2_acceleration(&at(7.0e5, -3.0e5, 0.0), &BodyParams::JUPITER).unwrap();
        assert_eq!(a.z, 0.0);
    }

    #[test]
    fn polar_point() {
        let body = BodyParams::JUPITER;
        let r = 4.0 * body.radius;
        let a = j2_acceleration(&at(0.0, 0.0, r), &body).unwrap();
        let rr = body.radius / r;
        let expected = -(body.mu / (r * r)) * (1.0 - 3.0 * body.j2 * rr * rr);
        assert!((a.z - expected).abs() <= 1e-15 * expected.abs());
        assert_eq!(a.x, 0.0);
        assert_eq!(a.y, 0.0);
    }

    #[test]
    fn zero_j2_matches_point_mass_exactly() {
        let body = BodyParams::JUPITER.two_body();
        let p = Vec3::new(1.1e6, -2.3e5, 4.0e5);
        let a = j2_acceleration(&StateCartesian::new(p, Vec3::zeros()), &body).unwrap();
        let r2 = p.norm_squared();
        let k = body.mu / (r2 * r2.sqrt());
        assert_eq!(a, Vec3::new(-k * p.x, -k * p.y, -k * p.z));
    }

    #[test]
    fn zero_radius_is_an_error() {
        assert_eq!(
            j2_acceleration(&at(0.0, 0.0, 0.0), &BodyParams::JUPITER),
            Err(Error::ZeroRadius)
        );
    }
}
