//! Osculating Keplerian elements.
//!
//! Degenerate conventions: circular orbits (e = 0) carry ω = 0 with the
//! argument of latitude folded into M; equatorial orbits (i = 0 or π) carry
//! Ω = 0 and measure ω from the x-axis.

use core::f64::consts::{PI, TAU};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::state::{wrap_two_pi, StateCartesian, Vec3};

const CIRCULAR_EPS: f64 = 1e-11;
const EQUATORIAL_EPS: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalElements {
    /// Semimajor axis, km.
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub mean_anomaly: f64,
}

/// Orbital period `2π sqrt(a^3 / μ)`.
pub fn orbital_period(a: f64, mu: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain("semimajor axis must be positive"));
    }
    if !(mu > 0.0) {
        return Err(domain("mu must be positive"));
    }
    Ok(TAU * (a * a * a / mu).sqrt())
}

/// Solves Kepler's equation `M = E - e sin E` for the eccentric anomaly.
pub fn eccentric_from_mean(mean_anomaly: f64, e: f64) -> f64 {
    let m = wrap_two_pi(mean_anomaly);
    let mut ecc = if e < 0.8 { m } else { PI };
    for _ in 0..60 {
        let (s, c) = ecc.sin_cos();
        let f = ecc - e * s - m;
        let fp = 1.0 - e * c;
        let fpp = e * s;
        // Halley step
        let delta = f / (fp - 0.5 * f * fpp / fp);
        ecc -= delta;
        if delta.abs() <= 4.0 * f64::EPSILON * (1.0 + ecc.abs()) {
            break;
        }
    }
    ecc
}

pub fn true_from_eccentric(ecc: f64, e: f64) -> f64 {
    let (s, c) = ecc.sin_cos();
    wrap_two_pi(((1.0 - e * e).sqrt() * s).atan2(c - e))
}

pub fn mean_from_true(nu: f64, e: f64) -> f64 {
    let (s, c) = nu.sin_cos();
    let ecc = ((1.0 - e * e).sqrt() * s).atan2(e + c);
    wrap_two_pi(ecc - e * ecc.sin())
}

pub fn true_from_mean(mean_anomaly: f64, e: f64) -> f64 {
    true_from_eccentric(eccentric_from_mean(mean_anomaly, e), e)
}

impl OrbitalElements {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(domain("semimajor axis must be positive"));
        }
        if !(self.e >= 0.0) {
            return Err(domain("eccentricity must be non-negative"));
        }
        if self.e >= 1.0 {
            return Err(Error::UnsupportedOrbit { e: self.e });
        }
        if !(0.0..=PI).contains(&self.i) {
            return Err(domain("inclination must lie in [0, π]"));
        }
        Ok(())
    }

    pub fn semi_latus_rectum(&self) -> f64 {
        self.a * (1.0 - self.e * self.e)
    }

    /// Unit normal of the orbital plane (direction of angular momentum).
    pub fn plane_normal(&self) -> Vec3 {
        let (si, ci) = self.i.sin_cos();
        let (so, co) = self.raan.sin_cos();
        Vec3::new(si * so, -si * co, ci)
    }

    /// Position and velocity at true anomaly `nu`.
    pub fn state_at_true_anomaly(&self, nu: f64, mu: f64) -> StateCartesian {
        let p = self.semi_latus_rectum();
        let (sn, cn) = nu.sin_cos();
        let r = p / (1.0 + self.e * cn);
        let sq = (mu / p).sqrt();
        let r_pf = [r * cn, r * sn];
        let v_pf = [-sq * sn, sq * (self.e + cn)];

        let (so, co) = self.raan.sin_cos();
        let (sw, cw) = self.argp.sin_cos();
        let (si, ci) = self.i.sin_cos();
        // Columns of the perifocal-to-inertial rotation.
        let p_hat = Vec3::new(co * cw - so * sw * ci, so * cw + co * sw * ci, sw * si);
        let q_hat = Vec3::new(-co * sw - so * cw * ci, -so * sw + co * cw * ci, cw * si);
        StateCartesian::new(
            p_hat * r_pf[0] + q_hat * r_pf[1],
            p_hat * v_pf[0] + q_hat * v_pf[1],
        )
    }
}

pub fn elements_to_state(oe: &OrbitalElements, mu: f64) -> Result<StateCartesian> {
    oe.validate()?;
    if !(mu > 0.0) {
        return Err(domain("mu must be positive"));
    }
    let nu = true_from_mean(oe.mean_anomaly, oe.e);
    Ok(oe.state_at_true_anomaly(nu, mu))
}

pub fn state_to_elements(state: &StateCartesian, mu: f64) -> Result<OrbitalElements> {
    if !(mu > 0.0) {
        return Err(domain("mu must be positive"));
    }
    let r = state.position;
    let v = state.velocity;
    let rn = r.norm();
    if !(rn > 0.0) {
        return Err(Error::ZeroRadius);
    }
    let h = r.cross(&v);
    let hn = h.norm();
    if !(hn > 1e-12 * rn * v.norm()) || hn == 0.0 {
        return Err(Error::DegenerateGeometry("rectilinear state"));
    }
    let energy = 0.5 * v.norm_squared() - mu / rn;
    let e_vec = (r * (v.norm_squared() - mu / rn) - v * r.dot(&v)) / mu;
    let e = e_vec.norm();
    if !(energy < 0.0) || e >= 1.0 {
        return Err(Error::UnsupportedOrbit { e });
    }
    let a = -mu / (2.0 * energy);

    let h_hat = h / hn;
    let i = h_hat.z.clamp(-1.0, 1.0).acos();
    let node = Vec3::new(-h.y, h.x, 0.0);
    let equatorial = node.norm() <= EQUATORIAL_EPS * hn;
    let raan = if equatorial {
        0.0
    } else {
        wrap_two_pi(node.y.atan2(node.x))
    };
    // In-plane reference axes: ascending node and its 90° advance.
    let n_hat = Vec3::new(raan.cos(), raan.sin(), 0.0);
    let m_hat = h_hat.cross(&n_hat);

    let (argp, nu) = if e <= CIRCULAR_EPS {
        let u = r.dot(&m_hat).atan2(r.dot(&n_hat));
        (0.0, wrap_two_pi(u))
    } else {
        let w = e_vec.dot(&m_hat).atan2(e_vec.dot(&n_hat));
        let e_hat = e_vec / e;
        let q_hat = h_hat.cross(&e_hat);
        let nu = r.dot(&q_hat).atan2(r.dot(&e_hat));
        (wrap_two_pi(w), wrap_two_pi(nu))
    };
    let e_out = if e <= CIRCULAR_EPS { 0.0 } else { e };
    Ok(OrbitalElements {
        a,
        e: e_out,
        i,
        raan,
        argp,
        mean_anomaly: mean_from_true(nu, e_out),
    })
}

/// Two-body propagation of an elliptic state by `dt` seconds with Lagrange
/// coefficients in the eccentric-anomaly difference.
pub fn kepler_propagate(state: &StateCartesian, dt: f64, mu: f64) -> Result<StateCartesian> {
    if !(mu > 0.0) {
        return Err(domain("mu must be positive"));
    }
    let r0 = state.position;
    let v0 = state.velocity;
    let r0n = r0.norm();
    if !(r0n > 0.0) {
        return Err(Error::ZeroRadius);
    }
    let energy = 0.5 * v0.norm_squared() - mu / r0n;
    if !(energy < 0.0) {
        let e_vec = (r0 * (v0.norm_squared() - mu / r0n) - v0 * r0.dot(&v0)) / mu;
        return Err(Error::UnsupportedOrbit { e: e_vec.norm() });
    }
    let a = -mu / (2.0 * energy);
    let sqrt_a = a.sqrt();
    let n = (mu / (a * a * a)).sqrt();
    let period = TAU / n;
    // Strip whole periods so the anomaly difference stays small.
    let k = (dt / period).floor();
    let dt_red = dt - k * period;
    let dm = n * dt_red;

    let es = r0.dot(&v0) / (mu.sqrt() * sqrt_a);
    let ec = 1.0 - r0n / a;
    let f_of = |x: f64| x + es * (1.0 - x.cos()) - ec * x.sin() - dm;
    let ecc = es.hypot(ec);
    let (mut lo, mut hi) = (dm - 2.0 * ecc - 1e-12, dm + 2.0 * ecc + 1e-12);
    let mut x = dm;
    for _ in 0..100 {
        let fx = f_of(x);
        if fx == 0.0 {
            break;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = 1.0 + es * x.sin() - ec * x.cos();
        let mut xn = x - fx / d;
        if !(xn > lo && xn < hi) {
            xn = 0.5 * (lo + hi);
        }
        if (xn - x).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            x = xn;
            break;
        }
        x = xn;
    }
    let (sx, cx) = x.sin_cos();
    let r = a + (r0n - a) * cx + es * a * sx;
    let f = 1.0 - a / r0n * (1.0 - cx);
    let g = dt_red - (x - sx) / n;
    let fdot = -(mu * a).sqrt() / (r * r0n) * sx;
    let gdot = 1.0 - a / r * (1.0 - cx);
    Ok(StateCartesian::new(r0 * f + v0 * g, r0 * fdot + v0 * gdot))
}
