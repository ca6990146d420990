//! Keplerian Lambert solver with multi-revolution support.
//!
//! The iteration follows Izzo's formulation: a single free variable `x`
//! parameterizes the family of conics through the two endpoints, the
//! non-dimensional time of flight `T(x)` is inverted with Householder steps,
//! and terminal velocities are rebuilt from radial/tangential components.
//! A bracketed bisection backs up the Householder iteration.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::state::Vec3;

/// Angular distance from 0 or π below which the endpoints count as collinear.
pub const COLLINEAR_TOL: f64 = 1e-6;

/// Multi-revolution branch. `LowPath` is the solution with `x` above the
/// minimum-time point, `HighPath` the one below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    LowPath,
    HighPath,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambertQuery {
    pub r0: Vec3,
    pub rf: Vec3,
    pub tof: f64,
    pub mu: f64,
    pub revs: u32,
    /// Requested branch for `revs >= 1`; `None` returns both.
    pub branch: Option<Branch>,
    /// Desired direction of the transfer angular momentum. Picks the sense of
    /// motion and, for collinear endpoints, the transfer plane.
    pub plane_hint: Option<Vec3>,
}

impl LambertQuery {
    pub fn new(r0: Vec3, rf: Vec3, tof: f64, mu: f64, revs: u32) -> Self {
        LambertQuery {
            r0,
            rf,
            tof,
            mu,
            revs,
            branch: None,
            plane_hint: None,
        }
    }

    pub fn with_branch(mut self, branch: Branch) -> Self {
        self.branch = Some(branch);
        self
    }

    pub fn with_plane_hint(mut self, hint: Vec3) -> Self {
        self.plane_hint = Some(hint);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambertSolution {
    pub v0: Vec3,
    pub vf: Vec3,
    pub revs: u32,
    /// `None` for zero-revolution transfers.
    pub branch: Option<Branch>,
}

/// Transfer geometry resolved from the endpoints and the optional plane hint.
#[derive(Debug, Clone, Copy)]
pub struct TransferGeometry {
    /// Unit normal in the sense of motion.
    pub normal: Vec3,
    /// Transfer angle in `(0, 2π]`, excluding whole revolutions.
    pub angle: f64,
}

pub fn transfer_geometry(
    r0: &Vec3,
    rf: &Vec3,
    plane_hint: Option<&Vec3>,
) -> Result<TransferGeometry> {
    let r1n = r0.norm();
    let r2n = rf.norm();
    if !(r1n > 0.0 && r2n > 0.0) {
        return Err(Error::ZeroRadius);
    }
    let r1h = r0 / r1n;
    let r2h = rf / r2n;
    let cross = r1h.cross(&r2h);
    let sin0 = cross.norm();
    let cos0 = r1h.dot(&r2h);
    let theta0 = sin0.atan2(cos0);
    let collinear = theta0 < COLLINEAR_TOL || PI - theta0 < COLLINEAR_TOL;

    if !collinear {
        let mut normal = cross / sin0;
        if let Some(hint) = plane_hint {
            if hint.dot(&normal) < 0.0 {
                normal = -normal;
            }
        }
        let angle = if normal.dot(&cross) > 0.0 {
            theta0
        } else {
            TAU - theta0
        };
        return Ok(TransferGeometry { normal, angle });
    }

    let hint = plane_hint.ok_or(Error::AmbiguousPlane)?;
    let in_plane = hint - r1h * hint.dot(&r1h);
    let n = in_plane.norm();
    if !(n > 1e-9 * hint.norm()) {
        return Err(Error::DegenerateGeometry(
            "plane hint is parallel to the initial position",
        ));
    }
    let angle = if cos0 < 0.0 { PI } else { TAU };
    Ok(TransferGeometry {
        normal: in_plane / n,
        angle,
    })
}

/// Relative radius mismatch below which a full-revolution transfer counts as
/// returning to its starting point.
pub const CLOSED_ORBIT_TOL: f64 = 1e-12;

/// Whole-revolution return to the starting point. The conic family through
/// `r0` with period `tof / (revs + 1)` is one-dimensional; the member taken is
/// the limit of the equal-radius transfer as the chord vanishes, which has
/// `r0` at an apse.
fn closed_orbit(q: &LambertQuery, geom: &TransferGeometry) -> Result<LambertSolution> {
    let r = q.r0.norm();
    let period = q.tof / (q.revs as f64 + 1.0);
    let n = TAU / period;
    let a = (q.mu / (n * n)).cbrt();
    if r >= 2.0 * a {
        return Err(Error::LambertNoSolution { revs: q.revs });
    }
    let speed = (q.mu * (2.0 / r - 1.0 / a)).sqrt();
    let v0 = geom.normal.cross(&(q.r0 / r)) * speed;
    Ok(LambertSolution {
        v0,
        vf: v0,
        revs: q.revs,
        branch: None,
    })
}

pub fn solve_kepler_lambert(q: &LambertQuery) -> Result<Vec<LambertSolution>> {
    if !(q.tof.is_finite() && q.tof > 0.0) {
        return Err(domain("time of flight must be positive"));
    }
    if !(q.mu > 0.0) {
        return Err(domain("mu must be positive"));
    }
    let geom = transfer_geometry(&q.r0, &q.rf, q.plane_hint.as_ref())?;
    let r1n = q.r0.norm();
    let r2n = q.rf.norm();
    if geom.angle == TAU {
        if (r1n - r2n).abs() > CLOSED_ORBIT_TOL * r1n {
            return Err(Error::DegenerateGeometry(
                "full-revolution transfer between collinear endpoints has no conic solution",
            ));
        }
        return closed_orbit(q, &geom).map(|s| alloc::vec![s]);
    }

    let c = (q.rf - q.r0).norm();
    let s = 0.5 * (r1n + r2n + c);
    let oml2 = (c / s).min(1.0);
    let r1h = q.r0 / r1n;
    let r2h = q.rf / r2n;
    // |r1h + r2h| = 2 cos(angle / 2), accurate near half a turn.
    let mut l = ((r1n * r2n).sqrt() * (r1h + r2h).norm() / (2.0 * s)).min(1.0);
    if geom.angle > PI {
        l = -l;
    }
    let k = Lam { l, oml2 };
    let t_nd = (2.0 * q.mu / (s * s * s)).sqrt() * q.tof;

    let it1 = geom.normal.cross(&r1h);
    let it2 = geom.normal.cross(&r2h);
    let gamma = (q.mu * s / 2.0).sqrt();
    let rho = (r1n - r2n) / c;
    let sigma = (1.0 - rho * rho).max(0.0).sqrt();

    let build = |x: f64, branch: Option<Branch>| {
        let y = k.y(x);
        let minus = k.ly_minus_x(x, y);
        let plus = k.ly_plus_x(x, y);
        let tang = k.y_plus_lx(x, y);
        let vr1 = gamma * (minus - rho * plus) / r1n;
        let vr2 = -gamma * (minus + rho * plus) / r2n;
        let vt1 = gamma * sigma * tang / r1n;
        let vt2 = gamma * sigma * tang / r2n;
        LambertSolution {
            v0: r1h * vr1 + it1 * vt1,
            vf: r2h * vr2 + it2 * vt2,
            revs: q.revs,
            branch,
        }
    };

    let mut out = Vec::new();
    if q.revs == 0 {
        let x = solve_single_rev(t_nd, k)?;
        out.push(build(x, None));
        return Ok(out);
    }

    let m = q.revs as f64;
    let (x_min, t_min) = minimum_time(k, m);
    if t_nd < t_min {
        return Err(Error::LambertNoSolution { revs: q.revs });
    }
    let branches: &[Branch] = match q.branch {
        Some(Branch::LowPath) => &[Branch::LowPath],
        Some(Branch::HighPath) => &[Branch::HighPath],
        None => &[Branch::LowPath, Branch::HighPath],
    };
    for &b in branches {
        let x = solve_multi_rev(t_nd, k, m, b, x_min)?;
        out.push(build(x, Some(b)));
    }
    Ok(out)
}

/// The transfer parameter `λ` together with `1 - λ²` (= c/s) carried
/// separately, so short chords keep full precision.
#[derive(Debug, Clone, Copy)]
struct Lam {
    l: f64,
    oml2: f64,
}

impl Lam {
    fn y(&self, x: f64) -> f64 {
        (self.oml2 + self.l * self.l * x * x).sqrt()
    }

    /// `(λy)² - x²` in factored form.
    fn sq_diff(&self, x: f64) -> f64 {
        let l2 = self.l * self.l;
        self.oml2 * (l2 - x * x * (1.0 + l2))
    }

    fn ly_minus_x(&self, x: f64, y: f64) -> f64 {
        let ly = self.l * y;
        if ly * x > 0.0 {
            self.sq_diff(x) / (ly + x)
        } else {
            ly - x
        }
    }

    fn ly_plus_x(&self, x: f64, y: f64) -> f64 {
        let ly = self.l * y;
        if ly * x < 0.0 {
            self.sq_diff(x) / (ly - x)
        } else {
            ly + x
        }
    }

    /// `η = y - λx`, using `y² - λ²x² = 1 - λ²`.
    fn eta(&self, x: f64, y: f64) -> f64 {
        let lx = self.l * x;
        if lx > 0.0 {
            self.oml2 / (y + lx)
        } else {
            y - lx
        }
    }

    fn y_plus_lx(&self, x: f64, y: f64) -> f64 {
        let lx = self.l * x;
        if lx < 0.0 {
            self.oml2 / (y - lx)
        } else {
            y + lx
        }
    }

    fn one_minus_l(&self) -> f64 {
        if self.l > 0.0 {
            self.oml2 / (1.0 + self.l)
        } else {
            1.0 - self.l
        }
    }
}

/// Gauss hypergeometric 2F1(3, 1; 5/2; z) by its power series.
fn hyp2f1b(z: f64) -> f64 {
    if z >= 1.0 {
        return f64::INFINITY;
    }
    let mut res = 1.0;
    let mut term = 1.0;
    for i in 0..10_000 {
        let fi = i as f64;
        term *= (3.0 + fi) * (1.0 + fi) / (2.5 + fi) * z / (fi + 1.0);
        let prev = res;
        res += term;
        if res == prev {
            break;
        }
    }
    res
}

/// Non-dimensional time of flight at `x` for `m` full revolutions.
fn tof_at(x: f64, k: Lam, m: f64) -> f64 {
    let y = k.y(x);
    let eta = k.eta(x, y);
    if m == 0.0 {
        let s1 = 0.5 * (k.one_minus_l() - x * eta);
        if s1.abs() < 0.5 {
            let q = 4.0 / 3.0 * hyp2f1b(s1);
            return 0.5 * (eta * eta * eta * q + 4.0 * k.l * eta);
        }
    }
    let om = (1.0 - x) * (1.0 + x);
    let psi = if x < 1.0 {
        (om.sqrt() * eta).atan2(x * y + k.l * om)
    } else {
        ((-om).sqrt() * eta).asinh()
    };
    ((psi + m * PI) / om.abs().sqrt() + k.ly_minus_x(x, y)) / om
}

/// First three derivatives of `T(x)` given `T` itself.
fn tof_derivatives(x: f64, t: f64, k: Lam) -> (f64, f64, f64) {
    let l = k.l;
    let y = k.y(x);
    let om = (1.0 - x) * (1.0 + x);
    let l2 = l * l;
    let l3 = l2 * l;
    let d1 = (3.0 * t * x - 2.0 + 2.0 * l3 * x / y) / om;
    let d2 = (3.0 * t + 5.0 * x * d1 + 2.0 * k.oml2 * l3 / (y * y * y)) / om;
    let d3 = (7.0 * x * d2 + 8.0 * d1 - 6.0 * k.oml2 * l3 * l2 * x / y.powi(5)) / om;
    (d1, d2, d3)
}

const MAX_ITER: usize = 60;

fn householder(mut x: f64, t0: f64, k: Lam, m: f64, lo: f64, hi: f64) -> Option<f64> {
    for _ in 0..MAX_ITER {
        let t = tof_at(x, k, m);
        let f = t - t0;
        if f == 0.0 {
            return Some(x);
        }
        let (d1, d2, d3) = tof_derivatives(x, t, k);
        let step = f * (d1 * d1 - 0.5 * f * d2) / (d1 * (d1 * d1 - f * d2) + d3 * f * f / 6.0);
        let xn = x - step;
        if !xn.is_finite() || xn <= lo || xn >= hi {
            return None;
        }
        if (xn - x).abs() <= 1e-15 + 1e-14 * x.abs() {
            return Some(xn);
        }
        x = xn;
    }
    None
}

/// Bisection on a bracket where `T - t0` changes sign.
fn bisect(t0: f64, k: Lam, m: f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = tof_at(lo, k, m) - t0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = tof_at(mid, k, m) - t0;
        if (f > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn accept(x: f64, t0: f64, k: Lam, m: f64) -> Result<f64> {
    let t = tof_at(x, k, m);
    if (t - t0).abs() <= 1e-11 * t0 {
        Ok(x)
    } else {
        Err(Error::LambertNotConverged)
    }
}

fn solve_single_rev(t0: f64, k: Lam) -> Result<f64> {
    let l = k.l;
    let t_00 = l.acos() + l * k.oml2.sqrt();
    let t_1 = 2.0 * (1.0 - l * l * l) / 3.0;
    let x0 = if t0 >= t_00 {
        (t_00 / t0).powf(2.0 / 3.0) - 1.0
    } else if t0 < t_1 {
        2.5 * t_1 / t0 * (t_1 - t0) / (1.0 - l.powi(5)) + 1.0
    } else {
        ((t0 / t_00).ln() * 2f64.ln() / (t_1 / t_00).ln()).exp() - 1.0
    };
    if let Some(x) = householder(x0, t0, k, 0.0, -1.0, f64::INFINITY) {
        if let Ok(x) = accept(x, t0, k, 0.0) {
            return Ok(x);
        }
    }
    // T decreases monotonically on (-1, inf).
    let mut hi = 1.0;
    while tof_at(hi, k, 0.0) > t0 {
        hi = 2.0 * hi + 1.0;
        if hi > 1e12 {
            return Err(Error::LambertNotConverged);
        }
    }
    accept(bisect(t0, k, 0.0, -1.0 + 1e-15, hi), t0, k, 0.0)
}

/// Location and value of the minimum time of flight for `m` revolutions.
fn minimum_time(k: Lam, m: f64) -> (f64, f64) {
    // Halley iteration on dT/dx = 0.
    let mut x = 0.1;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let t = tof_at(x, k, m);
        let (d1, d2, d3) = tof_derivatives(x, t, k);
        if d2 == 0.0 {
            break;
        }
        let xn = x - 2.0 * d1 * d2 / (2.0 * d2 * d2 - d1 * d3);
        if !xn.is_finite() || xn <= -1.0 || xn >= 1.0 {
            break;
        }
        let done = (xn - x).abs() <= 1e-15 + 1e-13 * x.abs();
        x = xn;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        // Golden-section search on the unimodal T(x) over (-1, 1).
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (-1.0 + 1e-12, 1.0 - 1e-12);
        for _ in 0..300 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if tof_at(c, k, m) < tof_at(d, k, m) {
                b = d;
            } else {
                a = c;
            }
        }
        x = 0.5 * (a + b);
    }
    (x, tof_at(x, k, m))
}

fn solve_multi_rev(t0: f64, k: Lam, m: f64, branch: Branch, x_min: f64) -> Result<f64> {
    let a = ((m * PI + PI) / (8.0 * t0)).powf(2.0 / 3.0);
    let x0l = (a - 1.0) / (a + 1.0);
    let b = ((8.0 * t0) / (m * PI)).powf(2.0 / 3.0);
    let x0r = (b - 1.0) / (b + 1.0);
    let (x0, lo, hi) = match branch {
        Branch::LowPath => (x0l.max(x0r), x_min, 1.0),
        Branch::HighPath => (x0l.min(x0r), -1.0, x_min),
    };
    if let Some(x) = householder(x0.clamp(lo, hi), t0, k, m, lo, hi) {
        if let Ok(x) = accept(x, t0, k, m) {
            return Ok(x);
        }
    }
    if t0 == tof_at(x_min, k, m) {
        return Ok(x_min);
    }
    // T diverges at x = ±1 and is monotone on each side of the minimum.
    let eps = 1e-15;
    let (blo, bhi) = match branch {
        Branch::LowPath => (x_min, 1.0 - eps),
        Branch::HighPath => (-1.0 + eps, x_min),
    };
    accept(bisect(t0, k, m, blo, bhi), t0, k, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_circle() {
        let q = LambertQuery::new(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            PI / 2.0,
            1.0,
            0,
        );
        let sols = solve_kepler_lambert(&q).unwrap();
        assert_eq!(sols.len(), 1);
        assert!((sols[0].v0 - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
        assert!((sols[0].vf - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        assert_eq!(sols[0].branch, None);
    }

    #[test]
    fn quarter_circle_with_extra_revolutions() {
        for n in 1..=3u32 {
            let q = LambertQuery::new(
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                PI / 2.0 + TAU * n as f64,
                1.0,
                n,
            );
            let sols = solve_kepler_lambert(&q).unwrap();
            assert_eq!(sols.len(), 2);
            let best = sols
                .iter()
                .map(|s| (s.v0 - Vec3::new(0.0, 1.0, 0.0)).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-10, "revs {n}: {best}");
            assert!((sols[0].v0 - sols[1].v0).norm() > 1e-3);
        }
    }

    #[test]
    fn requested_branch_only() {
        let q = LambertQuery::new(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            PI / 2.0 + TAU,
            1.0,
            1,
        )
        .with_branch(Branch::HighPath);
        let sols = solve_kepler_lambert(&q).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].branch, Some(Branch::HighPath));
    }

    #[test]
    fn too_short_for_requested_revolutions() {
        let q = LambertQuery::new(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            PI / 2.0,
            1.0,
            2,
        );
        assert_eq!(
            solve_kepler_lambert(&q),
            Err(Error::LambertNoSolution { revs: 2 })
        );
    }

    #[test]
    fn collinear_without_hint_is_ambiguous() {
        let q = LambertQuery::new(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            PI,
            1.0,
            0,
        );
        assert_eq!(solve_kepler_lambert(&q), Err(Error::AmbiguousPlane));
    }

    #[test]
    fn half_orbit_with_plane_hint() {
        // Half of the unit circle in the x-z plane, moving towards +z first.
        let q = LambertQuery::new(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            PI,
            1.0,
            0,
        )
        .with_plane_hint(Vec3::new(0.0, -1.0, 0.0));
        let sols = solve_kepler_lambert(&q).unwrap();
        assert!((sols[0].v0 - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-10);
    }

    #[test]
    fn hint_selects_retrograde_long_way() {
        let q = LambertQuery::new(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            1.5 * PI,
            1.0,
            0,
        )
        .with_plane_hint(Vec3::new(0.0, 0.0, -1.0));
        let sols = solve_kepler_lambert(&q).unwrap();
        assert!((sols[0].v0 - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn full_revolution_collinear_is_degenerate() {
        let q = LambertQuery::new(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            10.0,
            1.0,
            0,
        )
        .with_plane_hint(Vec3::new(0.0, 0.0, 1.0));
        assert!(matches!(
            solve_kepler_lambert(&q),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn hypergeometric_series_at_zero() {
        assert_eq!(hyp2f1b(0.0), 1.0);
        // 2F1(3,1;5/2;z) = 1 + 6/5 z + ...
        let z = 1e-6;
        assert!((hyp2f1b(z) - (1.0 + 1.2 * z)).abs() < 1e-11);
    }
}
