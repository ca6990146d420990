//! Finite-difference Newton shooting on the initial velocity.

use nalgebra::Matrix3;

use crate::body::BodyParams;
use crate::error::{domain, Error, Result};
use crate::propagator::{propagate_offset, PropagatorConfig};
use crate::state::{StateCartesian, Vec3};

/// Condition estimate above which the Jacobian is treated as singular.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    /// Terminal position tolerance, km.
    pub tol: f64,
    pub max_iter: u32,
    /// Finite-difference velocity step, km/s.
    pub dv_step: f64,
    /// Optional cap on the correction norm per iteration, km/s.
    pub step_limit: Option<f64>,
    pub propagator: PropagatorConfig,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            tol: 1e-3,
            max_iter: 2000,
            dv_step: 1e-6,
            step_limit: None,
            propagator: PropagatorConfig::default(),
        }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(domain("tolerance must be positive"));
        }
        if !(self.dv_step > 0.0 && self.dv_step.is_finite()) {
            return Err(domain("finite-difference step must be positive"));
        }
        if let Some(l) = self.step_limit {
            if !(l > 0.0) {
                return Err(domain("step limit must be positive"));
            }
        }
        self.propagator.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingResult {
    /// Best iterate found.
    pub v0: Vec3,
    pub converged: bool,
    /// Newton updates applied.
    pub iterations: u32,
    /// Terminal position error of `v0`, km.
    pub terminal_error: f64,
    /// Terminal position error of the starting velocity, km.
    pub initial_error: f64,
    pub propagations: u32,
}

fn position_offset(
    r0: &Vec3,
    v: &Vec3,
    tof: f64,
    body: &BodyParams,
    cfg: &PropagatorConfig,
) -> Result<Vec3> {
    let d = propagate_offset(&StateCartesian::new(*r0, *v), tof, body, cfg)?;
    Ok(Vec3::new(d[0], d[1], d[2]))
}

/// Columns are differenced on the displacement `rf - r0`.
fn perturbed_columns(
    r0: &Vec3,
    v: &Vec3,
    offset_nominal: &Vec3,
    tof: f64,
    body: &BodyParams,
    dv_step: f64,
    cfg: &PropagatorConfig,
) -> Result<Matrix3<f64>> {
    let mut h = Matrix3::zeros();
    for j in 0..3 {
        let mut vp = *v;
        vp[j] += dv_step;
        let dp = position_offset(r0, &vp, tof, body, cfg)?;
        h.set_column(j, &((dp - offset_nominal) / dv_step));
    }
    Ok(h)
}

/// Forward-difference sensitivity of the terminal position to the initial
/// velocity: one nominal and three perturbed propagations.
pub fn finite_diff_jacobian(
    r0: &Vec3,
    v: &Vec3,
    tof: f64,
    body: &BodyParams,
    dv_step: f64,
    cfg: &PropagatorConfig,
) -> Result<Matrix3<f64>> {
    if !(dv_step > 0.0) {
        return Err(domain("finite-difference step must be positive"));
    }
    let d = position_offset(r0, v, tof, body, cfg)?;
    perturbed_columns(r0, v, &d, tof, body, dv_step, cfg)
}

/// Solves `h x = b` by Gaussian elimination with partial pivoting.
///
/// The condition estimate is the ratio of the largest to smallest pivot.
pub fn pivoted_solve(h: &Matrix3<f64>, b: &Vec3) -> Result<Vec3> {
    let mut a = *h;
    let mut x = *b;
    let mut pivots = [0.0f64; 3];
    for k in 0..3 {
        let mut p = k;
        for i in k + 1..3 {
            if a[(i, k)].abs() > a[(p, k)].abs() {
                p = i;
            }
        }
        if p != k {
            a.swap_rows(k, p);
            x.swap_rows(k, p);
        }
        let piv = a[(k, k)];
        pivots[k] = piv.abs();
        if piv == 0.0 || !piv.is_finite() {
            return Err(Error::SingularJacobian {
                condition: f64::INFINITY,
            });
        }
        for i in k + 1..3 {
            let f = a[(i, k)] / piv;
            for j in k..3 {
                a[(i, j)] -= f * a[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    let pmax = pivots.iter().cloned().fold(0.0, f64::max);
    let pmin = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = pmax / pmin;
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularJacobian { condition });
    }
    for k in (0..3).rev() {
        let mut s = x[k];
        for j in k + 1..3 {
            s -= a[(k, j)] * x[j];
        }
        x[k] = s / a[(k, k)];
    }
    Ok(x)
}

/// Newton iteration `v <- v + H^-1 (rf_target - rf(v))`.
///
/// Each iteration propagates the current velocity once (which doubles as the
/// convergence check) and three perturbed velocities, so a run with `i`
/// updates costs `4 i + 1` propagations. A propagation failure after the
/// first evaluation ends the run as non-converged with the best iterate.
pub fn shoot(
    r0: &Vec3,
    v_init: &Vec3,
    rf_target: &Vec3,
    tof: f64,
    body: &BodyParams,
    cfg: &ShootingConfig,
) -> Result<ShootingResult> {
    cfg.validate()?;
    body.validate()?;
    if !(v_init.iter().all(|c| c.is_finite())) {
        return Err(domain("initial velocity must be finite"));
    }
    let pcfg = &cfg.propagator;

    // Work with displacements from r0 throughout; the target likewise.
    let target = rf_target - r0;
    let d = position_offset(r0, v_init, tof, body, pcfg)?;
    let mut propagations = 1u32;
    let initial_error = (target - d).norm();
    let mut best = (*v_init, initial_error);
    let mut v = *v_init;
    let mut d = d;
    let mut err = initial_error;
    let mut iterations = 0u32;

    let result = |best: (Vec3, f64), converged, iterations, propagations| ShootingResult {
        v0: best.0,
        converged,
        iterations,
        terminal_error: best.1,
        initial_error,
        propagations,
    };

    loop {
        if err <= cfg.tol {
            return Ok(result(best, true, iterations, propagations));
        }
        if iterations >= cfg.max_iter {
            return Ok(result(best, false, iterations, propagations));
        }
        let h = match perturbed_columns(r0, &v, &d, tof, body, cfg.dv_step, pcfg) {
            Ok(h) => h,
            Err(_) => return Ok(result(best, false, iterations, propagations + 3)),
        };
        propagations += 3;
        let mut dv = pivoted_solve(&h, &(target - d))?;
        if let Some(limit) = cfg.step_limit {
            let n = dv.norm();
            if n > limit {
                dv *= limit / n;
            }
        }
        v += dv;
        iterations += 1;
        propagations += 1;
        if !v.iter().all(|c| c.is_finite()) {
            return Ok(result(best, false, iterations, propagations));
        }
        match position_offset(r0, &v, tof, body, pcfg) {
            Ok(off) => {
                d = off;
                err = (target - d).norm();
                if err < best.1 {
                    best = (v, err);
                }
            }
            Err(_) => return Ok(result(best, false, iterations, propagations)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pivoted_solve_matches_known_system() {
        let h = Matrix3::new(0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0);
        let x = Vec3::new(1.0, -2.0, 0.5);
        let b = h * x;
        let got = pivoted_solve(&h, &b).unwrap();
        assert!((got - x).norm() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let h = Matrix3::new(1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0);
        assert!(matches!(
            pivoted_solve(&h, &Vec3::new(1.0, 1.0, 1.0)),
            Err(Error::SingularJacobian { .. })
        ));
        let h = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, 1e-15));
        assert!(matches!(
            pivoted_solve(&h, &Vec3::new(1.0, 1.0, 1.0)),
            Err(Error::SingularJacobian { .. })
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let bad = ShootingConfig {
            dv_step: 0.0,
            ..ShootingConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ShootingConfig {
            tol: -1.0,
            ..ShootingConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn table_defaults() {
        let c = ShootingConfig::default();
        assert_eq!(c.tol, 1e-3);
        assert_eq!(c.max_iter, 2000);
        assert_eq!(c.dv_step, 1e-6);
        assert_eq!(c.step_limit, None);
    }
}
