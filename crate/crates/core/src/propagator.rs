//! Adaptive Dormand–Prince 8(5,3) integration of the J2 equations of motion.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::body::BodyParams;
use crate::dynamics::rhs;
use crate::error::{domain, Error, Result};
use crate::state::StateCartesian;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Attempted steps (accepted and rejected) before giving up.
    pub max_steps: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            max_steps: 100_000,
        }
    }
}

impl PropagatorConfig {
    pub fn with_tolerance(tol: f64) -> Self {
        PropagatorConfig {
            rel_tol: tol,
            abs_tol: tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| t > 0.0 && t <= 1e-3;
        if !ok(self.rel_tol) || !ok(self.abs_tol) {
            return Err(domain("propagator tolerances must lie in (0, 1e-3]"));
        }
        if self.max_steps == 0 {
            return Err(domain("max_steps must be positive"));
        }
        Ok(())
    }
}

/// Integration bookkeeping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PropagationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Final state after integrating for `tof` seconds. `tof = 0` returns `state0` unchanged.
pub fn propagate(
    state0: &StateCartesian,
    tof: f64,
    body: &BodyParams,
    cfg: &PropagatorConfig,
) -> Result<StateCartesian> {
    propagate_with_stats(state0, tof, body, cfg).map(|(s, _)| s)
}

pub fn propagate_with_stats(
    state0: &StateCartesian,
    tof: f64,
    body: &BodyParams,
    cfg: &PropagatorConfig,
) -> Result<(StateCartesian, PropagationStats)> {
    if !(tof.is_finite() && tof >= 0.0) {
        return Err(domain("time of flight must be finite and non-negative"));
    }
    cfg.validate()?;
    if !(state0.position.norm_squared() > 0.0) {
        return Err(Error::ZeroRadius);
    }
    if tof == 0.0 {
        return Ok((*state0, PropagationStats::default()));
    }
    let y0 = state0.to_array();
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(domain("initial state must be finite"));
    }
    let (dy, stats) = integrate(y0, tof, cfg, |y| rhs(y, body))?;
    let mut y = y0;
    for i in 0..6 {
        y[i] += dy[i];
    }
    Ok((StateCartesian::from_array(&y), stats))
}

/// Final state minus initial state, without rounding through the final state.
pub(crate) fn propagate_offset(
    state0: &StateCartesian,
    tof: f64,
    body: &BodyParams,
    cfg: &PropagatorConfig,
) -> Result<[f64; 6]> {
    if !(tof.is_finite() && tof >= 0.0) {
        return Err(domain("time of flight must be finite and non-negative"));
    }
    cfg.validate()?;
    if !(state0.position.norm_squared() > 0.0) {
        return Err(Error::ZeroRadius);
    }
    if tof == 0.0 {
        return Ok([0.0; 6]);
    }
    let y0 = state0.to_array();
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(domain("initial state must be finite"));
    }
    integrate(y0, tof, cfg, |y| rhs(y, body)).map(|(dy, _)| dy)
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 1.0 / 3.0;
const MAX_FACTOR: f64 = 6.0;
/// PI controller memory exponent.
const BETA: f64 = 0.04;

/// Returns the offset of the final state from `y0`. Accumulating the offset
/// separately keeps short-arc differences free of round-off at orbit scale.
fn integrate<F>(
    y0: [f64; 6],
    tof: f64,
    cfg: &PropagatorConfig,
    mut f: F,
) -> Result<([f64; 6], PropagationStats)>
where
    F: FnMut(&[f64; 6]) -> [f64; 6],
{
    let mut stats = PropagationStats::default();
    let mut y = y0;
    let mut dy = [0.0f64; 6];
    let mut k = [[0.0f64; 6]; 13];
    k[0] = f(&y);
    stats.rhs_evals += 1;

    let mut h = initial_step(&y, &k[0], tof, cfg, &mut f, &mut stats);
    let mut t = 0.0f64;
    let mut err_old = 1e-4f64;
    let mut rejected_last = false;

    loop {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::StepBudgetExhausted {
                t_reached: t,
                tof,
                max_steps: cfg.max_steps,
            });
        }
        let remaining = tof - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(h) {
            return Err(Error::StepSizeUnderflow { t_reached: t });
        }

        let inc = stages(&y, h, &mut k, &mut f);
        stats.rhs_evals += 11;
        let mut dy_new = dy;
        let mut y_new = y;
        for i in 0..6 {
            dy_new[i] += inc[i];
            y_new[i] = y0[i] + dy_new[i];
        }
        let err = error_norm(&y, &y_new, &k, h, cfg);

        if err.is_finite() && err <= 1.0 && y_new.iter().all(|v| v.is_finite()) {
            k[12] = f(&y_new);
            stats.rhs_evals += 1;
            if k[12].iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState { t_reached: t + h });
            }
            stats.accepted += 1;
            y = y_new;
            dy = dy_new;
            k[0] = k[12];
            if last {
                return Ok((dy, stats));
            }
            t += h;
            let e = err.max(1e-10);
            let mut fac = SAFETY * e.powf(-1.0 / 8.0 + 0.2 * BETA) * err_old.powf(BETA);
            fac = fac.clamp(MIN_FACTOR, MAX_FACTOR);
            if rejected_last {
                fac = fac.min(1.0);
            }
            err_old = e.max(1e-4);
            h *= fac;
            rejected_last = false;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-1.0 / 8.0)).clamp(0.1, 1.0)
            } else {
                0.1
            };
            h *= fac;
            rejected_last = true;
        }
    }
}

fn initial_step<F>(
    y: &[f64; 6],
    f0: &[f64; 6],
    tof: f64,
    cfg: &PropagatorConfig,
    f: &mut F,
    stats: &mut PropagationStats,
) -> f64
where
    F: FnMut(&[f64; 6]) -> [f64; 6],
{
    let scale = |i: usize| cfg.abs_tol + cfg.rel_tol * y[i].abs();
    let rms = |v: &dyn Fn(usize) -> f64| ((0..6).map(|i| v(i) * v(i)).sum::<f64>() / 6.0).sqrt();
    let d0 = rms(&|i| y[i] / scale(i));
    let d1 = rms(&|i| f0[i] / scale(i));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(tof);
    let mut y1 = [0.0; 6];
    for i in 0..6 {
        y1[i] = y[i] + h0 * f0[i];
    }
    let f1 = f(&y1);
    stats.rhs_evals += 1;
    let d2 = rms(&|i| (f1[i] - f0[i]) / scale(i)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1).min(tof)
}

#[inline(always)]
fn stages<F>(y: &[f64; 6], h: f64, k: &mut [[f64; 6]; 13], f: &mut F) -> [f64; 6]
where
    F: FnMut(&[f64; 6]) -> [f64; 6],
{
    for s in 1..12 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..6 {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(&ys);
    }
    let mut inc = [0.0; 6];
    for (j, kj) in k.iter().enumerate().take(12) {
        let b = B[j];
        if b != 0.0 {
            for i in 0..6 {
                inc[i] += h * b * kj[i];
            }
        }
    }
    inc
}

fn error_norm(
    y: &[f64; 6],
    y_new: &[f64; 6],
    k: &[[f64; 6]; 13],
    h: f64,
    cfg: &PropagatorConfig,
) -> f64 {
    let mut e5 = 0.0;
    let mut e3 = 0.0;
    for i in 0..6 {
        let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        let mut s5 = 0.0;
        let mut s3 = 0.0;
        for j in 0..12 {
            s5 += E5[j] * k[j][i];
            s3 += E3[j] * k[j][i];
        }
        e5 += (s5 / sc) * (s5 / sc);
        e3 += (s3 / sc) * (s3 / sc);
    }
    if e5 == 0.0 && e3 == 0.0 {
        return 0.0;
    }
    h.abs() * e5 / (e5 + 0.01 * e3).sqrt()
}

// Dormand & Prince DOP853 tableau (Hairer, Nørsett & Wanner).
const A: [[f64; 12]; 12] = {
    let mut a = [[0.0; 12]; 12];
    a[1][0] = 5.26001519587677318785587544488e-2;
    a[2][0] = 1.97250569845378994544595329183e-2;
    a[2][1] = 5.91751709536136983633785987549e-2;
    a[3][0] = 2.95875854768068491816892993775e-2;
    a[3][2] = 8.87627564304205475450678981324e-2;
    a[4][0] = 2.41365134159266685502369798665e-1;
    a[4][2] = -8.84549479328286085344864962717e-1;
    a[4][3] = 9.24834003261792003115737966543e-1;
    a[5][0] = 3.7037037037037037037037037037e-2;
    a[5][3] = 1.70828608729473871279604482173e-1;
    a[5][4] = 1.25467687566822425016691814123e-1;
    a[6][0] = 3.7109375e-2;
    a[6][3] = 1.70252211019544039314978060272e-1;
    a[6][4] = 6.02165389804559606850219397283e-2;
    a[6][5] = -1.7578125e-2;
    a[7][0] = 3.70920001185047927108779319836e-2;
    a[7][3] = 1.70383925712239993810214054705e-1;
    a[7][4] = 1.07262030446373284651809199168e-1;
    a[7][5] = -1.53194377486244017527936158236e-2;
    a[7][6] = 8.27378916381402288758473766002e-3;
    a[8][0] = 6.24110958716075717114429577812e-1;
    a[8][3] = -3.36089262944694129406857109825;
    a[8][4] = -8.68219346841726006818189891453e-1;
    a[8][5] = 2.75920996994467083049415600797e1;
    a[8][6] = 2.01540675504778934086186788979e1;
    a[8][7] = -4.34898841810699588477366255144e1;
    a[9][0] = 4.77662536438264365890433908527e-1;
    a[9][3] = -2.48811461997166764192642586468;
    a[9][4] = -5.90290826836842996371446475743e-1;
    a[9][5] = 2.12300514481811942347288949897e1;
    a[9][6] = 1.52792336328824235832596922938e1;
    a[9][7] = -3.32882109689848629194453265587e1;
    a[9][8] = -2.03312017085086261358222928593e-2;
    a[10][0] = -9.3714243008598732571704021658e-1;
    a[10][3] = 5.18637242884406370830023853209;
    a[10][4] = 1.09143734899672957818500254654;
    a[10][5] = -8.14978701074692612513997267357;
    a[10][6] = -1.85200656599969598641566180701e1;
    a[10][7] = 2.27394870993505042818970056734e1;
    a[10][8] = 2.49360555267965238987089396762;
    a[10][9] = -3.0467644718982195003823669022;
    a[11][0] = 2.27331014751653820792359768449;
    a[11][3] = -1.05344954667372501984066689879e1;
    a[11][4] = -2.00087205822486249909675718444;
    a[11][5] = -1.79589318631187989172765950534e1;
    a[11][6] = 2.79488845294199600508499808837e1;
    a[11][7] = -2.85899827713502369474065508674;
    a[11][8] = -8.87285693353062954433549289258;
    a[11][9] = 1.23605671757943030647266201528e1;
    a[11][10] = 6.43392746015763530355970484046e-1;
    a
};

const B: [f64; 12] = [
    5.42937341165687622380535766363e-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.45031289275240888144113950566,
    1.89151789931450038304281599044,
    -5.8012039600105847814672114227,
    3.1116436695781989440891606237e-1,
    -1.52160949662516078556178806805e-1,
    2.01365400804030348374776537501e-1,
    4.47106157277725905176885569043e-2,
];

const E3: [f64; 12] = {
    let mut e = B;
    e[0] -= 0.244094488188976377952755905512;
    e[8] -= 0.733846688281611857341361741547;
    e[11] -= 0.220588235294117647058823529412e-1;
    e
};

const E5: [f64; 12] = [
    0.1312004499419488073250102996e-1,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.1225156446376204440720569753e+1,
    -0.4957589496572501915214079952,
    0.1664377182454986536961530415e+1,
    -0.3503288487499736816886487290,
    0.3341791187130174790297318841,
    0.8192320648511571246570742613e-1,
    -0.2235530786388629525884427845e-1,
];
