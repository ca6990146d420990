//! Keplerian guess, J2 propagation, learned correction, then shooting.

use alloc::format;

use crate::body::BodyParams;
use crate::error::{Error, Result};
use crate::lambert::{solve_kepler_lambert, Branch, LambertQuery};
use crate::mlp::MlpModel;
use crate::propagator::propagate;
use crate::sample::{decode_output, encode_input, SampleForm};
use crate::shooting::{shoot, ShootingConfig, ShootingResult};
use crate::state::{StateCartesian, Vec3};

/// Layout every correction model must have.
pub const CORRECTION_FORM: SampleForm = SampleForm::Dv2Sph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedLambertQuery {
    pub r0: Vec3,
    pub rf: Vec3,
    pub tof: f64,
    pub revs: u32,
    pub plane_hint: Option<Vec3>,
    pub body: BodyParams,
}

impl PerturbedLambertQuery {
    pub fn new(r0: Vec3, rf: Vec3, tof: f64, revs: u32, body: BodyParams) -> Self {
        PerturbedLambertQuery {
            r0,
            rf,
            tof,
            revs,
            plane_hint: None,
            body,
        }
    }

    pub fn with_plane_hint(mut self, hint: Vec3) -> Self {
        self.plane_hint = Some(hint);
        self
    }
}

/// Source of monotonic time in seconds.
pub trait Clock {
    fn now(&self) -> f64;
}

/// A clock that never advances, for builds without a timer.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub lambert: f64,
    pub propagation: f64,
    pub correction: f64,
    pub shooting: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.lambert + self.propagation + self.correction + self.shooting
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Guess<'a> {
    /// Shoot from the Keplerian velocity (standard shooting).
    ColdStart,
    /// Add the model's predicted correction before shooting.
    Learned(&'a MlpModel),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineResult {
    pub shooting: ShootingResult,
    pub v_d: Vec3,
    pub branch: Option<Branch>,
    pub dnn_correction: Vec3,
    /// Terminal error of the velocity handed to shooting, km.
    pub pre_shooting_error: f64,
    /// Propagations spent before shooting.
    pub setup_propagations: u32,
    pub timing: StageTimes,
}

impl PipelineResult {
    pub fn converged(&self) -> bool {
        self.shooting.converged
    }

    pub fn total_propagations(&self) -> u32 {
        self.setup_propagations + self.shooting.propagations
    }
}

pub fn check_correction_model(model: &MlpModel) -> Result<()> {
    model.validate()?;
    let (di, d_out) = (CORRECTION_FORM.input_dim(), CORRECTION_FORM.output_dim());
    if model.input_dim() != di || model.output_dim() != d_out {
        return Err(Error::ModelLayout(format!(
            "correction model must map {di} inputs to {d_out} outputs, found {} -> {}",
            model.input_dim(),
            model.output_dim()
        )));
    }
    Ok(())
}

/// The model's velocity correction, km/s, for a Keplerian velocity `v_d`
/// whose J2 trajectory misses the target by `delta_rf`.
pub fn predict_correction(
    model: &MlpModel,
    r0: &Vec3,
    v_d: &Vec3,
    delta_rf: &Vec3,
    tof: f64,
    body_radius: f64,
) -> Result<Vec3> {
    check_correction_model(model)?;
    let x = encode_input(
        CORRECTION_FORM,
        r0,
        &Vec3::zeros(),
        v_d,
        delta_rf,
        tof,
        body_radius,
    );
    let y = model.forward(&x)?;
    Ok(decode_output(CORRECTION_FORM, &[y[0], y[1], y[2]]))
}

/// Solves the J2 boundary-value problem.
///
/// With several Keplerian candidates (multi-revolution branches) each one is
/// corrected and propagated, and the one with the smaller pre-shooting
/// terminal miss is kept; a candidate whose propagation fails (for instance
/// by striking the body) drops out. Every propagation before shooting is
/// counted in `setup_propagations`; a single-candidate cold start needs none.
/// Shooting non-convergence is reported in the result, not as an error.
pub fn solve_perturbed_lambert(
    q: &PerturbedLambertQuery,
    guess: Guess<'_>,
    cfg: &ShootingConfig,
    clock: &dyn Clock,
) -> Result<PipelineResult> {
    q.body.validate()?;
    cfg.validate()?;
    if let Guess::Learned(m) = guess {
        check_correction_model(m)?;
    }
    let mut timing = StageTimes::default();

    let t0 = clock.now();
    let mut lq = LambertQuery::new(q.r0, q.rf, q.tof, q.body.mu, q.revs);
    lq.plane_hint = q.plane_hint;
    let sols = solve_kepler_lambert(&lq)?;
    timing.lambert = clock.now() - t0;

    let mut setup = 0u32;
    let mut miss = |v0: Vec3, timing: &mut StageTimes| -> Result<Vec3> {
        let t0 = clock.now();
        setup += 1;
        let rf = propagate(
            &StateCartesian::new(q.r0, v0),
            q.tof,
            &q.body,
            &cfg.propagator,
        )?
        .position;
        timing.propagation += clock.now() - t0;
        Ok(q.rf - rf)
    };
    let correct = |v_d: Vec3, delta_rf: Vec3, timing: &mut StageTimes| -> Result<Vec3> {
        let t0 = clock.now();
        let dv = match guess {
            Guess::Learned(m) => {
                predict_correction(m, &q.r0, &v_d, &delta_rf, q.tof, q.body.radius)?
            }
            Guess::ColdStart => Vec3::zeros(),
        };
        timing.correction += clock.now() - t0;
        Ok(dv)
    };

    let (v_d, branch, dnn_correction) = if let [only] = sols.as_slice() {
        let dv = match guess {
            Guess::Learned(_) => {
                let d = miss(only.v0, &mut timing)?;
                correct(only.v0, d, &mut timing)?
            }
            Guess::ColdStart => Vec3::zeros(),
        };
        (only.v0, only.branch, dv)
    } else {
        let mut best: Option<(f64, Vec3, Option<Branch>, Vec3)> = None;
        let mut last_failure = None;
        for s in &sols {
            let mut score = |timing: &mut StageTimes| -> Result<(f64, Vec3)> {
                let d = miss(s.v0, timing)?;
                Ok(match guess {
                    Guess::Learned(_) => {
                        let dv = correct(s.v0, d, timing)?;
                        (miss(s.v0 + dv, timing)?.norm(), dv)
                    }
                    Guess::ColdStart => (d.norm(), Vec3::zeros()),
                })
            };
            match score(&mut timing) {
                Ok((err, dv)) => {
                    if best.as_ref().map_or(true, |b| err < b.0) {
                        best = Some((err, s.v0, s.branch, dv));
                    }
                }
                Err(
                    e @ (Error::StepBudgetExhausted { .. }
                    | Error::StepSizeUnderflow { .. }
                    | Error::NonFiniteState { .. }),
                ) => last_failure = Some(e),
                Err(e) => return Err(e),
            }
        }
        let (_, v, b, dv) =
            best.ok_or(last_failure.unwrap_or(Error::LambertNoSolution { revs: q.revs }))?;
        (v, b, dv)
    };

    let t0 = clock.now();
    let shooting = shoot(&q.r0, &(v_d + dnn_correction), &q.rf, q.tof, &q.body, cfg)?;
    timing.shooting = clock.now() - t0;

    Ok(PipelineResult {
        shooting,
        v_d,
        branch,
        dnn_correction,
        pre_shooting_error: shooting.initial_error,
        setup_propagations: setup,
        timing,
    })
}
