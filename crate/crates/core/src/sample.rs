//! Training-sample factory and the sample-form projections.
//!
//! A sample is built forward in time: random elements give `(r0, v0)`, J2
//! propagation gives the target `rf`, and the Keplerian Lambert velocity `v_d`
//! between `r0` and `rf` is propagated under J2 to measure how far it misses.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::body::{BodyParams, JUPITER_RADIUS_KM};
use crate::elements::{elements_to_state, orbital_period, OrbitalElements};
use crate::error::{domain, Error, Result};
use crate::lambert::{solve_kepler_lambert, LambertQuery};
use crate::mlp::ScalingPlan;
use crate::propagator::{propagate, PropagatorConfig};
use crate::rng::{derive_seed, rng_from_seed, SampleRng};
use crate::state::{cart_to_spherical, spherical_to_cart, SphericalVector, StateCartesian, Vec3};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Redraws allowed per sample before giving up.
pub const MAX_RETRIES: u32 = 64;

/// Sampling box for the generating orbit. Radii in body radii, angles in rad,
/// time of flight as a fraction of the initial osculating period (open interval).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRanges {
    pub rp_range: (f64, f64),
    pub ra_max: f64,
    pub incl_range: (f64, f64),
    pub raan_range: (f64, f64),
    pub argp_range: (f64, f64),
    pub mean_anomaly_range: (f64, f64),
    pub tof_range: (f64, f64),
}

impl SampleRanges {
    pub fn table1() -> Self {
        SampleRanges {
            rp_range: (5.0, 30.0),
            ra_max: 30.0,
            incl_range: (0.0, 1.0),
            raan_range: (0.0, TAU),
            argp_range: (0.0, TAU),
            mean_anomaly_range: (0.0, TAU),
            tof_range: (0.0, 1.0),
        }
    }

    /// Full inclination range and flights up to ten periods.
    pub fn extended() -> Self {
        SampleRanges {
            incl_range: (0.0, core::f64::consts::PI),
            tof_range: (0.0, 10.0),
            ..Self::table1()
        }
    }

    /// Extended ranges restricted to flights of exactly `revs` whole revolutions.
    pub fn extended_for_revs(revs: u32) -> Self {
        SampleRanges {
            tof_range: (revs as f64, revs as f64 + 1.0),
            ..Self::extended()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.rp_range;
        if !(lo >= 5.0 && lo <= hi && hi <= self.ra_max && self.ra_max.is_finite()) {
            return Err(domain(
                "radius ranges must satisfy 5 <= rp_min <= rp_max <= ra_max",
            ));
        }
        let (ilo, ihi) = self.incl_range;
        if !(0.0 <= ilo && ilo <= ihi && ihi <= core::f64::consts::PI) {
            return Err(domain("inclination range must lie in [0, pi]"));
        }
        for (a, b) in [self.raan_range, self.argp_range, self.mean_anomaly_range] {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(domain("angle ranges must be ordered and finite"));
            }
        }
        let (tlo, thi) = self.tof_range;
        if !(tlo >= 0.0 && tlo < thi && thi.is_finite()) {
            return Err(domain("time-of-flight range must satisfy 0 <= lo < hi"));
        }
        Ok(())
    }

    pub fn contains(&self, oe: &OrbitalElements, body_radius: f64) -> bool {
        let rp = oe.a * (1.0 - oe.e) / body_radius;
        let ra = oe.a * (1.0 + oe.e) / body_radius;
        let slack = 1e-9;
        let within = |x: f64, (a, b): (f64, f64)| x >= a - slack && x <= b + slack;
        within(rp, self.rp_range)
            && ra >= rp - slack
            && ra <= self.ra_max + slack
            && within(oe.i, self.incl_range)
            && within(oe.raan, self.raan_range)
            && within(oe.argp, self.argp_range)
            && within(oe.mean_anomaly, self.mean_anomaly_range)
    }
}

/// One fully resolved sample. Positions in km, velocities in km/s, tof in s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    /// Seed that regenerates this record through `generate_sample`.
    pub seed: u64,
    pub revs: u32,
    pub tof: f64,
    pub r0: Vec3,
    pub v0: Vec3,
    pub rf: Vec3,
    pub vf: Vec3,
    pub v_d: Vec3,
    pub r_fd: Vec3,
    pub delta_v0: Vec3,
    pub delta_rf: Vec3,
}

/// `floor(tof / period)`; a flight of exactly one period counts one revolution.
pub fn revs_for_tof(tof: f64, period: f64) -> u32 {
    (tof / period).floor() as u32
}

fn uniform(rng: &mut SampleRng, (a, b): (f64, f64)) -> f64 {
    a + (b - a) * rng.gen::<f64>()
}

/// Uniform on the open interval `(a, b)`.
fn uniform_open(rng: &mut SampleRng, (a, b): (f64, f64)) -> f64 {
    loop {
        let x = a + (b - a) * rng.gen::<f64>();
        if x > a && x < b {
            return x;
        }
    }
}

/// Step 1 draw: generating elements and the flight-time fraction.
pub fn draw_elements(
    rng: &mut SampleRng,
    ranges: &SampleRanges,
    body_radius: f64,
) -> (OrbitalElements, f64) {
    let rp = uniform(rng, ranges.rp_range);
    let ra = uniform(rng, (rp, ranges.ra_max));
    let oe = OrbitalElements {
        a: 0.5 * (ra + rp) * body_radius,
        e: (ra - rp) / (ra + rp),
        i: uniform(rng, ranges.incl_range),
        raan: uniform(rng, ranges.raan_range) % TAU,
        argp: uniform(rng, ranges.argp_range) % TAU,
        mean_anomaly: uniform(rng, ranges.mean_anomaly_range) % TAU,
    };
    let frac = uniform_open(rng, ranges.tof_range);
    (oe, frac)
}

/// The Keplerian velocity among `candidates` closest to `reference`.
pub(crate) fn closest(candidates: &[Vec3], reference: &Vec3) -> Option<Vec3> {
    candidates
        .iter()
        .copied()
        .min_by(|a, b| (a - reference).norm().total_cmp(&(b - reference).norm()))
}

fn try_generate(
    seed: u64,
    ranges: &SampleRanges,
    body: &BodyParams,
    cfg: &PropagatorConfig,
) -> Result<SampleRecord> {
    let mut rng = rng_from_seed(seed);
    let (oe, frac) = draw_elements(&mut rng, ranges, body.radius);
    let s0 = elements_to_state(&oe, body.mu)?;
    let period = orbital_period(oe.a, body.mu)?;
    let tof = frac * period;
    let revs = revs_for_tof(tof, period);

    let sf = propagate(&s0, tof, body, cfg)?;
    let q = LambertQuery::new(s0.position, sf.position, tof, body.mu, revs)
        .with_plane_hint(oe.plane_normal());
    let sols = solve_kepler_lambert(&q)?;
    let vs: Vec<Vec3> = sols.iter().map(|s| s.v0).collect();
    let v_d = closest(&vs, &s0.velocity).ok_or(Error::LambertNoSolution { revs })?;
    let r_fd = propagate(&StateCartesian::new(s0.position, v_d), tof, body, cfg)?.position;

    Ok(SampleRecord {
        seed,
        revs,
        tof,
        r0: s0.position,
        v0: s0.velocity,
        rf: sf.position,
        vf: sf.velocity,
        v_d,
        r_fd,
        delta_v0: s0.velocity - v_d,
        delta_rf: sf.position - r_fd,
    })
}

/// Builds one sample. A draw whose Keplerian problem has no solution is
/// redrawn from a sub-seed of `seed`; the returned record carries the seed
/// that actually produced it, and the redraw count is returned alongside.
pub fn generate_sample_counted(
    seed: u64,
    ranges: &SampleRanges,
    body: &BodyParams,
    cfg: &PropagatorConfig,
) -> Result<(SampleRecord, u32)> {
    ranges.validate()?;
    body.validate()?;
    let mut s = seed;
    let mut last = Error::EmptyInput;
    for retry in 0..=MAX_RETRIES {
        match try_generate(s, ranges, body, cfg) {
            Ok(rec) => return Ok((rec, retry)),
            Err(e) => last = e,
        }
        s = derive_seed(seed, u64::from(retry) + 1);
    }
    Err(last)
}

pub fn generate_sample(
    seed: u64,
    ranges: &SampleRanges,
    body: &BodyParams,
) -> Result<SampleRecord> {
    generate_sample_counted(seed, ranges, body, &PropagatorConfig::default()).map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<SampleRecord>,
    /// Total redraws over all samples.
    pub retries: u64,
}

/// Seed of sample `index` in the dataset keyed by `seed`.
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    derive_seed(seed, index)
}

pub fn generate_dataset(
    n: usize,
    seed: u64,
    ranges: &SampleRanges,
    body: &BodyParams,
) -> Result<Dataset> {
    generate_dataset_range(0..n as u64, seed, ranges, body)
}

/// Samples with the given indices; concatenating index ranges reproduces the
/// full dataset, so callers can split work freely.
pub fn generate_dataset_range(
    indices: core::ops::Range<u64>,
    seed: u64,
    ranges: &SampleRanges,
    body: &BodyParams,
) -> Result<Dataset> {
    if indices.is_empty() {
        return Err(Error::EmptyInput);
    }
    let cfg = PropagatorConfig::default();
    let mut records = Vec::with_capacity((indices.end - indices.start) as usize);
    let mut retries = 0u64;
    for i in indices {
        let (rec, r) = generate_sample_counted(sample_seed(seed, i), ranges, body, &cfg)?;
        records.push(rec);
        retries += u64::from(r);
    }
    Ok(Dataset { records, retries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SampleForm {
    VCar,
    VSph,
    Dv1Car,
    Dv1Sph,
    Dv2Car,
    Dv2Sph,
}

impl SampleForm {
    pub const ALL: [SampleForm; 6] = [
        SampleForm::VCar,
        SampleForm::VSph,
        SampleForm::Dv1Car,
        SampleForm::Dv1Sph,
        SampleForm::Dv2Car,
        SampleForm::Dv2Sph,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SampleForm::VCar => "v-Car",
            SampleForm::VSph => "v-Sph",
            SampleForm::Dv1Car => "dv1-Car",
            SampleForm::Dv1Sph => "dv1-Sph",
            SampleForm::Dv2Car => "dv2-Car",
            SampleForm::Dv2Sph => "dv2-Sph",
        }
    }

    pub fn input_dim(self) -> usize {
        match self {
            SampleForm::Dv2Car | SampleForm::Dv2Sph => 10,
            _ => 7,
        }
    }

    pub fn output_dim(self) -> usize {
        3
    }

    pub fn is_spherical(self) -> bool {
        matches!(
            self,
            SampleForm::VSph | SampleForm::Dv1Sph | SampleForm::Dv2Sph
        )
    }

    /// Whether the output is the correction `Δv0` rather than `v0` itself.
    pub fn predicts_correction(self) -> bool {
        !matches!(self, SampleForm::VCar | SampleForm::VSph)
    }

    pub fn input_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            SampleForm::VCar => &["x0", "y0", "z0", "xf", "yf", "zf", "tof"],
            SampleForm::VSph => &["r0", "az0", "el0", "rf", "azf", "elf", "tof"],
            SampleForm::Dv1Car => &["x0", "y0", "z0", "dxf", "dyf", "dzf", "tof"],
            SampleForm::Dv1Sph => &["r0", "az0", "el0", "drf", "az_drf", "el_drf", "tof"],
            SampleForm::Dv2Car => &[
                "x0", "y0", "z0", "vxd", "vyd", "vzd", "dxf", "dyf", "dzf", "tof",
            ],
            SampleForm::Dv2Sph => &[
                "r0", "az0", "el0", "vd", "az_vd", "el_vd", "drf", "az_drf", "el_drf", "tof",
            ],
        };
        names.iter().map(|s| String::from(*s)).collect()
    }

    /// Strictly positive magnitude columns (radii, norms, tof), eligible for
    /// log scaling during training, and the output azimuth.
    pub fn scaling_plan(self) -> ScalingPlan {
        let tof = self.input_dim() - 1;
        let mut log_inputs = Vec::new();
        if self.is_spherical() {
            log_inputs.extend((0..tof).step_by(3));
        }
        log_inputs.push(tof);
        ScalingPlan {
            log_inputs,
            log_outputs: if self.is_spherical() {
                alloc::vec![0]
            } else {
                Vec::new()
            },
            periodic_outputs: if self.is_spherical() {
                alloc::vec![1]
            } else {
                Vec::new()
            },
        }
    }

    pub fn output_names(self) -> Vec<String> {
        let names: [&str; 3] = match self {
            SampleForm::VCar => ["vx0", "vy0", "vz0"],
            SampleForm::VSph => ["v0", "az_v0", "el_v0"],
            SampleForm::Dv1Car | SampleForm::Dv2Car => ["dvx0", "dvy0", "dvz0"],
            SampleForm::Dv1Sph | SampleForm::Dv2Sph => ["dv0", "az_dv0", "el_dv0"],
        };
        names.iter().map(|s| String::from(*s)).collect()
    }
}

impl fmt::Display for SampleForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SampleForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SampleForm::ALL
            .iter()
            .copied()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(alloc::format!("unknown sample form '{s}'")))
    }
}

/// Position in body radii, as Cartesian or spherical components.
fn position_block(v: &Vec3, spherical: bool, body_radius: f64) -> [f64; 3] {
    let scaled = v / body_radius;
    if spherical {
        cart_to_spherical(&scaled).to_array()
    } else {
        [scaled.x, scaled.y, scaled.z]
    }
}

/// Velocities and difference vectors stay in km/s and km.
fn raw_block(v: &Vec3, spherical: bool) -> [f64; 3] {
    if spherical {
        cart_to_spherical(v).to_array()
    } else {
        [v.x, v.y, v.z]
    }
}

/// Network input for `form` from the quantities known at solve time.
/// `rf` is used by the v forms, `v_d` by dv2 and `delta_rf` by the dv forms.
pub fn encode_input(
    form: SampleForm,
    r0: &Vec3,
    rf: &Vec3,
    v_d: &Vec3,
    delta_rf: &Vec3,
    tof: f64,
    body_radius: f64,
) -> Vec<f64> {
    let sph = form.is_spherical();
    let mut x = Vec::with_capacity(form.input_dim());
    x.extend(position_block(r0, sph, body_radius));
    match form {
        SampleForm::VCar | SampleForm::VSph => x.extend(position_block(rf, sph, body_radius)),
        SampleForm::Dv1Car | SampleForm::Dv1Sph => x.extend(raw_block(delta_rf, sph)),
        SampleForm::Dv2Car | SampleForm::Dv2Sph => {
            x.extend(raw_block(v_d, sph));
            x.extend(raw_block(delta_rf, sph));
        }
    }
    x.push(tof / SECONDS_PER_DAY);
    x
}

/// Network output for `form`: `v0` for the v forms, `Δv0` otherwise.
pub fn encode_output(form: SampleForm, rec: &SampleRecord) -> [f64; 3] {
    let target = if form.predicts_correction() {
        rec.delta_v0
    } else {
        rec.v0
    };
    raw_block(&target, form.is_spherical())
}

/// Inverse of `encode_output`: the Cartesian vector in km/s.
pub fn decode_output(form: SampleForm, out: &[f64; 3]) -> Vec3 {
    if form.is_spherical() {
        spherical_to_cart(&SphericalVector::from_array(*out))
    } else {
        Vec3::new(out[0], out[1], out[2])
    }
}

pub fn project_form(rec: &SampleRecord, form: SampleForm) -> (Vec<f64>, [f64; 3]) {
    project_form_with_radius(rec, form, JUPITER_RADIUS_KM)
}

pub fn project_form_with_radius(
    rec: &SampleRecord,
    form: SampleForm,
    body_radius: f64,
) -> (Vec<f64>, [f64; 3]) {
    (
        encode_input(
            form,
            &rec.r0,
            &rec.rf,
            &rec.v_d,
            &rec.delta_rf,
            rec.tof,
            body_radius,
        ),
        encode_output(form, rec),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn revs_floor_convention() {
        assert_eq!(revs_for_tof(0.5, 1.0), 0);
        assert_eq!(revs_for_tof(9.99, 1.0), 9);
        assert_eq!(revs_for_tof(1.0, 1.0), 1);
        let t = 3.7e5;
        assert_eq!(revs_for_tof(t, t), 1);
    }

    #[test]
    fn form_dimensions() {
        let dims: Vec<usize> = SampleForm::ALL.iter().map(|f| f.input_dim()).collect();
        assert_eq!(dims, [7, 7, 7, 7, 10, 10]);
        for f in SampleForm::ALL {
            assert_eq!(f.output_dim(), 3);
            assert_eq!(f.input_names().len(), f.input_dim());
            assert_eq!(f.name().parse::<SampleForm>().unwrap(), f);
        }
        assert!("v-Polar".parse::<SampleForm>().is_err());
    }

    #[test]
    fn range_presets_validate() {
        SampleRanges::table1().validate().unwrap();
        SampleRanges::extended().validate().unwrap();
        SampleRanges::extended_for_revs(4).validate().unwrap();
        let bad = SampleRanges {
            rp_range: (4.0, 30.0),
            ..SampleRanges::table1()
        };
        assert!(bad.validate().is_err());
    }
}
