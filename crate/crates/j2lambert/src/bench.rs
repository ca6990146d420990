//! Benchmark harness: convergence, stress geometries and amortized cost.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use j2lambert_core::elements::{mean_from_true, orbital_period, true_from_mean};
use j2lambert_core::mlp::MlpModel;
use j2lambert_core::pipeline::{solve_perturbed_lambert, Guess, PerturbedLambertQuery};
use j2lambert_core::rng::{derive_seed, rng_from_seed};
use j2lambert_core::sample::{draw_elements, generate_dataset, SampleRanges, SampleRecord};
use j2lambert_core::shooting::ShootingConfig;
use j2lambert_core::{BodyParams, Vec3};
use rand::Rng;

use crate::clock::MonotonicClock;
use crate::dataset::fmt_f64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Standard shooting from the Keplerian velocity.
    Sn,
    /// Learned correction, then shooting.
    Dnn,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Sn, Method::Dnn];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sn => "SN",
            Method::Dnn => "DNN",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Usage(format!("unknown method `{s}` (SN or DNN)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub rev_counts: Vec<u32>,
    pub samples_per_rev: usize,
    pub methods: Vec<Method>,
    pub sn_cfg: ShootingConfig,
    pub dnn_cfg: ShootingConfig,
    pub seed: u64,
}

impl Default for BenchConfig {
    /// Desk scale: revolutions 0 to 5, 100 cases each, tolerance 1e-3 km and
    /// at most 2000 iterations for both methods.
    fn default() -> Self {
        BenchConfig {
            rev_counts: (0..=5).collect(),
            samples_per_rev: 100,
            methods: Method::ALL.to_vec(),
            sn_cfg: ShootingConfig::default(),
            dnn_cfg: ShootingConfig::default(),
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_rev == 0 {
            return Err(Error::Usage(
                "samples per revolution must be at least 1".into(),
            ));
        }
        if self.rev_counts.is_empty() || self.methods.is_empty() {
            return Err(Error::Usage(
                "need at least one revolution count and one method".into(),
            ));
        }
        self.sn_cfg.validate()?;
        self.dnn_cfg.validate()?;
        Ok(())
    }

    fn shooting(&self, m: Method) -> &ShootingConfig {
        match m {
            Method::Sn => &self.sn_cfg,
            Method::Dnn => &self.dnn_cfg,
        }
    }
}

/// Aggregate for one (method, revolution count) cell. Means are over the
/// solves that returned a result; `converged` and `ratio` count all `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub revs: u32,
    pub n: usize,
    pub converged: usize,
    pub ratio: f64,
    pub mean_iters: f64,
    pub mean_time_s: f64,
    pub mean_err_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub seed: u64,
    pub note: String,
}

const REPORT_HEADER: &str = "method,revs,n,converged,ratio,mean_iters,mean_time_s,mean_err_km";

impl BenchReport {
    pub fn row(&self, method: Method, revs: u32) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.revs == revs)
    }

    /// Metadata as leading `#` lines, then the table.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# seed: {}\n", self.seed);
        for line in self.note.lines() {
            let _ = writeln!(out, "# note: {line}");
        }
        out.push_str(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.method,
                r.revs,
                r.n,
                r.converged,
                fmt_f64(r.ratio),
                fmt_f64(r.mean_iters),
                fmt_f64(r.mean_time_s),
                fmt_f64(r.mean_err_km)
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let origin = std::path::Path::new("<report>");
        let mut seed = None;
        let mut notes = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            if let Some(v) = body.strip_prefix("seed:") {
                seed = v.trim().parse().ok();
            } else if let Some(v) = body.strip_prefix("note:") {
                notes.push(v.trim().to_string());
            }
        }
        let seed = seed.ok_or_else(|| Error::format(origin, 1, "missing `# seed:` line"))?;
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = r
            .headers()
            .map_err(|e| Error::format(origin, 0, e.to_string()))?;
        if header.iter().ne(REPORT_HEADER.split(',')) {
            return Err(Error::format(origin, 0, "unexpected report header"));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| {
                Error::format(origin, e.position().map_or(0, |p| p.line()), e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |f: &str| Error::format(origin, line, format!("bad value `{f}`"));
            let f = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(&rec[i]));
            rows.push(BenchRow {
                method: rec[0].parse().map_err(|_| bad(&rec[0]))?,
                revs: rec[1].parse().map_err(|_| bad(&rec[1]))?,
                n: rec[2].parse().map_err(|_| bad(&rec[2]))?,
                converged: rec[3].parse().map_err(|_| bad(&rec[3]))?,
                ratio: f(4)?,
                mean_iters: f(5)?,
                mean_time_s: f(6)?,
                mean_err_km: f(7)?,
            });
        }
        Ok(BenchReport {
            rows,
            seed,
            note: notes.join("\n"),
        })
    }
}

/// One boundary-value problem with the plane hint of its generating orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchCase {
    pub r0: Vec3,
    pub rf: Vec3,
    pub tof: f64,
    pub revs: u32,
    pub hint: Vec3,
}

impl From<&SampleRecord> for BenchCase {
    fn from(rec: &SampleRecord) -> Self {
        BenchCase {
            r0: rec.r0,
            rf: rec.rf,
            tof: rec.tof,
            revs: rec.revs,
            hint: rec.r0.cross(&rec.v0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOutcome {
    pub converged: bool,
    pub iterations: u32,
    pub time_s: f64,
    pub terminal_error_km: f64,
    pub propagations: u32,
}

/// Solves one case; `None` when the pipeline raised an error.
pub fn solve_case(
    case: &BenchCase,
    method: Method,
    model: Option<&MlpModel>,
    cfg: &ShootingConfig,
    body: &BodyParams,
) -> Result<Option<SolveOutcome>> {
    let guess = match (method, model) {
        (Method::Sn, _) => Guess::ColdStart,
        (Method::Dnn, Some(m)) => Guess::Learned(m),
        (Method::Dnn, None) => {
            return Err(Error::Usage("the DNN method needs a trained model".into()))
        }
    };
    let q = PerturbedLambertQuery::new(case.r0, case.rf, case.tof, case.revs, *body)
        .with_plane_hint(case.hint);
    let clock = MonotonicClock::new();
    let start = Instant::now();
    let res = solve_perturbed_lambert(&q, guess, cfg, &clock);
    let time_s = start.elapsed().as_secs_f64();
    Ok(res.ok().map(|r| SolveOutcome {
        converged: r.converged(),
        iterations: r.shooting.iterations,
        time_s,
        terminal_error_km: r.shooting.terminal_error,
        propagations: r.total_propagations(),
    }))
}

fn aggregate(method: Method, revs: u32, outcomes: &[Option<SolveOutcome>]) -> BenchRow {
    let ok: Vec<&SolveOutcome> = outcomes.iter().flatten().collect();
    let mean = |f: &dyn Fn(&SolveOutcome) -> f64| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(|o| f(o)).sum::<f64>() / ok.len() as f64
        }
    };
    let converged = ok.iter().filter(|o| o.converged).count();
    BenchRow {
        method,
        revs,
        n: outcomes.len(),
        converged,
        ratio: converged as f64 / outcomes.len() as f64,
        mean_iters: mean(&|o| o.iterations as f64),
        mean_time_s: mean(&|o| o.time_s),
        mean_err_km: mean(&|o| o.terminal_error_km),
    }
}

fn run_cases(
    cfg: &BenchConfig,
    model: Option<&MlpModel>,
    body: &BodyParams,
    cases: &[(u32, Vec<BenchCase>)],
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        for (revs, cs) in cases {
            let outcomes = cs
                .iter()
                .map(|c| solve_case(c, method, model, cfg.shooting(method), body))
                .collect::<Result<Vec<_>>>()?;
            rows.push(aggregate(method, *revs, &outcomes));
        }
    }
    Ok(rows)
}

/// Tag mixed into every benchmark seed so benchmark cases never share a
/// seed stream with `gen` datasets built from the same user seed.
const BENCH_TAG: u64 = 0x6a32_6265_6e63_6800;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Convergence,
    Stress180,
    Stress360,
    TotalCost,
}

/// Dataset seed for the cases of `stream` at `revs` revolutions.
pub fn bench_seed(seed: u64, stream: Stream, revs: u32) -> u64 {
    derive_seed(
        derive_seed(derive_seed(seed, BENCH_TAG), stream as u64),
        u64::from(revs),
    )
}

/// Fresh generated samples for one revolution count.
pub fn convergence_cases(
    seed: u64,
    stream: Stream,
    revs: u32,
    n: usize,
    body: &BodyParams,
) -> Result<Vec<SampleRecord>> {
    let ds = generate_dataset(
        n,
        bench_seed(seed, stream, revs),
        &SampleRanges::extended_for_revs(revs),
        body,
    )?;
    Ok(ds.records)
}

fn check_model(cfg: &BenchConfig, model: Option<&MlpModel>) -> Result<()> {
    cfg.validate()?;
    if cfg.methods.contains(&Method::Dnn) && model.is_none() {
        return Err(Error::Usage("the DNN method needs a trained model".into()));
    }
    Ok(())
}

pub fn run_convergence_bench(
    cfg: &BenchConfig,
    model: Option<&MlpModel>,
    body: &BodyParams,
) -> Result<BenchReport> {
    check_model(cfg, model)?;
    let mut cases = Vec::new();
    for &revs in &cfg.rev_counts {
        let recs = convergence_cases(
            cfg.seed,
            Stream::Convergence,
            revs,
            cfg.samples_per_rev,
            body,
        )?;
        cases.push((revs, recs.iter().map(BenchCase::from).collect()));
    }
    Ok(BenchReport {
        rows: run_cases(cfg, model, body, &cases)?,
        seed: cfg.seed,
        note: format!(
            "convergence; {} cases per revolution count; tol {} km; max_iter {}",
            cfg.samples_per_rev, cfg.sn_cfg.tol, cfg.sn_cfg.max_iter
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StressAngle {
    Half,
    Full,
}

impl StressAngle {
    pub fn degrees(self) -> u32 {
        match self {
            StressAngle::Half => 180,
            StressAngle::Full => 360,
        }
    }

    fn stream(self) -> Stream {
        match self {
            StressAngle::Half => Stream::Stress180,
            StressAngle::Full => Stream::Stress360,
        }
    }
}

impl FromStr for StressAngle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "180" => Ok(StressAngle::Half),
            "360" => Ok(StressAngle::Full),
            _ => Err(Error::Usage(format!(
                "stress angle must be 180 or 360, got `{s}`"
            ))),
        }
    }
}

/// Angle between two position vectors, in `[0, π]`.
pub fn separation(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// A transfer whose endpoints are exactly half a turn apart (`rf` on the
/// ray opposite `r0`) or coincide after whole turns, `revs` extra
/// revolutions included. The generating orbit lies in a plane J2 keeps
/// invariant: equatorial (either sense) or polar.
pub fn stress_case(
    seed: u64,
    angle: StressAngle,
    revs: u32,
    body: &BodyParams,
) -> Result<BenchCase> {
    let mut rng = rng_from_seed(seed);
    let (mut oe, _) = draw_elements(&mut rng, &SampleRanges::extended(), body.radius);
    oe.i = [0.0, FRAC_PI_2, PI][rng.gen_range(0..3)];
    let period = orbital_period(oe.a, body.mu)?;
    let nu0 = true_from_mean(oe.mean_anomaly, oe.e);
    let r0 = oe.state_at_true_anomaly(nu0, body.mu).position;
    let (rf, tof) = match angle {
        StressAngle::Half => {
            let nu1 = nu0 + PI;
            let r1 = oe.semi_latus_rectum() / (1.0 + oe.e * nu1.cos());
            let dm = (mean_from_true(nu1, oe.e) - oe.mean_anomaly).rem_euclid(TAU);
            (-r0 * (r1 / r0.norm()), period * (dm / TAU + revs as f64))
        }
        StressAngle::Full => (r0, period * (revs as f64 + 1.0)),
    };
    Ok(BenchCase {
        r0,
        rf,
        tof,
        revs,
        hint: oe.plane_normal(),
    })
}

pub fn stress_cases(
    seed: u64,
    angle: StressAngle,
    revs: u32,
    n: usize,
    body: &BodyParams,
) -> Result<Vec<BenchCase>> {
    let base = bench_seed(seed, angle.stream(), revs);
    (0..n as u64)
        .map(|i| stress_case(derive_seed(base, i), angle, revs, body))
        .collect()
}

pub fn run_stress_bench(
    angle: StressAngle,
    cfg: &BenchConfig,
    model: Option<&MlpModel>,
    body: &BodyParams,
) -> Result<BenchReport> {
    check_model(cfg, model)?;
    let mut cases = Vec::new();
    for &revs in &cfg.rev_counts {
        cases.push((
            revs,
            stress_cases(cfg.seed, angle, revs, cfg.samples_per_rev, body)?,
        ));
    }
    Ok(BenchReport {
        rows: run_cases(cfg, model, body, &cases)?,
        seed: cfg.seed,
        note: format!(
            "stress {} deg; {} cases per revolution count; tol {} km; max_iter {}",
            angle.degrees(),
            cfg.samples_per_rev,
            cfg.sn_cfg.tol,
            cfg.sn_cfg.max_iter
        ),
    })
}

/// Time spent once before the learned guess is usable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneTimeCost {
    pub generation_s: f64,
    pub training_s: f64,
}

impl OneTimeCost {
    pub fn total(&self) -> f64 {
        self.generation_s + self.training_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalCostRow {
    pub batch: usize,
    pub sn_total_s: f64,
    pub dnn_total_s: f64,
    /// Fraction of the DNN total spent on generation and training.
    pub one_time_share: f64,
    /// One-time cost divided over the batch.
    pub amortized_one_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalCostReport {
    pub one_time: OneTimeCost,
    pub sn_per_solve_s: f64,
    pub dnn_per_solve_s: f64,
    pub rows: Vec<TotalCostRow>,
    /// Smallest batch whose DNN total undercuts SN; `None` if per-solve DNN
    /// is not cheaper.
    pub crossover: Option<u64>,
}

impl TotalCostRow {
    pub fn new(
        batch: usize,
        one_time: &OneTimeCost,
        sn_per_solve_s: f64,
        dnn_per_solve_s: f64,
    ) -> Self {
        let b = batch as f64;
        let dnn_total_s = one_time.total() + b * dnn_per_solve_s;
        TotalCostRow {
            batch,
            sn_total_s: b * sn_per_solve_s,
            dnn_total_s,
            one_time_share: one_time.total() / dnn_total_s,
            amortized_one_time_s: one_time.total() / b,
        }
    }
}

/// Smallest batch `b` with `one_time + b * dnn < b * sn`.
pub fn crossover_batch(
    one_time: &OneTimeCost,
    sn_per_solve_s: f64,
    dnn_per_solve_s: f64,
) -> Option<u64> {
    let gain = sn_per_solve_s - dnn_per_solve_s;
    if !(gain > 0.0) {
        return None;
    }
    let mut b = (one_time.total() / gain).floor().max(0.0) as u64 + 1;
    while b > 1
        && one_time.total() + (b - 1) as f64 * dnn_per_solve_s < (b - 1) as f64 * sn_per_solve_s
    {
        b -= 1;
    }
    while one_time.total() + b as f64 * dnn_per_solve_s >= b as f64 * sn_per_solve_s {
        b += 1;
    }
    Some(b)
}

impl TotalCostReport {
    pub fn from_per_solve(
        batches: &[usize],
        one_time: OneTimeCost,
        sn_per_solve_s: f64,
        dnn_per_solve_s: f64,
    ) -> Self {
        TotalCostReport {
            one_time,
            sn_per_solve_s,
            dnn_per_solve_s,
            rows: batches
                .iter()
                .map(|&b| TotalCostRow::new(b, &one_time, sn_per_solve_s, dnn_per_solve_s))
                .collect(),
            crossover: crossover_batch(&one_time, sn_per_solve_s, dnn_per_solve_s),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# generation_s: {}\n# training_s: {}\n# sn_per_solve_s: {}\n# dnn_per_solve_s: {}\n# crossover: {}\n",
            fmt_f64(self.one_time.generation_s),
            fmt_f64(self.one_time.training_s),
            fmt_f64(self.sn_per_solve_s),
            fmt_f64(self.dnn_per_solve_s),
            self.crossover.map_or_else(|| "none".to_string(), |b| b.to_string())
        );
        out.push_str("batch,sn_total_s,dnn_total_s,one_time_share,amortized_one_time_s\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.batch,
                fmt_f64(r.sn_total_s),
                fmt_f64(r.dnn_total_s),
                fmt_f64(r.one_time_share),
                fmt_f64(r.amortized_one_time_s)
            );
        }
        out
    }
}

/// Measures mean per-solve times of both methods on mixed revolution counts
/// (`cfg.samples_per_rev` cases at each count) and extrapolates to each batch.
pub fn run_total_cost_bench(
    batches: &[usize],
    cfg: &BenchConfig,
    one_time: OneTimeCost,
    model: &MlpModel,
    body: &BodyParams,
) -> Result<TotalCostReport> {
    let cfg = BenchConfig {
        methods: Method::ALL.to_vec(),
        ..cfg.clone()
    };
    cfg.validate()?;
    if batches.is_empty() || batches.contains(&0) {
        return Err(Error::Usage("batch sizes must be positive".into()));
    }
    let mut cases = Vec::new();
    for &revs in &cfg.rev_counts {
        let recs = convergence_cases(cfg.seed, Stream::TotalCost, revs, cfg.samples_per_rev, body)?;
        cases.push((revs, recs.iter().map(BenchCase::from).collect::<Vec<_>>()));
    }
    let rows = run_cases(&cfg, Some(model), body, &cases)?;
    let per_solve = |m: Method| {
        let rs: Vec<&BenchRow> = rows.iter().filter(|r| r.method == m).collect();
        rs.iter().map(|r| r.mean_time_s).sum::<f64>() / rs.len() as f64
    };
    Ok(TotalCostReport::from_per_solve(
        batches,
        one_time,
        per_solve(Method::Sn),
        per_solve(Method::Dnn),
    ))
}
