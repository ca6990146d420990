//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use j2lambert_core::mlp::{train_scaled, Activation, MlpConfig, TrainConfig};
use j2lambert_core::pipeline::{
    solve_perturbed_lambert, Guess, PerturbedLambertQuery, CORRECTION_FORM,
};
use j2lambert_core::sample::{
    generate_dataset, project_form_with_radius, SampleForm, SampleRanges,
};
use j2lambert_core::shooting::ShootingConfig;
use j2lambert_core::stats::form_screening_report;
use j2lambert_core::{BodyParams, Vec3};

use crate::bench::{
    run_convergence_bench, run_stress_bench, run_total_cost_bench, BenchConfig, OneTimeCost,
    StressAngle,
};
use crate::catalog::BodyCatalog;
use crate::clock::MonotonicClock;
use crate::config::Settings;
use crate::dataset::{load_dataset, save_dataset};
use crate::error::{Error, Result};
use crate::model_io::{load_model, save_history, save_model};
use crate::screening::{ranking_text, save_screening};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "j2lambert",
    version,
    about = "J2-perturbed Lambert solver with a learned initial guess"
)]
pub struct Cli {
    /// TOML file of default flag values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Body catalog replacing the built-in one.
    #[arg(long, global = true)]
    pub bodies: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a sample dataset.
    Gen(GenArgs),
    /// Screen sample forms by input/output correlation.
    Stats(StatsArgs),
    /// Train a network on one sample form.
    Train(TrainArgs),
    /// Solve one perturbed Lambert problem.
    Solve(SolveArgs),
    /// Run a benchmark and write its report as CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub body: Option<String>,
    /// table1, extended, extended:<max periods> or revs:<count>.
    #[arg(long)]
    pub ranges: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Comma-separated form names; all six by default.
    #[arg(long)]
    pub forms: Option<String>,
    /// Directory for column_stats.csv, correlation.csv and ranking.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub body: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub form: Option<String>,
    /// Hidden widths, comma-separated.
    #[arg(long)]
    pub layers: Option<String>,
    /// Hidden-layer activation.
    #[arg(long)]
    pub activation: Option<String>,
    #[arg(long)]
    pub output_activation: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub body: Option<String>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Per-epoch MSE as CSV.
    #[arg(long)]
    pub history_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Initial position `x,y,z`, km.
    #[arg(long, allow_hyphen_values = true)]
    pub r0: Option<String>,
    /// Target position `x,y,z`, km.
    #[arg(long, allow_hyphen_values = true)]
    pub rf: Option<String>,
    /// Time of flight, s.
    #[arg(long)]
    pub tof: Option<f64>,
    #[arg(long)]
    pub revs: Option<u32>,
    #[arg(long)]
    pub body: Option<String>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Shoot from the Keplerian velocity without a model.
    #[arg(long)]
    pub cold_start: bool,
    /// Orbit normal `x,y,z` choosing the transfer plane.
    #[arg(long, allow_hyphen_values = true)]
    pub plane_hint: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<u32>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// conv, stress or total.
    #[arg(long)]
    pub mode: Option<String>,
    /// Revolution counts, comma-separated.
    #[arg(long)]
    pub revs: Option<String>,
    #[arg(long)]
    pub samples_per_rev: Option<usize>,
    /// Comma-separated subset of SN,DNN.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<u32>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub body: Option<String>,
    /// Stress geometry: 180 or 360.
    #[arg(long)]
    pub angle: Option<String>,
    /// Batch sizes for the total-cost report, comma-separated.
    #[arg(long)]
    pub batches: Option<String>,
    /// Measured one-time generation cost, s.
    #[arg(long)]
    pub gen_seconds: Option<f64>,
    /// Measured one-time training cost, s.
    #[arg(long)]
    pub train_seconds: Option<f64>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Comma-separated list.
pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Usage(format!("bad {what} `{t}`")))
        })
        .collect()
}

pub fn parse_vec3(s: &str, what: &str) -> Result<Vec3> {
    match parse_list::<f64>(s, what)?.as_slice() {
        &[x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(Error::Usage(format!(
            "{what} needs three components, got `{s}`"
        ))),
    }
}

pub fn parse_ranges(s: &str) -> Result<SampleRanges> {
    let bad = || {
        Error::Usage(format!(
            "unknown ranges `{s}` (table1, extended, extended:<periods>, revs:<n>)"
        ))
    };
    let ranges = match s.split_once(':') {
        None if s == "table1" => SampleRanges::table1(),
        None if s == "extended" => SampleRanges::extended(),
        Some(("extended", p)) => SampleRanges {
            tof_range: (0.0, p.parse().map_err(|_| bad())?),
            ..SampleRanges::extended()
        },
        Some(("revs", n)) => SampleRanges::extended_for_revs(n.parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    };
    ranges.validate().map_err(|e| Error::Usage(e.to_string()))?;
    Ok(ranges)
}

fn parse_usage<T: FromStr>(s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| Error::Usage(e.to_string()))
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Usage(format!("missing required --{flag}")))
}

struct Ctx<'a> {
    settings: Settings,
    catalog: BodyCatalog,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn body(&self, flag: Option<String>, section: &str) -> Result<BodyParams> {
        let name = self
            .settings
            .pick(flag, section, "body")?
            .unwrap_or_else(|| "jupiter".into());
        self.catalog.resolve(&name)
    }

    fn say(&mut self, text: &str) -> Result<()> {
        self.out
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))
    }
}

fn write_report(ctx: &mut Ctx<'_>, path: Option<PathBuf>, csv: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(&p, csv).map_err(|e| Error::io(&p, e)),
        None => ctx.say(csv),
    }
}

fn cmd_gen(ctx: &mut Ctx<'_>, a: GenArgs) -> Result<i32> {
    let s = &ctx.settings;
    let n = s.pick(a.n, "gen", "n")?.unwrap_or(50_000);
    let seed = s.pick(a.seed, "gen", "seed")?.unwrap_or(0);
    let ranges = parse_ranges(
        &s.pick(a.ranges, "gen", "ranges")?
            .unwrap_or_else(|| "table1".into()),
    )?;
    let out = required(s.pick(a.out, "gen", "out")?, "out")?;
    let body = ctx.body(a.body, "gen")?;
    if n == 0 {
        return Err(Error::Usage("--n must be at least 1".into()));
    }
    let ds = generate_dataset(n, seed, &ranges, &body)?;
    save_dataset(&out, &ds.records)?;
    ctx.say(&format!(
        "wrote {} records to {}\n",
        ds.records.len(),
        out.display()
    ))?;
    Ok(EXIT_OK)
}

fn cmd_stats(ctx: &mut Ctx<'_>, a: StatsArgs) -> Result<i32> {
    let s = &ctx.settings;
    let input = required(s.pick(a.input, "stats", "in")?, "in")?;
    let forms = match s.pick(a.forms, "stats", "forms")? {
        Some(f) => parse_list::<SampleForm>(&f, "form")?,
        None => SampleForm::ALL.to_vec(),
    };
    let out = s.pick(a.out, "stats", "out")?;
    let body = ctx.body(a.body, "stats")?;
    let records = load_dataset(&input)?;
    let report = form_screening_report(&records, &forms, body.radius)?;
    if let Some(dir) = out {
        save_screening(&dir, &report)?;
    }
    ctx.say(&ranking_text(&report))?;
    Ok(EXIT_OK)
}

fn cmd_train(ctx: &mut Ctx<'_>, a: TrainArgs) -> Result<i32> {
    let s = &ctx.settings;
    let input = required(s.pick(a.input, "train", "in")?, "in")?;
    let model_out = required(s.pick(a.model_out, "train", "model-out")?, "model-out")?;
    let form = match s.pick(a.form, "train", "form")? {
        Some(f) => parse_usage::<SampleForm>(&f)?,
        None => CORRECTION_FORM,
    };
    let layers = parse_list::<usize>(
        &s.pick(a.layers, "train", "layers")?
            .unwrap_or_else(|| "50,50,50,50".into()),
        "layer width",
    )?;
    let hidden = parse_usage::<Activation>(
        &s.pick(a.activation, "train", "activation")?
            .unwrap_or_else(|| "tanh".into()),
    )?;
    let output = parse_usage::<Activation>(
        &s.pick(a.output_activation, "train", "output-activation")?
            .unwrap_or_else(|| "identity".into()),
    )?;
    let seed = s.pick(a.seed, "train", "seed")?.unwrap_or(0);
    let defaults = TrainConfig::default();
    let tcfg = TrainConfig {
        learning_rate: s
            .pick(a.lr, "train", "lr")?
            .unwrap_or(defaults.learning_rate),
        max_epochs: s.pick(a.epochs, "train", "epochs")?.unwrap_or(500),
        batch_size: s
            .pick(a.batch, "train", "batch")?
            .unwrap_or(defaults.batch_size),
        validation_fraction: s
            .pick(a.val_fraction, "train", "val-fraction")?
            .unwrap_or(defaults.validation_fraction),
        shuffle_seed: seed,
        ..defaults
    };
    let history_out = s.pick(a.history_out, "train", "history-out")?;
    let body = ctx.body(a.body, "train")?;
    let cfg = MlpConfig {
        input_dim: form.input_dim(),
        output_dim: form.output_dim(),
        hidden_layers: layers,
        hidden_activation: hidden,
        output_activation: output,
        init_seed: seed,
    };
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    tcfg.validate().map_err(|e| Error::Usage(e.to_string()))?;

    let records = load_dataset(&input)?;
    let mut x = Vec::with_capacity(records.len() * form.input_dim());
    let mut y = Vec::with_capacity(records.len() * form.output_dim());
    for r in &records {
        let (xi, yi) = project_form_with_radius(r, form, body.radius);
        x.extend(xi);
        y.extend(yi);
    }
    let (model, history) =
        train_scaled(&cfg, &tcfg, &form.scaling_plan(), &x, &y).map_err(|f| f.error)?;
    save_model(&model_out, &model)?;
    if let Some(p) = history_out {
        save_history(&p, &history)?;
    }
    let best = history
        .best_val_mse()
        .or(history.train_mse.get(history.best_epoch).copied())
        .unwrap_or(f64::NAN);
    ctx.say(&format!(
        "form {form}; {} training / {} validation samples; best epoch {} of {}; mse {best:.6e}\nmodel written to {}\n",
        history.train_samples,
        history.val_samples,
        history.best_epoch + 1,
        history.train_mse.len(),
        model_out.display()
    ))?;
    Ok(EXIT_OK)
}

fn shooting_cfg(
    s: &Settings,
    section: &str,
    tol: Option<f64>,
    max_iter: Option<u32>,
) -> Result<ShootingConfig> {
    let d = ShootingConfig::default();
    let cfg = ShootingConfig {
        tol: s.pick(tol, section, "tol")?.unwrap_or(d.tol),
        max_iter: s.pick(max_iter, section, "max-iter")?.unwrap_or(d.max_iter),
        ..d
    };
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    Ok(cfg)
}

fn fmt_vec(v: &Vec3) -> String {
    format!("{:.12e} {:.12e} {:.12e}", v.x, v.y, v.z)
}

fn cmd_solve(ctx: &mut Ctx<'_>, a: SolveArgs) -> Result<i32> {
    let s = &ctx.settings;
    let r0 = parse_vec3(&required(s.pick(a.r0, "solve", "r0")?, "r0")?, "--r0")?;
    let rf = parse_vec3(&required(s.pick(a.rf, "solve", "rf")?, "rf")?, "--rf")?;
    let tof = required(s.pick(a.tof, "solve", "tof")?, "tof")?;
    let revs = s.pick(a.revs, "solve", "revs")?.unwrap_or(0);
    let hint = s
        .pick(a.plane_hint, "solve", "plane-hint")?
        .map(|h| parse_vec3(&h, "--plane-hint"))
        .transpose()?;
    let cold = s.flag(a.cold_start, "solve", "cold-start")?;
    let model_path = s.pick(a.model, "solve", "model")?;
    let cfg = shooting_cfg(s, "solve", a.tol, a.max_iter)?;
    let body = ctx.body(a.body, "solve")?;

    let model = match (cold, model_path) {
        (true, _) => None,
        (false, Some(p)) => Some(load_model(&p)?),
        (false, None) => return Err(Error::Usage("give --model or --cold-start".into())),
    };
    let guess = model.as_ref().map_or(Guess::ColdStart, Guess::Learned);
    let mut q = PerturbedLambertQuery::new(r0, rf, tof, revs, body);
    q.plane_hint = hint;
    let res = solve_perturbed_lambert(&q, guess, &cfg, &MonotonicClock::new())?;
    let sh = &res.shooting;
    ctx.say(&format!(
        "converged {}\nv0 {}\nv_keplerian {}\ncorrection {}\niterations {}\nterminal_error_km {:.6e}\ninitial_error_km {:.6e}\npropagations {}\ntime_s {:.6e}\n",
        sh.converged,
        fmt_vec(&sh.v0),
        fmt_vec(&res.v_d),
        fmt_vec(&res.dnn_correction),
        sh.iterations,
        sh.terminal_error,
        sh.initial_error,
        res.total_propagations(),
        res.timing.total()
    ))?;
    Ok(if sh.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn bench_config(s: &Settings, a: &BenchArgs) -> Result<BenchConfig> {
    let d = BenchConfig::default();
    let shoot = shooting_cfg(s, "bench", a.tol, a.max_iter)?;
    let cfg = BenchConfig {
        rev_counts: match s.pick(a.revs.clone(), "bench", "revs")? {
            Some(r) => parse_list(&r, "revolution count")?,
            None => d.rev_counts,
        },
        samples_per_rev: s
            .pick(a.samples_per_rev, "bench", "samples-per-rev")?
            .unwrap_or(d.samples_per_rev),
        methods: match s.pick(a.methods.clone(), "bench", "methods")? {
            Some(m) => parse_list(&m, "method")?,
            None => d.methods,
        },
        sn_cfg: shoot,
        dnn_cfg: shoot,
        seed: s.pick(a.seed, "bench", "seed")?.unwrap_or(d.seed),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_bench(ctx: &mut Ctx<'_>, a: BenchArgs) -> Result<i32> {
    let s = &ctx.settings;
    let mode = s
        .pick(a.mode.clone(), "bench", "mode")?
        .unwrap_or_else(|| "conv".into());
    let cfg = bench_config(s, &a)?;
    let model = s
        .pick(a.model.clone(), "bench", "model")?
        .map(|p| load_model(&p))
        .transpose()?;
    let out = s.pick(a.out.clone(), "bench", "out")?;
    let body = ctx.body(a.body.clone(), "bench")?;
    let csv = match mode.as_str() {
        "conv" => run_convergence_bench(&cfg, model.as_ref(), &body)?.to_csv(),
        "stress" => {
            let angle = s
                .pick(a.angle.clone(), "bench", "angle")?
                .unwrap_or_else(|| "180".into());
            run_stress_bench(angle.parse::<StressAngle>()?, &cfg, model.as_ref(), &body)?.to_csv()
        }
        "total" => {
            let model =
                model.ok_or_else(|| Error::Usage("total-cost mode needs --model".into()))?;
            let one_time = OneTimeCost {
                generation_s: required(
                    s.pick(a.gen_seconds, "bench", "gen-seconds")?,
                    "gen-seconds",
                )?,
                training_s: required(
                    s.pick(a.train_seconds, "bench", "train-seconds")?,
                    "train-seconds",
                )?,
            };
            let batches = parse_list(
                &s.pick(a.batches.clone(), "bench", "batches")?
                    .unwrap_or_else(|| "1,10,100,1000,10000,100000".into()),
                "batch size",
            )?;
            run_total_cost_bench(&batches, &cfg, one_time, &model, &body)?.to_csv()
        }
        other => {
            return Err(Error::Usage(format!(
                "unknown mode `{other}` (conv, stress, total)"
            )))
        }
    };
    write_report(ctx, out, &csv)?;
    Ok(EXIT_OK)
}

/// Exit code for a failed command: solver failures count as
/// non-convergence, bad input of any kind as a usage error.
pub fn exit_code(e: &Error) -> i32 {
    use j2lambert_core::Error as E;
    match e {
        Error::Core(
            E::Domain(_)
            | E::ZeroRadius
            | E::AmbiguousPlane
            | E::DimensionMismatch { .. }
            | E::EmptyInput
            | E::ModelLayout(_)
            | E::Parse { .. },
        ) => EXIT_USAGE,
        Error::Core(_) => EXIT_NOT_CONVERGED,
        _ => EXIT_USAGE,
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let settings = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    let catalog = match &cli.bodies {
        Some(p) => BodyCatalog::load(p)?,
        None => BodyCatalog::builtin(),
    };
    let mut ctx = Ctx {
        settings,
        catalog,
        out,
    };
    match cli.command {
        Command::Gen(a) => cmd_gen(&mut ctx, a),
        Command::Stats(a) => cmd_stats(&mut ctx, a),
        Command::Train(a) => cmd_train(&mut ctx, a),
        Command::Solve(a) => cmd_solve(&mut ctx, a),
        Command::Bench(a) => cmd_bench(&mut ctx, a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            let _ = writeln!(err, "error: {e}");
            if code == EXIT_USAGE {
                let _ = writeln!(err, "run `j2lambert --help` for usage");
            }
            code
        }
    }
}
