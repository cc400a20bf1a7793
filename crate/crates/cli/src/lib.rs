//! Command-line driver for the KdV experiments.

pub mod artifacts;
pub mod config;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kdv_core::baseline::{self, keys, BaselineStore, Verdict};
use kdv_core::experiments::{
    epsilon_sweep, hermite_initial, near_linearity_error, pullback_comparison, return_experiment,
    uniform_times,
};
use kdv_core::normal_form::{self, NormalFormReport};
use kdv_core::shallow_water::{self, PhysicalParams, DEFAULT_SMALLNESS};
use kdv_core::{HermiteSpec, KdvParams, Scheme};
use serde::Serialize;

use crate::artifacts::{mode_rows, output_root, sample_rows, trajectory_rows, Manifest, RunDir};
use crate::config::{parse_list, ConfigLayer, Profile, RunConfig};
use crate::plot::{Plot, Series};

#[derive(Debug, Parser)]
#[command(
    name = "kdv",
    version,
    about = "Spectral KdV experiments and normal-form checks",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; they override the config file.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output root (defaults to $KDV_OUT, then ./kdv-runs).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Time-stepping profile: desk or paper.
    #[arg(long, global = true)]
    pub profile: Option<Profile>,
    /// Dispersion coefficient in u_t = a u_xxx + b u u_x.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Nonlinearity coefficient.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub t_final: Option<f64>,
    /// Grid size, a power of two.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// fornberg-whitham or if-rk4.
    #[arg(long, global = true)]
    pub scheme: Option<Scheme>,
    /// Disable 2/3-rule dealiasing.
    #[arg(long, global = true)]
    pub no_dealias: bool,
    /// Hermite width.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Hermite amplitude.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            profile: self.profile,
            a: self.a,
            b: self.b,
            dt: self.dt,
            t_final: self.t_final,
            m: self.m,
            scheme: self.scheme,
            dealias: self.no_dealias.then_some(false),
            epsilon: self.epsilon,
            amplitude: self.amplitude,
            seed: self.seed,
            out_dir: self.out.clone(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Record measured values as baselines where none exist yet.
    #[arg(long)]
    pub record_baseline: bool,
    /// Baseline file (defaults to the checked-in one).
    #[arg(long)]
    pub baseline: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve Hermite data and record diagnostics.
    Simulate {
        /// Number of sampling intervals.
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Evolve for one linear period (a = 1) and measure the return error.
    ReturnTest {
        #[command(flatten)]
        baseline: BaselineArgs,
    },
    /// Pull nonlinear evolution back with the reverse linear flow.
    Pullback {
        #[command(flatten)]
        baseline: BaselineArgs,
    },
    /// Near-linearity error against ‖φ‖_{H^-1/2} for unit-norm data.
    Sweep {
        /// Comma-separated widths.
        #[arg(long)]
        epsilons: Option<String>,
    },
    /// Residual of the reduced equation and a-priori ratio census.
    NormalformCheck {
        /// Mode support of the residual test fields.
        #[arg(long, default_value_t = 4)]
        support: usize,
        /// Comma-separated evaluation times.
        #[arg(long, default_value = "0,0.3")]
        times: String,
        /// Comma-separated step sizes, largest first.
        #[arg(long, default_value = "1e-4,5e-5,2.5e-5,1e-5")]
        dts: String,
        #[arg(long, default_value_t = 100)]
        census_fields: usize,
        #[arg(long, default_value_t = 32)]
        census_support: usize,
        #[command(flatten)]
        baseline: BaselineArgs,
    },
    /// Exhaustive integer identity checks.
    Identities {
        #[arg(long, default_value_t = 20)]
        bound: i64,
    },
    /// Shallow-water regime and model-mismatch report.
    ShallowWater {
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        /// Smallness threshold for α_ε and β_ε.
        #[arg(long)]
        threshold: Option<f64>,
        /// Physical amplitude (m); with --h0 and --l adds the dimensionless numbers.
        #[arg(long)]
        amp: Option<f64>,
        #[arg(long)]
        h0: Option<f64>,
        #[arg(long)]
        l: Option<f64>,
        #[arg(long, default_value_t = shallow_water::STANDARD_GRAVITY)]
        g: f64,
        /// Also print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::ReturnTest { .. } => "return-test",
            Command::Pullback { .. } => "pullback",
            Command::Sweep { .. } => "sweep",
            Command::NormalformCheck { .. } => "normalform-check",
            Command::Identities { .. } => "identities",
            Command::ShallowWater { .. } => "shallow-water",
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on a failed run, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let echo = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(&cli, echo) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let file = match &cli.common.config {
        Some(path) => config::read_layer(path)?,
        None => ConfigLayer::default(),
    };
    let mut flags = cli.common.layer();
    if let Command::Sweep {
        epsilons: Some(list),
    } = &cli.command
    {
        flags.epsilons = Some(list.clone());
    }
    if let Command::ShallowWater {
        delta,
        eps,
        threshold,
        ..
    } = &cli.command
    {
        flags.delta = *delta;
        flags.eps = *eps;
        flags.threshold = *threshold;
    }
    Ok(RunConfig::resolve(file.overlay(flags))?)
}

/// Integrator parameters with per-command default coefficients.
fn kdv_params(cfg: &RunConfig, a: f64, b: f64, t_final: f64) -> KdvParams {
    KdvParams {
        a: cfg.a.unwrap_or(a),
        b: cfg.b.unwrap_or(b),
        dt: cfg.dt,
        t_final: cfg.t_final.unwrap_or(t_final),
        m: cfg.m,
        scheme: cfg.scheme,
        dealias: cfg.dealias,
    }
}

fn hermite(cfg: &RunConfig, epsilon: f64, amplitude: f64) -> Result<HermiteSpec> {
    Ok(HermiteSpec::new(
        cfg.epsilon.unwrap_or(epsilon),
        cfg.amplitude.unwrap_or(amplitude),
    )?)
}

struct Run<'a> {
    cfg: RunConfig,
    dir: RunDir,
    started: Instant,
    argv: Vec<String>,
    command: &'a str,
    seeds: Vec<u64>,
}

impl Run<'_> {
    fn finish(mut self) -> Result<()> {
        let artifacts = self.dir.written().to_vec();
        let manifest = Manifest {
            tool: "kdv",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            argv: self.argv.clone(),
            config: &self.cfg,
            seeds: self.seeds.clone(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            artifacts,
        };
        self.dir.write_json("manifest.json", &manifest)?;
        println!("artifacts: {}", self.dir.path().display());
        Ok(())
    }
}

fn execute(cli: &Cli, argv: Vec<String>) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let root = output_root(cfg.out_dir.as_deref());
    let command = cli.command.name();
    let mut ctx = Run {
        dir: RunDir::create(&root, command)?,
        cfg,
        started: Instant::now(),
        argv,
        command,
        seeds: Vec::new(),
    };
    match &cli.command {
        Command::Simulate { samples } => simulate(&mut ctx, *samples)?,
        Command::ReturnTest { baseline } => return_test(&mut ctx, baseline)?,
        Command::Pullback { baseline } => pullback(&mut ctx, baseline)?,
        Command::Sweep { .. } => sweep(&mut ctx)?,
        Command::NormalformCheck {
            support,
            times,
            dts,
            census_fields,
            census_support,
            baseline,
        } => normalform_check(
            &mut ctx,
            *support,
            &parse_list("times", times)?,
            &parse_list("dts", dts)?,
            (*census_fields, *census_support),
            baseline,
        )?,
        Command::Identities { bound } => identities(&mut ctx, *bound)?,
        Command::ShallowWater {
            amp,
            h0,
            l,
            g,
            json,
            ..
        } => shallow(&mut ctx, (*amp, *h0, *l, *g), *json)?,
    }
    ctx.finish()
}

fn spectrum_plot(
    dir: &mut RunDir,
    name: &str,
    title: &str,
    fields: &[(&str, &kdv_core::FourierField)],
) -> Result<()> {
    let series = fields
        .iter()
        .map(|(label, f)| Series {
            label,
            points: mode_rows(f).iter().map(|r| (r.k as f64, r.abs)).collect(),
        })
        .collect();
    let plot = Plot {
        title,
        x_label: "Fourier harmonic k",
        y_label: "amplitude |u_k|",
        series,
    };
    dir.write_text(name, &plot.to_svg())
}

fn physical_plot(
    dir: &mut RunDir,
    name: &str,
    title: &str,
    m: usize,
    fields: &[(&str, &kdv_core::FourierField)],
) -> Result<()> {
    let mut series = Vec::new();
    for (label, f) in fields {
        series.push(Series {
            label,
            points: sample_rows(f, m)?.iter().map(|r| (r.x, r.u)).collect(),
        });
    }
    let plot = Plot {
        title,
        x_label: "x",
        y_label: "u(x)",
        series,
    };
    dir.write_text(name, &plot.to_svg())
}

fn check_baseline(
    args: &BaselineArgs,
    entries: &[(&str, f64, &str)],
) -> Result<Vec<(String, Verdict)>> {
    let path = args.baseline.clone().unwrap_or_else(baseline::default_path);
    let mut store = BaselineStore::load(&path)?;
    let mut verdicts = Vec::new();
    for &(name, value, note) in entries {
        let verdict = if args.record_baseline {
            store.check_or_record(name, value, note)?
        } else {
            match store.check(name, value) {
                Some(v) => v,
                None => {
                    println!("baseline {name}: none recorded (use --record-baseline)");
                    continue;
                }
            }
        };
        println!("baseline {name}: {value:.6e} -> {verdict:?}");
        verdicts.push((name.to_owned(), verdict));
    }
    if args.record_baseline {
        store.save(&path)?;
    }
    if let Some((name, _)) = verdicts.iter().find(|(_, v)| !v.passed()) {
        bail!("measurement {name} exceeds its frozen baseline");
    }
    Ok(verdicts)
}

fn simulate(ctx: &mut Run, samples: usize) -> Result<()> {
    let p = kdv_params(&ctx.cfg, 1.0, 1.0, 1.0);
    let spec = hermite(&ctx.cfg, 0.4, 1.0)?;
    let phi = hermite_initial(spec, p.m)?;
    let near = near_linearity_error(&phi, &p, &uniform_times(p.t_final, samples))?;
    let last = near.record.last().context("no samples")?;
    ctx.dir.write_csv(
        "trajectory.csv",
        &trajectory_rows(&near.record, &near.errors),
    )?;
    ctx.dir.write_csv("initial_modes.csv", &mode_rows(&phi))?;
    ctx.dir.write_csv("final_modes.csv", &mode_rows(last))?;
    ctx.dir
        .write_csv("final_samples.csv", &sample_rows(last, p.m)?)?;
    spectrum_plot(
        &mut ctx.dir,
        "spectrum.svg",
        "Spectral data for initial and evolved waves",
        &[("initial", &phi), ("evolved", last)],
    )?;
    physical_plot(
        &mut ctx.dir,
        "physical.svg",
        "Initial and evolved data",
        p.m,
        &[("initial", &phi), ("evolved", last)],
    )?;
    error_plot(&mut ctx.dir, &near.times, &near.errors)?;
    println!(
        "t = {}: distance from linear flow {:.6e}, energy drift {:.3e}, max |momentum| {:.3e}",
        p.t_final,
        near.terminal_error(),
        near.record.energy_drift(),
        near.record.max_abs_momentum()
    );
    Ok(())
}

fn error_plot(dir: &mut RunDir, times: &[f64], errors: &[f64]) -> Result<()> {
    let plot = Plot {
        title: "Distance from the linear flow",
        x_label: "t",
        y_label: "||u(t) - linear(t)||",
        series: vec![Series {
            label: "error",
            points: times.iter().copied().zip(errors.iter().copied()).collect(),
        }],
    };
    dir.write_text("error.svg", &plot.to_svg())
}

fn return_test(ctx: &mut Run, args: &BaselineArgs) -> Result<()> {
    let p = kdv_params(&ctx.cfg, 1.0, 1.0, std::f64::consts::TAU);
    let spec = hermite(&ctx.cfg, 0.1, 1.0)?;
    let report = return_experiment(spec, &p)?;
    ctx.dir.write_json("report.json", &report)?;
    ctx.dir
        .write_csv("initial_modes.csv", &mode_rows(&report.initial))?;
    ctx.dir
        .write_csv("evolved_modes.csv", &mode_rows(&report.evolved))?;
    ctx.dir
        .write_csv("snapshot_samples.csv", &sample_rows(&report.snapshot, p.m)?)?;
    spectrum_plot(
        &mut ctx.dir,
        "spectrum.svg",
        "Spectral data for initial and evolved waves",
        &[("initial", &report.initial), ("evolved", &report.evolved)],
    )?;
    physical_plot(
        &mut ctx.dir,
        "physical.svg",
        "The initial and evolved data, T = 2π",
        p.m,
        &[("initial", &report.initial), ("evolved", &report.evolved)],
    )?;
    physical_plot(
        &mut ctx.dir,
        "short_time.svg",
        "Evolved data after short time",
        p.m,
        &[("initial", &report.initial), ("t = 0.2", &report.snapshot)],
    )?;
    println!(
        "relative return error {:.6e}; sup norm {:.4} initially, {:.4} at t = {}",
        report.relative_return_error, report.initial_sup, report.snapshot_sup, report.snapshot_time
    );
    println!(
        "identity gap {:.3e}, energy drift {:.3e}, max |momentum| {:.3e}",
        report.identity_gap, report.energy_drift, report.max_abs_momentum
    );
    if spec == HermiteSpec::new(0.1, 1.0)? && p == KdvParams::unit(std::f64::consts::TAU) {
        check_baseline(
            args,
            &[(
                keys::RETURN_ERROR,
                report.relative_return_error,
                "eps 0.1, a = b = 1, desk profile",
            )],
        )?;
    }
    Ok(())
}

fn pullback(ctx: &mut Run, args: &BaselineArgs) -> Result<()> {
    let p = kdv_params(&ctx.cfg, 1.0 / 6.0, 1.5, 1.0);
    let spec = hermite(&ctx.cfg, 0.4, 4.5)?;
    let report = pullback_comparison(spec, &p, p.t_final)?;
    ctx.dir.write_json("report.json", &report)?;
    ctx.dir
        .write_csv("initial_modes.csv", &mode_rows(&report.initial))?;
    ctx.dir
        .write_csv("pulled_back_modes.csv", &mode_rows(&report.pulled_back))?;
    spectrum_plot(
        &mut ctx.dir,
        "spectrum.svg",
        "Initial and pulled-back waves in Fourier space",
        &[
            ("initial", &report.initial),
            ("pulled back", &report.pulled_back),
        ],
    )?;
    physical_plot(
        &mut ctx.dir,
        "physical.svg",
        "Initial and pulled-back waves in physical space",
        p.m,
        &[
            ("initial", &report.initial),
            ("pulled back", &report.pulled_back),
        ],
    )?;
    println!(
        "relative discrepancy {:.6e}, sup discrepancy {:.4}, initial energy {:.4}",
        report.relative_discrepancy,
        report.physical_sup_discrepancy,
        report.initial_physical_energy
    );
    if spec == HermiteSpec::new(0.4, 4.5)? && p == KdvParams::water_wave(1.0) {
        check_baseline(
            args,
            &[(
                keys::PULLBACK_DISCREPANCY,
                report.relative_discrepancy,
                "eps 0.4, A 4.5, a 1/6, b 3/2, T 1, desk profile",
            )],
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    epsilon: f64,
    hminus_half_norm: f64,
    error_at_t: f64,
    energy_drift: f64,
    max_abs_momentum: f64,
}

fn sweep(ctx: &mut Run) -> Result<()> {
    let p = kdv_params(&ctx.cfg, 1.0, 1.0, 1.0);
    let epsilons = ctx
        .cfg
        .epsilons
        .clone()
        .unwrap_or_else(|| vec![0.4, 0.2, 0.1]);
    let result = epsilon_sweep(&epsilons, &p, p.t_final)?;
    let rows: Vec<SweepRow> = result
        .points
        .iter()
        .map(|s| SweepRow {
            epsilon: s.epsilon,
            hminus_half_norm: s.negative_sobolev_norm,
            error_at_t: s.error_at_t,
            energy_drift: s.energy_drift,
            max_abs_momentum: s.max_abs_momentum,
        })
        .collect();
    ctx.dir.write_csv("sweep.csv", &rows)?;
    ctx.dir.write_json("sweep.json", &result)?;
    let plot = Plot {
        title: "Error at T against the H^-1/2 norm",
        x_label: "ln ||phi||_{H^-1/2}",
        y_label: "ln error(T)",
        series: vec![Series {
            label: "runs",
            points: rows
                .iter()
                .map(|r| (r.hminus_half_norm.ln(), r.error_at_t.ln()))
                .collect(),
        }],
    };
    ctx.dir.write_text("sweep.svg", &plot.to_svg())?;
    println!(
        "{:>8} {:>14} {:>14} {:>12}",
        "epsilon", "H^-1/2 norm", "error(T)", "drift"
    );
    for r in &rows {
        println!(
            "{:>8} {:>14.6e} {:>14.6e} {:>12.3e}",
            r.epsilon, r.hminus_half_norm, r.error_at_t, r.energy_drift
        );
    }
    match result.fitted_slope {
        Some(slope) => println!("fitted slope {slope:.4}"),
        None => println!("fitted slope undefined"),
    }
    Ok(())
}

const RESIDUAL_SEED: u64 = 17;
const CENSUS_SEED: u64 = 1000;

fn normalform_check(
    ctx: &mut Run,
    support: usize,
    times: &[f64],
    dts: &[f64],
    (census_fields, census_support): (usize, usize),
    args: &BaselineArgs,
) -> Result<()> {
    let seed = ctx.cfg.seed.unwrap_or(RESIDUAL_SEED);
    ctx.seeds = vec![seed, CENSUS_SEED];
    let residuals = times
        .iter()
        .map(|&t| normal_form::residual_study(support, seed, t, dts))
        .collect::<Result<Vec<_>, _>>()?;
    let census = normal_form::ratio_census(census_fields, census_support, CENSUS_SEED);
    let identities = vec![
        normal_form::check_cube_identity(20),
        normal_form::check_factorization_identity(20),
    ];
    for study in &residuals {
        println!("t = {}", study.t);
        for (dt, r) in study.dts.iter().zip(&study.residuals) {
            println!("  dt {dt:>10.3e}  residual {r:.6e}");
        }
        let orders: Vec<String> = study.orders.iter().map(|o| format!("{o:.3}")).collect();
        println!("  observed orders {}", orders.join(" "));
    }
    let ratios = census.max.as_array();
    println!("ratio maxima over {census_fields} fields: {ratios:?}");
    let report = NormalFormReport {
        residuals,
        census,
        identities,
    };
    ctx.dir.write_json("normal_form.json", &report)?;
    if census_fields == 100 && census_support == 32 {
        let entries: Vec<(&str, f64, &str)> = keys::RATIOS
            .iter()
            .zip(ratios)
            .map(|(&k, v)| {
                (
                    k,
                    v,
                    "max over 100 unit fields, support 32, seeds from 1000",
                )
            })
            .collect();
        check_baseline(args, &entries)?;
    }
    Ok(())
}

fn identities(ctx: &mut Run, bound: i64) -> Result<()> {
    if !(0..=10_000).contains(&bound) {
        bail!("bound {bound} outside 0..=10000");
    }
    let checks = vec![
        normal_form::check_cube_identity(bound),
        normal_form::check_factorization_identity(bound),
        normal_form::check_cubic_phase_identity(bound.min(200)),
    ];
    ctx.dir.write_json("identities.json", &checks)?;
    let mut ok = true;
    for c in &checks {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        println!(
            "{:<14} |k| <= {:<5} {:>10} cases  {verdict}",
            c.name, c.bound, c.cases
        );
        ok &= c.passed();
    }
    if !ok {
        bail!("identity check failed");
    }
    println!("PASS");
    Ok(())
}

fn shallow(
    ctx: &mut Run,
    physical: (Option<f64>, Option<f64>, Option<f64>, f64),
    json: bool,
) -> Result<()> {
    let delta = ctx.cfg.delta.unwrap_or(0.01);
    let eps = ctx.cfg.eps.unwrap_or(0.4);
    let threshold = ctx.cfg.threshold.unwrap_or(DEFAULT_SMALLNESS);
    let report = shallow_water::validate_regime(delta, eps, threshold)?;
    println!("{report}");
    let dimensionless = match physical {
        (Some(a), Some(h0), Some(l), g) => {
            let d = shallow_water::dimensionless(&PhysicalParams { a, h0, l, g })?;
            println!("alpha      {:>12.6}", d.alpha);
            println!("beta       {:>12.6}", d.beta);
            println!("c0         {:>12.4} m/s", d.c0);
            println!("time scale {:>12.1} s", d.t_phys_scale);
            Some(d)
        }
        (None, None, None, _) => None,
        _ => bail!("--amp, --h0 and --l must be given together"),
    };
    #[derive(Serialize)]
    struct Output {
        regime: shallow_water::RegimeReport,
        dimensionless: Option<shallow_water::Dimensionless>,
    }
    let output = Output {
        regime: report,
        dimensionless,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&output)?);
    }
    ctx.dir.write_json("shallow_water.json", &output)?;
    Ok(())
}
