//! `milliswim`: drag-factor reports, calibration sweeps, closed-loop
//! tracking runs, the constrained head/tail cycle and efficiency metrics.
//!
//! Exit status is 0 on success, 1 for invalid input (including usage
//! errors), 2 when a run fails.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use milliswim_core::harness::{self, config::Design, ExperimentConfig, ExperimentKind, RunManifest};
use milliswim_core::{
    Error, ExcitationCommand, Planform, PlantCalibration, QuadratureSpec, RdfReport, Summary,
};

#[derive(Debug, Parser)]
#[command(name = "milliswim", version, about = "Simulation and control toolkit for a single-tail milliswimmer")]
struct Cli {
    /// Experiment config (TOML). Command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base seed; tracking repeats use seed, seed + 1, ...
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for runs.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Resistive drag factors of a head/tail pair.
    Rdf(RdfArgs),
    /// Write one open-loop calibration sweep.
    Sweep {
        #[arg(value_enum)]
        which: SweepKind,
    },
    /// Closed-loop tracking of a reference path.
    Track(TrackArgs),
    /// Head yaw under prescribed tail flapping, to periodic steady state.
    Cycle(CycleArgs),
    /// CoT, St, Re and Sw at one operating point.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepKind {
    Excursion,
    Speed,
    Turn,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Maneuver {
    Line,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DesignArg {
    New,
    Old,
}

impl From<DesignArg> for Design {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::New => Design::New,
            DesignArg::Old => Design::Old,
        }
    }
}

#[derive(Debug, Args)]
struct RdfArgs {
    /// Head planform file (TOML).
    #[arg(long, requires = "tail", conflicts_with = "design")]
    head: Option<PathBuf>,
    /// Tail planform file (TOML).
    #[arg(long, requires = "head")]
    tail: Option<PathBuf>,
    /// Use the reported drag factors of a design instead of files.
    #[arg(long, value_enum)]
    design: Option<DesignArg>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct TrackArgs {
    #[arg(value_enum)]
    maneuver: Maneuver,
    /// Run length, s.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    repeats: Option<u32>,
    /// Position noise of the pose measurement, m.
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Debug, Args)]
struct CycleArgs {
    #[arg(long, value_enum)]
    design: Option<DesignArg>,
    /// Flapping frequency, Hz.
    #[arg(long)]
    freq: Option<f64>,
    /// Duty cycle used to look up the tail excursion.
    #[arg(long, conflicts_with = "app_mm")]
    dc: Option<f64>,
    /// Tail excursion, mm peak to peak.
    #[arg(long)]
    app_mm: Option<f64>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Flapping frequency, Hz.
    #[arg(long = "f")]
    freq: f64,
    /// Symmetric duty cycle; fills in any of excursion, speed and power not
    /// given explicitly from the calibration tables and the power fit.
    #[arg(long)]
    dc: Option<f64>,
    /// Tail excursion, mm peak to peak.
    #[arg(long)]
    app_mm: Option<f64>,
    /// Mean forward speed, mm/s.
    #[arg(long)]
    v_mmps: Option<f64>,
    /// Mean electrical power, mW.
    #[arg(long)]
    p_mw: Option<f64>,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e
                .chain()
                .find_map(|c| c.downcast_ref::<Error>())
                .is_some_and(Error::is_validation)
                || e.downcast_ref::<UsageError>().is_some();
            ExitCode::from(if validation { 1 } else { 2 })
        }
    }
}

/// Bad flag combinations caught after parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// A named input file that does not exist is bad input, not a run failure.
fn input_file(p: &std::path::Path) -> anyhow::Result<&std::path::Path> {
    if !p.is_file() {
        bail!(UsageError(format!("no such file: {}", p.display())));
    }
    Ok(p)
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(input_file(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.run.output_dir = Some(o.clone());
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    let mut cfg = load_config(&cli)?;
    match &cli.cmd {
        Cmd::Rdf(a) => {
            let report = match (&a.head, &a.tail) {
                (Some(h), Some(t)) => {
                    let head = Planform::load(input_file(h)?).with_context(|| format!("loading {}", h.display()))?;
                    let tail = Planform::load(input_file(t)?).with_context(|| format!("loading {}", t.display()))?;
                    RdfReport::from_planforms(&head, &tail, &QuadratureSpec::default())?
                }
                _ => match a.design.map(Design::from).unwrap_or(cfg.cycle.design) {
                    Design::New => RdfReport::new_design(),
                    Design::Old => RdfReport::old_design(),
                },
            };
            if a.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_table());
            }
            Ok(true)
        }
        Cmd::Sweep { which } => {
            let kind = match which {
                SweepKind::Excursion => ExperimentKind::ExcursionSweep,
                SweepKind::Speed => ExperimentKind::SpeedSweep,
                SweepKind::Turn => ExperimentKind::TurnSweep,
            };
            execute(&mut cfg, kind)
        }
        Cmd::Track(a) => {
            let kind = match a.maneuver {
                Maneuver::Line => ExperimentKind::TrackRectilinear,
                Maneuver::Left => ExperimentKind::TrackLeft,
                Maneuver::Right => ExperimentKind::TrackRight,
            };
            if let Some(d) = a.duration {
                cfg.run.duration_s = d;
            }
            if let Some(r) = a.repeats {
                cfg.run.repeats = r;
            }
            if let Some(n) = a.noise {
                cfg.plant.noise_sigma_m = n;
            }
            execute(&mut cfg, kind)
        }
        Cmd::Cycle(a) => {
            if let Some(d) = a.design {
                cfg.cycle.design = d.into();
            }
            if let Some(f) = a.freq {
                cfg.cycle.freq_hz = f;
            }
            if let Some(dc) = a.dc {
                cfg.cycle.dc_pu = dc;
                cfg.cycle.app_mm = None;
            }
            if a.app_mm.is_some() {
                cfg.cycle.app_mm = a.app_mm;
            }
            execute(&mut cfg, ExperimentKind::ConstrainedCycle)
        }
        Cmd::Metrics(a) => metrics(&cfg, a),
    }
}

fn execute(cfg: &mut ExperimentConfig, kind: ExperimentKind) -> anyhow::Result<bool> {
    cfg.run.kind = Some(kind);
    if cfg.run.output_dir.is_none() {
        cfg.run.output_dir = Some(PathBuf::from("runs").join(kind.to_string()));
    }
    let manifest = harness::run(cfg)?;
    report_run(cfg, &manifest)?;
    Ok(manifest.ok())
}

fn report_run(cfg: &ExperimentConfig, m: &RunManifest) -> anyhow::Result<()> {
    let dir = cfg.run.output_dir.as_deref().expect("set before running");
    println!("{} -> {}", m.kind, dir.display());
    for o in &m.outputs {
        println!("  {o}");
    }
    if let Some(runs) = m.summary.get("runs").and_then(|r| r.as_array()) {
        for r in runs {
            let seed = &r["seed"];
            match serde_json::from_value::<Option<Summary>>(r["summary"].clone())? {
                Some(s) => println!("seed {seed}\n{}", s.to_table()),
                None => println!("seed {seed}: {}", r["run"]),
            }
        }
    } else {
        println!("{}", serde_json::to_string_pretty(&m.summary)?);
    }
    if !m.ok() {
        eprintln!("run failed: at least one repeat left the abort bound");
    }
    Ok(())
}

fn metrics(cfg: &ExperimentConfig, a: &MetricsArgs) -> anyhow::Result<bool> {
    let need_dc = |what: &str| -> anyhow::Result<f64> {
        match a.dc {
            Some(dc) => Ok(dc),
            None => bail!(UsageError(format!("give --{what} or --dc"))),
        }
    };
    let app_mm = match a.app_mm {
        Some(v) => v,
        None => cfg.excursion_table()?.excursion(a.freq, need_dc("app-mm")?)?,
    };
    let v_mmps = match a.v_mmps {
        Some(v) => v,
        None => PlantCalibration::builtin().speed_mmps(a.freq, need_dc("v-mmps")?)?,
    };
    let p_mw = match a.p_mw {
        Some(p) => p,
        None => ExcitationCommand::bimorph(a.freq, need_dc("p-mw")?)?.average_power_mw(),
    };
    let s = Summary::efficiency(a.freq, app_mm * 1e-3, v_mmps * 1e-3, p_mw * 1e-3, &cfg.swimmer, cfg.fluid.nu)?;
    if a.json {
        println!("{}", s.to_json()?);
    } else {
        println!("f = {} Hz, A_pp = {app_mm} mm, v = {v_mmps} mm/s, P = {p_mw} mW", a.freq);
        print!("{}", s.to_table());
    }
    Ok(true)
}
