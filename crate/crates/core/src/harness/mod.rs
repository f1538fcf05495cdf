//! Experiment runner: open-loop sweeps, closed-loop tracking and the
//! constrained head/tail cycle, each written to its own output directory.
//!
//! A run directory holds `config.snapshot` (the effective TOML config), the
//! data files, and `manifest.json`, which is written last. Data files depend
//! only on the config and seed; the manifest also records wall-clock times.

pub mod config;
pub mod sweep;
pub mod track;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::hydro::{simulate_cycle, CycleSeries, CycleSetup, PlateMotion};
use crate::planform::{Planform, RdfReport};
use crate::quadrature::QuadratureSpec;

pub use config::{ExperimentConfig, ExperimentKind};
pub use track::{run_tracking, RunStatus, TrackRun, TrackSetup};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SNAPSHOT_FILE: &str = "config.snapshot";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: ExperimentKind,
    pub code_version: String,
    pub seed: u64,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub config_snapshot: String,
    pub outputs: Vec<String>,
    /// `ok`, or `failed` when any tracking repeat aborted.
    pub status: String,
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Write via a temporary sibling and rename, so readers never observe a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Drag factors and tail motion for the constrained cycle.
pub fn cycle_setup(cfg: &ExperimentConfig) -> Result<(RdfReport, CycleSetup)> {
    let c = &cfg.cycle;
    let report = match (&c.head, &c.tail) {
        (Some(h), Some(t)) => {
            RdfReport::from_planforms(&Planform::load(h)?, &Planform::load(t)?, &QuadratureSpec::default())?
        }
        _ => match c.design {
            config::Design::New => RdfReport::new_design(),
            config::Design::Old => RdfReport::old_design(),
        },
    };
    let app = match c.app_mm {
        Some(a) => a,
        None => cfg.excursion_table()?.excursion(c.freq_hz, c.dc_pu)?,
    };
    let tail = PlateMotion::from_excursion(app, c.tail_length_mm, c.freq_hz)?;
    let mut setup = CycleSetup::new(cfg.fluid, &report, tail);
    setup.yaw_inertia = c.yaw_inertia;
    setup.steps_per_period = c.steps_per_period;
    setup.max_periods = c.max_periods;
    setup.tolerance = c.tolerance;
    Ok((report, setup))
}

pub fn run_cycle(cfg: &ExperimentConfig) -> Result<(RdfReport, CycleSeries)> {
    let (report, setup) = cycle_setup(cfg)?;
    Ok((report, simulate_cycle(&setup)?))
}

/// Run the experiment named by `cfg.run.kind` into `cfg.run.output_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let kind = cfg
        .run
        .kind
        .ok_or_else(|| Error::Config("run.kind is not set".into()))?;
    let dir = cfg
        .run
        .output_dir
        .clone()
        .ok_or_else(|| Error::Config("run.output_dir is not set".into()))?;
    let started = unix_now();
    fs::create_dir_all(&dir)?;
    write_atomic(&dir.join(SNAPSHOT_FILE), cfg.to_toml()?.as_bytes())?;

    let mut outputs = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<()> {
        write_atomic(&dir.join(name), &bytes)?;
        outputs.push(name.to_string());
        Ok(())
    };
    let mut status = "ok";

    let summary = match kind {
        ExperimentKind::ExcursionSweep => {
            let rows = sweep::excursion_sweep(&cfg.excursion_table()?, &cfg.calibration()?)?;
            let mut buf = Vec::new();
            sweep::write_excursion_csv(&rows, &mut buf)?;
            emit("excursion.csv", buf)?;
            sweep_summary(rows.len(), rows.iter().filter(|r| r.app_mm.is_none()).count())
        }
        ExperimentKind::SpeedSweep => {
            let rows = sweep::speed_sweep(&cfg.calibration()?);
            let mut buf = Vec::new();
            sweep::write_speed_csv(&rows, &mut buf)?;
            emit("speed.csv", buf)?;
            sweep_summary(rows.len(), rows.iter().filter(|r| r.v_mmps.is_none()).count())
        }
        ExperimentKind::TurnSweep => {
            let rows = sweep::turn_sweep(&cfg.calibration()?);
            let mut buf = Vec::new();
            sweep::write_turn_csv(&rows, &mut buf)?;
            emit("turn.csv", buf)?;
            sweep_summary(rows.len(), rows.iter().filter(|r| r.rate_dps.is_none()).count())
        }
        ExperimentKind::TrackRectilinear | ExperimentKind::TrackLeft | ExperimentKind::TrackRight => {
            let path = cfg.reference_path(kind.path_kind().expect("tracking kind"));
            let setup = TrackSetup::from_config(cfg, path)?;
            let seeds: Vec<u64> = (0..u64::from(cfg.run.repeats)).map(|i| cfg.run.seed + i).collect();
            let runs = seeds
                .par_iter()
                .map(|&s| run_tracking(&setup, s))
                .collect::<Result<Vec<_>>>()?;
            let mut per_run = Vec::new();
            for (i, r) in runs.iter().enumerate() {
                let mut buf = Vec::new();
                r.log.write_csv(&mut buf)?;
                emit(&format!("track_{}.csv", i + 1), buf)?;
                if !matches!(r.status, RunStatus::Completed) {
                    status = "failed";
                }
                per_run.push(json!({ "seed": r.seed, "run": r.status, "summary": r.summary }));
            }
            let doc = json!({ "kind": kind, "runs": per_run });
            emit(SUMMARY_FILE, serde_json::to_vec_pretty(&doc)?)?;
            doc
        }
        ExperimentKind::ConstrainedCycle => {
            let (report, series) = run_cycle(cfg)?;
            let mut buf = Vec::new();
            series.write_csv(&mut buf)?;
            emit("cycle.csv", buf)?;
            let doc = json!({ "rdf": report, "cycle": series.summary });
            emit(SUMMARY_FILE, serde_json::to_vec_pretty(&doc)?)?;
            doc
        }
    };

    let manifest = RunManifest {
        kind,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.run.seed,
        started_unix_s: started,
        finished_unix_s: unix_now(),
        config_snapshot: SNAPSHOT_FILE.to_string(),
        outputs,
        status: status.to_string(),
        summary,
    };
    write_atomic(&dir.join(MANIFEST_FILE), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

fn sweep_summary(rows: usize, missing: usize) -> serde_json::Value {
    json!({ "rows": rows, "missing": missing })
}

/// Paths of every data file a manifest lists, resolved against `dir`.
pub fn output_paths(dir: &Path, manifest: &RunManifest) -> Vec<PathBuf> {
    manifest.outputs.iter().map(|o| dir.join(o)).collect()
}
