//! Closed-loop tracking runs: the controller at its loop rate drives the
//! plant, which is integrated at a finer step with the command held.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actuator::{ExcitationCommand, ExcursionTable};
use crate::control::{closed_loop_tick, ControlConfig, ControllerState, ReferencePath};
use crate::error::{Error, Result};
use crate::metrics::{cost_of_transport, reynolds, strouhal, swim_number, LogRow, Summary, SwimmerSpec, TrajectoryLog};
use crate::plant::{measure, Kinematics, PlantCalibration, SwimmerState};

use super::config::ExperimentConfig;

#[derive(Debug, Clone)]
pub struct TrackSetup {
    pub control: ControlConfig,
    pub path: ReferencePath,
    pub calibration: PlantCalibration,
    pub excursion: ExcursionTable,
    pub kinematics: Kinematics,
    pub swimmer: SwimmerSpec,
    pub nu: f64,
    pub duration: f64,
    /// Plant steps per control tick.
    pub substeps: usize,
    pub abort_bound: f64,
    pub stats_fraction: f64,
    pub initial: SwimmerState,
}

impl TrackSetup {
    /// Nominal controller on the bundled calibration, zero noise, starting at
    /// rest on the path origin.
    pub fn nominal(path: ReferencePath) -> Self {
        let cfg = ExperimentConfig::default();
        Self::from_config(&cfg, path).expect("defaults are valid")
    }

    pub fn from_config(cfg: &ExperimentConfig, path: ReferencePath) -> Result<Self> {
        cfg.validate()?;
        path.validate()?;
        Ok(Self {
            control: cfg.control,
            path,
            calibration: cfg.calibration()?,
            excursion: cfg.excursion_table()?,
            kinematics: cfg.kinematics(),
            swimmer: cfg.swimmer,
            nu: cfg.fluid.nu,
            duration: cfg.run.duration_s,
            substeps: cfg.substeps()?,
            abort_bound: cfg.run.abort_bound_m,
            stats_fraction: cfg.run.stats_fraction,
            initial: SwimmerState::default(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// The true lateral error left the abort bound at `t_s`.
    Aborted { t_s: f64, r_e_m: f64 },
}

#[derive(Debug, Clone)]
pub struct TrackRun {
    pub seed: u64,
    pub status: RunStatus,
    pub log: TrajectoryLog,
    /// `None` when the run aborted before covering the statistics window.
    pub summary: Option<Summary>,
}

/// Simulate one tracking run. All randomness comes from one generator
/// seeded with `seed`.
pub fn run_tracking(setup: &TrackSetup, seed: u64) -> Result<TrackRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = &setup.control;
    let dt = cfg.dt();
    let h = dt / setup.substeps as f64;
    let ticks = (setup.duration * cfg.loop_rate).round() as usize;
    let sigma = setup.calibration.noise_sigma;

    let mut state = setup.initial;
    let mut ctl = ControllerState::default();
    let mut rows = Vec::with_capacity(ticks + 1);
    let mut status = RunStatus::Completed;

    for k in 0..=ticks {
        let t = k as f64 * dt;
        let obs = measure(&state, sigma, &mut rng);
        let tick = closed_loop_tick(cfg, &setup.path, ctl, &obs, dt)?;
        ctl = tick.state;
        let seg = &setup.path.segments[ctl.segment];
        let r_e = seg.target - seg.axis.pick(state.r1, state.r2);
        rows.push(LogRow {
            t_s: t,
            r1_m: state.r1,
            r2_m: state.r2,
            psi_rad: state.psi,
            v_mps: state.v,
            omega_radps: state.omega,
            u_l: tick.cmd.dc_left,
            u_r: tick.cmd.dc_right,
            segment: ctl.segment,
            r_e_m: r_e,
        });
        if r_e.abs() > setup.abort_bound {
            status = RunStatus::Aborted { t_s: t, r_e_m: r_e };
            break;
        }
        if k == ticks {
            break;
        }
        let rates = setup.calibration.command_to_rates(&tick.cmd)?;
        for _ in 0..setup.substeps {
            state = setup.kinematics.step(&state, rates.v, rates.omega, h, &mut rng);
        }
    }

    let log = TrajectoryLog { rows };
    let summary = match status {
        RunStatus::Completed => Some(summarize(setup, &log)?),
        RunStatus::Aborted { .. } => None,
    };
    Ok(TrackRun {
        seed,
        status,
        log,
        summary,
    })
}

/// Trajectory statistics over the trailing window, plus efficiency numbers
/// at the window's mean operating point. `st` and `sw` need an excursion
/// value at that point and are left empty outside the excursion grid.
fn summarize(setup: &TrackSetup, log: &TrajectoryLog) -> Result<Summary> {
    let window = setup.stats_fraction * setup.duration;
    let stats = crate::metrics::trajectory_stats(log, &setup.path, window)?;
    let start = log.rows.last().map_or(0.0, |r| r.t_s) - window;
    let tail: Vec<&LogRow> = log.rows.iter().filter(|r| r.t_s >= start - 1e-9).collect();
    let n = tail.len() as f64;
    let freq = setup.control.freq;
    let p_avg = tail
        .iter()
        .map(|r| ExcitationCommand::new(freq, r.u_l, r.u_r, crate::actuator::DEFAULT_ON_HEIGHT_V).map(|c| c.average_power()))
        .sum::<Result<f64>>()?
        / n;
    let dc_mean = tail.iter().map(|r| 0.5 * (r.u_l + r.u_r)).sum::<f64>() / n;
    let v = stats.mean_speed;
    let a_pp = match setup.excursion.excursion(freq, dc_mean) {
        Ok(mm) => Some(mm * 1e-3),
        Err(Error::Extrapolation { .. } | Error::MissingCell { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut s = stats.summary();
    if v > 0.0 {
        s.cot = Some(cost_of_transport(p_avg, &setup.swimmer, v)?);
        s.st = a_pp.map(|a| strouhal(freq, a, v)).transpose()?;
    }
    s.re = Some(reynolds(v, setup.swimmer.length_m, setup.nu)?);
    s.sw = a_pp.map(|a| swim_number(freq, a, setup.swimmer.length_m, setup.nu)).transpose()?;
    Ok(s)
}
