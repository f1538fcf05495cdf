//! Experiment configuration, read from a sectioned TOML file.
//!
//! ```toml
//! [run]
//! kind = "track_left"
//! duration_s = 60.0
//! seed = 7
//!
//! [control]
//! kp = 3.0
//! umax = 0.22
//!
//! [plant]
//! noise_sigma_m = 0.0005
//! ```
//!
//! Every key is optional. Relative file paths are resolved against the
//! directory holding the config file.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actuator::ExcursionTable;
use crate::control::{ControlConfig, PathKind, ReferencePath};
use crate::error::{Error, Result};
use crate::hydro::{CycleSetup, FluidEnv};
use crate::metrics::SwimmerSpec;
use crate::plant::{Kinematics, PlantCalibration};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ExcursionSweep,
    SpeedSweep,
    TurnSweep,
    TrackRectilinear,
    TrackLeft,
    TrackRight,
    ConstrainedCycle,
}

impl ExperimentKind {
    pub fn path_kind(self) -> Option<PathKind> {
        match self {
            ExperimentKind::TrackRectilinear => Some(PathKind::Rectilinear),
            ExperimentKind::TrackLeft => Some(PathKind::LeftTurn),
            ExperimentKind::TrackRight => Some(PathKind::RightTurn),
            _ => None,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string tag"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub kind: Option<ExperimentKind>,
    pub duration_s: f64,
    pub seed: u64,
    /// Back-to-back tracking runs, seeded `seed, seed + 1, ...`.
    pub repeats: u32,
    pub output_dir: Option<PathBuf>,
    /// Tracking stops and is marked failed once `|r_e|` exceeds this, m.
    pub abort_bound_m: f64,
    /// Trailing fraction of the run used for tracking statistics.
    pub stats_fraction: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            kind: None,
            duration_s: 60.0,
            seed: 0,
            repeats: 3,
            output_dir: None,
            abort_bound_m: 0.2,
            stats_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantSection {
    /// CSV replacing the bundled speed and turn maps.
    pub calibration: Option<PathBuf>,
    /// CSV replacing the bundled excursion table.
    pub excursion: Option<PathBuf>,
    pub noise_sigma_m: f64,
    pub response_time_s: f64,
    pub left_radius_m: f64,
    pub right_radius_m: f64,
    /// rad/s/√s
    pub yaw_noise: f64,
    /// Integration step; must divide the control period.
    pub step_s: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            calibration: None,
            excursion: None,
            noise_sigma_m: 0.0,
            response_time_s: PlantCalibration::DEFAULT_RESPONSE_TIME,
            left_radius_m: PlantCalibration::DEFAULT_LEFT_RADIUS,
            right_radius_m: PlantCalibration::DEFAULT_RIGHT_RADIUS,
            yaw_noise: 0.0,
            step_s: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathSection {
    /// Travel along `n1` before a turn path changes direction, m.
    pub corner_m: f64,
}

impl Default for PathSection {
    fn default() -> Self {
        Self {
            corner_m: ReferencePath::DEFAULT_CORNER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    New,
    Old,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleSection {
    /// Drag factors from the reported constants unless both planform files
    /// are given.
    pub design: Design,
    pub head: Option<PathBuf>,
    pub tail: Option<PathBuf>,
    pub freq_hz: f64,
    /// Tail excursion looked up at `(freq_hz, dc_pu)` unless `app_mm` is set.
    pub dc_pu: f64,
    pub app_mm: Option<f64>,
    pub tail_length_mm: f64,
    pub yaw_inertia: f64,
    pub steps_per_period: usize,
    pub max_periods: usize,
    pub tolerance: f64,
}

impl Default for CycleSection {
    fn default() -> Self {
        Self {
            design: Design::New,
            head: None,
            tail: None,
            freq_hz: 2.0,
            dc_pu: 0.1,
            app_mm: None,
            tail_length_mm: 12.0,
            yaw_inertia: CycleSetup::DEFAULT_YAW_INERTIA,
            steps_per_period: CycleSetup::DEFAULT_STEPS_PER_PERIOD,
            max_periods: 200,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub control: ControlConfig,
    pub plant: PlantSection,
    pub fluid: FluidEnv,
    pub swimmer: SwimmerSpec,
    pub path: PathSection,
    pub cycle: CycleSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Parse a file and resolve its relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_relative(dir);
        }
        Ok(cfg)
    }

    fn resolve_relative(&mut self, base: &Path) {
        for p in [
            &mut self.plant.calibration,
            &mut self.plant.excursion,
            &mut self.cycle.head,
            &mut self.cycle.tail,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if !(r.duration_s > 0.0) || !r.duration_s.is_finite() {
            return Err(Error::Config(format!("run.duration_s must be > 0, got {}", r.duration_s)));
        }
        if r.repeats == 0 {
            return Err(Error::Config("run.repeats must be >= 1".into()));
        }
        if !(r.abort_bound_m > 0.0) {
            return Err(Error::Config(format!("run.abort_bound_m must be > 0, got {}", r.abort_bound_m)));
        }
        if !(r.stats_fraction > 0.0 && r.stats_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "run.stats_fraction must lie in (0, 1], got {}",
                r.stats_fraction
            )));
        }
        self.control.validate()?;
        self.fluid.validate()?;
        self.swimmer.validate()?;
        let p = &self.plant;
        for (name, v) in [
            ("noise_sigma_m", p.noise_sigma_m),
            ("response_time_s", p.response_time_s),
            ("yaw_noise", p.yaw_noise),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("plant.{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("left_radius_m", p.left_radius_m), ("right_radius_m", p.right_radius_m)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("plant.{name} must be > 0, got {v}")));
            }
        }
        self.substeps()?;
        if !(self.path.corner_m > 0.0) {
            return Err(Error::Config(format!("path.corner_m must be > 0, got {}", self.path.corner_m)));
        }
        let c = &self.cycle;
        if c.head.is_some() != c.tail.is_some() {
            return Err(Error::Config("cycle.head and cycle.tail must be given together".into()));
        }
        for file in [&p.calibration, &p.excursion, &c.head, &c.tail].into_iter().flatten() {
            if !file.is_file() {
                return Err(Error::Config(format!("file not found: {}", file.display())));
            }
        }
        Ok(())
    }

    /// Plant steps per control tick.
    pub fn substeps(&self) -> Result<usize> {
        let dt = self.control.dt();
        let step = self.plant.step_s;
        if !(step > 0.0) || step > dt {
            return Err(Error::Config(format!(
                "plant.step_s must lie in (0, {dt}], got {step}"
            )));
        }
        let n = (dt / step).round();
        if ((n * step) - dt).abs() > 1e-9 * dt {
            return Err(Error::Config(format!(
                "plant.step_s = {step} does not divide the control period {dt}"
            )));
        }
        Ok(n as usize)
    }

    pub fn calibration(&self) -> Result<PlantCalibration> {
        let mut cal = match &self.plant.calibration {
            Some(p) => PlantCalibration::load(p)?,
            None => PlantCalibration::builtin(),
        };
        cal.noise_sigma = self.plant.noise_sigma_m;
        cal.response_time = self.plant.response_time_s;
        cal.left_radius = self.plant.left_radius_m;
        cal.right_radius = self.plant.right_radius_m;
        Ok(cal)
    }

    pub fn excursion_table(&self) -> Result<ExcursionTable> {
        match &self.plant.excursion {
            Some(p) => ExcursionTable::load(p),
            None => Ok(ExcursionTable::builtin()),
        }
    }

    pub fn kinematics(&self) -> Kinematics {
        Kinematics {
            response_time: self.plant.response_time_s,
            yaw_noise: self.plant.yaw_noise,
        }
    }

    pub fn reference_path(&self, kind: PathKind) -> ReferencePath {
        ReferencePath::for_kind(kind, self.path.corner_m)
    }
}
