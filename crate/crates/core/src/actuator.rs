//! Dual-channel PWM excitation of the bimorph actuator.
//!
//! Both channels share frequency and on-height; the right channel's on-window
//! starts half a period after the left one. Duty cycles are per-unit.

use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::Grid2;

/// On-height voltage giving roughly 250 mA per side.
pub const DEFAULT_ON_HEIGHT_V: f64 = 4.0;
pub const NOMINAL_CHANNEL_CURRENT_A: f64 = 0.25;
/// Linear fit of average electrical power against duty cycle under
/// symmetric excitation: `P = 720 · DC` mW.
pub const POWER_FIT_MW_PER_DC: f64 = 720.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitationCommand {
    pub freq: f64,
    pub dc_left: f64,
    pub dc_right: f64,
    pub on_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuationMode {
    Bimorph,
    UnimorphLeft,
    UnimorphRight,
    Mixed,
    Idle,
}

impl fmt::Display for ActuationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActuationMode::Bimorph => "bimorph",
            ActuationMode::UnimorphLeft => "unimorph_left",
            ActuationMode::UnimorphRight => "unimorph_right",
            ActuationMode::Mixed => "mixed",
            ActuationMode::Idle => "idle",
        })
    }
}

impl ExcitationCommand {
    pub fn new(freq: f64, dc_left: f64, dc_right: f64, on_height: f64) -> Result<Self> {
        let cmd = Self {
            freq,
            dc_left,
            dc_right,
            on_height,
        };
        cmd.validate()?;
        Ok(cmd)
    }

    pub fn bimorph(freq: f64, dc: f64) -> Result<Self> {
        Self::new(freq, dc, dc, DEFAULT_ON_HEIGHT_V)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.freq > 0.0) || !self.freq.is_finite() {
            return Err(Error::domain("frequency [Hz]", self.freq, 0.0, f64::INFINITY));
        }
        for (name, dc) in [("left duty cycle", self.dc_left), ("right duty cycle", self.dc_right)] {
            if !(0.0..=1.0).contains(&dc) {
                return Err(Error::domain(name, dc, 0.0, 1.0));
            }
        }
        if !(self.on_height > 0.0) || !self.on_height.is_finite() {
            return Err(Error::domain("on-height [V]", self.on_height, 0.0, f64::INFINITY));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.freq
    }

    /// Channel voltages `(left, right)` at time `t >= 0`.
    pub fn waveform_sample(&self, t: f64) -> (f64, f64) {
        let phase = (t * self.freq).rem_euclid(1.0);
        let right_phase = (phase - 0.5).rem_euclid(1.0);
        let v = |on: bool| if on { self.on_height } else { 0.0 };
        (v(phase < self.dc_left), v(right_phase < self.dc_right))
    }

    pub fn mode(&self) -> ActuationMode {
        match (self.dc_left > 0.0, self.dc_right > 0.0) {
            (false, false) => ActuationMode::Idle,
            (true, false) => ActuationMode::UnimorphLeft,
            (false, true) => ActuationMode::UnimorphRight,
            (true, true) if self.dc_left == self.dc_right => ActuationMode::Bimorph,
            (true, true) => ActuationMode::Mixed,
        }
    }

    /// Average electrical power in W. Each active channel draws half of the
    /// symmetric-excitation fit, so `P = 0.36 · (dc_L + dc_R)` W.
    pub fn average_power(&self) -> f64 {
        self.average_power_mw() * 1e-3
    }

    pub fn average_power_mw(&self) -> f64 {
        0.5 * POWER_FIT_MW_PER_DC * (self.dc_left + self.dc_right)
    }
}

/// Where a calibration value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Quoted numerically in the source measurements.
    Text,
    /// Read off a plot.
    Digitized,
    /// Filled by a smooth model consistent with the quoted values; not a
    /// measurement.
    Model,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Text => "text",
            Provenance::Digitized => "digitized",
            Provenance::Model => "model",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExcursionRecord {
    freq_hz: f64,
    dc_pu: f64,
    app_mm: f64,
    esd_mm: Option<f64>,
    provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionCell {
    pub freq: f64,
    pub dc: f64,
    pub app_mm: f64,
    pub esd_mm: Option<f64>,
    pub provenance: Provenance,
}

/// Peak-to-peak tail excursion measured under head-fixed bimorph excitation,
/// gridded over frequency and duty cycle.
#[derive(Debug, Clone)]
pub struct ExcursionTable {
    grid: Grid2,
    cells: Vec<ExcursionCell>,
}

const BUILTIN_EXCURSION: &str = include_str!("../data/excursion.csv");

impl ExcursionTable {
    pub fn builtin() -> Self {
        Self::from_reader(BUILTIN_EXCURSION.as_bytes()).expect("bundled excursion table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// Parse the CSV schema `freq_hz,dc_pu,app_mm,esd_mm,provenance`.
    /// An empty `esd_mm` means the spread is unknown.
    pub fn from_reader<R: Read>(rdr: R) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(rdr);
        let header = csv.headers()?.clone();
        let expected = ["freq_hz", "dc_pu", "app_mm", "esd_mm", "provenance"];
        if header.iter().ne(expected) {
            return Err(Error::Calibration(format!(
                "excursion header must be {}",
                expected.join(",")
            )));
        }
        let mut cells = Vec::new();
        for rec in csv.deserialize() {
            let r: ExcursionRecord = rec?;
            if r.app_mm < 0.0 || r.esd_mm.is_some_and(|e| e < 0.0) {
                return Err(Error::Calibration(format!(
                    "negative excursion at ({}, {})",
                    r.freq_hz, r.dc_pu
                )));
            }
            cells.push(ExcursionCell {
                freq: r.freq_hz,
                dc: r.dc_pu,
                app_mm: r.app_mm,
                esd_mm: r.esd_mm,
                provenance: r.provenance,
            });
        }
        let grid = Grid2::from_records("excursion", cells.iter().map(|c| (c.freq, c.dc, c.app_mm)))?;
        cells.sort_by(|a, b| a.freq.total_cmp(&b.freq).then(a.dc.total_cmp(&b.dc)));
        Ok(Self { grid, cells })
    }

    /// Bilinear `A_pp` in mm; exact at grid nodes, no extrapolation.
    pub fn excursion(&self, freq: f64, dc: f64) -> Result<f64> {
        self.grid.eval(freq, dc)
    }

    pub fn cell(&self, freq: f64, dc: f64) -> Option<&ExcursionCell> {
        self.cells.iter().find(|c| c.freq == freq && c.dc == dc)
    }

    pub fn cells(&self) -> &[ExcursionCell] {
        &self.cells
    }

    pub fn frequencies(&self) -> &[f64] {
        self.grid.xs()
    }

    pub fn duty_cycles(&self) -> &[f64] {
        self.grid.ys()
    }
}
