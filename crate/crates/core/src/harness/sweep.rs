//! Open-loop characterisation sweeps over the calibration grids.
//!
//! Rows are emitted in grid order. A grid point with no stored value is
//! written with empty value columns and provenance `missing`.

use std::io::Write;

use crate::actuator::{ExcitationCommand, ExcursionTable};
use crate::error::Result;
use crate::metrics::strouhal;
use crate::plant::{MapKind, PlantCalibration, Side};

pub const EXCURSION_FREQS: [f64; 6] = [0.5, 1.0, 2.0, 3.0, 4.0, 5.0];
pub const SPEED_FREQS: [f64; 6] = [0.5, 1.0, 2.0, 3.0, 4.0, 5.0];
pub const TURN_FREQS: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];

/// Duty cycles `lo%..=hi%` in per-unit, built from integer percentages so
/// they compare equal to values parsed from the calibration files.
pub fn percent_range(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|p| f64::from(p) / 100.0).collect()
}

const MISSING: &str = "missing";

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionRow {
    pub freq_hz: f64,
    pub dc_pu: f64,
    pub app_mm: Option<f64>,
    pub esd_mm: Option<f64>,
    /// Average electrical power from the linear fit, mW.
    pub p_mw: f64,
    /// Strouhal number when a bimorph speed is stored for the same cell.
    pub st: Option<f64>,
    pub provenance: String,
}

pub fn excursion_sweep(table: &ExcursionTable, cal: &PlantCalibration) -> Result<Vec<ExcursionRow>> {
    let mut rows = Vec::new();
    for &f in &EXCURSION_FREQS {
        for dc in percent_range(1, 10) {
            let p_mw = ExcitationCommand::bimorph(f, dc)?.average_power_mw();
            let cell = table.cell(f, dc);
            let speed = cal.speed_map().node(f, dc);
            let st = match (cell, speed) {
                (Some(c), Some(v)) if v > 0.0 => Some(strouhal(f, c.app_mm * 1e-3, v * 1e-3)?),
                _ => None,
            };
            rows.push(ExcursionRow {
                freq_hz: f,
                dc_pu: dc,
                app_mm: cell.map(|c| c.app_mm),
                esd_mm: cell.and_then(|c| c.esd_mm),
                p_mw,
                st,
                provenance: cell.map_or(MISSING.to_string(), |c| c.provenance.to_string()),
            });
        }
    }
    Ok(rows)
}

pub fn write_excursion_csv<W: Write>(rows: &[ExcursionRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["freq_hz", "dc_pu", "app_mm", "esd_mm", "p_mw", "st", "provenance"])?;
    for r in rows {
        out.write_record([
            r.freq_hz.to_string(),
            r.dc_pu.to_string(),
            opt(r.app_mm),
            opt(r.esd_mm),
            r.p_mw.to_string(),
            opt(r.st),
            r.provenance.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedRow {
    pub freq_hz: f64,
    pub dc_pu: f64,
    pub v_mmps: Option<f64>,
    pub provenance: String,
}

pub fn speed_sweep(cal: &PlantCalibration) -> Vec<SpeedRow> {
    let mut rows = Vec::new();
    for &f in &SPEED_FREQS {
        for dc in percent_range(1, 10) {
            let v = cal.speed_map().node(f, dc);
            rows.push(SpeedRow {
                freq_hz: f,
                dc_pu: dc,
                v_mmps: v,
                provenance: provenance_label(cal, MapKind::Speed, Side::Both, f, dc, v.is_some()),
            });
        }
    }
    rows
}

pub fn write_speed_csv<W: Write>(rows: &[SpeedRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["freq_hz", "dc_pu", "v_mmps", "provenance"])?;
    for r in rows {
        out.write_record([
            r.freq_hz.to_string(),
            r.dc_pu.to_string(),
            opt(r.v_mmps),
            r.provenance.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnRow {
    pub side: Side,
    pub freq_hz: f64,
    pub dc_pu: f64,
    /// Signed about `+b3`, deg/s.
    pub rate_dps: Option<f64>,
    pub provenance: String,
}

pub fn turn_sweep(cal: &PlantCalibration) -> Vec<TurnRow> {
    let mut rows = Vec::new();
    for side in [Side::Left, Side::Right] {
        let map = cal.turn_map(side).expect("left and right maps exist");
        for &f in &TURN_FREQS {
            for dc in percent_range(5, 15) {
                let v = map.node(f, dc);
                rows.push(TurnRow {
                    side,
                    freq_hz: f,
                    dc_pu: dc,
                    rate_dps: v,
                    provenance: provenance_label(cal, MapKind::Turn, side, f, dc, v.is_some()),
                });
            }
        }
    }
    rows
}

pub fn write_turn_csv<W: Write>(rows: &[TurnRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["side", "freq_hz", "dc_pu", "rate_dps", "provenance"])?;
    for r in rows {
        out.write_record([
            r.side.to_string(),
            r.freq_hz.to_string(),
            r.dc_pu.to_string(),
            opt(r.rate_dps),
            r.provenance.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn provenance_label(cal: &PlantCalibration, map: MapKind, side: Side, f: f64, dc: f64, present: bool) -> String {
    match (present, cal.provenance(map, side, f, dc)) {
        (true, Some(p)) => p.to_string(),
        _ => MISSING.to_string(),
    }
}
