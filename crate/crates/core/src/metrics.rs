//! Swimming-efficiency numbers and trajectory statistics.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::control::ReferencePath;
use crate::error::{Error, Result};
use crate::plant::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwimmerSpec {
    /// kg
    pub mass_kg: f64,
    /// Body length, m.
    pub length_m: f64,
    /// m/s²
    pub g: f64,
}

impl Default for SwimmerSpec {
    fn default() -> Self {
        Self {
            mass_kg: 59e-6,
            length_m: 0.036,
            g: 9.81,
        }
    }
}

impl SwimmerSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mass_kg", self.mass_kg), ("length_m", self.length_m), ("g", self.g)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("swimmer.{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn positive_speed(v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("mean speed [m/s]", v, 0.0, f64::INFINITY))
    }
}

fn positive_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("kinematic viscosity [m^2/s]", nu, 0.0, f64::INFINITY))
    }
}

/// `CoT = P / (m g v)`, with `p_avg` in W and `v_avg` in m/s.
pub fn cost_of_transport(p_avg: f64, spec: &SwimmerSpec, v_avg: f64) -> Result<f64> {
    positive_speed(v_avg)?;
    Ok(p_avg / (spec.mass_kg * spec.g * v_avg))
}

/// `St = f A_pp / v`.
pub fn strouhal(freq: f64, a_pp: f64, v_avg: f64) -> Result<f64> {
    positive_speed(v_avg)?;
    Ok(freq * a_pp / v_avg)
}

/// `Re = v L / ν`.
pub fn reynolds(v_avg: f64, length: f64, nu: f64) -> Result<f64> {
    positive_nu(nu)?;
    Ok(v_avg * length / nu)
}

/// `Sw = 2π f A_pp L / ν`.
pub fn swim_number(freq: f64, a_pp: f64, length: f64, nu: f64) -> Result<f64> {
    positive_nu(nu)?;
    Ok(2.0 * PI * freq * a_pp * length / nu)
}

/// Flat summary record shared by the metric and tracking commands. Fields
/// that cannot be computed for a run are `None` (JSON `null`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub cot: Option<f64>,
    pub st: Option<f64>,
    pub re: Option<f64>,
    pub sw: Option<f64>,
    pub rms_error_m: Option<f64>,
    pub mean_speed_mps: Option<f64>,
    pub mean_turn_rate_radps: Option<f64>,
    pub turn_radius_m: Option<f64>,
}

impl Summary {
    /// All four efficiency numbers from one operating point. `a_pp` in m,
    /// `v_avg` in m/s, `p_avg` in W.
    pub fn efficiency(freq: f64, a_pp: f64, v_avg: f64, p_avg: f64, spec: &SwimmerSpec, nu: f64) -> Result<Self> {
        Ok(Self {
            cot: Some(cost_of_transport(p_avg, spec, v_avg)?),
            st: Some(strouhal(freq, a_pp, v_avg)?),
            re: Some(reynolds(v_avg, spec.length_m, nu)?),
            sw: Some(swim_number(freq, a_pp, spec.length_m, nu)?),
            ..Self::default()
        })
    }

    fn rows(&self) -> [(&'static str, Option<f64>); 8] {
        [
            ("cot", self.cot),
            ("st", self.st),
            ("re", self.re),
            ("sw", self.sw),
            ("rms_error_m", self.rms_error_m),
            ("mean_speed_mps", self.mean_speed_mps),
            ("mean_turn_rate_radps", self.mean_turn_rate_radps),
            ("turn_radius_m", self.turn_radius_m),
        ]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (name, v) in self.rows() {
            let cell = v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(out, "{name:<22}{cell:>18}");
        }
        out
    }
}

/// One logged control tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t_s: f64,
    pub r1_m: f64,
    pub r2_m: f64,
    pub psi_rad: f64,
    pub v_mps: f64,
    pub omega_radps: f64,
    #[serde(rename = "uL")]
    pub u_l: f64,
    #[serde(rename = "uR")]
    pub u_r: f64,
    /// Active reference segment.
    pub segment: usize,
    /// Lateral error of the true pose on the active segment's axis.
    pub r_e_m: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    pub const CSV_HEADER: [&'static str; 10] = [
        "t_s", "r1_m", "r2_m", "psi_rad", "v_mps", "omega_radps", "uL", "uR", "segment", "r_e_m",
    ];

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        out.write_record(Self::CSV_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.t_s.to_string(),
                r.r1_m.to_string(),
                r.r2_m.to_string(),
                r.psi_rad.to_string(),
                r.v_mps.to_string(),
                r.omega_radps.to_string(),
                r.u_l.to_string(),
                r.u_r.to_string(),
                r.segment.to_string(),
                r.r_e_m.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(rdr: R) -> Result<Self> {
        let mut csv = csv::Reader::from_reader(rdr);
        if csv.headers()?.iter().ne(Self::CSV_HEADER) {
            return Err(Error::InvalidArgument(format!(
                "trajectory log header must be {}",
                Self::CSV_HEADER.join(",")
            )));
        }
        let rows = csv.deserialize().collect::<std::result::Result<Vec<LogRow>, _>>()?;
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    /// m
    pub rms_error: f64,
    /// m/s
    pub mean_speed: f64,
    /// rad/s, signed; `None` if no sample fell in the turn band.
    pub mean_turn_rate: Option<f64>,
    /// m; `None` if the mean rate is zero or unavailable.
    pub turn_radius: Option<f64>,
}

impl TrajectoryStats {
    pub fn summary(&self) -> Summary {
        Summary {
            rms_error_m: Some(self.rms_error),
            mean_speed_mps: Some(self.mean_speed),
            mean_turn_rate_radps: self.mean_turn_rate,
            turn_radius_m: self.turn_radius,
            ..Summary::default()
        }
    }
}

/// Portion of a heading change over which turn samples are averaged. The
/// ends are left out so that neither the rate lag after the corner nor the
/// heading capture near the new course biases the steady turn.
pub const TURN_BAND: (f64, f64) = (0.15, 0.85);

/// Lateral error and speed statistics over the final `window` seconds of
/// `log`, plus turn rate and radius.
///
/// Turn statistics come from each corner of the path: samples after the
/// segment switch whose heading has covered between 15 % and 85 % of the
/// heading change, stopping when 85 % is first exceeded. A path without
/// corners averages the yaw rate over the window instead.
pub fn trajectory_stats(log: &TrajectoryLog, path: &ReferencePath, window: f64) -> Result<TrajectoryStats> {
    path.validate()?;
    let rows = &log.rows;
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::domain("trajectory samples", 0.0, 1.0, f64::INFINITY)),
    };
    let span = last.t_s - first.t_s;
    if !(window > 0.0) || window > span * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::domain("stats window [s]", window, 0.0, span));
    }
    let start = last.t_s - window;
    let in_window: Vec<&LogRow> = rows.iter().filter(|r| r.t_s >= start - 1e-9).collect();
    if in_window.is_empty() {
        return Err(Error::domain("stats window [s]", window, 0.0, span));
    }
    let n = in_window.len() as f64;
    let mut sq = 0.0;
    for r in &in_window {
        let seg = path.segments.get(r.segment).ok_or_else(|| {
            Error::InvalidArgument(format!("log refers to segment {} of a {}-segment path", r.segment, path.segments.len()))
        })?;
        let e = seg.target - seg.axis.pick(r.r1_m, r.r2_m);
        sq += e * e;
    }
    let rms_error = (sq / n).sqrt();
    let mean_speed = in_window.iter().map(|r| r.v_mps).sum::<f64>() / n;

    let turn: Vec<&LogRow> = if path.segments.len() == 1 {
        in_window
    } else {
        let mut picked = Vec::new();
        for i in 1..rows.len() {
            let (k0, k1) = (rows[i - 1].segment, rows[i].segment);
            if k1 == k0 {
                continue;
            }
            let h0 = path.segments[k0].heading;
            let delta = wrap_angle(path.segments[k1].heading - h0);
            if delta == 0.0 {
                continue;
            }
            for r in &rows[i..] {
                if r.segment != k1 {
                    break;
                }
                let p = wrap_angle(r.psi_rad - h0) / delta;
                if p > TURN_BAND.1 {
                    break;
                }
                if p >= TURN_BAND.0 {
                    picked.push(r);
                }
            }
        }
        picked
    };
    let (mean_turn_rate, turn_radius) = if turn.is_empty() {
        (None, None)
    } else {
        let m = turn.len() as f64;
        let w = turn.iter().map(|r| r.omega_radps).sum::<f64>() / m;
        let v = turn.iter().map(|r| r.v_mps).sum::<f64>() / m;
        (Some(w), (w.abs() > 1e-12).then(|| v / w.abs()))
    };
    Ok(TrajectoryStats {
        rms_error,
        mean_speed,
        mean_turn_rate,
        turn_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn row(t: f64, r1: f64, r2: f64, psi: f64, v: f64, w: f64, segment: usize) -> LogRow {
        LogRow {
            t_s: t,
            r1_m: r1,
            r2_m: r2,
            psi_rad: psi,
            v_mps: v,
            omega_radps: w,
            u_l: 0.11,
            u_r: 0.11,
            segment,
            r_e_m: 0.0,
        }
    }

    #[test]
    fn operating_point_two_hertz() {
        let spec = SwimmerSpec::default();
        let (f, a, v, p) = (2.0, 6.34e-3, 13.6e-3, 72e-3);
        // oracle: hand arithmetic
        assert_relative_eq!(strouhal(f, a, v).unwrap(), 2.0 * 6.34 / 13.6, max_relative = 1e-14);
        assert_relative_eq!(
            swim_number(f, a, 0.036, 1e-6).unwrap(),
            2.0 * PI * 2.0 * 6.34e-3 * 0.036 * 1e6,
            max_relative = 1e-14
        );
        let cot = cost_of_transport(p, &spec, v).unwrap();
        assert_relative_eq!(cot, 0.072 / (59e-6 * 9.81 * 0.0136), max_relative = 1e-14);
        assert!((cot / 9304.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn reynolds_example() {
        assert_relative_eq!(reynolds(13.6e-3, 0.036, 1e-6).unwrap(), 489.6, max_relative = 1e-12);
        assert_eq!(reynolds(0.0, 0.036, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        let spec = SwimmerSpec::default();
        assert!(matches!(cost_of_transport(0.1, &spec, 0.0), Err(Error::Domain { .. })));
        assert!(strouhal(1.0, 1e-3, -1.0).is_err());
        assert!(reynolds(0.01, 0.036, 0.0).is_err());
        assert!(swim_number(1.0, 1e-3, 0.036, -1.0).is_err());
        assert_eq!(strouhal(1.0, 0.0, 0.01).unwrap(), 0.0);
        assert_eq!(swim_number(1.0, 0.0, 0.036, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn summary_json_field_names() {
        let s = Summary::efficiency(2.0, 6.34e-3, 13.6e-3, 0.072, &SwimmerSpec::default(), 1e-6).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in [
            "cot",
            "st",
            "re",
            "sw",
            "rms_error_m",
            "mean_speed_mps",
            "mean_turn_rate_radps",
            "turn_radius_m",
        ] {
            assert!(keys.contains(&k), "{k}");
        }
        assert!(v["rms_error_m"].is_null());
        assert!(s.to_table().contains("n/a"));
    }

    #[test]
    fn on_path_log_has_zero_error() {
        let log = TrajectoryLog {
            rows: (0..100).map(|i| row(i as f64 * 0.01, i as f64 * 1e-4, 0.0, 0.0, 0.01, 0.0, 0)).collect(),
        };
        let s = trajectory_stats(&log, &ReferencePath::rectilinear(), 0.5).unwrap();
        assert_eq!(s.rms_error, 0.0);
        assert_relative_eq!(s.mean_speed, 0.01, max_relative = 1e-12);
        assert_eq!(s.mean_turn_rate, Some(0.0));
        assert_eq!(s.turn_radius, None);
    }

    #[test]
    fn constant_offset_rms() {
        let log = TrajectoryLog {
            rows: (0..100).map(|i| row(i as f64 * 0.01, 0.0, -2.6e-3, 0.0, 0.01, 0.0, 0)).collect(),
        };
        let s = trajectory_stats(&log, &ReferencePath::rectilinear(), 0.9).unwrap();
        assert_relative_eq!(s.rms_error, 2.6e-3, max_relative = 1e-12);
    }

    #[test]
    fn window_checks() {
        let log = TrajectoryLog {
            rows: (0..10).map(|i| row(i as f64, 0.0, 0.0, 0.0, 0.0, 0.0, 0)).collect(),
        };
        let p = ReferencePath::rectilinear();
        assert!(trajectory_stats(&log, &p, 0.0).is_err());
        assert!(trajectory_stats(&log, &p, 20.0).is_err());
        assert!(trajectory_stats(&TrajectoryLog::default(), &p, 1.0).is_err());
        assert!(trajectory_stats(&log, &p, 9.0).is_ok());
    }

    #[test]
    fn analytic_circle_radius() {
        let (v, w) = (2.29e-3, 13.1f64.to_radians());
        let dt = 0.004;
        let log = TrajectoryLog {
            rows: (0..2500)
                .map(|i| {
                    let t = i as f64 * dt;
                    let r = v / w;
                    row(t, r * (w * t).sin(), r * (1.0 - (w * t).cos()), wrap_angle(w * t), v, w, 0)
                })
                .collect(),
        };
        let s = trajectory_stats(&log, &ReferencePath::rectilinear(), 9.0).unwrap();
        assert!((s.turn_radius.unwrap() / 0.010 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn turn_band_selects_mid_turn_samples() {
        // straight, then a clean quarter turn left with a slow start
        let path = ReferencePath::left_turn(0.1);
        let mut rows = Vec::new();
        let dt = 0.01;
        for i in 0..100 {
            rows.push(row(i as f64 * dt, 0.001 * i as f64, 0.0, 0.0, 0.01, 0.0, 0));
        }
        let w = 0.2;
        let mut psi: f64 = 0.0;
        let mut t = 1.0;
        while psi < FRAC_PI_2_F {
            // the first 10% of the turn runs at half rate
            let rate = if psi < 0.1 * FRAC_PI_2_F { 0.5 * w } else { w };
            rows.push(row(t, 0.1, 0.0, psi, 0.005, rate, 1));
            psi += rate * dt;
            t += dt;
        }
        for _ in 0..50 {
            rows.push(row(t, 0.1, 0.0, FRAC_PI_2_F, 0.01, 0.0, 1));
            t += dt;
        }
        let s = trajectory_stats(&TrajectoryLog { rows }, &path, 1.0).unwrap();
        assert_relative_eq!(s.mean_turn_rate.unwrap(), w, max_relative = 1e-12);
        assert_relative_eq!(s.turn_radius.unwrap(), 0.005 / w, max_relative = 1e-12);
    }

    const FRAC_PI_2_F: f64 = std::f64::consts::FRAC_PI_2;

    #[test]
    fn csv_round_trip() {
        let log = TrajectoryLog {
            rows: vec![row(0.0, 0.1, -0.2, 0.3, 0.01, -0.02, 1), row(0.004, 1e-17, 2.0, -3.0, 0.0, 0.0, 1)],
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t_s,r1_m,r2_m,psi_rad,v_mps,omega_radps,uL,uR,segment,r_e_m\n"));
        assert_eq!(TrajectoryLog::read_csv(buf.as_slice()).unwrap(), log);
    }

    proptest! {
        #[test]
        fn swim_number_identity(f in 0.1f64..10.0, a in 1e-4f64..1e-2, l in 1e-3f64..0.1, v in 1e-4f64..0.1, nu in 1e-7f64..1e-5) {
            let sw = swim_number(f, a, l, nu).unwrap();
            let chain = 2.0 * PI * reynolds(v, l, nu).unwrap() * strouhal(f, a, v).unwrap();
            prop_assert!((sw / chain - 1.0).abs() < 1e-12);
        }

        #[test]
        fn homogeneity(f in 0.1f64..10.0, a in 1e-4f64..1e-2, v in 1e-4f64..0.1, p in 1e-3f64..1.0, k in 0.1f64..10.0) {
            let spec = SwimmerSpec::default();
            let base = Summary::efficiency(f, a, v, p, &spec, 1e-6).unwrap();
            let rel = |x: f64, y: f64| (x / y - 1.0).abs() < 1e-12;
            prop_assert!(rel(cost_of_transport(k * p, &spec, v).unwrap(), k * base.cot.unwrap()));
            prop_assert!(rel(cost_of_transport(p, &spec, k * v).unwrap(), base.cot.unwrap() / k));
            prop_assert!(rel(strouhal(k * f, k * a, v).unwrap(), k * k * base.st.unwrap()));
            prop_assert!(rel(reynolds(k * v, spec.length_m, 1e-6).unwrap(), k * base.re.unwrap()));
            prop_assert!(rel(swim_number(f, a, k * spec.length_m, k * 1e-6).unwrap(), base.sw.unwrap()));
        }

        #[test]
        fn stats_translation_invariant(d1 in -1.0f64..1.0, d2 in -1.0f64..1.0, off in -0.01f64..0.01) {
            let path = ReferencePath::left_turn(0.1);
            let mk = |d1: f64, d2: f64| TrajectoryLog {
                rows: (0..200)
                    .map(|i| {
                        let seg = usize::from(i >= 100);
                        let psi = if seg == 1 { (i - 100) as f64 * 0.02 } else { 0.0 };
                        row(i as f64 * 0.01, 0.1 + off + d1, off * 0.5 + d2, psi, 0.01, 0.2, seg)
                    })
                    .collect(),
            };
            let a = trajectory_stats(&mk(0.0, 0.0), &path, 1.5).unwrap();
            let b = trajectory_stats(&mk(d1, d2), &path.translated(d1, d2), 1.5).unwrap();
            prop_assert!((a.rms_error - b.rms_error).abs() < 1e-12);
            prop_assert_eq!(a.mean_turn_rate, b.mean_turn_rate);
        }
    }
}
