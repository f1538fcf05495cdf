//! Free-swimming surrogate plant.
//!
//! Excitation commands map to body-frame forward speed and yaw rate through
//! calibrated lookup tables; pose then advances with planar unicycle
//! kinematics in the inertial frame `{n1, n2}`.
//!
//! * Bimorph excitation swims straight at the tabulated speed.
//! * Unimorph excitation turns at the tabulated rate toward the excited side.
//!   Forward progression during a turn is not tabulated, so it is taken as
//!   `v = |ω| · R` with a nominal radius per side.
//! * Mixed excitation blends linearly between the two in the duty-cycle
//!   asymmetry `a = (dc_L − dc_R) / (dc_L + dc_R)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::actuator::{ActuationMode, ExcitationCommand, Provenance};
use crate::error::{Error, Result};
use crate::interp::Grid2;

/// Wrap an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SwimmerState {
    /// m
    pub r1: f64,
    /// m
    pub r2: f64,
    /// Heading from `n1` to `b1`, counterclockwise, rad.
    pub psi: f64,
    /// Forward speed along `b1`, m/s.
    pub v: f64,
    /// Yaw rate about `b3`, rad/s.
    pub omega: f64,
}

impl SwimmerState {
    pub fn at_pose(r1: f64, r2: f64, psi: f64) -> Self {
        Self {
            r1,
            r2,
            psi: wrap_angle(psi),
            v: 0.0,
            omega: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Both,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Speed,
    Turn,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlantRecord {
    map: MapKind,
    f_hz: f64,
    dc_pu: f64,
    side: Side,
    value: f64,
    units: String,
    provenance: Provenance,
}

/// Body-frame rates in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyRates {
    /// m/s
    pub v: f64,
    /// rad/s
    pub omega: f64,
}

#[derive(Debug, Clone)]
pub struct PlantCalibration {
    /// mm/s over (f, DC)
    speed: Grid2,
    /// deg/s over (f, DC), non-negative
    turn_left: Grid2,
    /// deg/s over (f, DC), non-positive
    turn_right: Grid2,
    provenance: HashMap<(MapKind, Side, u64, u64), Provenance>,
    /// Motion-capture position noise, m.
    pub noise_sigma: f64,
    /// First-order lag on v and ω, s. Zero disables the lag.
    pub response_time: f64,
    /// Nominal turn radius under left unimorph excitation, m.
    pub left_radius: f64,
    /// Nominal turn radius under right unimorph excitation, m.
    pub right_radius: f64,
}

const BUILTIN_PLANT: &str = include_str!("../data/plant.csv");

impl PlantCalibration {
    pub const DEFAULT_RESPONSE_TIME: f64 = 0.5;
    pub const DEFAULT_LEFT_RADIUS: f64 = 0.024;
    pub const DEFAULT_RIGHT_RADIUS: f64 = 0.010;

    pub fn builtin() -> Self {
        Self::from_reader(BUILTIN_PLANT.as_bytes()).expect("bundled plant calibration is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// Parse the CSV schema `map,f_hz,dc_pu,side,value,units,provenance`.
    /// Speed rows use `side = both` and `mm/s`; turn rows use `left` or
    /// `right` and `deg/s`, signed about `+b3`.
    pub fn from_reader<R: Read>(rdr: R) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(rdr);
        let expected = ["map", "f_hz", "dc_pu", "side", "value", "units", "provenance"];
        if csv.headers()?.iter().ne(expected) {
            return Err(Error::Calibration(format!(
                "plant calibration header must be {}",
                expected.join(",")
            )));
        }
        let (mut speed, mut left, mut right) = (Vec::new(), Vec::new(), Vec::new());
        let mut provenance = HashMap::new();
        for rec in csv.deserialize() {
            let r: PlantRecord = rec?;
            let bad = |why: &str| {
                Err(Error::Calibration(format!(
                    "{:?} row ({}, {}, {}): {why}",
                    r.map, r.f_hz, r.dc_pu, r.side
                )))
            };
            match (r.map, r.side) {
                (MapKind::Speed, Side::Both) => {
                    if r.units != "mm/s" {
                        return bad("speed units must be mm/s");
                    }
                    if r.value < 0.0 {
                        return bad("speed must be non-negative");
                    }
                    speed.push((r.f_hz, r.dc_pu, r.value));
                }
                (MapKind::Turn, Side::Left) | (MapKind::Turn, Side::Right) => {
                    if r.units != "deg/s" {
                        return bad("turn units must be deg/s");
                    }
                    if r.side == Side::Left && r.value < 0.0 {
                        return bad("left turn rates must be >= 0");
                    }
                    if r.side == Side::Right && r.value > 0.0 {
                        return bad("right turn rates must be <= 0");
                    }
                    let dst = if r.side == Side::Left { &mut left } else { &mut right };
                    dst.push((r.f_hz, r.dc_pu, r.value));
                }
                _ => return bad("side does not match map"),
            }
            provenance.insert((r.map, r.side, r.f_hz.to_bits(), r.dc_pu.to_bits()), r.provenance);
        }
        Ok(Self {
            speed: Grid2::from_records("speed map", speed)?,
            turn_left: Grid2::from_records("left turn map", left)?,
            turn_right: Grid2::from_records("right turn map", right)?,
            provenance,
            noise_sigma: 0.0,
            response_time: Self::DEFAULT_RESPONSE_TIME,
            left_radius: Self::DEFAULT_LEFT_RADIUS,
            right_radius: Self::DEFAULT_RIGHT_RADIUS,
        })
    }

    pub fn speed_map(&self) -> &Grid2 {
        &self.speed
    }

    pub fn turn_map(&self, side: Side) -> Option<&Grid2> {
        match side {
            Side::Left => Some(&self.turn_left),
            Side::Right => Some(&self.turn_right),
            Side::Both => None,
        }
    }

    pub fn provenance(&self, map: MapKind, side: Side, f: f64, dc: f64) -> Option<Provenance> {
        self.provenance
            .get(&(map, side, f.to_bits(), dc.to_bits()))
            .copied()
    }

    /// Tabulated bimorph speed in mm/s.
    pub fn speed_mmps(&self, freq: f64, dc: f64) -> Result<f64> {
        self.speed.eval(freq, dc)
    }

    /// Tabulated unimorph turn rate in deg/s (signed about `+b3`).
    pub fn turn_rate_dps(&self, freq: f64, dc: f64, side: Side) -> Result<f64> {
        match side {
            Side::Left => self.turn_left.eval(freq, dc),
            Side::Right => self.turn_right.eval(freq, dc),
            Side::Both => Err(Error::InvalidArgument("turn map needs a side".into())),
        }
    }

    fn unimorph(&self, freq: f64, dc: f64, side: Side) -> Result<BodyRates> {
        let omega = self.turn_rate_dps(freq, dc, side)?.to_radians();
        let radius = if side == Side::Left {
            self.left_radius
        } else {
            self.right_radius
        };
        Ok(BodyRates {
            v: omega.abs() * radius,
            omega,
        })
    }

    /// Steady-state body rates produced by an excitation command.
    pub fn command_to_rates(&self, cmd: &ExcitationCommand) -> Result<BodyRates> {
        cmd.validate()?;
        let f = cmd.freq;
        match cmd.mode() {
            ActuationMode::Idle => Ok(BodyRates { v: 0.0, omega: 0.0 }),
            ActuationMode::Bimorph => Ok(BodyRates {
                v: self.speed_mmps(f, cmd.dc_left)? * 1e-3,
                omega: 0.0,
            }),
            ActuationMode::UnimorphLeft => self.unimorph(f, cmd.dc_left, Side::Left),
            ActuationMode::UnimorphRight => self.unimorph(f, cmd.dc_right, Side::Right),
            ActuationMode::Mixed => {
                let (l, r) = (cmd.dc_left, cmd.dc_right);
                let a = (l - r) / (l + r);
                let straight = self.speed_mmps(f, 0.5 * (l + r))? * 1e-3;
                let turn = if a > 0.0 {
                    self.unimorph(f, l, Side::Left)?
                } else {
                    self.unimorph(f, r, Side::Right)?
                };
                let w = a.abs();
                Ok(BodyRates {
                    v: (1.0 - w) * straight + w * turn.v,
                    omega: w * turn.omega,
                })
            }
        }
    }
}

/// Advances the swimmer pose. Rates relax toward their commands with a
/// first-order lag, then the pose follows the unicycle model along an exact
/// circular arc at the step-averaged rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    /// s; zero disables the lag.
    pub response_time: f64,
    /// Yaw-rate disturbance intensity, rad/s/√s. Zero draws no randomness.
    pub yaw_noise: f64,
}

impl Default for Kinematics {
    fn default() -> Self {
        Self {
            response_time: PlantCalibration::DEFAULT_RESPONSE_TIME,
            yaw_noise: 0.0,
        }
    }
}

impl Kinematics {
    pub fn without_lag() -> Self {
        Self {
            response_time: 0.0,
            yaw_noise: 0.0,
        }
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        s: &SwimmerState,
        v_cmd: f64,
        omega_cmd: f64,
        dt: f64,
        rng: &mut R,
    ) -> SwimmerState {
        debug_assert!(dt > 0.0);
        let blend = if self.response_time > 0.0 {
            -(-dt / self.response_time).exp_m1()
        } else {
            1.0
        };
        let v = (s.v + (v_cmd - s.v) * blend).max(0.0);
        let mut omega = s.omega + (omega_cmd - s.omega) * blend;
        if self.yaw_noise > 0.0 {
            let n = Normal::new(0.0, self.yaw_noise / dt.sqrt()).expect("positive sigma");
            omega += n.sample(rng);
        }
        let v_bar = 0.5 * (s.v + v);
        let w_bar = 0.5 * (s.omega + omega);
        let dpsi = w_bar * dt;
        let (sin0, cos0) = s.psi.sin_cos();
        let (dr1, dr2) = if dpsi.abs() > 1e-9 {
            let (sin1, cos1) = (s.psi + dpsi).sin_cos();
            let radius = v_bar / w_bar;
            (radius * (sin1 - sin0), -radius * (cos1 - cos0))
        } else {
            // second-order expansion of the arc
            let (sm, cm) = (s.psi + 0.5 * dpsi).sin_cos();
            (v_bar * dt * cm, v_bar * dt * sm)
        };
        SwimmerState {
            r1: s.r1 + dr1,
            r2: s.r2 + dr2,
            psi: wrap_angle(s.psi + dpsi),
            v,
            omega,
        }
    }
}

/// Pose as seen by the motion-capture system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub r1: f64,
    pub r2: f64,
    pub psi: f64,
}

/// Marker baseline used to convert position noise into heading noise, m.
pub const MARKER_BASELINE: f64 = 0.036;

/// Emulate a motion-capture sample: zero-mean Gaussian noise of std `sigma`
/// on each position component and `sigma / MARKER_BASELINE` on heading.
pub fn measure<R: Rng + ?Sized>(s: &SwimmerState, sigma: f64, rng: &mut R) -> Observation {
    if sigma <= 0.0 {
        return Observation {
            r1: s.r1,
            r2: s.r2,
            psi: s.psi,
        };
    }
    let pos = Normal::new(0.0, sigma).expect("positive sigma");
    let head = Normal::new(0.0, sigma / MARKER_BASELINE).expect("positive sigma");
    Observation {
        r1: s.r1 + pos.sample(rng),
        r2: s.r2 + pos.sample(rng),
        psi: wrap_angle(s.psi + head.sample(rng)),
    }
}
