//! Cascaded tracking controller: a PI lateral-position loop sets the desired
//! heading, a proportional heading loop sets a differential duty cycle, and
//! the mapping adds it to one channel and subtracts it from the other.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::actuator::{ExcitationCommand, DEFAULT_ON_HEIGHT_V};
use crate::error::{Error, Result};
use crate::plant::{wrap_angle, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    /// rad/m
    pub kp: f64,
    /// rad/(m·s)
    pub ki: f64,
    /// per-unit duty cycle per rad
    pub kp_psi: f64,
    /// Nominal symmetric duty cycle.
    #[serde(rename = "uv")]
    pub u_v: f64,
    /// Upper duty-cycle bound on either channel.
    #[serde(rename = "umax")]
    pub u_max: f64,
    #[serde(rename = "freq_hz")]
    pub freq: f64,
    #[serde(rename = "loop_hz")]
    pub loop_rate: f64,
    /// Clamp the lateral loop output and its integral term. Off reproduces
    /// the bare PI law.
    pub safeguards: bool,
    /// rad
    pub psi_d_limit: f64,
    /// Bound on `|k_i · ∫r_e|`, rad.
    pub integral_limit: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self::nominal()
    }
}

impl ControlConfig {
    /// Gains, speed reference, saturation and excitation frequency used for
    /// the reported closed-loop runs.
    pub fn nominal() -> Self {
        Self {
            kp: 3.0,
            ki: 1.0,
            kp_psi: 2.0,
            u_v: 0.11,
            u_max: 0.22,
            freq: 3.0,
            loop_rate: 250.0,
            safeguards: true,
            psi_d_limit: FRAC_PI_2,
            integral_limit: FRAC_PI_4,
        }
    }

    pub fn without_safeguards(self) -> Self {
        Self {
            safeguards: false,
            ..self
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.loop_rate
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("kp", self.kp), ("ki", self.ki), ("kp_psi", self.kp_psi)] {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(Error::Config(format!("control.{name} must be >= 0, got {g}")));
            }
        }
        if !(self.u_v > 0.0 && self.u_v <= self.u_max && self.u_max <= 1.0) {
            return Err(Error::Config(format!(
                "need 0 < control.uv <= control.umax <= 1, got uv = {}, umax = {}",
                self.u_v, self.u_max
            )));
        }
        if !(self.loop_rate > 0.0) || !self.loop_rate.is_finite() {
            return Err(Error::Config(format!("control.loop_hz must be > 0, got {}", self.loop_rate)));
        }
        if !(self.freq > 0.0) || !self.freq.is_finite() {
            return Err(Error::Config(format!("control.freq_hz must be > 0, got {}", self.freq)));
        }
        if !(self.psi_d_limit > 0.0 && self.integral_limit > 0.0) {
            return Err(Error::Config("safeguard limits must be > 0".into()));
        }
        Ok(())
    }
}

/// Inertial axis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    N1,
    N2,
}

impl Axis {
    pub fn index(self) -> u8 {
        match self {
            Axis::N1 => 1,
            Axis::N2 => 2,
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::N1 => Axis::N2,
            Axis::N2 => Axis::N1,
        }
    }

    pub fn pick(self, r1: f64, r2: f64) -> f64 {
        match self {
            Axis::N1 => r1,
            Axis::N2 => r2,
        }
    }

    /// Component of the unit vector at angle `heading` along this axis.
    fn component(self, heading: f64) -> f64 {
        match self {
            Axis::N1 => heading.cos(),
            Axis::N2 => heading.sin(),
        }
    }
}

/// A straight leg of a reference path, parallel to one inertial axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Axis along which the lateral error is measured.
    pub axis: Axis,
    /// Desired coordinate on `axis`, m.
    pub target: f64,
    /// Direction of travel, rad. Must be parallel to the other axis.
    pub heading: f64,
    /// Coordinate on the travel axis at which the next segment takes over.
    pub end: Option<f64>,
}

impl Segment {
    pub fn travel_axis(&self) -> Axis {
        self.axis.other()
    }

    /// `+1` if `+axis` lies to the left of the travel direction, else `−1`.
    /// A positive lateral error then means the swimmer sits to the right
    /// when this is `+1`.
    pub fn left_sign(&self) -> f64 {
        // left normal of heading h is (−sin h, cos h)
        let n = match self.axis {
            Axis::N1 => -self.heading.sin(),
            Axis::N2 => self.heading.cos(),
        };
        n.signum()
    }

    fn passed_end(&self, r1: f64, r2: f64) -> bool {
        match self.end {
            Some(end) => {
                let dir = self.travel_axis().component(self.heading);
                (self.travel_axis().pick(r1, r2) - end) * dir >= 0.0
            }
            None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Rectilinear,
    LeftTurn,
    RightTurn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePath {
    pub kind: PathKind,
    pub segments: Vec<Segment>,
}

impl ReferencePath {
    pub const DEFAULT_CORNER: f64 = 0.1;

    /// Straight line along `+n1` at `r2 = 0`.
    pub fn rectilinear() -> Self {
        Self {
            kind: PathKind::Rectilinear,
            segments: vec![Segment {
                axis: Axis::N2,
                target: 0.0,
                heading: 0.0,
                end: None,
            }],
        }
    }

    /// Along `+n1` at `r2 = 0` until `r1 = corner`, then along `+n2` at
    /// `r1 = corner`.
    pub fn left_turn(corner: f64) -> Self {
        Self::turn(PathKind::LeftTurn, corner, FRAC_PI_2)
    }

    /// As [`left_turn`](Self::left_turn) but continuing along `−n2`.
    pub fn right_turn(corner: f64) -> Self {
        Self::turn(PathKind::RightTurn, corner, -FRAC_PI_2)
    }

    fn turn(kind: PathKind, corner: f64, heading: f64) -> Self {
        Self {
            kind,
            segments: vec![
                Segment {
                    axis: Axis::N2,
                    target: 0.0,
                    heading: 0.0,
                    end: Some(corner),
                },
                Segment {
                    axis: Axis::N1,
                    target: corner,
                    heading,
                    end: None,
                },
            ],
        }
    }

    pub fn for_kind(kind: PathKind, corner: f64) -> Self {
        match kind {
            PathKind::Rectilinear => Self::rectilinear(),
            PathKind::LeftTurn => Self::left_turn(corner),
            PathKind::RightTurn => Self::right_turn(corner),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidArgument("reference path has no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if s.travel_axis().component(s.heading).abs() < 1.0 - 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "segment {i} heading {} is not parallel to its travel axis",
                    s.heading
                )));
            }
            let last = i + 1 == self.segments.len();
            if !last {
                if s.end.is_none() {
                    return Err(Error::InvalidArgument(format!("segment {i} needs an end waypoint")));
                }
                if self.segments[i + 1].axis == s.axis {
                    return Err(Error::InvalidArgument(format!(
                        "error axis must switch between segments {i} and {}",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// The same path shifted by `(d1, d2)`.
    pub fn translated(&self, d1: f64, d2: f64) -> Self {
        let shift = |axis: Axis| axis.pick(d1, d2);
        Self {
            kind: self.kind,
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    target: s.target + shift(s.axis),
                    end: s.end.map(|e| e + shift(s.travel_axis())),
                    ..*s
                })
                .collect(),
        }
    }

    /// Index of the segment active at `(r1, r2)` given the previous one.
    /// Segments only ever advance.
    pub fn advance(&self, from: usize, r1: f64, r2: f64) -> usize {
        let mut k = from;
        while k + 1 < self.segments.len() && self.segments[k].passed_end(r1, r2) {
            k += 1;
        }
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControllerState {
    /// ∫ r_e dτ, m·s
    pub integrator: f64,
    pub segment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralError {
    /// `r_d,j − r_j`, m
    pub r_e: f64,
    pub axis: Axis,
    pub state: ControllerState,
}

/// Lateral error on the active segment's axis. Advances the segment when the
/// waypoint is passed and resets the integrator if it does.
pub fn lateral_error(path: &ReferencePath, st: ControllerState, r1: f64, r2: f64) -> Result<LateralError> {
    if st.segment >= path.segments.len() {
        return Err(Error::InvalidArgument(format!(
            "active segment {} out of range for a {}-segment path",
            st.segment,
            path.segments.len()
        )));
    }
    let k = path.advance(st.segment, r1, r2);
    let state = if k != st.segment {
        ControllerState {
            integrator: 0.0,
            segment: k,
        }
    } else {
        st
    };
    let seg = &path.segments[k];
    Ok(LateralError {
        r_e: seg.target - seg.axis.pick(r1, r2),
        axis: seg.axis,
        state,
    })
}

/// PI lateral law with rectangular integration. Returns the heading
/// correction in rad and the updated state.
pub fn lpc_step(cfg: &ControlConfig, st: ControllerState, r_e: f64, dt: f64) -> (f64, ControllerState) {
    debug_assert!(dt > 0.0);
    let mut integrator = st.integrator + r_e * dt;
    if cfg.safeguards && cfg.ki > 0.0 {
        let bound = cfg.integral_limit / cfg.ki;
        integrator = integrator.clamp(-bound, bound);
    }
    let mut psi = cfg.kp * r_e + cfg.ki * integrator;
    if cfg.safeguards {
        psi = psi.clamp(-cfg.psi_d_limit, cfg.psi_d_limit);
    }
    (psi, ControllerState { integrator, ..st })
}

/// Proportional heading law on the wrapped heading error.
pub fn heading_step(cfg: &ControlConfig, psi_d: f64, psi: f64) -> f64 {
    cfg.kp_psi * wrap_angle(psi_d - psi)
}

/// `(u_L, u_R)`; positive `u_psi` biases the left channel.
pub fn actuator_mapping(cfg: &ControlConfig, u_v: f64, u_psi: f64) -> (f64, f64) {
    (
        (u_v + u_psi).clamp(0.0, cfg.u_max),
        (u_v - u_psi).clamp(0.0, cfg.u_max),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub cmd: ExcitationCommand,
    pub r_e: f64,
    pub axis: Axis,
    pub psi_d: f64,
    pub u_psi: f64,
    pub state: ControllerState,
}

/// One control period: lateral error, PI law, heading law, mapping.
pub fn closed_loop_tick(
    cfg: &ControlConfig,
    path: &ReferencePath,
    st: ControllerState,
    obs: &Observation,
    dt: f64,
) -> Result<Tick> {
    let err = lateral_error(path, st, obs.r1, obs.r2)?;
    let seg = &path.segments[err.state.segment];
    let (correction, state) = lpc_step(cfg, err.state, err.r_e, dt);
    let psi_d = wrap_angle(seg.heading + seg.left_sign() * correction);
    let u_psi = heading_step(cfg, psi_d, obs.psi);
    let (u_l, u_r) = actuator_mapping(cfg, cfg.u_v, u_psi);
    Ok(Tick {
        cmd: ExcitationCommand::new(cfg.freq, u_l, u_r, DEFAULT_ON_HEIGHT_V)?,
        r_e: err.r_e,
        axis: err.axis,
        psi_d,
        u_psi,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuator::ActuationMode;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn obs(r1: f64, r2: f64, psi: f64) -> Observation {
        Observation { r1, r2, psi }
    }

    #[test]
    fn lateral_error_rectilinear() {
        let p = ReferencePath::rectilinear();
        let e = lateral_error(&p, ControllerState::default(), 0.3, -0.005).unwrap();
        assert_eq!((e.r_e, e.axis), (0.005, Axis::N2));
        let e = lateral_error(&p, ControllerState::default(), 0.3, 0.0).unwrap();
        assert_eq!(e.r_e, 0.0);
    }

    #[test]
    fn left_turn_switches_axis_and_resets() {
        let p = ReferencePath::left_turn(0.1);
        let st = ControllerState {
            integrator: 0.4,
            segment: 0,
        };
        let before = lateral_error(&p, st, 0.099, 0.002).unwrap();
        assert_eq!(before.axis, Axis::N2);
        assert_eq!(before.state, st);
        let after = lateral_error(&p, st, 0.1, 0.002).unwrap();
        assert_eq!(after.axis, Axis::N1);
        assert_eq!(after.r_e, 0.0);
        assert_eq!(after.state, ControllerState { integrator: 0.0, segment: 1 });
        // no way back
        let again = lateral_error(&p, after.state, 0.05, 0.0).unwrap();
        assert_eq!(again.state.segment, 1);
    }

    #[test]
    fn bad_segment_index_is_an_error() {
        let st = ControllerState {
            integrator: 0.0,
            segment: 3,
        };
        assert!(lateral_error(&ReferencePath::rectilinear(), st, 0.0, 0.0).is_err());
    }

    #[test]
    fn path_validation() {
        for p in [
            ReferencePath::rectilinear(),
            ReferencePath::left_turn(0.1),
            ReferencePath::right_turn(0.1),
        ] {
            p.validate().unwrap();
        }
        let mut p = ReferencePath::left_turn(0.1);
        p.segments[1].axis = Axis::N2;
        p.segments[1].heading = 0.0;
        assert!(p.validate().is_err());
        let mut p = ReferencePath::left_turn(0.1);
        p.segments[0].end = None;
        assert!(p.validate().is_err());
        assert!(ReferencePath {
            kind: PathKind::Rectilinear,
            segments: vec![]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn left_sign_per_heading() {
        let s = |axis, heading| Segment {
            axis,
            target: 0.0,
            heading,
            end: None,
        };
        assert_eq!(s(Axis::N2, 0.0).left_sign(), 1.0);
        assert_eq!(s(Axis::N2, PI).left_sign(), -1.0);
        assert_eq!(s(Axis::N1, FRAC_PI_2).left_sign(), -1.0);
        assert_eq!(s(Axis::N1, -FRAC_PI_2).left_sign(), 1.0);
    }

    #[test]
    fn lpc_examples() {
        let cfg = ControlConfig::nominal();
        let (psi, _) = lpc_step(&cfg, ControllerState::default(), 0.01, 1e-12);
        assert_relative_eq!(psi, 0.03, max_relative = 1e-9);
        let (psi, _) = lpc_step(&cfg, ControllerState::default(), 0.0, 0.004);
        assert_eq!(psi, 0.0);
        let mut st = ControllerState::default();
        let mut psi = 0.0;
        for _ in 0..500 {
            (psi, st) = lpc_step(&cfg, st, 0.01, 1.0 / 250.0);
        }
        assert_relative_eq!(psi, 0.05, max_relative = 1e-12);
    }

    #[test]
    fn safeguards_bound_output_and_integrator() {
        let cfg = ControlConfig::nominal();
        let mut st = ControllerState::default();
        let mut psi = 0.0;
        for _ in 0..10_000 {
            (psi, st) = lpc_step(&cfg, st, 0.3, 0.004);
        }
        assert_eq!(psi, FRAC_PI_2);
        assert!((cfg.ki * st.integrator).abs() <= FRAC_PI_4 + 1e-15);

        let raw = cfg.without_safeguards();
        let (psi, st) = lpc_step(&raw, ControllerState::default(), 1.0, 2.0);
        assert_eq!(psi, 3.0 + 2.0);
        assert_eq!(st.integrator, 2.0);
    }

    #[test]
    fn heading_examples() {
        let cfg = ControlConfig::nominal();
        assert_relative_eq!(heading_step(&cfg, 0.1, 0.0), 0.2, max_relative = 1e-15);
        assert_eq!(heading_step(&cfg, 0.7, 0.7), 0.0);
        assert_relative_eq!(heading_step(&cfg, 3.0 * PI / 2.0, 0.0), -PI, max_relative = 1e-15);
    }

    #[test]
    fn mapping_examples() {
        let cfg = ControlConfig::nominal();
        assert_eq!(actuator_mapping(&cfg, 0.11, 0.0), (0.11, 0.11));
        assert_eq!(actuator_mapping(&cfg, 0.11, 0.2), (0.22, 0.0));
        let (l, r) = actuator_mapping(&cfg, 0.11, -0.05);
        assert_relative_eq!(l, 0.06, max_relative = 1e-12);
        assert_relative_eq!(r, 0.16, max_relative = 1e-12);
    }

    #[test]
    fn tick_examples() {
        let cfg = ControlConfig::nominal();
        let path = ReferencePath::rectilinear();
        let dt = cfg.dt();
        let t = closed_loop_tick(&cfg, &path, ControllerState::default(), &obs(0.02, 0.0, 0.0), dt).unwrap();
        assert_eq!((t.cmd.dc_left, t.cmd.dc_right, t.cmd.freq), (0.11, 0.11, 3.0));
        assert_eq!(t.cmd.mode(), ActuationMode::Bimorph);

        let t = closed_loop_tick(&cfg, &path, ControllerState::default(), &obs(0.02, 0.005, 0.0), dt).unwrap();
        assert!(t.cmd.dc_right > t.cmd.dc_left);

        let t = closed_loop_tick(&cfg, &path, ControllerState::default(), &obs(0.02, 0.0, -0.02), dt).unwrap();
        assert_eq!(t.cmd.mode(), ActuationMode::Mixed);
        let t = closed_loop_tick(&cfg, &path, ControllerState::default(), &obs(0.02, 0.0, -1.0), dt).unwrap();
        assert_eq!(t.cmd.mode(), ActuationMode::UnimorphLeft);
    }

    #[test]
    fn tick_after_corner_steers_toward_new_heading() {
        let cfg = ControlConfig::nominal();
        for (path, sign) in [(ReferencePath::left_turn(0.1), 1.0), (ReferencePath::right_turn(0.1), -1.0)] {
            let t = closed_loop_tick(&cfg, &path, ControllerState::default(), &obs(0.1005, 0.0, 0.0), cfg.dt()).unwrap();
            assert_eq!(t.state.segment, 1);
            assert!(t.u_psi * sign > 0.0);
        }
    }

    #[test]
    fn config_rejects_bad_bounds() {
        let mut c = ControlConfig::nominal();
        c.u_v = 0.3;
        assert!(c.validate().is_err());
        let mut c = ControlConfig::nominal();
        c.kp = -1.0;
        assert!(c.validate().is_err());
        let mut c = ControlConfig::nominal();
        c.loop_rate = 0.0;
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn duty_cycles_stay_in_bounds(
            r_e in -1.0f64..1.0, integ in -10.0f64..10.0, psi in -10.0f64..10.0,
            uv in 0.01f64..0.22, safe in prop::bool::ANY,
        ) {
            let cfg = ControlConfig { u_v: uv, safeguards: safe, ..ControlConfig::nominal() };
            let st = ControllerState { integrator: integ, segment: 0 };
            let (c, _) = lpc_step(&cfg, st, r_e, cfg.dt());
            let u_psi = heading_step(&cfg, c, psi);
            let (l, r) = actuator_mapping(&cfg, cfg.u_v, u_psi);
            prop_assert!((0.0..=0.22).contains(&l) && (0.0..=0.22).contains(&r));
        }

        #[test]
        fn mirror_symmetry(r_e in -0.05f64..0.05, psi in -1.0f64..1.0) {
            let cfg = ControlConfig::nominal();
            let st = ControllerState::default();
            let (a, _) = lpc_step(&cfg, st, r_e, cfg.dt());
            let (b, _) = lpc_step(&cfg, st, -r_e, cfg.dt());
            let ua = heading_step(&cfg, a, psi);
            let ub = heading_step(&cfg, b, -psi);
            prop_assert_eq!(ua, -ub);
            let (l, r) = actuator_mapping(&cfg, cfg.u_v, ua);
            prop_assert_eq!(actuator_mapping(&cfg, cfg.u_v, ub), (r, l));
        }

        #[test]
        fn integrator_respects_bound(seq in prop::collection::vec(-0.5f64..0.5, 1..400)) {
            let cfg = ControlConfig::nominal();
            let mut st = ControllerState::default();
            for r_e in seq {
                st = lpc_step(&cfg, st, r_e, cfg.dt()).1;
                prop_assert!((cfg.ki * st.integrator).abs() <= cfg.integral_limit * (1.0 + 1e-15));
            }
        }
    }
}
