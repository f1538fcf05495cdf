//! Head and tail plate geometry and their resistive drag factors.
//!
//! A plate spans `[-l1, l2]` (mm) measured from its rotation axis and has a
//! chord `h(x)` (mm) at each span position. Its resistive drag factor is
//!
//! ```text
//! RDF = ∫_{-l1}^{l2} h(x) |x|³ dx      [mm⁵]
//! ```
//!
//! which scales the quadratic-drag reactive torque of the plate (see
//! [`crate::hydro`]). Under cycle-averaged torque balance the ratio of the
//! head and tail factors fixes the ratio of their mean-square angular speeds.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlateLabel {
    Head,
    Tail,
}

impl fmt::Display for PlateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlateLabel::Head => "head",
            PlateLabel::Tail => "tail",
        })
    }
}

/// Chord-versus-span description, lengths in mm.
#[derive(Clone)]
pub enum ChordProfile {
    Rectangle {
        height: f64,
    },
    /// `h(x) = peak · (1 − (x / reach)²)`, zero at `|x| = reach`.
    Parabola {
        peak: f64,
        reach: f64,
    },
    /// Piecewise-linear through `(x, h)` knots with strictly increasing `x`.
    Tabulated(Vec<(f64, f64)>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ChordProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChordProfile::Rectangle { height } => {
                f.debug_struct("Rectangle").field("height", height).finish()
            }
            ChordProfile::Parabola { peak, reach } => f
                .debug_struct("Parabola")
                .field("peak", peak)
                .field("reach", reach)
                .finish(),
            ChordProfile::Tabulated(k) => f.debug_tuple("Tabulated").field(k).finish(),
            ChordProfile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl ChordProfile {
    fn eval(&self, x: f64) -> f64 {
        match self {
            ChordProfile::Rectangle { height } => *height,
            ChordProfile::Parabola { peak, reach } => {
                let u = x / reach;
                peak * (1.0 - u * u)
            }
            ChordProfile::Tabulated(knots) => lerp_knots(knots, x),
            ChordProfile::Custom(f) => f(x),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            ChordProfile::Tabulated(knots) => knots.iter().map(|k| k.0).collect(),
            _ => Vec::new(),
        }
    }
}

fn lerp_knots(knots: &[(f64, f64)], x: f64) -> f64 {
    match knots.iter().position(|k| k.0 >= x) {
        Some(0) => knots[0].1,
        Some(i) => {
            let (x0, h0) = knots[i - 1];
            let (x1, h1) = knots[i];
            h0 + (h1 - h0) * (x - x0) / (x1 - x0)
        }
        None => knots[knots.len() - 1].1,
    }
}

#[derive(Debug, Clone)]
pub struct Planform {
    profile: ChordProfile,
    l1: f64,
    l2: f64,
    label: PlateLabel,
}

impl Planform {
    pub fn new(label: PlateLabel, profile: ChordProfile, l1: f64, l2: f64) -> Result<Self> {
        if !(l1 >= 0.0 && l2 >= 0.0 && l1.is_finite() && l2.is_finite()) {
            return Err(Error::InvalidPlanform(format!(
                "span limits must be finite and non-negative (l1 = {l1}, l2 = {l2})"
            )));
        }
        if l1 + l2 <= 0.0 {
            return Err(Error::InvalidPlanform("plate has zero span".into()));
        }
        match &profile {
            ChordProfile::Rectangle { height } => {
                if !(*height >= 0.0) || !height.is_finite() {
                    return Err(Error::InvalidPlanform(format!("height {height} < 0")));
                }
            }
            ChordProfile::Parabola { peak, reach } => {
                if !(*peak >= 0.0 && *reach > 0.0) {
                    return Err(Error::InvalidPlanform(format!(
                        "parabola needs peak >= 0 and reach > 0 (peak = {peak}, reach = {reach})"
                    )));
                }
                if l1 > *reach || l2 > *reach {
                    return Err(Error::InvalidPlanform(format!(
                        "parabolic chord is negative beyond |x| = {reach} mm"
                    )));
                }
            }
            ChordProfile::Tabulated(knots) => {
                if knots.len() < 2 {
                    return Err(Error::InvalidPlanform("need at least two chord knots".into()));
                }
                if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::InvalidPlanform(
                        "chord knots must have strictly increasing x".into(),
                    ));
                }
                if knots.iter().any(|k| !(k.1 >= 0.0) || !k.0.is_finite()) {
                    return Err(Error::InvalidPlanform("negative or non-finite chord knot".into()));
                }
                let (first, last) = (knots[0].0, knots[knots.len() - 1].0);
                if first > -l1 || last < l2 {
                    return Err(Error::InvalidPlanform(format!(
                        "knots cover [{first}, {last}] but the span is [{}, {l2}]",
                        -l1
                    )));
                }
            }
            ChordProfile::Custom(_) => {}
        }
        Ok(Self {
            profile,
            l1,
            l2,
            label,
        })
    }

    pub fn rectangle(label: PlateLabel, height: f64, l1: f64, l2: f64) -> Result<Self> {
        Self::new(label, ChordProfile::Rectangle { height }, l1, l2)
    }

    pub fn label(&self) -> PlateLabel {
        self.label
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn profile(&self) -> &ChordProfile {
        &self.profile
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= -self.l1 && x <= self.l2
    }

    /// Chord `h(x)` in mm for `x` in `[-l1, l2]`.
    pub fn chord_at(&self, x: f64) -> Result<f64> {
        if !self.contains(x) {
            return Err(Error::domain("span position x [mm]", x, -self.l1, self.l2));
        }
        let h = self.profile.eval(x);
        if !h.is_finite() {
            return Err(Error::Evaluation { x });
        }
        if h < 0.0 {
            return Err(Error::InvalidPlanform(format!("chord {h} < 0 at x = {x} mm")));
        }
        Ok(h)
    }

    /// Resistive drag factor `∫ h(x)|x|³ dx` over the span, in mm⁵.
    pub fn resistive_drag_factor(&self, quad: &QuadratureSpec) -> Result<f64> {
        let mut breaks = self.profile.breakpoints();
        breaks.push(0.0);
        let integrand = |x: f64| {
            let h = self.profile.eval(x);
            let ax = x.abs();
            if h < 0.0 {
                f64::NAN
            } else {
                h * ax * ax * ax
            }
        };
        let (v, _) = quadrature::integrate(integrand, -self.l1, self.l2, &breaks, quad)?;
        Ok(v)
    }

    /// Uniformly scale every length (span and chord) by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor {s} must be > 0")));
        }
        let profile = match &self.profile {
            ChordProfile::Rectangle { height } => ChordProfile::Rectangle { height: height * s },
            ChordProfile::Parabola { peak, reach } => ChordProfile::Parabola {
                peak: peak * s,
                reach: reach * s,
            },
            ChordProfile::Tabulated(k) => {
                ChordProfile::Tabulated(k.iter().map(|&(x, h)| (x * s, h * s)).collect())
            }
            ChordProfile::Custom(f) => {
                let f = Arc::clone(f);
                ChordProfile::Custom(Arc::new(move |x| s * f(x / s)))
            }
        };
        Self::new(self.label, profile, self.l1 * s, self.l2 * s)
    }

    pub fn from_spec(spec: &PlanformSpec) -> Result<Self> {
        let profile = match &spec.shape {
            ShapeSpec::Rectangle { height_mm } => ChordProfile::Rectangle { height: *height_mm },
            ShapeSpec::Parabola { peak_mm, reach_mm } => ChordProfile::Parabola {
                peak: *peak_mm,
                reach: *reach_mm,
            },
            ShapeSpec::Tabulated { points } => {
                ChordProfile::Tabulated(points.iter().map(|p| (p[0], p[1])).collect())
            }
        };
        Self::new(spec.label, profile, spec.l1_mm, spec.l2_mm)
    }

    /// Load a planform from a TOML file (see [`PlanformSpec`]).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: PlanformSpec = toml::from_str(&text)?;
        Self::from_spec(&spec)
    }
}

/// File form of a planform.
///
/// ```toml
/// label = "tail"
/// kind = "parabola"
/// peak_mm = 8.0
/// reach_mm = 12.0
/// l1_mm = 0.0
/// l2_mm = 12.0
/// ```
///
/// `kind = "tabulated"` takes `points = [[x_mm, h_mm], ...]`;
/// `kind = "rectangle"` takes `height_mm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanformSpec {
    pub label: PlateLabel,
    pub l1_mm: f64,
    pub l2_mm: f64,
    #[serde(flatten)]
    pub shape: ShapeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeSpec {
    Rectangle { height_mm: f64 },
    Parabola { peak_mm: f64, reach_mm: f64 },
    Tabulated { points: Vec<[f64; 2]> },
}

/// Head and tail drag factors and the speed ratio they imply under torque
/// balance, `⟨ω_t²⟩ / ⟨ω_h²⟩ = I_h / I_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdfReport {
    /// mm⁵
    pub i_head: f64,
    /// mm⁵
    pub i_tail: f64,
    pub ratio_head_over_tail: f64,
    pub implied_speed_ratio: f64,
}

impl RdfReport {
    /// Reported drag factors of the redesigned swimmer (enlarged head,
    /// parabolic tail).
    pub const NEW_DESIGN: (f64, f64) = (1.14e5, 1.07e4);
    /// Reported drag factors of the original design.
    pub const OLD_DESIGN: (f64, f64) = (1.88e4, 2.19e4);

    pub fn from_constants(i_head: f64, i_tail: f64) -> Result<Self> {
        for (name, v) in [("head", i_head), ("tail", i_tail)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidPlanform(format!(
                    "{name} drag factor must be positive, got {v}"
                )));
            }
        }
        let ratio = i_head / i_tail;
        Ok(Self {
            i_head,
            i_tail,
            ratio_head_over_tail: ratio,
            implied_speed_ratio: ratio,
        })
    }

    pub fn from_planforms(head: &Planform, tail: &Planform, quad: &QuadratureSpec) -> Result<Self> {
        Self::from_constants(
            head.resistive_drag_factor(quad)?,
            tail.resistive_drag_factor(quad)?,
        )
    }

    pub fn new_design() -> Self {
        Self::from_constants(Self::NEW_DESIGN.0, Self::NEW_DESIGN.1).expect("positive constants")
    }

    pub fn old_design() -> Self {
        Self::from_constants(Self::OLD_DESIGN.0, Self::OLD_DESIGN.1).expect("positive constants")
    }

    pub fn to_table(&self) -> String {
        format!(
            "{:<22}{:>14.6e}\n{:<22}{:>14.6e}\n{:<22}{:>14.6}\n{:<22}{:>14.6}\n",
            "I_head [mm^5]",
            self.i_head,
            "I_tail [mm^5]",
            self.i_tail,
            "ratio head/tail",
            self.ratio_head_over_tail,
            "implied speed ratio",
            self.implied_speed_ratio,
        )
    }
}
