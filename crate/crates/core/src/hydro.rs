//! Quadratic resistive drag on rotating plates and the head/tail torque
//! balance of the head-fixed or free swimmer.
//!
//! Sign conventions follow the body frame `{b1, b2, b3}`:
//!
//! * `ω_h > 0` when the head rotates about `+b3`; `ω_t > 0` when the tail
//!   rotates about `−b3`.
//! * The head reactive torque `τ_r,h` is positive along `−b3`, the tail one
//!   `τ_r,t` along `+b3`.
//! * The net body torque about `+b3` is `τ_b = −τ_r,h + τ_r,t`; the actuator
//!   torques on head and tail cancel and never need evaluating.
//!
//! [`reactive_torque`] returns the drag torque resolved along each plate's own
//! positive rotation axis, so it always opposes `ω`. Because each plate's
//! torque axis is opposite its rotation axis, the balance-convention torques
//! are the negation of it: `τ_r,p = ½ ρ C_d ω_p|ω_p| I_p`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planform::{Planform, RdfReport};
use crate::quadrature::QuadratureSpec;

/// mm⁵ → m⁵
pub const MM5_TO_M5: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluidEnv {
    /// kg/m³
    pub rho: f64,
    pub c_d: f64,
    /// m²/s
    pub nu: f64,
}

impl Default for FluidEnv {
    /// Water near 20 °C with a flat-plate normal drag coefficient.
    fn default() -> Self {
        Self {
            rho: 1000.0,
            c_d: 1.9,
            nu: 1.0e-6,
        }
    }
}

impl FluidEnv {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho", self.rho), ("c_d", self.c_d), ("nu", self.nu)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("fluid {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn half_rho_cd(&self) -> f64 {
        0.5 * self.rho * self.c_d
    }
}

/// Prescribed signed angular speed of a plate over one period.
#[derive(Clone)]
pub struct PlateMotion {
    omega_fn: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    period: f64,
}

impl std::fmt::Debug for PlateMotion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlateMotion")
            .field("period", &self.period)
            .finish_non_exhaustive()
    }
}

impl PlateMotion {
    pub fn new(period: f64, omega_fn: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidArgument(format!("period must be > 0, got {period}")));
        }
        Ok(Self {
            omega_fn: Arc::new(omega_fn),
            period,
        })
    }

    /// `ω(t) = amplitude · cos(2π f t)`.
    pub fn sinusoid(amplitude: f64, freq: f64) -> Result<Self> {
        if !(freq > 0.0) {
            return Err(Error::InvalidArgument(format!("frequency must be > 0, got {freq}")));
        }
        Self::new(1.0 / freq, move |t| amplitude * (2.0 * PI * freq * t).cos())
    }

    /// Sinusoidal tail flapping whose tip sweeps `app_mm` peak to peak at
    /// distance `tail_length_mm` from the pivot.
    pub fn from_excursion(app_mm: f64, tail_length_mm: f64, freq: f64) -> Result<Self> {
        if !(tail_length_mm > 0.0) || !(app_mm >= 0.0) || app_mm > 2.0 * tail_length_mm {
            return Err(Error::InvalidArgument(format!(
                "excursion {app_mm} mm is not reachable with a {tail_length_mm} mm tail"
            )));
        }
        let angle = (0.5 * app_mm / tail_length_mm).asin();
        Self::sinusoid(2.0 * PI * freq * angle, freq)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega(&self, t: f64) -> f64 {
        (self.omega_fn)(t)
    }

    /// Cycle mean of `ω²`, periodic trapezoid rule (exact for low-order
    /// trigonometric polynomials).
    pub fn mean_square(&self) -> f64 {
        const N: usize = 4096;
        let dt = self.period / N as f64;
        (0..N).map(|k| self.omega(k as f64 * dt).powi(2)).sum::<f64>() / N as f64
    }
}

/// Signed drag force per unit span `f = −½ ρ C_d h(x) ω|ω| x|x|` (N/m) at
/// span position `x_m` (m) of a plate rotating at `omega` (rad/s).
pub fn drag_force_per_length(env: &FluidEnv, plate: &Planform, omega: f64, x_m: f64) -> Result<f64> {
    let h_m = plate.chord_at(x_m * 1e3)? * 1e-3;
    Ok(-env.half_rho_cd() * h_m * omega * omega.abs() * x_m * x_m.abs())
}

/// Reactive torque (N·m) along the plate's own rotation axis for a drag
/// factor given in mm⁵.
pub fn reactive_torque_from_rdf(env: &FluidEnv, rdf_mm5: f64, omega: f64) -> f64 {
    -env.half_rho_cd() * omega * omega.abs() * rdf_mm5 * MM5_TO_M5
}

pub fn reactive_torque(env: &FluidEnv, plate: &Planform, omega: f64, quad: &QuadratureSpec) -> Result<f64> {
    Ok(reactive_torque_from_rdf(env, plate.resistive_drag_factor(quad)?, omega))
}

/// Net torque about `+b3` from head and tail reactive torques given in the
/// balance convention.
pub fn net_body_torque(tau_r_head: f64, tau_r_tail: f64) -> f64 {
    -tau_r_head + tau_r_tail
}

/// Amplitude of a sinusoidal head angular speed that balances the given tail
/// motion: `Ω_h² / 2 · I_h = ⟨ω_t²⟩ · I_t`.
pub fn balanced_head_amplitude(report: &RdfReport, tail: &PlateMotion) -> Result<f64> {
    if !(report.i_head > 0.0) {
        return Err(Error::InvalidPlanform(format!(
            "head drag factor must be positive, got {}",
            report.i_head
        )));
    }
    Ok((2.0 * tail.mean_square() * report.i_tail / report.i_head).sqrt())
}

#[derive(Debug, Clone)]
pub struct CycleSetup {
    pub env: FluidEnv,
    /// mm⁵
    pub i_head: f64,
    /// mm⁵
    pub i_tail: f64,
    pub tail: PlateMotion,
    /// Lumped head yaw inertia, kg·m².
    pub yaw_inertia: f64,
    pub steps_per_period: usize,
    pub max_periods: usize,
    /// Relative change between consecutive periods accepted as steady.
    pub tolerance: f64,
}

impl CycleSetup {
    /// Roughly a 30 mg, 10 mm head; settles within a fraction of a cycle at
    /// the operating frequencies.
    pub const DEFAULT_YAW_INERTIA: f64 = 2.5e-10;
    pub const DEFAULT_STEPS_PER_PERIOD: usize = 1000;

    pub fn new(env: FluidEnv, report: &RdfReport, tail: PlateMotion) -> Self {
        Self {
            env,
            i_head: report.i_head,
            i_tail: report.i_tail,
            tail,
            yaw_inertia: Self::DEFAULT_YAW_INERTIA,
            steps_per_period: Self::DEFAULT_STEPS_PER_PERIOD,
            max_periods: 200,
            tolerance: 1e-10,
        }
    }

    pub fn from_planforms(
        env: FluidEnv,
        head: &Planform,
        tail_plate: &Planform,
        tail: PlateMotion,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        let report = RdfReport::from_planforms(head, tail_plate, quad)?;
        Ok(Self::new(env, &report, tail))
    }

    fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if self.steps_per_period < 100 {
            return Err(Error::InvalidArgument(format!(
                "need at least 100 steps per period, got {}",
                self.steps_per_period
            )));
        }
        if !(self.yaw_inertia > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "yaw inertia must be > 0, got {}",
                self.yaw_inertia
            )));
        }
        if !(self.i_head > 0.0 && self.i_tail > 0.0) {
            return Err(Error::InvalidPlanform("drag factors must be positive".into()));
        }
        if self.max_periods == 0 {
            return Err(Error::InvalidArgument("max_periods must be >= 1".into()));
        }
        Ok(())
    }
}

/// One sampled instant of the steady-state cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSample {
    pub t_s: f64,
    pub omega_h: f64,
    pub omega_t: f64,
    pub tau_rh: f64,
    pub tau_rt: f64,
    pub tau_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub periods_run: usize,
    pub mean_tau_rh: f64,
    pub mean_tau_rt: f64,
    pub mean_abs_tau_rt: f64,
    /// `|⟨τ_r,h⟩ − ⟨τ_r,t⟩|` normalised by `max(|⟨τ_r,h⟩|, ⟨|τ_r,t|⟩)`.
    pub balance_residual: f64,
    pub mean_sq_omega_h: f64,
    pub mean_sq_omega_t: f64,
    pub mean_omega_h: f64,
    /// `⟨ω_h²⟩ / ⟨ω_t²⟩`; NaN when the tail is at rest.
    pub speed_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct CycleSeries {
    pub samples: Vec<CycleSample>,
    pub summary: CycleSummary,
}

impl CycleSeries {
    pub const CSV_HEADER: [&'static str; 6] = ["t_s", "omega_h", "omega_t", "tau_rh", "tau_rt", "tau_b"];

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::CSV_HEADER)?;
        for s in &self.samples {
            out.write_record(
                [s.t_s, s.omega_h, s.omega_t, s.tau_rh, s.tau_rt, s.tau_b].map(|v| v.to_string()),
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Integrate head yaw dynamics `J ω̇_h = τ_b` under the prescribed tail
/// motion with classical RK4 until consecutive periods agree, then return the
/// final period sampled at every step.
pub fn simulate_cycle(setup: &CycleSetup) -> Result<CycleSeries> {
    setup.validate()?;
    let c = setup.env.half_rho_cd();
    let (kh, kt) = (c * setup.i_head * MM5_TO_M5, c * setup.i_tail * MM5_TO_M5);
    let j = setup.yaw_inertia;
    let tail = &setup.tail;
    let accel = |t: f64, wh: f64| {
        let wt = tail.omega(t);
        (-kh * wh * wh.abs() + kt * wt * wt.abs()) / j
    };

    let n = setup.steps_per_period;
    let period = tail.period();
    let dt = period / n as f64;

    let mut wh = 0.0_f64;
    let mut prev: Option<(f64, f64)> = None;
    let mut change = f64::INFINITY;

    for p in 0..setup.max_periods {
        let t0 = p as f64 * period;
        let start = wh;
        let mut samples = Vec::with_capacity(n);
        for k in 0..n {
            let t = t0 + k as f64 * dt;
            let wt = tail.omega(t);
            let tau_rh = kh * wh * wh.abs();
            let tau_rt = kt * wt * wt.abs();
            samples.push(CycleSample {
                t_s: t,
                omega_h: wh,
                omega_t: wt,
                tau_rh,
                tau_rt,
                tau_b: net_body_torque(tau_rh, tau_rt),
            });
            let k1 = accel(t, wh);
            let k2 = accel(t + 0.5 * dt, wh + 0.5 * dt * k1);
            let k3 = accel(t + 0.5 * dt, wh + 0.5 * dt * k2);
            let k4 = accel(t + dt, wh + dt * k3);
            wh += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if !wh.is_finite() {
            return Err(Error::Convergence {
                periods: p + 1,
                change: f64::NAN,
            });
        }
        let ms = samples.iter().map(|s| s.omega_h * s.omega_h).sum::<f64>() / n as f64;
        let scale = samples.iter().map(|s| s.omega_h.abs()).fold(0.0, f64::max);
        if let Some((prev_start, prev_ms)) = prev {
            let d_start = (start - prev_start).abs() / scale.max(f64::MIN_POSITIVE);
            let d_ms = (ms - prev_ms).abs() / ms.max(f64::MIN_POSITIVE);
            change = d_start.max(d_ms);
            let at_rest = scale == 0.0 && start == prev_start;
            if at_rest || change <= setup.tolerance {
                let summary = summarize(&samples, p + 1);
                return Ok(CycleSeries { samples, summary });
            }
        }
        prev = Some((start, ms));
    }
    Err(Error::Convergence {
        periods: setup.max_periods,
        change,
    })
}

fn summarize(samples: &[CycleSample], periods_run: usize) -> CycleSummary {
    let n = samples.len() as f64;
    let mean = |f: &dyn Fn(&CycleSample) -> f64| samples.iter().map(f).sum::<f64>() / n;
    let mean_tau_rh = mean(&|s| s.tau_rh);
    let mean_tau_rt = mean(&|s| s.tau_rt);
    let mean_abs_tau_rt = mean(&|s| s.tau_rt.abs());
    let mean_sq_omega_h = mean(&|s| s.omega_h * s.omega_h);
    let mean_sq_omega_t = mean(&|s| s.omega_t * s.omega_t);
    let denom = mean_tau_rh.abs().max(mean_abs_tau_rt);
    let balance_residual = if denom > 0.0 {
        (mean_tau_rh - mean_tau_rt).abs() / denom
    } else {
        0.0
    };
    CycleSummary {
        periods_run,
        mean_tau_rh,
        mean_tau_rt,
        mean_abs_tau_rt,
        balance_residual,
        mean_sq_omega_h,
        mean_sq_omega_t,
        mean_omega_h: mean(&|s| s.omega_h),
        speed_ratio: mean_sq_omega_h / mean_sq_omega_t,
    }
}
