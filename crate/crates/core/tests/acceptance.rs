//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Runs without the libtest harness so the lines show
//! under a plain `cargo test`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use milliswim_core::control::{closed_loop_tick, Axis, ControllerState, Segment};
use milliswim_core::harness::sweep::{excursion_sweep, speed_sweep, turn_sweep, write_excursion_csv, write_speed_csv, write_turn_csv};
use milliswim_core::harness::track::{run_tracking, RunStatus, TrackSetup};
use milliswim_core::hydro::PlateMotion;
use milliswim_core::metrics::{reynolds, strouhal, swim_number};
use milliswim_core::plant::Observation;
use milliswim_core::{
    simulate_cycle, ControlConfig, CycleSetup, ExcitationCommand, ExcursionTable, FluidEnv, Kinematics, PathKind,
    Planform, PlantCalibration, PlateLabel, QuadratureSpec, RdfReport, ReferencePath, Summary, SwimmerSpec,
    SwimmerState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// tolerances and budgets
const C1_ST_ABS: f64 = 0.01;
const C1_SW_REL: f64 = 0.01;
const C1_COT_REL: f64 = 0.05;
const C2_REL: f64 = 0.05;
const C3_RDF_REL: f64 = 1e-10;
const C3_NEW_ABS: f64 = 0.01;
const C3_OLD_ABS: f64 = 0.001;
const C4_BALANCE: f64 = 1e-3;
const C4_RATIO_REL: f64 = 0.02;
const C6_RMS_M: f64 = 2.6e-3;
const C6_SPEED_MPS: f64 = 9.1e-3;
const C6_REL: f64 = 0.15;
const C7_SAMPLES: usize = 100_000;
const C7_SW_REL: f64 = 1e-12;
const C7_SE2_M: f64 = 1e-9;
const C7_SEEDS: [u64; 3] = [11, 22, 33];

type Check = Result<String, String>;
/// Name, check and runtime budget in seconds.
type Criterion = (&'static str, fn() -> Check, u64);

fn rel(got: f64, want: f64) -> f64 {
    (got / want - 1.0).abs()
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn criterion_1() -> Check {
    let spec = SwimmerSpec::default();
    let p = ExcitationCommand::bimorph(2.0, 0.10).map_err(|e| e.to_string())?.average_power();
    let s = Summary::efficiency(2.0, 6.34e-3, 13.6e-3, p, &spec, 1e-6).map_err(|e| e.to_string())?;
    let (st, sw, cot) = (s.st.unwrap(), s.sw.unwrap(), s.cot.unwrap());
    ensure((st - 0.93).abs() <= C1_ST_ABS, format!("St {st}"))?;
    ensure(rel(sw, 2868.0) <= C1_SW_REL, format!("Sw {sw}"))?;
    ensure(rel(cot, 9304.0) <= C1_COT_REL, format!("CoT {cot}"))?;
    Ok(format!("St {st:.4}, Sw {sw:.0}, CoT {cot:.0} (P {:.1} mW)", p * 1e3))
}

fn criterion_2() -> Check {
    let spec = SwimmerSpec::default();
    let app = ExcursionTable::builtin().excursion(0.5, 0.09).map_err(|e| e.to_string())?;
    let p = ExcitationCommand::bimorph(0.5, 0.09).map_err(|e| e.to_string())?.average_power();
    let s = Summary::efficiency(0.5, app * 1e-3, 5.7e-3, p, &spec, 1e-6).map_err(|e| e.to_string())?;
    let (st, cot) = (s.st.unwrap(), s.cot.unwrap());
    ensure(rel(st, 0.57) <= C2_REL, format!("St {st}"))?;
    ensure(rel(cot, 20127.0) <= C2_REL, format!("CoT {cot}"))?;
    Ok(format!("A_pp {app:.3} mm, St {st:.4}, CoT {cot:.0}"))
}

fn criterion_3() -> Check {
    let quad = QuadratureSpec::default();
    let mut worst = 0.0_f64;
    for &(h, l1, l2) in &[(12.0, 2.0, 14.0), (1.0, 0.0, 1.0), (0.37, 5.5, 0.25), (30.0, 9.0, 9.0)] {
        let plate = Planform::rectangle(PlateLabel::Head, h, l1, l2).map_err(|e| e.to_string())?;
        let got = plate.resistive_drag_factor(&quad).map_err(|e| e.to_string())?;
        let want = h * (l1.powi(4) + l2.powi(4)) / 4.0;
        worst = worst.max(rel(got, want));
    }
    ensure(worst <= C3_RDF_REL, format!("rectangle rel error {worst:e}"))?;
    let new = RdfReport::new_design().ratio_head_over_tail;
    let old = RdfReport::old_design().ratio_head_over_tail;
    ensure((new - 10.65).abs() <= C3_NEW_ABS, format!("new ratio {new}"))?;
    ensure((old - 0.858).abs() <= C3_OLD_ABS, format!("old ratio {old}"))?;
    Ok(format!("rectangle rel err {worst:.1e}, ratios {new:.4} / {old:.4}"))
}

fn criterion_4() -> Check {
    let mut worst_bal = 0.0_f64;
    let mut worst_ratio = 0.0_f64;
    for report in [RdfReport::new_design(), RdfReport::old_design()] {
        for &(app, f) in &[(6.34, 2.0), (3.75, 5.0)] {
            let tail = PlateMotion::from_excursion(app, 12.0, f).map_err(|e| e.to_string())?;
            let setup = CycleSetup::new(FluidEnv::default(), &report, tail);
            let s = simulate_cycle(&setup).map_err(|e| e.to_string())?.summary;
            worst_bal = worst_bal.max(s.balance_residual);
            worst_ratio = worst_ratio.max(rel(s.speed_ratio, report.i_tail / report.i_head));
        }
    }
    ensure(worst_bal < C4_BALANCE, format!("balance residual {worst_bal:e}"))?;
    ensure(worst_ratio <= C4_RATIO_REL, format!("speed ratio off by {:.2}%", worst_ratio * 100.0))?;
    Ok(format!(
        "balance residual {worst_bal:.1e}, speed ratio within {:.2}% of I_t/I_h",
        worst_ratio * 100.0
    ))
}

fn csv_rows(bytes: Vec<u8>) -> Vec<Vec<String>> {
    let text = String::from_utf8(bytes).expect("utf-8");
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn criterion_5() -> Check {
    let cal = PlantCalibration::builtin();
    let mut buf = Vec::new();
    let ex = excursion_sweep(&ExcursionTable::builtin(), &cal).map_err(|e| e.to_string())?;
    write_excursion_csv(&ex, &mut buf).map_err(|e| e.to_string())?;
    let ex = csv_rows(buf);
    let mut buf = Vec::new();
    write_speed_csv(&speed_sweep(&cal), &mut buf).map_err(|e| e.to_string())?;
    let sp = csv_rows(buf);
    let mut buf = Vec::new();
    write_turn_csv(&turn_sweep(&cal), &mut buf).map_err(|e| e.to_string())?;
    let tu = csv_rows(buf);

    let mut checked = 0;
    let mut cell = |rows: &[Vec<String>], key: &[&str], col: usize, want: f64| -> Result<(), String> {
        let row = rows
            .iter()
            .find(|r| r.iter().zip(key).all(|(a, b)| a == b))
            .ok_or_else(|| format!("no row {key:?}"))?;
        let got: f64 = row[col].parse().map_err(|_| format!("{key:?} has no value"))?;
        checked += 1;
        ensure(got == want, format!("{key:?}: {got} != {want}"))
    };
    cell(&ex, &["1", "0.06"], 2, 7.80)?;
    for (f, v) in [("0.5", 6.59), ("2", 6.34), ("3", 5.62), ("4", 4.84), ("5", 3.75)] {
        cell(&ex, &[f, "0.1"], 2, v)?;
    }
    cell(&sp, &["2", "0.1"], 2, 13.6)?;
    cell(&tu, &["left", "2", "0.12"], 3, 12.0)?;
    cell(&tu, &["left", "3", "0.13"], 3, 10.2)?;
    cell(&tu, &["right", "4", "0.15"], 3, -7.5)?;
    cell(&tu, &["right", "5", "0.15"], 3, -8.9)?;
    Ok(format!("{checked} quoted cells exact"))
}

fn criterion_6() -> Check {
    let mut parts = Vec::new();
    let line = run_tracking(&TrackSetup::nominal(ReferencePath::rectilinear()), 1).map_err(|e| e.to_string())?;
    let s = line.summary.ok_or("rectilinear run aborted")?;
    let (rms, v) = (s.rms_error_m.unwrap(), s.mean_speed_mps.unwrap());
    ensure(rms <= C6_RMS_M && v >= C6_SPEED_MPS, format!("line rms {rms} m, v {v} m/s"))?;
    parts.push(format!("line rms {:.2} mm v {:.1} mm/s", rms * 1e3, v * 1e3));
    for (path, rate_dps, radius_mm) in [
        (ReferencePath::left_turn(ReferencePath::DEFAULT_CORNER), 10.8, 24.0),
        (ReferencePath::right_turn(ReferencePath::DEFAULT_CORNER), 13.1, 10.0),
    ] {
        let name = match path.kind {
            PathKind::LeftTurn => "left",
            _ => "right",
        };
        let run = run_tracking(&TrackSetup::nominal(path), 1).map_err(|e| e.to_string())?;
        let s = run.summary.ok_or(format!("{name} run aborted"))?;
        let rate = s.mean_turn_rate_radps.ok_or(format!("{name}: no turn"))?.to_degrees().abs();
        let radius = s.turn_radius_m.ok_or(format!("{name}: no radius"))? * 1e3;
        ensure(
            rel(rate, rate_dps) <= C6_REL && rel(radius, radius_mm) <= C6_REL,
            format!("{name} rate {rate} deg/s radius {radius} mm"),
        )?;
        parts.push(format!("{name} {rate:.2} deg/s r {radius:.1} mm"));
    }
    Ok(parts.join(", "))
}

fn saturation_safety() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let path = ReferencePath::left_turn(0.1);
    for cfg in [ControlConfig::nominal(), ControlConfig::nominal().without_safeguards()] {
        let dt = cfg.dt();
        for _ in 0..C7_SAMPLES / 2 {
            let obs = Observation {
                r1: rng.random_range(-1.0..1.0),
                r2: rng.random_range(-1.0..1.0),
                psi: rng.random_range(-10.0..10.0),
            };
            let st = ControllerState {
                integrator: rng.random_range(-100.0..100.0),
                segment: rng.random_range(0..path.segments.len()),
            };
            let tick = closed_loop_tick(&cfg, &path, st, &obs, dt).map_err(|e| e.to_string())?;
            for u in [tick.cmd.dc_left, tick.cmd.dc_right] {
                ensure((0.0..=cfg.u_max).contains(&u), format!("duty cycle {u} from {obs:?} {st:?}"))?;
            }
        }
    }
    Ok(())
}

fn sw_identity() -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let f = rng.random_range(0.1..10.0);
        let a = rng.random_range(1e-4..2e-2);
        let v = rng.random_range(1e-4..5e-2);
        let l = rng.random_range(5e-3..0.1);
        let nu = rng.random_range(5e-7..2e-6);
        let lhs = swim_number(f, a, l, nu).map_err(|e| e.to_string())?;
        let rhs = 2.0 * std::f64::consts::PI * reynolds(v, l, nu).unwrap() * strouhal(f, a, v).unwrap();
        worst = worst.max(rel(lhs, rhs));
    }
    ensure(worst <= C7_SW_REL, format!("Sw identity rel error {worst:e}"))?;
    Ok(worst)
}

/// Largest distance between a trajectory mapped through `(r1, r2) -> map`
/// and a second trajectory.
fn max_gap(a: &[(f64, f64)], b: &[(f64, f64)], map: impl Fn(f64, f64) -> (f64, f64)) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&(x, y), &(p, q))| {
            let (u, w) = map(x, y);
            (u - p).hypot(w - q)
        })
        .fold(0.0, f64::max)
}

fn positions(setup: &TrackSetup) -> Result<Vec<(f64, f64)>, String> {
    let run = run_tracking(setup, 5).map_err(|e| e.to_string())?;
    ensure(run.status == RunStatus::Completed, "SE(2) run aborted".into())?;
    Ok(run.log.rows.iter().map(|r| (r.r1_m, r.r2_m)).collect())
}

fn se2_invariance() -> Result<f64, String> {
    let mut worst = 0.0_f64;

    // open-loop plant under an arbitrary rigid motion
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let kin = Kinematics::default();
    let mut noise = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        let (th, d1, d2) = (rng.random_range(-3.0..3.0), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let (s, c) = f64::sin_cos(th);
        let mv = |x: f64, y: f64| (c * x - s * y + d1, s * x + c * y + d2);
        let mut a = SwimmerState::default();
        let (r1, r2) = mv(0.0, 0.0);
        let mut b = SwimmerState::at_pose(r1, r2, th);
        let (mut pa, mut pb) = (Vec::new(), Vec::new());
        for _ in 0..200 {
            let (v, w) = (rng.random_range(0.0..0.015), rng.random_range(-0.3..0.3));
            for _ in 0..40 {
                a = kin.step(&a, v, w, 1e-3, &mut noise);
                b = kin.step(&b, v, w, 1e-3, &mut noise);
                pa.push((a.r1, a.r2));
                pb.push((b.r1, b.r2));
            }
        }
        worst = worst.max(max_gap(&pa, &pb, mv));
    }

    // closed loop, translated path and start
    let base_path = ReferencePath::left_turn(0.1);
    let mut base = TrackSetup::nominal(base_path.clone());
    base.duration = 30.0;
    base.initial = SwimmerState::at_pose(0.0, 0.004, 0.1);
    let pa = positions(&base)?;
    for &(d1, d2) in &[(0.3, -0.2), (-1.5, 0.75)] {
        let mut moved = base.clone();
        moved.path = base_path.translated(d1, d2);
        moved.initial = SwimmerState::at_pose(d1, 0.004 + d2, 0.1);
        worst = worst.max(max_gap(&pa, &positions(&moved)?, |x, y| (x + d1, y + d2)));
    }

    // closed loop, quarter turn: a line along +n2 at r1 = 0
    let mut straight = base.clone();
    straight.path = ReferencePath::rectilinear();
    let pa = positions(&straight)?;
    let mut turned = straight.clone();
    turned.path = ReferencePath {
        kind: PathKind::Rectilinear,
        segments: vec![Segment {
            axis: Axis::N1,
            target: 0.0,
            heading: std::f64::consts::FRAC_PI_2,
            end: None,
        }],
    };
    turned.initial = SwimmerState::at_pose(-0.004, 0.0, 0.1 + std::f64::consts::FRAC_PI_2);
    worst = worst.max(max_gap(&pa, &positions(&turned)?, |x, y| (-y, x)));

    ensure(worst <= C7_SE2_M, format!("SE(2) gap {worst:e} m"))?;
    Ok(worst)
}

fn rerun_identity() -> Result<(), String> {
    let mut setup = TrackSetup::nominal(ReferencePath::right_turn(0.1));
    setup.calibration.noise_sigma = 5e-4;
    setup.kinematics.yaw_noise = 1e-3;
    setup.duration = 20.0;
    let csv = |seed| -> Result<Vec<u8>, String> {
        let mut buf = Vec::new();
        run_tracking(&setup, seed)
            .and_then(|r| r.log.write_csv(&mut buf))
            .map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let mut firsts = Vec::new();
    for seed in C7_SEEDS {
        let a = csv(seed)?;
        ensure(a == csv(seed)?, format!("seed {seed} differs between reruns"))?;
        firsts.push(a);
    }
    ensure(firsts[0] != firsts[1] && firsts[1] != firsts[2], "seeds give identical runs".into())
}

fn criterion_7() -> Check {
    saturation_safety()?;
    let sw = sw_identity()?;
    let se2 = se2_invariance()?;
    rerun_identity()?;
    Ok(format!(
        "{C7_SAMPLES} saturation samples in range, Sw rel err {sw:.1e}, SE(2) gap {se2:.1e} m, {} seeds bit-identical",
        C7_SEEDS.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("metric reproduction", criterion_1, 1),
        ("second metric point", criterion_2, 1),
        ("drag factor identity", criterion_3, 1),
        ("torque balance", criterion_4, 10),
        ("sweep fixtures", criterion_5, 5),
        ("closed-loop tracking", criterion_6, 30),
        ("property suites", criterion_7, 30),
    ];
    let mut failed = 0;
    for (i, (name, check, budget_s)) in criteria.into_iter().enumerate() {
        let t0 = Instant::now();
        let outcome = check();
        let elapsed = t0.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > Duration::from_secs(budget_s) => {
                Err(format!("{msg}; took {elapsed:.2?} over the {budget_s} s budget"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {} {name}: {msg} [{elapsed:.2?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
