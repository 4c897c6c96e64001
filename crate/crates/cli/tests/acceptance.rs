//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ncbf_cli::formats::{read_trajectory, write_trajectory};
use ncbf_core::acc::{feasibility_at, simulate, AccParams, AccState, Barrier, TrajectoryRecord};
use ncbf_core::cbf_clf::{
    clf_gradient, clf_value, input_bound_rows, ncbf_constraint_row, ncbf_gradient, ncbf_value, SafetyFunction,
};
use ncbf_core::feasibility::{symmetrize_bounds, tracking_bound_check};
use ncbf_core::qp::{solve, QpProblem, SolveStatus, SolverConfig};
use ncbf_core::{Matrix, Vector};
use ncbf_oracle::{
    active_set_qp, barrier_zero_gap, central_gradient, polytope_nonempty, random_feasible_qps, uniform_points,
};

const V0: [f64; 6] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0];
const Z0: f64 = 100.0;

// C1
const QP_COUNT: usize = 500;
const QP_MAX_N: usize = 5;
const QP_MAX_M: usize = 12;
const QP_SEED: u64 = 0xacce97;
const QP_OBJ_TOL: f64 = 1e-6;
const QP_X_TOL: f64 = 1e-5;
const QP_TIME: Duration = Duration::from_secs(5);
// C2
const SAFETY_TOL: f64 = 1e-3;
const SIM_TIME: Duration = Duration::from_secs(2);
// C3
const LEAD_SPEED: f64 = 13.89;
const SPEED_TOL: f64 = 0.1;
const RISE: f64 = 1.0;
const RISE_MAX_V0: f64 = 15.0;
// C4
const GAP_HORIZON: f64 = 100.0;
const GAP_RANGE: (f64, f64) = (11.4, 11.9);
// C5
const U_LIMIT: f64 = 6474.6;
const U_TOL: f64 = 1e-9;
// C7
const FEAS_SAMPLES: usize = 200;
const FEAS_SEED: u64 = 0xfea5;
const FEAS_FRACTION: f64 = 0.99;
const Y_TOL: f64 = 1e-6;
// C8
const GRAD_SAMPLES: usize = 100;
const GRAD_H: f64 = 1e-6;
const GRAD_REL_TOL: f64 = 1e-5;
// C10
const ROUND_TRIP_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;
type Runs = Vec<(f64, Vec<TrajectoryRecord>)>;
type Criterion = (&'static str, fn() -> Outcome);

fn runs(barrier: Barrier, prm: &AccParams) -> Runs {
    V0.iter().map(|&v0| (v0, simulate(AccState::new(v0, Z0), prm, barrier, &SolverConfig::default()))).collect()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_qp_vs_oracle() -> Outcome {
    let problems = random_feasible_qps(QP_COUNT, QP_MAX_N, QP_MAX_M, QP_SEED);
    let cfg = SolverConfig::default();
    let start = Instant::now();
    let mut worst_obj: f64 = 0.0;
    let mut worst_x: f64 = 0.0;
    for (k, q) in problems.iter().enumerate() {
        let problem = QpProblem::new(
            Matrix::from_row_major(q.n, q.n, q.p.clone()).unwrap(),
            Vector::from_slice(&q.g),
            Matrix::from_row_major(q.m, q.n, q.a.clone()).unwrap(),
            Vector::from_slice(&q.b),
        )
        .map_err(|e| format!("problem {k}: {e}"))?;
        let sol = solve(&problem, &cfg);
        check(sol.status == SolveStatus::Optimal, || format!("problem {k}: status {}", sol.status.as_str()))?;
        let oracle = active_set_qp(&q.p, &q.g, &q.a, &q.b, 1e-9).ok_or(format!("problem {k}: oracle found nothing"))?;
        let obj_err = (problem.objective(&sol.v_star) - oracle.objective).abs() / (1.0 + oracle.objective.abs());
        let x_err = sol.v_star.iter().zip(&oracle.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_obj = worst_obj.max(obj_err);
        worst_x = worst_x.max(x_err);
    }
    let elapsed = start.elapsed();
    check(worst_obj <= QP_OBJ_TOL, || format!("objective error {worst_obj:.3e}"))?;
    check(worst_x <= QP_X_TOL, || format!("solution error {worst_x:.3e}"))?;
    check(elapsed < QP_TIME, || format!("took {elapsed:?}"))?;
    Ok(format!("{QP_COUNT} problems, obj err {worst_obj:.2e}, x err {worst_x:.2e}, {elapsed:.2?}"))
}

fn c2_safety() -> Outcome {
    let prm = AccParams::default();
    let start = Instant::now();
    let all = [runs(Barrier::Ncbf, &prm), runs(Barrier::Hocbf, &prm)];
    let elapsed = start.elapsed();
    let mut min_theta = f64::INFINITY;
    let mut min_big = f64::INFINITY;
    for (barrier, set) in [Barrier::Ncbf, Barrier::Hocbf].iter().zip(&all) {
        for (v0, recs) in set {
            check(recs.len() == prm.steps() + 1, || format!("{barrier} v0={v0}: {} records", recs.len()))?;
            let t = recs.iter().map(|r| r.state.z - prm.a0).fold(f64::INFINITY, f64::min);
            let b = recs.iter().map(|r| r.big_theta).fold(f64::INFINITY, f64::min);
            check(t >= -SAFETY_TOL, || format!("{barrier} v0={v0}: min z - a0 = {t}"))?;
            check(b >= -SAFETY_TOL, || format!("{barrier} v0={v0}: min Theta = {b}"))?;
            min_theta = min_theta.min(t);
            min_big = min_big.min(b);
        }
    }
    check(elapsed < SIM_TIME, || format!("12 runs took {elapsed:?}"))?;
    Ok(format!("min z-a0 {min_theta:.4}, min Theta {min_big:.3e}, 12 runs in {elapsed:.2?}"))
}

fn c3_velocity() -> Outcome {
    let prm = AccParams::default();
    let mut worst: f64 = 0.0;
    for (v0, recs) in runs(Barrier::Ncbf, &prm) {
        let v_end = recs.last().unwrap().state.v;
        let err = (v_end - LEAD_SPEED).abs();
        check(err <= SPEED_TOL, || format!("v0={v0}: v(50)={v_end}"))?;
        worst = worst.max(err);
        if v0 <= RISE_MAX_V0 {
            let vmax = recs.iter().map(|r| r.state.v).fold(f64::MIN, f64::max);
            check(vmax >= v0 + RISE, || format!("v0={v0}: max v {vmax}"))?;
        }
    }
    Ok(format!("max |v(50) - v_f| = {worst:.4}"))
}

fn c4_steady_gap() -> Outcome {
    let prm = AccParams { horizon: GAP_HORIZON, ..AccParams::default() };
    let root = barrier_zero_gap(LEAD_SPEED, 10.0, 0.09, 0.01, (0.1, 0.1));
    let mut gaps = Vec::new();
    for (v0, recs) in runs(Barrier::Ncbf, &prm) {
        let z = recs.last().unwrap().state.z;
        check((GAP_RANGE.0..=GAP_RANGE.1).contains(&z), || format!("v0={v0}: z(100)={z}"))?;
        gaps.push(z);
    }
    let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = gaps.iter().copied().fold(f64::MIN, f64::max);
    Ok(format!("z(100) in [{lo:.4}, {hi:.4}], oracle root {root:.4}"))
}

fn c5_saturation() -> Outcome {
    let prm = AccParams::default();
    let mut worst: f64 = 0.0;
    for barrier in [Barrier::Ncbf, Barrier::Hocbf] {
        for (v0, recs) in runs(barrier, &prm) {
            for r in &recs {
                check(r.u.abs() <= U_LIMIT + U_TOL, || format!("{barrier} v0={v0} t={}: u={}", r.t, r.u))?;
                worst = worst.max(r.u.abs());
            }
        }
    }
    Ok(format!("max |u| = {worst:.6}"))
}

fn c6_ordering() -> Outcome {
    let prm = AccParams::default();
    let (n, h) = (runs(Barrier::Ncbf, &prm), runs(Barrier::Hocbf, &prm));
    let mut min_delta = f64::INFINITY;
    for ((v0, rn), (_, rh)) in n.iter().zip(&h) {
        let (zn, zh) = (rn.last().unwrap().state.z, rh.last().unwrap().state.z);
        check(zn < zh, || format!("v0={v0}: ncbf {zn} hocbf {zh}"))?;
        min_delta = min_delta.min(zh - zn);
        let viol = rn.iter().chain(rh).filter(|r| r.state.z - prm.a0 < -SAFETY_TOL).count();
        check(viol == 0, || format!("v0={v0}: {viol} safety violations"))?;
    }
    Ok(format!("hocbf gap exceeds ncbf gap by at least {min_delta:.3} m"))
}

fn c7_feasibility() -> Outcome {
    let prm = AccParams::default();
    let bounds = symmetrize_bounds(&prm.input_bounds()).map_err(|e| e.to_string())?;
    let states: Vec<AccState> = uniform_points(20 * FEAS_SAMPLES, &[0.0, 10.0], &[35.0, 150.0], FEAS_SEED)
        .into_iter()
        .map(|p| AccState::new(p[0], p[1]))
        .filter(|s| ncbf_value(s.z - prm.a0, &s.to_vector(), &prm.ncbf) > 0.0)
        .take(FEAS_SAMPLES)
        .collect();
    check(states.len() == FEAS_SAMPLES, || format!("only {} safe samples", states.len()))?;
    let mut satisfied = 0;
    for s in &states {
        let rep = feasibility_at(*s, &prm).map_err(|e| e.to_string())?;
        if rep.satisfied {
            satisfied += 1;
            let mut rows = input_bound_rows(&bounds);
            rows.push(
                ncbf_constraint_row(&prm.system(), &prm.gap(), &s.to_vector(), &prm.ncbf).map_err(|e| e.to_string())?,
            );
            let a: Vec<f64> = rows.iter().flat_map(|r| r.a.iter().copied()).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.b).collect();
            check(polytope_nonempty(&a, &b, 2, 1e-9), || format!("counterexample at {s:?}"))?;
        }
    }
    let mut min_frac: f64 = 1.0;
    let mut max_y = f64::NEG_INFINITY;
    for (v0, recs) in runs(Barrier::Ncbf, &prm) {
        let ok = recs.iter().filter(|r| r.feasibility_margin.is_some_and(|m| m >= 0.0)).count();
        let frac = ok as f64 / recs.len() as f64;
        check(frac >= FEAS_FRACTION, || format!("v0={v0}: satisfied fraction {frac}"))?;
        min_frac = min_frac.min(frac);
        let y = feasibility_at(recs.last().unwrap().state, &prm).map_err(|e| e.to_string())?.y_value;
        check(y <= Y_TOL, || format!("v0={v0}: final Y = {y}"))?;
        max_y = max_y.max(y);
    }
    Ok(format!("{satisfied}/{FEAS_SAMPLES} satisfied, 0 counterexamples; run fraction >= {min_frac:.4}, final Y <= {max_y:.3e}"))
}

fn max_rel_err(analytic: &Vector, fd: &[f64]) -> f64 {
    let diff = analytic.iter().zip(fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    diff / fd.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-8)
}

fn c8_gradients() -> Outcome {
    let prm = AccParams::default();
    let gap = prm.gap();
    let clf = prm.clf();
    let states: Vec<Vec<f64>> = uniform_points(10 * GRAD_SAMPLES, &[0.0, 12.0], &[35.0, 200.0], 0x6ead)
        .into_iter()
        .filter(|p| ncbf_value(p[1] - prm.a0, &Vector::from_slice(p), &prm.ncbf) > 0.0)
        .take(GRAD_SAMPLES)
        .collect();
    check(states.len() == GRAD_SAMPLES, || format!("only {} safe samples", states.len()))?;
    let (mut worst_b, mut worst_v): (f64, f64) = (0.0, 0.0);
    for p in &states {
        let x = Vector::from_slice(p);
        let g = ncbf_gradient(&gap, &x, &prm.ncbf).map_err(|e| e.to_string())?;
        let fd = central_gradient(
            |y| ncbf_value(gap.value(&Vector::from_slice(y)), &Vector::from_slice(y), &prm.ncbf),
            p,
            GRAD_H,
        );
        worst_b = worst_b.max(max_rel_err(&g, &fd));
        let fd = central_gradient(|y| clf_value(&clf, &Vector::from_slice(y)), p, GRAD_H);
        worst_v = worst_v.max(max_rel_err(&clf_gradient(&clf, &x), &fd));
    }
    check(worst_b < GRAD_REL_TOL, || format!("barrier gradient rel err {worst_b:.3e}"))?;
    check(worst_v < GRAD_REL_TOL, || format!("CLF gradient rel err {worst_v:.3e}"))?;
    Ok(format!("barrier {worst_b:.2e}, CLF {worst_v:.2e} at {GRAD_SAMPLES} states"))
}

fn c9_tracking_bound() -> Outcome {
    let prm = AccParams::default();
    let mut worst = f64::NEG_INFINITY;
    for barrier in [Barrier::Ncbf, Barrier::Hocbf] {
        for (v0, recs) in runs(barrier, &prm) {
            let series: Vec<(f64, f64)> = recs.iter().map(|r| (r.t, r.lyapunov)).collect();
            let rep = tracking_bound_check(&series, prm.chi3, 1.0).map_err(|e| e.to_string())?;
            check(rep.holds(), || {
                format!("{barrier} v0={v0}: violated at t={:?}, excess {}", rep.violated_at, rep.max_excess)
            })?;
            worst = worst.max(rep.max_excess - rep.tolerance);
        }
    }
    Ok(format!("worst excess over tolerance {worst:.3e}"))
}

/// Barrier and CLF values recomputed from the state columns alone.
fn independent_values(v: f64, z: f64) -> (f64, f64, f64) {
    let theta = z - 10.0;
    let norm = ((v + 0.1).powi(2) + (z + 0.1).powi(2)).sqrt();
    let big = (theta / (norm + 0.01) - 0.09).exp() - 1.0;
    (theta, big, (v - 24.0).powi(2))
}

fn c10_determinism() -> Outcome {
    let prm = AccParams::default();
    let mut worst: f64 = 0.0;
    let mut rows_checked = 0;
    for barrier in [Barrier::Ncbf, Barrier::Hocbf] {
        for v0 in V0 {
            let csv = |_: ()| {
                let recs = simulate(AccState::new(v0, Z0), &prm, barrier, &SolverConfig::default());
                let mut buf = Vec::new();
                write_trajectory(&mut buf, &recs).map(|_| buf)
            };
            let a = csv(()).map_err(|e| e.to_string())?;
            let b = csv(()).map_err(|e| e.to_string())?;
            check(a == b, || format!("{barrier} v0={v0}: CSV output differs between runs"))?;
            for row in read_trajectory(a.as_slice()).map_err(|e| e.to_string())? {
                let (t, big, v) = independent_values(row.state.v, row.state.z);
                let err =
                    (t - row.theta).abs().max((big - row.big_theta).abs()).max((v - row.lyapunov).abs() / (1.0 + v));
                worst = worst.max(err);
                rows_checked += 1;
            }
        }
    }
    check(worst <= ROUND_TRIP_TOL, || format!("recomputed columns differ by {worst:.3e}"))?;
    Ok(format!("identical bytes, {rows_checked} rows recomputed within {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("qp solver matches enumeration oracle", c1_qp_vs_oracle),
        ("safety invariance for both barriers", c2_safety),
        ("velocity converges to lead vehicle", c3_velocity),
        ("steady-state gap at barrier root", c4_steady_gap),
        ("input saturation respected", c5_saturation),
        ("ncbf keeps a smaller gap than hocbf", c6_ordering),
        ("feasibility condition operationalized", c7_feasibility),
        ("analytic gradients match finite differences", c8_gradients),
        ("lyapunov tracking bound", c9_tracking_bound),
        ("determinism and csv round-trip", c10_determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS C{} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL C{} {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
