//! Adaptive cruise control: a follower at speed `v` keeps a gap `z` to a lead
//! vehicle moving at constant `v_f`.
//!
//! ```text
//! v̇ = (u − F_r(v)) / M,   ż = v_f − v,   F_r(v) = f0·sgn(v) + f1·v + f2·v²
//! ```
//!
//! Each control step solves a QP over `[u, δ]` with six rows: two actuator
//! limits, two speed limits, the gap barrier (nonlinear or second-order) and
//! the relaxed speed-tracking CLF.

use alloc::vec::Vec;
use core::fmt;

use crate::cbf_clf::{
    clf_constraint_row, clf_value, hocbf_constraint_row, input_bound_rows, ncbf_constraint_row, ncbf_value,
    rd1_cbf_row, AffineSystem, CbfError, ClfParams, ConstraintRow, ControlBounds, NcbfParams, SafetyFunction,
};
use crate::feasibility::{symmetrize_bounds, theorem_condition, FeasibilityError, FeasibilityReport};
use crate::linalg::{Matrix, Vector};
use crate::qp::{self, QpProblem, QpSolution, SolveStatus, SolverConfig};

/// Largest accepted number of simulation steps.
pub const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Barrier {
    Ncbf,
    Hocbf,
}

impl Barrier {
    pub fn as_str(self) -> &'static str {
        match self {
            Barrier::Ncbf => "ncbf",
            Barrier::Hocbf => "hocbf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ncbf" => Some(Barrier::Ncbf),
            "hocbf" => Some(Barrier::Hocbf),
            _ => None,
        }
    }
}

impl fmt::Display for Barrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Integrator {
    #[default]
    Euler,
    /// Classical fourth-order Runge-Kutta with the control held over the step.
    Rk4,
}

impl Integrator {
    pub fn as_str(self) -> &'static str {
        match self {
            Integrator::Euler => "euler",
            Integrator::Rk4 => "rk4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Some(Integrator::Euler),
            "rk4" => Some(Integrator::Rk4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccState {
    pub v: f64,
    pub z: f64,
}

impl AccState {
    pub fn new(v: f64, z: f64) -> Self {
        AccState { v, z }
    }

    pub fn to_vector(self) -> Vector {
        Vector::from_slice(&[self.v, self.z])
    }

    pub fn from_vector(x: &Vector) -> Self {
        AccState { v: x[0], z: x[1] }
    }

    pub fn is_finite(self) -> bool {
        self.v.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccParams {
    pub m: f64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub v_f: f64,
    pub v_max: f64,
    pub v_min: f64,
    pub v_t: f64,
    pub c_a: f64,
    pub c_d: f64,
    pub g: f64,
    pub a0: f64,
    pub dt: f64,
    pub horizon: f64,
    pub chi3: f64,
    pub p: f64,
    pub ncbf: NcbfParams,
    /// `(k₁, k₂)` of the second-order barrier.
    pub hocbf_gains: (f64, f64),
    pub integrator: Integrator,
    /// Solve each step in acceleration units with unit-norm rows.
    pub equilibrate: bool,
}

impl Default for AccParams {
    fn default() -> Self {
        AccParams {
            m: 1650.0,
            f0: 0.1,
            f1: 5.0,
            f2: 0.25,
            v_f: 13.89,
            v_max: 55.0,
            v_min: 0.0,
            v_t: 24.0,
            c_a: 0.4,
            c_d: 0.4,
            g: 9.81,
            a0: 10.0,
            dt: 0.1,
            horizon: 50.0,
            chi3: 10.0,
            p: 1.0,
            ncbf: NcbfParams { delta: 0.09, r: 0.01, d: Vector::from_slice(&[0.1, 0.1]), k: 0.2 },
            hocbf_gains: (0.05, 0.2),
            integrator: Integrator::Euler,
            equilibrate: true,
        }
    }
}

/// A parameter outside its admissible range.
#[derive(Debug, Clone, PartialEq)]
pub struct AccParamError {
    pub field: &'static str,
    pub reason: &'static str,
}

impl fmt::Display for AccParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.reason)
    }
}

impl core::error::Error for AccParamError {}

impl AccParams {
    pub fn validate(&self) -> Result<(), AccParamError> {
        let positive: [(&'static str, f64); 17] = [
            ("M", self.m),
            ("f0", self.f0),
            ("f1", self.f1),
            ("f2", self.f2),
            ("v_f", self.v_f),
            ("v_max", self.v_max),
            ("v_T", self.v_t),
            ("c_a", self.c_a),
            ("c_d", self.c_d),
            ("g", self.g),
            ("a0", self.a0),
            ("horizon", self.horizon),
            ("chi3", self.chi3),
            ("p", self.p),
            ("ncbf.delta", self.ncbf.delta),
            ("ncbf.r", self.ncbf.r),
            ("ncbf.k", self.ncbf.k),
        ];
        for (field, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(AccParamError { field, reason: "must be finite and positive" });
            }
        }
        let err = |field, reason| Err(AccParamError { field, reason });
        if !(self.v_min >= 0.0) {
            return err("v_min", "must be non-negative");
        }
        if self.v_min > self.v_f {
            return err("v_min", "must not exceed v_f");
        }
        if self.v_t > self.v_max {
            return err("v_T", "must not exceed v_max");
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return err("dt", "must lie in (0, 1]");
        }
        if self.horizon / self.dt > MAX_STEPS as f64 {
            return err("horizon", "too many steps for dt");
        }
        if self.ncbf.d.dim() != 2 || !self.ncbf.d.is_finite() {
            return err("ncbf.d", "must be two finite numbers");
        }
        let (k1, k2) = self.hocbf_gains;
        if !(k1 > 0.0 && k2 > 0.0 && k1.is_finite() && k2.is_finite()) {
            return err("hocbf_gains", "must be finite and positive");
        }
        Ok(())
    }

    /// Number of control steps over the horizon.
    pub fn steps(&self) -> usize {
        libm::round(self.horizon / self.dt) as usize
    }

    pub fn u_max(&self) -> f64 {
        self.c_a * self.m * self.g
    }

    pub fn u_min(&self) -> f64 {
        -self.c_d * self.m * self.g
    }

    pub fn input_bounds(&self) -> ControlBounds {
        ControlBounds { v_min: Vector::from_slice(&[self.u_min()]), v_max: Vector::from_slice(&[self.u_max()]) }
    }

    /// `V = (v − v_T)²`
    pub fn clf(&self) -> ClfParams {
        ClfParams {
            z: Matrix::from_diagonal(&[1.0, 0.0]),
            chi3: self.chi3,
            target: Vector::from_slice(&[self.v_t, 0.0]),
            p: self.p,
            chi1: 1.0,
            chi2: 1.0,
        }
    }

    pub fn system(&self) -> AccSystem<'_> {
        AccSystem { prm: self }
    }

    pub fn gap(&self) -> Gap {
        Gap { a0: self.a0 }
    }
}

/// `sgn(0) = 0`
pub fn resistance(v: f64, prm: &AccParams) -> f64 {
    let sgn = if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    };
    prm.f0 * sgn + prm.f1 * v + prm.f2 * v * v
}

/// `(v̇, ż)`
pub fn dynamics(s: AccState, u: f64, prm: &AccParams) -> (f64, f64) {
    ((u - resistance(s.v, prm)) / prm.m, prm.v_f - s.v)
}

pub fn step(s: AccState, u: f64, prm: &AccParams) -> AccState {
    match prm.integrator {
        Integrator::Euler => euler_step(s, u, prm.dt, prm),
        Integrator::Rk4 => rk4_step(s, u, prm.dt, prm),
    }
}

pub fn euler_step(s: AccState, u: f64, dt: f64, prm: &AccParams) -> AccState {
    let (dv, dz) = dynamics(s, u, prm);
    AccState { v: s.v + dt * dv, z: s.z + dt * dz }
}

pub fn rk4_step(s: AccState, u: f64, dt: f64, prm: &AccParams) -> AccState {
    let at = |k: (f64, f64), h: f64| AccState { v: s.v + h * k.0, z: s.z + h * k.1 };
    let k1 = dynamics(s, u, prm);
    let k2 = dynamics(at(k1, dt / 2.0), u, prm);
    let k3 = dynamics(at(k2, dt / 2.0), u, prm);
    let k4 = dynamics(at(k3, dt), u, prm);
    AccState {
        v: s.v + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        z: s.z + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    }
}

/// The plant in control-affine form over `ζ = (v, z)`.
#[derive(Debug, Clone, Copy)]
pub struct AccSystem<'a> {
    prm: &'a AccParams,
}

impl AffineSystem for AccSystem<'_> {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn drift(&self, x: &Vector) -> Vector {
        Vector::from_slice(&[-resistance(x[0], self.prm) / self.prm.m, self.prm.v_f - x[0]])
    }

    fn actuation(&self, _: &Vector) -> Matrix {
        Matrix::from_rows(&[[1.0 / self.prm.m], [0.0]]).expect("2x1")
    }

    fn drift_jacobian(&self, x: &Vector) -> Matrix {
        let dfr = self.prm.f1 + 2.0 * self.prm.f2 * x[0];
        Matrix::from_rows(&[[-dfr / self.prm.m, 0.0], [-1.0, 0.0]]).expect("2x2")
    }
}

/// `θ = z − a₀`
#[derive(Debug, Clone, Copy)]
pub struct Gap {
    pub a0: f64,
}

impl SafetyFunction for Gap {
    fn value(&self, x: &Vector) -> f64 {
        x[1] - self.a0
    }

    fn gradient(&self, _: &Vector) -> Vector {
        Vector::from_slice(&[0.0, 1.0])
    }

    fn hessian(&self, _: &Vector) -> Matrix {
        Matrix::zeros(2, 2)
    }

    fn relative_degree(&self) -> usize {
        2
    }
}

/// `v_max − v ≥ 0`
struct SpeedCeiling(f64);

impl SafetyFunction for SpeedCeiling {
    fn value(&self, x: &Vector) -> f64 {
        self.0 - x[0]
    }
    fn gradient(&self, _: &Vector) -> Vector {
        Vector::from_slice(&[-1.0, 0.0])
    }
    fn hessian(&self, _: &Vector) -> Matrix {
        Matrix::zeros(2, 2)
    }
    fn relative_degree(&self) -> usize {
        1
    }
}

/// `v − v_min ≥ 0`
struct SpeedFloor(f64);

impl SafetyFunction for SpeedFloor {
    fn value(&self, x: &Vector) -> f64 {
        x[0] - self.0
    }
    fn gradient(&self, _: &Vector) -> Vector {
        Vector::from_slice(&[1.0, 0.0])
    }
    fn hessian(&self, _: &Vector) -> Matrix {
        Matrix::zeros(2, 2)
    }
    fn relative_degree(&self) -> usize {
        1
    }
}

/// The six rows in solver order.
pub fn constraint_rows(s: AccState, prm: &AccParams, barrier: Barrier) -> Result<Vec<ConstraintRow>, CbfError> {
    let x = s.to_vector();
    let sys = prm.system();
    let mut rows = input_bound_rows(&prm.input_bounds());
    rows.push(rd1_cbf_row(&SpeedCeiling(prm.v_max), &sys, &x, 1.0)?);
    rows.push(rd1_cbf_row(&SpeedFloor(prm.v_min), &sys, &x, 1.0)?);
    rows.push(match barrier {
        Barrier::Ncbf => ncbf_constraint_row(&sys, &prm.gap(), &x, &prm.ncbf)?,
        Barrier::Hocbf => hocbf_constraint_row(&sys, &prm.gap(), &x, prm.hocbf_gains)?,
    });
    rows.push(clf_constraint_row(&sys, &prm.clf(), &x));
    Ok(rows)
}

/// Per-step QP over `[u, δ]`:
/// `min (u − F_r)²/M² + pδ²`, written as `½υᵀPυ + Gᵀυ` with
/// `P = diag(2/M², 2p)` and `G = (−2F_r/M², 0)`.
pub fn assemble_qp(s: AccState, prm: &AccParams, barrier: Barrier) -> Result<QpProblem, CbfError> {
    let rows = constraint_rows(s, prm, barrier)?;
    let m2 = prm.m * prm.m;
    let p = Matrix::from_diagonal(&[2.0 / m2, 2.0 * prm.p]);
    let g = Vector::from_slice(&[-2.0 * resistance(s.v, prm) / m2, 0.0]);
    let data: Vec<f64> = rows.iter().flat_map(|r| r.a.iter().copied()).collect();
    let a = Matrix::from_row_major(rows.len(), 2, data).expect("rows have two coefficients");
    let theta: Vector = rows.iter().map(|r| r.b).collect();
    QpProblem::new(p, g, a, theta)
        .map_err(|_| CbfError::InvalidParameter { name: "state", reason: "produces a non-finite QP" })
}

/// Solves one step QP, in the scaled variables `[u/M, δ]` when
/// `prm.equilibrate` is set.
pub fn solve_step(problem: &QpProblem, prm: &AccParams, cfg: &SolverConfig) -> QpSolution {
    if prm.equilibrate {
        if let Ok(sol) = qp::solve_equilibrated(problem, &Vector::from_slice(&[prm.m, 1.0]), cfg) {
            return sol;
        }
    }
    qp::solve(problem, cfg)
}

/// Barrier/input-limit compatibility at `s`, using the symmetrized actuator box.
pub fn feasibility_at(s: AccState, prm: &AccParams) -> Result<FeasibilityReport, FeasibilityError> {
    let bounds = symmetrize_bounds(&prm.input_bounds())?;
    theorem_condition(&prm.system(), &prm.gap(), &s.to_vector(), &prm.ncbf, &bounds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub state: AccState,
    pub u: f64,
    pub delta: f64,
    pub theta: f64,
    pub big_theta: f64,
    pub lyapunov: f64,
    pub qp_status: SolveStatus,
    pub qp_iters: usize,
    /// `α(Θ) − lhs` of the feasibility condition; NCBF runs only, and only
    /// where `θ > 0` and `Θ > 0`.
    pub feasibility_margin: Option<f64>,
}

impl TrajectoryRecord {
    /// The QP did not return an optimal point and the previous control was held.
    pub fn flagged(&self) -> bool {
        self.qp_status != SolveStatus::Optimal
    }
}

/// Closed-loop run from `s0` over `prm.horizon`, one record per step at
/// `t = k·dt` for `k = 0..=steps`.
///
/// When a QP is not solved to optimality the previous `(u, δ)` is held for
/// that step and the record carries the failing status.
pub fn simulate(s0: AccState, prm: &AccParams, barrier: Barrier, cfg: &SolverConfig) -> Vec<TrajectoryRecord> {
    let n = prm.steps();
    let mut out = Vec::with_capacity(n + 1);
    let mut s = s0;
    let (mut u, mut delta) = (0.0, 0.0);
    for k in 0..=n {
        let (status, iters) = match assemble_qp(s, prm, barrier) {
            Ok(problem) => {
                let sol = solve_step(&problem, prm, cfg);
                if sol.status == SolveStatus::Optimal {
                    u = sol.v_star[0];
                    delta = sol.v_star[1];
                }
                (sol.status, sol.iterations)
            }
            Err(_) => (SolveStatus::NumericalFailure, 0),
        };
        out.push(record(k as f64 * prm.dt, s, u, delta, status, iters, prm, barrier));
        if k < n {
            s = step(s, u, prm);
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn record(
    t: f64,
    s: AccState,
    u: f64,
    delta: f64,
    qp_status: SolveStatus,
    qp_iters: usize,
    prm: &AccParams,
    barrier: Barrier,
) -> TrajectoryRecord {
    let x = s.to_vector();
    let theta = s.z - prm.a0;
    let feasibility_margin = match barrier {
        Barrier::Ncbf => feasibility_at(s, prm).ok().map(|r| r.margin),
        Barrier::Hocbf => None,
    };
    TrajectoryRecord {
        t,
        state: s,
        u,
        delta,
        theta,
        big_theta: ncbf_value(theta, &x, &prm.ncbf),
        lyapunov: clf_value(&prm.clf(), &x),
        qp_status,
        qp_iters,
        feasibility_margin,
    }
}
