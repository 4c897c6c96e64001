//! Predictor-corrector interior-point method for strictly convex inequality QPs
//!
//! ```text
//! minimize   ½ υᵀ P υ + Gᵀ υ
//! subject to A υ ≤ θ
//! ```
//!
//! Slacks `s = θ − Aυ` and multipliers `L` are kept strictly positive. Each
//! iteration solves the full `(n + 2m)` Newton system of the perturbed KKT
//! conditions twice: once with zero centering (the affine predictor) and once
//! with the centering parameter `σ = (μ_aff / μ)³` and the second-order
//! correction `ΔΛ_aff ΔS_aff e` (the corrector). Both primal and dual step
//! lengths come from the fraction-to-boundary rule and the smaller of the two
//! is applied to the whole iterate.

use core::fmt;

use crate::linalg::{lu_solve, norm_inf, LinalgError, Matrix, Vector};

/// Diagonal shift applied to the Newton matrix when the plain solve is singular.
pub const KKT_REGULARIZATION: f64 = 1e-10;

/// Steps shorter than this are treated as a stalled (infeasible or degenerate) QP.
pub const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum QpError {
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    NonFinite {
        what: &'static str,
    },
    NotSymmetric,
    NotPositiveDefinite,
    /// The Newton system could not be factorized.
    SingularKkt(LinalgError),
}

impl fmt::Display for QpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QpError::DimensionMismatch { what, expected, found } => {
                write!(f, "{what}: expected dimension {expected}, found {found}")
            }
            QpError::NonFinite { what } => write!(f, "{what} contains non-finite entries"),
            QpError::NotSymmetric => f.write_str("P is not symmetric"),
            QpError::NotPositiveDefinite => f.write_str("P is not positive definite"),
            QpError::SingularKkt(e) => write!(f, "singular KKT system: {e}"),
        }
    }
}

impl core::error::Error for QpError {}

/// One strictly convex QP instance with inequality rows `Aᵢᵀ υ ≤ θᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    p: Matrix,
    g: Vector,
    a: Matrix,
    theta: Vector,
}

impl QpProblem {
    /// Validates dimensions, finiteness, symmetry of `P` and positive
    /// definiteness (Cholesky must succeed).
    pub fn new(p: Matrix, g: Vector, a: Matrix, theta: Vector) -> Result<Self, QpError> {
        let n = g.dim();
        if p.rows() != n || p.cols() != n {
            return Err(QpError::DimensionMismatch { what: "P", expected: n, found: p.rows().max(p.cols()) });
        }
        if a.rows() != theta.dim() {
            return Err(QpError::DimensionMismatch { what: "theta", expected: a.rows(), found: theta.dim() });
        }
        if a.rows() > 0 && a.cols() != n {
            return Err(QpError::DimensionMismatch { what: "A", expected: n, found: a.cols() });
        }
        for (what, ok) in
            [("P", p.is_finite()), ("G", g.is_finite()), ("A", a.is_finite()), ("theta", theta.is_finite())]
        {
            if !ok {
                return Err(QpError::NonFinite { what });
            }
        }
        if !p.is_symmetric(1e-12) {
            return Err(QpError::NotSymmetric);
        }
        if p.cholesky().is_none() {
            return Err(QpError::NotPositiveDefinite);
        }
        let a = if a.rows() == 0 { Matrix::zeros(0, n) } else { a };
        Ok(QpProblem { p, g, a, theta })
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn g(&self) -> &Vector {
        &self.g
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn theta(&self) -> &Vector {
        &self.theta
    }

    /// Number of decision variables.
    pub fn n(&self) -> usize {
        self.g.dim()
    }

    /// Number of inequality rows.
    pub fn m(&self) -> usize {
        self.theta.dim()
    }

    pub fn objective(&self, v: &Vector) -> f64 {
        0.5 * self.p.quad_form(v) + self.g.dot(v)
    }

    /// Largest violation `max(Aυ − θ)` (non-positive when feasible).
    pub fn max_violation(&self, v: &Vector) -> f64 {
        let av = self.a.mul_vec(v);
        av.iter().zip(self.theta.iter()).fold(f64::NEG_INFINITY, |m, (x, t)| m.max(x - t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol_mu: f64,
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary parameter in (0, 1).
    pub tau: f64,
    pub init_margin: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol_mu: 1e-9, tol_residual: 1e-8, max_iter: 100, tau: 0.995, init_margin: 1.0 }
    }
}

/// Primal-dual state of the interior-point method.
#[derive(Debug, Clone, PartialEq)]
pub struct IpmIterate {
    pub v: Vector,
    pub s: Vector,
    pub l: Vector,
    pub mu: f64,
    pub sigma: f64,
}

impl IpmIterate {
    /// `υ₀ = 0`, `sᵢ = max(margin, θᵢ − Aᵢᵀυ₀)`, `Lᵢ = margin`.
    pub fn initial(problem: &QpProblem, init_margin: f64) -> Self {
        let v = Vector::zeros(problem.n());
        let av = problem.a().mul_vec(&v);
        let s: Vector = problem.theta().iter().zip(av.iter()).map(|(t, x)| (t - x).max(init_margin)).collect();
        let l = Vector::filled(problem.m(), init_margin);
        let mu = complementarity(&s, &l);
        IpmIterate { v, s, l, mu, sigma: 0.0 }
    }

    pub fn is_interior(&self) -> bool {
        self.s.iter().all(|&x| x > 0.0) && self.l.iter().all(|&x| x > 0.0)
    }
}

/// `μ = sᵀL / m`, zero when there are no rows.
pub fn complementarity(s: &Vector, l: &Vector) -> f64 {
    if s.dim() == 0 {
        0.0
    } else {
        s.dot(l) / s.dim() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::MaxIterations => "MaxIterations",
            SolveStatus::NumericalFailure => "NumericalFailure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Optimal" => Some(SolveStatus::Optimal),
            "MaxIterations" => Some(SolveStatus::MaxIterations),
            "NumericalFailure" => Some(SolveStatus::NumericalFailure),
            _ => None,
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub v_star: Vector,
    pub l_star: Vector,
    pub s_star: Vector,
    pub iterations: usize,
    pub status: SolveStatus,
    pub final_mu: f64,
    /// ∞-norm of the KKT residual with zero centering at the returned point.
    pub kkt_residual_norm: f64,
}

/// Search direction `(Δυ, Δs, ΔL)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub dv: Vector,
    pub ds: Vector,
    pub dl: Vector,
}

impl Direction {
    fn is_finite(&self) -> bool {
        self.dv.is_finite() && self.ds.is_finite() && self.dl.is_finite()
    }
}

/// Stacked residual `[Pυ + G + AᵀL; Aυ + s − θ; ΛSe − σμ e]`.
pub fn kkt_residual(problem: &QpProblem, it: &IpmIterate, sigma_mu: f64) -> Vector {
    let n = problem.n();
    let m = problem.m();
    let dual = problem.p().mul_vec(&it.v).add(problem.g()).add(&problem.a().tr_mul_vec(&it.l));
    let primal = problem.a().mul_vec(&it.v).add(&it.s).sub(problem.theta());
    let mut r = Vector::zeros(n + 2 * m);
    let out = r.as_mut_slice();
    out[..n].copy_from_slice(dual.as_slice());
    out[n..n + m].copy_from_slice(primal.as_slice());
    for i in 0..m {
        out[n + m + i] = it.l[i] * it.s[i] - sigma_mu;
    }
    r
}

/// Solves the Newton system
///
/// ```text
/// [ P  0  Aᵀ ] [Δυ]     [ Pυ + G + AᵀL                ]
/// [ A  I  0  ] [Δs] = − [ Aυ + s − θ                  ]
/// [ 0  Λ  S  ] [ΔL]     [ ΛSe (+ ΔΛᵃᶠᶠΔSᵃᶠᶠe) − σμ e   ]
/// ```
///
/// `corrector` carries `(Δs_aff, ΔL_aff)` from the predictor step.
pub fn newton_direction(
    problem: &QpProblem,
    it: &IpmIterate,
    sigma: f64,
    mu: f64,
    corrector: Option<(&Vector, &Vector)>,
) -> Result<Direction, QpError> {
    newton_direction_regularized(problem, it, sigma, mu, corrector, 0.0)
}

fn newton_direction_regularized(
    problem: &QpProblem,
    it: &IpmIterate,
    sigma: f64,
    mu: f64,
    corrector: Option<(&Vector, &Vector)>,
    regularization: f64,
) -> Result<Direction, QpError> {
    let n = problem.n();
    let m = problem.m();
    let dim = n + 2 * m;
    let (p, a) = (problem.p(), problem.a());

    let mut kkt = Matrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = p[(i, j)];
        }
    }
    for r in 0..m {
        for j in 0..n {
            let arj = a[(r, j)];
            kkt[(j, n + m + r)] = arj;
            kkt[(n + r, j)] = arj;
        }
        kkt[(n + r, n + r)] = 1.0;
        kkt[(n + m + r, n + r)] = it.l[r];
        kkt[(n + m + r, n + m + r)] = it.s[r];
    }
    if regularization != 0.0 {
        for i in 0..dim {
            kkt[(i, i)] += regularization;
        }
    }

    let mut rhs = kkt_residual(problem, it, sigma * mu);
    if let Some((ds_aff, dl_aff)) = corrector {
        for r in 0..m {
            rhs[n + m + r] += ds_aff[r] * dl_aff[r];
        }
    }
    let rhs = rhs.scaled(-1.0);

    let sol = lu_solve(&kkt, &rhs).map_err(QpError::SingularKkt)?;
    let sol = sol.as_slice();
    Ok(Direction {
        dv: Vector::from_slice(&sol[..n]),
        ds: Vector::from_slice(&sol[n..n + m]),
        dl: Vector::from_slice(&sol[n + m..]),
    })
}

/// Largest primal and dual steps in (0, 1] keeping `s + β Δs ≥ (1 − τ) s` and
/// `L + β ΔL ≥ (1 − τ) L`.
pub fn step_to_boundary(s: &Vector, l: &Vector, ds: &Vector, dl: &Vector, tau: f64) -> (f64, f64) {
    (max_step(s, ds, tau), max_step(l, dl, tau))
}

fn max_step(x: &Vector, dx: &Vector, tau: f64) -> f64 {
    x.iter().zip(dx.iter()).filter(|(_, d)| **d < 0.0).fold(1.0_f64, |beta, (xi, di)| beta.min(-tau * xi / di))
}

/// Runs the predictor-corrector method from the default starting point.
pub fn solve(problem: &QpProblem, cfg: &SolverConfig) -> QpSolution {
    solve_traced(problem, cfg, |_| {})
}

/// As [`solve`], calling `observe` on the starting point and on every accepted iterate.
pub fn solve_traced<F: FnMut(&IpmIterate)>(problem: &QpProblem, cfg: &SolverConfig, mut observe: F) -> QpSolution {
    let mut it = IpmIterate::initial(problem, cfg.init_margin);
    observe(&it);

    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    loop {
        it.mu = complementarity(&it.s, &it.l);
        let residual = norm_inf(kkt_residual(problem, &it, 0.0).as_slice());
        if it.mu < cfg.tol_mu && residual < cfg.tol_residual {
            status = SolveStatus::Optimal;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }

        // predictor
        let Some(affine) = direction_with_retry(problem, &it, 0.0, it.mu, None) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let (bp, bd) = step_to_boundary(&it.s, &it.l, &affine.ds, &affine.dl, 1.0);
        let beta_aff = bp.min(bd);
        let s_aff = it.s.axpy(beta_aff, &affine.ds);
        let l_aff = it.l.axpy(beta_aff, &affine.dl);
        let mu_aff = complementarity(&s_aff, &l_aff);
        it.sigma = if it.mu > 0.0 { libm::pow(mu_aff / it.mu, 3.0).min(1.0) } else { 0.0 };

        // corrector
        let Some(dir) = direction_with_retry(problem, &it, it.sigma, it.mu, Some((&affine.ds, &affine.dl))) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let (bp, bd) = step_to_boundary(&it.s, &it.l, &dir.ds, &dir.dl, cfg.tau);
        let beta = bp.min(bd);
        if beta < MIN_STEP {
            status = SolveStatus::NumericalFailure;
            break;
        }

        it.v = it.v.axpy(beta, &dir.dv);
        it.s = it.s.axpy(beta, &dir.ds);
        it.l = it.l.axpy(beta, &dir.dl);
        iterations += 1;
        if !it.is_interior() || !it.v.is_finite() {
            status = SolveStatus::NumericalFailure;
            break;
        }
        observe(&it);
    }

    it.mu = complementarity(&it.s, &it.l);
    let kkt_residual_norm = norm_inf(kkt_residual(problem, &it, 0.0).as_slice());
    QpSolution { v_star: it.v, l_star: it.l, s_star: it.s, iterations, status, final_mu: it.mu, kkt_residual_norm }
}

/// Solves the equivalent problem in `υ = D υ̃` with every constraint row
/// scaled to unit Euclidean norm, then maps `υ*`, `s*` and `L*` back.
///
/// `col_scale` holds the diagonal of `D`. Status and iteration count come from
/// the scaled solve; `final_mu` and `kkt_residual_norm` are recomputed on the
/// original problem.
pub fn solve_equilibrated(problem: &QpProblem, col_scale: &Vector, cfg: &SolverConfig) -> Result<QpSolution, QpError> {
    let (n, m) = (problem.n(), problem.m());
    if col_scale.dim() != n {
        return Err(QpError::DimensionMismatch { what: "col_scale", expected: n, found: col_scale.dim() });
    }
    if col_scale.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(QpError::NonFinite { what: "col_scale" });
    }
    let d = col_scale.as_slice();
    let (p, a) = (problem.p(), problem.a());
    let mut ps = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            ps[(i, j)] = d[i] * p[(i, j)] * d[j];
        }
    }
    let gs: Vector = problem.g().iter().zip(d).map(|(g, di)| g * di).collect();
    let mut row_norm = Vector::zeros(m);
    let mut as_ = Matrix::zeros(m, n);
    for r in 0..m {
        let norm = libm::sqrt((0..n).map(|j| (a[(r, j)] * d[j]) * (a[(r, j)] * d[j])).sum::<f64>());
        row_norm[r] = if norm > 0.0 { norm } else { 1.0 };
        for j in 0..n {
            as_[(r, j)] = a[(r, j)] * d[j] / row_norm[r];
        }
    }
    let ts: Vector = problem.theta().iter().zip(row_norm.iter()).map(|(t, rn)| t / rn).collect();
    let sol = solve(&QpProblem::new(ps, gs, as_, ts)?, cfg);

    let it = IpmIterate {
        v: sol.v_star.iter().zip(d).map(|(v, di)| v * di).collect(),
        s: sol.s_star.iter().zip(row_norm.iter()).map(|(s, rn)| s * rn).collect(),
        l: sol.l_star.iter().zip(row_norm.iter()).map(|(l, rn)| l / rn).collect(),
        mu: 0.0,
        sigma: 0.0,
    };
    let final_mu = complementarity(&it.s, &it.l);
    let kkt_residual_norm = norm_inf(kkt_residual(problem, &it, 0.0).as_slice());
    Ok(QpSolution {
        v_star: it.v,
        l_star: it.l,
        s_star: it.s,
        iterations: sol.iterations,
        status: sol.status,
        final_mu,
        kkt_residual_norm,
    })
}

fn direction_with_retry(
    problem: &QpProblem,
    it: &IpmIterate,
    sigma: f64,
    mu: f64,
    corrector: Option<(&Vector, &Vector)>,
) -> Option<Direction> {
    newton_direction(problem, it, sigma, mu, corrector)
        .or_else(|_| newton_direction_regularized(problem, it, sigma, mu, corrector, KKT_REGULARIZATION))
        .ok()
        .filter(Direction::is_finite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn scalar_problem(p: f64, g: f64, rows: &[(f64, f64)]) -> QpProblem {
        let a: alloc::vec::Vec<[f64; 1]> = rows.iter().map(|r| [r.0]).collect();
        let a = if rows.is_empty() { Matrix::zeros(0, 1) } else { Matrix::from_rows(&a).unwrap() };
        QpProblem::new(Matrix::from_diagonal(&[p]), Vector::from_slice(&[g]), a, rows.iter().map(|r| r.1).collect())
            .unwrap()
    }

    fn iterate(v: &[f64], s: &[f64], l: &[f64]) -> IpmIterate {
        IpmIterate { v: Vector::from_slice(v), s: Vector::from_slice(s), l: Vector::from_slice(l), mu: 0.0, sigma: 0.0 }
    }

    #[test]
    fn residual_hand_value() {
        let p = scalar_problem(1.0, 0.0, &[(1.0, 1.0)]);
        let r = kkt_residual(&p, &iterate(&[0.0], &[1.0], &[1.0]), 1.0);
        assert_eq!(r.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn residual_vanishes_at_centered_point() {
        // υ = 0.5, s = 0.5, L = 1.5:  P υ + G + L = 0.5 − 2 + 1.5 = 0
        let p = scalar_problem(1.0, -2.0, &[(1.0, 1.0)]);
        let it = iterate(&[0.5], &[0.5], &[1.5]);
        let r = kkt_residual(&p, &it, 0.75);
        assert!(r.norm_inf() < 1e-15);
        let d = newton_direction(&p, &it, 1.0, 0.75, None).unwrap();
        assert!(d.dv.norm_inf() < 1e-15 && d.ds.norm_inf() < 1e-15 && d.dl.norm_inf() < 1e-15);
    }

    #[test]
    fn residual_moves_only_linear_blocks_with_v() {
        let p = scalar_problem(3.0, 1.0, &[(2.0, 1.0), (-1.0, 4.0)]);
        let it = iterate(&[0.2], &[1.0, 2.0], &[0.5, 0.25]);
        let mut moved = it.clone();
        moved.v[0] += 1e-3;
        let r0 = kkt_residual(&p, &it, 0.1);
        let r1 = kkt_residual(&p, &moved, 0.1);
        assert!((r1[0] - r0[0] - 3.0e-3).abs() < 1e-15);
        assert!((r1[1] - r0[1] - 2.0e-3).abs() < 1e-15);
        assert!((r1[2] - r0[2] + 1.0e-3).abs() < 1e-15);
        assert_eq!(r1[3], r0[3]);
        assert_eq!(r1[4], r0[4]);
    }

    #[test]
    fn newton_hand_solved_system() {
        // dv + dl = −1, dv + ds = 0, ds + dl = −1  =>  (0, 0, −1)
        let p = scalar_problem(1.0, 0.0, &[(1.0, 1.0)]);
        let d = newton_direction(&p, &iterate(&[0.0], &[1.0], &[1.0]), 0.0, 1.0, None).unwrap();
        assert!(d.dv[0].abs() < 1e-15);
        assert!(d.ds[0].abs() < 1e-15);
        assert!((d.dl[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn corrector_shifts_third_block() {
        let p = scalar_problem(1.0, 0.0, &[(1.0, 1.0)]);
        let it = iterate(&[0.0], &[1.0], &[1.0]);
        let plain = newton_direction(&p, &it, 0.0, 1.0, None).unwrap();
        let ds = Vector::from_slice(&[0.5]);
        let dl = Vector::from_slice(&[-0.5]);
        let corr = newton_direction(&p, &it, 0.0, 1.0, Some((&ds, &dl))).unwrap();
        // third rhs becomes −(1 − 0.25): dv + dl = −1, dv + ds = 0, ds + dl = −0.75
        assert!((corr.dv[0] + 0.125).abs() < 1e-14);
        assert!((corr.dl[0] + 0.875).abs() < 1e-14);
        assert_ne!(plain, corr);
    }

    #[test]
    fn boundary_steps() {
        let one = Vector::from_slice(&[1.0]);
        let (bp, bd) = step_to_boundary(&one, &one, &Vector::from_slice(&[0.3]), &Vector::from_slice(&[0.0]), 0.995);
        assert_eq!((bp, bd), (1.0, 1.0));
        let (bp, _) = step_to_boundary(&one, &one, &Vector::from_slice(&[-2.0]), &one, 0.995);
        assert!((bp - 0.4975).abs() < 1e-15);
        let s = Vector::from_slice(&[1.0, 1.0]);
        let (bp, bd) =
            step_to_boundary(&s, &s, &Vector::from_slice(&[-1.0, -4.0]), &Vector::from_slice(&[-0.5, 0.0]), 1.0);
        assert_eq!(bp, 0.25);
        assert_eq!(bd, 1.0);
    }

    #[test]
    fn interior_minimum() {
        let p = scalar_problem(1.0, 0.0, &[(1.0, 1.0), (-1.0, 1.0)]);
        let sol = solve(&p, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.v_star[0].abs() < 1e-8);
        assert!(sol.l_star.norm_inf() < 1e-8);
    }

    #[test]
    fn active_upper_bound() {
        let p = scalar_problem(1.0, -2.0, &[(1.0, 1.0)]);
        let sol = solve(&p, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.v_star[0] - 1.0).abs() < 1e-8);
        assert!((sol.l_star[0] - 1.0).abs() < 1e-8);
        assert!(sol.final_mu < 1e-9);
        assert!(sol.kkt_residual_norm < 1e-7);
    }

    #[test]
    fn unconstrained_problem() {
        let p = scalar_problem(2.0, -4.0, &[]);
        let sol = solve(&p, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.v_star[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_problem_is_not_optimal() {
        // υ ≤ −1 and −υ ≤ −1 (υ ≥ 1)
        let p = scalar_problem(1.0, 0.0, &[(1.0, -1.0), (-1.0, -1.0)]);
        let sol = solve(&p, &SolverConfig::default());
        assert_ne!(sol.status, SolveStatus::Optimal);
    }

    #[test]
    fn iterates_stay_interior() {
        let p = QpProblem::new(
            Matrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]).unwrap(),
            Vector::from_slice(&[-3.0, 1.0]),
            Matrix::from_rows(&[[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, -2.0]]).unwrap(),
            Vector::from_slice(&[1.0, 0.0, 0.0, 0.5]),
        )
        .unwrap();
        let mut count = 0;
        let sol = solve_traced(&p, &SolverConfig::default(), |it| {
            assert!(it.is_interior());
            count += 1;
        });
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(count, sol.iterations + 1);
    }

    #[test]
    fn validation_errors() {
        let g = Vector::from_slice(&[0.0, 0.0]);
        let a = Matrix::zeros(0, 2);
        let th = Vector::zeros(0);
        let asym = Matrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]).unwrap();
        assert_eq!(QpProblem::new(asym, g.clone(), a.clone(), th.clone()), Err(QpError::NotSymmetric));
        let indef = Matrix::from_diagonal(&[1.0, -1.0]);
        assert_eq!(QpProblem::new(indef, g.clone(), a.clone(), th.clone()), Err(QpError::NotPositiveDefinite));
        let bad = Matrix::from_diagonal(&[1.0, f64::NAN]);
        assert!(matches!(QpProblem::new(bad, g.clone(), a.clone(), th), Err(QpError::NonFinite { what: "P" })));
        let a1 = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        assert!(matches!(
            QpProblem::new(Matrix::identity(2), g, a1, Vector::from(vec![1.0, 2.0])),
            Err(QpError::DimensionMismatch { what: "theta", .. })
        ));
    }

    #[test]
    fn equilibrated_matches_plain_solve() {
        let p = Matrix::from_rows(&[[4.0, 1.0], [1.0, 2.0]]).unwrap();
        let g = Vector::from_slice(&[1.0, -3.0]);
        let a = Matrix::from_rows(&[[1.0, 1.0], [-1.0, 0.5], [0.0, -2.0]]).unwrap();
        let qp = QpProblem::new(p, g, a, Vector::from_slice(&[1.0, 2.0, 3.0])).unwrap();
        let plain = solve(&qp, &SolverConfig::default());
        let eq = solve_equilibrated(&qp, &Vector::from_slice(&[10.0, 0.1]), &SolverConfig::default()).unwrap();
        assert_eq!(eq.status, SolveStatus::Optimal);
        assert!(eq.v_star.sub(&plain.v_star).norm_inf() < 1e-7);
        assert!(eq.l_star.sub(&plain.l_star).norm_inf() < 1e-6);
        assert!(eq.kkt_residual_norm < 1e-6);
        assert!(solve_equilibrated(&qp, &Vector::from_slice(&[1.0]), &SolverConfig::default()).is_err());
        assert!(solve_equilibrated(&qp, &Vector::from_slice(&[1.0, 0.0]), &SolverConfig::default()).is_err());
    }
}
