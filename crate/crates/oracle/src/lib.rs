//! Reference computations that share no code with `ncbf-core`.
//!
//! Everything takes plain slices so tests can feed the same data to both sides.

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

/// Minimizer of a convex QP found by enumerating active sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSetSolution {
    pub x: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub objective: f64,
    pub active: Vec<usize>,
}

/// `min ½xᵀPx + gᵀx  s.t.  Ax ≤ b` by trying every active set of size `≤ n`,
/// solving its equality-constrained KKT system and keeping the best point that
/// is primal feasible with non-negative multipliers.
///
/// `p` is `n×n` and `a` is `m×n`, both row-major. Returns `None` when no
/// candidate qualifies (the QP is infeasible or the tolerance is too tight).
pub fn active_set_qp(p: &[f64], g: &[f64], a: &[f64], b: &[f64], feas_tol: f64) -> Option<ActiveSetSolution> {
    let n = g.len();
    let m = b.len();
    assert_eq!(p.len(), n * n);
    assert_eq!(a.len(), m * n);
    assert!(m < usize::BITS as usize);
    let pm = DMatrix::from_row_slice(n, n, p);
    let am = DMatrix::from_row_slice(m, n, a);
    let objective = |x: &DVector<f64>| 0.5 * x.dot(&(&pm * x)) + x.dot(&DVector::from_column_slice(g));
    let mut best: Option<ActiveSetSolution> = None;
    for mask in 0u64..(1u64 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let k = active.len();
        if k > n {
            continue;
        }
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&pm);
        for j in 0..n {
            rhs[j] = -g[j];
        }
        for (r, &i) in active.iter().enumerate() {
            for j in 0..n {
                kkt[(n + r, j)] = am[(i, j)];
                kkt[(j, n + r)] = am[(i, j)];
            }
            rhs[n + r] = b[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        if !sol.iter().all(|v| v.is_finite()) {
            continue;
        }
        let x = sol.rows(0, n).into_owned();
        let lam = sol.rows(n, k);
        let scale = 1.0 + lam.amax();
        if lam.iter().any(|&l| l < -feas_tol * scale) {
            continue;
        }
        let ax = &am * &x;
        if (0..m).any(|i| ax[i] - b[i] > feas_tol * (1.0 + b[i].abs())) {
            continue;
        }
        let obj = objective(&x);
        if best.as_ref().is_none_or(|bst| obj < bst.objective) {
            let mut multipliers = vec![0.0; m];
            for (r, &i) in active.iter().enumerate() {
                multipliers[i] = lam[r].max(0.0);
            }
            best = Some(ActiveSetSolution { x: x.iter().copied().collect(), multipliers, objective: obj, active });
        }
    }
    best
}

/// Whether `{x : Ax ≤ b}` is non-empty, decided by the same enumeration on
/// the projection problem `min ½‖x‖²`.
pub fn polytope_nonempty(a: &[f64], b: &[f64], n: usize, feas_tol: f64) -> bool {
    let mut eye = vec![0.0; n * n];
    for i in 0..n {
        eye[i * n + i] = 1.0;
    }
    active_set_qp(&eye, &vec![0.0; n], a, b, feas_tol).is_some()
}

/// Central-difference gradient with per-coordinate step `h·max(1, |xᵢ|)`.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            xp[i] = x[i] + step;
            let fp = f(&xp);
            xp[i] = x[i] - step;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

/// Root of `f` in `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "root not bracketed");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm <= 0.0) == (flo <= 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gap `z` at which the barrier `exp((z − a₀)/(‖(v + d₁, z + d₂)‖ + r) − Δ) − 1`
/// vanishes for speed `v`, i.e. the root of `z − a₀ = Δ(‖(v + d₁, z + d₂)‖ + r)`.
pub fn barrier_zero_gap(v: f64, a0: f64, delta: f64, r: f64, d: (f64, f64)) -> f64 {
    let f = |z: f64| z - a0 - delta * ((v + d.0).hypot(z + d.1) + r);
    bisect(f, a0, a0 + 1e4, 1e-12)
}

/// A strictly convex QP whose feasible set contains `interior` with slack.
#[derive(Debug, Clone)]
pub struct RandomQp {
    pub n: usize,
    pub m: usize,
    pub p: Vec<f64>,
    pub g: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub interior: Vec<f64>,
}

/// `count` reproducible problems with `n ≤ max_n`, `m ≤ max_m`.
///
/// `P = LLᵀ + 0.1 I`, entries of `L`, `A` uniform in `[−1, 1]`, `g` in
/// `[−5, 5]`, and `b = A x₀ + s` with `x₀ ∈ [−1, 1]ⁿ`, `s ∈ [0.05, 2]ᵐ`.
pub fn random_feasible_qps(count: usize, max_n: usize, max_m: usize, seed: u64) -> Vec<RandomQp> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=max_n);
            let m = rng.random_range(0..=max_m);
            let l: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let mut p = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    p[i * n + j] = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
                }
                p[i * n + i] += 0.1;
            }
            let g: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..=5.0)).collect();
            let a: Vec<f64> = (0..m * n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let interior: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let b = (0..m)
                .map(|i| {
                    let ax: f64 = (0..n).map(|j| a[i * n + j] * interior[j]).sum();
                    ax + rng.random_range(0.05..=2.0)
                })
                .collect();
            RandomQp { n, m, p, g, a, b, interior }
        })
        .collect()
}

/// Uniform samples in a box, reproducible from `seed`.
pub fn uniform_points(count: usize, lo: &[f64], hi: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| lo.iter().zip(hi).map(|(l, h)| rng.random_range(*l..=*h)).collect()).collect()
}

/// Symmetric eigenvalues in ascending order.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut ev: Vec<f64> = DMatrix::from_row_slice(n, n, a).symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_constrained_quadratic() {
        // min ½(x² + y²) − 2x − 2y  s.t. x ≤ 1, y ≤ 3
        let s = active_set_qp(&[1.0, 0.0, 0.0, 1.0], &[-2.0, -2.0], &[1.0, 0.0, 0.0, 1.0], &[1.0, 3.0], 1e-9).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 2.0).abs() < 1e-12);
        assert_eq!(s.active, vec![0]);
        assert!((s.multipliers[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_returns_none() {
        assert!(active_set_qp(&[1.0], &[0.0], &[1.0, -1.0], &[-1.0, -1.0], 1e-9).is_none());
        assert!(!polytope_nonempty(&[1.0, -1.0], &[-1.0, -1.0], 1, 1e-9));
        assert!(polytope_nonempty(&[1.0, -1.0], &[1.0, 1.0], 1, 1e-9));
    }

    #[test]
    fn gradient_of_quadratic() {
        let g = central_gradient(|x| x[0] * x[0] + 3.0 * x[0] * x[1], &[2.0, -1.0], 1e-6);
        assert!((g[0] - 1.0).abs() < 1e-6 && (g[1] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn bisection_sqrt2() {
        assert!((bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14) - std::f64::consts::SQRT_2).abs() < 1e-13);
    }

    #[test]
    fn random_qps_contain_interior_point() {
        for qp in random_feasible_qps(50, 5, 12, 7) {
            for i in 0..qp.m {
                let ax: f64 = (0..qp.n).map(|j| qp.a[i * qp.n + j] * qp.interior[j]).sum();
                assert!(ax < qp.b[i]);
            }
            assert!(active_set_qp(&qp.p, &qp.g, &qp.a, &qp.b, 1e-9).is_some());
        }
    }

    #[test]
    fn eigen_2x2() {
        let ev = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }
}
