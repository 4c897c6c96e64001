//! Barrier and Lyapunov constraint rows for control-affine systems
//! `ζ̇ = F̂(ζ) + Ĝ(ζ) υ`.
//!
//! Every row is expressed over the stacked decision variable `[υ; δ]`, where
//! `δ` is the CLF relaxation, in the form `aᵀ[υ; δ] ≤ b`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{Matrix, Vector};

/// Below this `‖ζ + d‖` the barrier gradient is undefined.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum CbfError {
    /// `‖ζ + d‖` vanishes, so the barrier gradient is undefined.
    DegenerateState,
    RelativeDegreeMismatch {
        expected: usize,
        reason: &'static str,
    },
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for CbfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CbfError::DegenerateState => f.write_str("state is degenerate: ‖ζ + d‖ = 0"),
            CbfError::RelativeDegreeMismatch { expected, reason } => {
                write!(f, "relative degree {expected} required: {reason}")
            }
            CbfError::InvalidParameter { name, reason } => write!(f, "invalid parameter `{name}`: {reason}"),
            CbfError::DimensionMismatch { what, expected, found } => {
                write!(f, "{what}: expected dimension {expected}, found {found}")
            }
        }
    }
}

impl core::error::Error for CbfError {}

/// Control-affine dynamics `ζ̇ = F̂(ζ) + Ĝ(ζ) υ`.
pub trait AffineSystem {
    /// `n`
    fn state_dim(&self) -> usize;
    /// `q`
    fn input_dim(&self) -> usize;
    /// `F̂(ζ)`, an n-vector.
    fn drift(&self, state: &Vector) -> Vector;
    /// `Ĝ(ζ)`, an n×q matrix.
    fn actuation(&self, state: &Vector) -> Matrix;
    /// `∂F̂/∂ζ`, an n×n matrix. Only needed by second-order barriers.
    fn drift_jacobian(&self, state: &Vector) -> Matrix;

    /// Closed-loop vector field for a fixed input.
    fn vector_field(&self, state: &Vector, input: &Vector) -> Vector {
        self.drift(state).add(&self.actuation(state).mul_vec(input))
    }
}

/// A state constraint `θ(ζ) ≥ 0`.
pub trait SafetyFunction {
    fn value(&self, state: &Vector) -> f64;
    fn gradient(&self, state: &Vector) -> Vector;
    fn hessian(&self, state: &Vector) -> Matrix;
    fn relative_degree(&self) -> usize;
}

/// `L_F̂ h = ∇hᵀ F̂`
pub fn lie_drift(gradient: &Vector, sys: &impl AffineSystem, state: &Vector) -> f64 {
    gradient.dot(&sys.drift(state))
}

/// `L_Ĝ h = ∇hᵀ Ĝ`, one entry per input.
pub fn lie_actuation(gradient: &Vector, sys: &impl AffineSystem, state: &Vector) -> Vector {
    sys.actuation(state).tr_mul_vec(gradient)
}

/// Constants of the nonlinear barrier and its linear class-K gain `α(Θ) = KΘ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NcbfParams {
    pub delta: f64,
    pub r: f64,
    pub d: Vector,
    pub k: f64,
}

impl NcbfParams {
    pub fn new(delta: f64, r: f64, d: Vector, k: f64) -> Result<Self, CbfError> {
        positive("delta", delta)?;
        positive("r", r)?;
        positive("K", k)?;
        if !d.is_finite() {
            return Err(CbfError::InvalidParameter { name: "d", reason: "must be finite" });
        }
        Ok(NcbfParams { delta, r, d, k })
    }

    /// `α(Θ) = KΘ`
    pub fn alpha(&self, big_theta: f64) -> f64 {
        self.k * big_theta
    }

    /// `‖ζ + d‖`
    pub fn shifted_norm(&self, state: &Vector) -> f64 {
        state.add(&self.d).norm2()
    }
}

fn positive(name: &'static str, x: f64) -> Result<(), CbfError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CbfError::InvalidParameter { name, reason: "must be finite and strictly positive" })
    }
}

/// Quadratic CLF `V = (ζ − ζ_d)ᵀ Z (ζ − ζ_d)` with decay rate `χ₃` and
/// relaxation weight `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClfParams {
    pub z: Matrix,
    pub chi3: f64,
    pub target: Vector,
    pub p: f64,
    pub chi1: f64,
    pub chi2: f64,
}

impl ClfParams {
    /// Requires `Z` symmetric positive definite; `χ₁`, `χ₂` are its extreme eigenvalues.
    pub fn new(z: Matrix, chi3: f64, target: Vector, p: f64) -> Result<Self, CbfError> {
        let clf = Self::semidefinite(z, chi3, target, p)?;
        if clf.z.cholesky().is_none() {
            return Err(CbfError::InvalidParameter { name: "Z", reason: "must be positive definite" });
        }
        Ok(clf)
    }

    /// Like [`ClfParams::new`] but accepts a positive semidefinite `Z`, for
    /// CLFs that only track part of the state (the ACC speed objective).
    pub fn semidefinite(z: Matrix, chi3: f64, target: Vector, p: f64) -> Result<Self, CbfError> {
        positive("chi3", chi3)?;
        positive("p", p)?;
        if z.rows() != target.dim() || z.cols() != target.dim() {
            return Err(CbfError::DimensionMismatch { what: "Z", expected: target.dim(), found: z.rows() });
        }
        if !z.is_symmetric(1e-12) {
            return Err(CbfError::InvalidParameter { name: "Z", reason: "must be symmetric" });
        }
        let eig = z.symmetric_eigenvalues();
        let (lo, hi) = (eig[0], eig[eig.dim() - 1]);
        if lo < -1e-12 * (1.0 + hi.abs()) {
            return Err(CbfError::InvalidParameter { name: "Z", reason: "must be positive semidefinite" });
        }
        Ok(ClfParams { z, chi3, target, p, chi1: lo.max(0.0), chi2: hi })
    }

    /// Overrides the quadratic bounds; requires `χ₁ ≤ λ_min(Z)` and `χ₂ ≥ λ_max(Z)`.
    pub fn with_bounds(mut self, chi1: f64, chi2: f64) -> Result<Self, CbfError> {
        let eig = self.z.symmetric_eigenvalues();
        let tol = 1e-12 * (1.0 + eig[eig.dim() - 1].abs());
        if chi1 > eig[0] + tol {
            return Err(CbfError::InvalidParameter { name: "chi1", reason: "exceeds λ_min(Z)" });
        }
        if chi2 < eig[eig.dim() - 1] - tol {
            return Err(CbfError::InvalidParameter { name: "chi2", reason: "below λ_max(Z)" });
        }
        self.chi1 = chi1;
        self.chi2 = chi2;
        Ok(self)
    }
}

/// Componentwise input box `υ_min ≤ υ ≤ υ_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBounds {
    pub v_min: Vector,
    pub v_max: Vector,
}

impl ControlBounds {
    pub fn new(v_min: Vector, v_max: Vector) -> Result<Self, CbfError> {
        if v_min.dim() != v_max.dim() {
            return Err(CbfError::DimensionMismatch { what: "v_max", expected: v_min.dim(), found: v_max.dim() });
        }
        if v_min.iter().zip(v_max.iter()).any(|(lo, hi)| !(lo <= hi)) {
            return Err(CbfError::InvalidParameter { name: "v_min", reason: "must not exceed v_max" });
        }
        Ok(ControlBounds { v_min, v_max })
    }

    pub fn dim(&self) -> usize {
        self.v_min.dim()
    }

    pub fn contains(&self, input: &Vector) -> bool {
        input.iter().zip(self.v_min.iter().zip(self.v_max.iter())).all(|(u, (lo, hi))| lo <= u && u <= hi)
    }
}

/// `aᵀ [υ; δ] ≤ b`
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub a: Vector,
    pub b: f64,
    pub label: String,
}

impl ConstraintRow {
    pub fn new(a: Vector, b: f64, label: impl Into<String>) -> Self {
        ConstraintRow { a, b, label: label.into() }
    }

    /// `b − aᵀx`; non-negative when the row holds.
    pub fn slack(&self, x: &Vector) -> f64 {
        self.b - self.a.dot(x)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }
}

/// `Θ = exp(θ / (‖ζ + d‖ + r) − Δ) − 1`
pub fn ncbf_value(theta: f64, state: &Vector, prm: &NcbfParams) -> f64 {
    let den = prm.shifted_norm(state) + prm.r;
    libm::expm1(theta / den - prm.delta)
}

/// `θ` at which `Θ = 0` for the given state, `Δ(‖ζ + d‖ + r)`.
pub fn ncbf_threshold(state: &Vector, prm: &NcbfParams) -> f64 {
    prm.delta * (prm.shifted_norm(state) + prm.r)
}

/// True once `θ` has dropped below half the `Θ = 0` threshold, where the
/// barrier loses control authority.
pub fn near_degenerate(theta: f64, state: &Vector, prm: &NcbfParams) -> bool {
    theta < 0.5 * ncbf_threshold(state, prm)
}

/// Analytic barrier gradient
///
/// ```text
/// ∂Θ/∂ζ = (Θ + 1) / (‖w‖ + r)² · [ (‖w‖ + r) ∇θ − θ w / ‖w‖ ],   w = ζ + d
/// ```
pub fn ncbf_gradient(sf: &impl SafetyFunction, state: &Vector, prm: &NcbfParams) -> Result<Vector, CbfError> {
    if state.dim() != prm.d.dim() {
        return Err(CbfError::DimensionMismatch { what: "state", expected: prm.d.dim(), found: state.dim() });
    }
    let w = state.add(&prm.d);
    let norm = w.norm2();
    if norm < DEGENERATE_NORM {
        return Err(CbfError::DegenerateState);
    }
    let theta = sf.value(state);
    let den = norm + prm.r;
    let scale = (ncbf_value(theta, state, prm) + 1.0) / (den * den);
    let grad = sf.gradient(state).scaled(den).axpy(-theta / norm, &w);
    Ok(grad.scaled(scale))
}

/// `(L_F̂ Θ, L_Ĝ Θ)` at `state`.
pub fn ncbf_lie_derivatives(
    sys: &impl AffineSystem,
    sf: &impl SafetyFunction,
    state: &Vector,
    prm: &NcbfParams,
) -> Result<(f64, Vector), CbfError> {
    let grad = ncbf_gradient(sf, state, prm)?;
    Ok((lie_drift(&grad, sys, state), lie_actuation(&grad, sys, state)))
}

/// `L_F̂Θ + L_ĜΘ υ + KΘ ≥ 0` as `[−L_ĜΘ, 0]·[υ; δ] ≤ L_F̂Θ + KΘ`.
pub fn ncbf_constraint_row(
    sys: &impl AffineSystem,
    sf: &impl SafetyFunction,
    state: &Vector,
    prm: &NcbfParams,
) -> Result<ConstraintRow, CbfError> {
    let (lf, lg) = ncbf_lie_derivatives(sys, sf, state, prm)?;
    let big_theta = ncbf_value(sf.value(state), state, prm);
    Ok(ConstraintRow::new(stacked(&lg.scaled(-1.0), 0.0), lf + prm.alpha(big_theta), "ncbf"))
}

pub fn clf_value(clf: &ClfParams, state: &Vector) -> f64 {
    clf.z.quad_form(&state.sub(&clf.target))
}

/// `∇V = (Z + Zᵀ)(ζ − ζ_d)`
pub fn clf_gradient(clf: &ClfParams, state: &Vector) -> Vector {
    let e = state.sub(&clf.target);
    clf.z.mul_vec(&e).add(&clf.z.tr_mul_vec(&e))
}

/// `L_F̂V + L_ĜV υ + χ₃V ≤ δ` as `[L_ĜV, −1]·[υ; δ] ≤ −L_F̂V − χ₃V`.
pub fn clf_constraint_row(sys: &impl AffineSystem, clf: &ClfParams, state: &Vector) -> ConstraintRow {
    let grad = clf_gradient(clf, state);
    let lf = lie_drift(&grad, sys, state);
    let lg = lie_actuation(&grad, sys, state);
    ConstraintRow::new(stacked(&lg, -1.0), -lf - clf.chi3 * clf_value(clf, state), "clf")
}

/// Plain barrier `L_F̂θ + L_Ĝθ υ + α θ ≥ 0` for a relative-degree-one `θ`.
pub fn rd1_cbf_row(
    sf: &impl SafetyFunction,
    sys: &impl AffineSystem,
    state: &Vector,
    alpha_gain: f64,
) -> Result<ConstraintRow, CbfError> {
    if sf.relative_degree() != 1 {
        return Err(CbfError::RelativeDegreeMismatch { expected: 1, reason: "declared relative degree differs" });
    }
    let grad = sf.gradient(state);
    let lg = lie_actuation(&grad, sys, state);
    if lg.iter().all(|x| *x == 0.0) {
        return Err(CbfError::RelativeDegreeMismatch { expected: 1, reason: "L_G θ vanishes at this state" });
    }
    let lf = lie_drift(&grad, sys, state);
    Ok(ConstraintRow::new(stacked(&lg.scaled(-1.0), 0.0), lf + alpha_gain * sf.value(state), "cbf"))
}

/// Second-order barrier with linear class-K gains:
///
/// ```text
/// ψ₀ = θ,  ψ₁ = ψ̇₀ + k₁ψ₀,  ψ̇₁ + k₂ψ₁ ≥ 0
/// ```
///
/// which, with `L_Ĝθ = 0`, reads
/// `L_F̂²θ + L_ĜL_F̂θ υ + (k₁ + k₂) L_F̂θ + k₁k₂ θ ≥ 0`.
pub fn hocbf_constraint_row(
    sys: &impl AffineSystem,
    sf: &impl SafetyFunction,
    state: &Vector,
    gains: (f64, f64),
) -> Result<ConstraintRow, CbfError> {
    if sf.relative_degree() != 2 {
        return Err(CbfError::RelativeDegreeMismatch { expected: 2, reason: "declared relative degree differs" });
    }
    let (k1, k2) = gains;
    positive("k1", k1)?;
    positive("k2", k2)?;
    let theta = sf.value(state);
    let grad = sf.gradient(state);
    let drift = sys.drift(state);
    let lf = grad.dot(&drift);
    // ∇(L_F̂θ) = H_θ F̂ + (∂F̂/∂ζ)ᵀ ∇θ
    let grad_lf = sf.hessian(state).mul_vec(&drift).add(&sys.drift_jacobian(state).tr_mul_vec(&grad));
    let lf2 = grad_lf.dot(&drift);
    let lglf = lie_actuation(&grad_lf, sys, state);
    let b = lf2 + (k1 + k2) * lf + k1 * k2 * theta;
    Ok(ConstraintRow::new(stacked(&lglf.scaled(-1.0), 0.0), b, "hocbf"))
}

/// `uⱼ ≤ υ_max,ⱼ` and `−uⱼ ≤ −υ_min,ⱼ` for every input, with zero `δ` coefficient.
pub fn input_bound_rows(bounds: &ControlBounds) -> Vec<ConstraintRow> {
    let q = bounds.dim();
    let mut rows = Vec::with_capacity(2 * q);
    for j in 0..q {
        let mut up = Vector::zeros(q + 1);
        up[j] = 1.0;
        rows.push(ConstraintRow::new(up, bounds.v_max[j], format!("u{j}_max")));
        let mut lo = Vector::zeros(q + 1);
        lo[j] = -1.0;
        rows.push(ConstraintRow::new(lo, -bounds.v_min[j], format!("u{j}_min")));
    }
    rows
}

fn stacked(input_coeffs: &Vector, relaxation: f64) -> Vector {
    input_coeffs.iter().copied().chain(core::iter::once(relaxation)).collect()
}
