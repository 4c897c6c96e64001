//! Pointwise feasibility of the barrier row against box input limits, and the
//! a-posteriori tracking certificate for the relaxed CLF.

use core::fmt;

use crate::cbf_clf::{
    lie_drift, ncbf_value, AffineSystem, CbfError, ControlBounds, NcbfParams, SafetyFunction, DEGENERATE_NORM,
};
use crate::linalg::Vector;

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityError {
    PreconditionViolated { reason: &'static str },
    Cbf(CbfError),
}

impl fmt::Display for FeasibilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibilityError::PreconditionViolated { reason } => write!(f, "precondition violated: {reason}"),
            FeasibilityError::Cbf(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for FeasibilityError {}

impl From<CbfError> for FeasibilityError {
    fn from(e: CbfError) -> Self {
        FeasibilityError::Cbf(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub gd: Vector,
    pub theta: f64,
    pub big_theta: f64,
    pub lhs: f64,
    pub alpha_theta: f64,
    pub satisfied: bool,
    pub y_value: f64,
    /// `α(Θ) − lhs`
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingBoundReport {
    /// Largest sampled `V̇ + χ₃V`.
    pub empirical_m: f64,
    pub chi3: f64,
    pub v0: f64,
    pub epsilon: f64,
    /// Largest `V(t) − bound(t)` over the samples.
    pub max_excess: f64,
    pub tolerance: f64,
    pub violated_at: Option<f64>,
}

impl TrackingBoundReport {
    pub fn holds(&self) -> bool {
        self.violated_at.is_none()
    }
}

/// `G_d(ζ) = (ζ + d)ᵀ Ĝ(ζ)`
pub fn gd(sys: &impl AffineSystem, state: &Vector, d: &Vector) -> Vector {
    sys.actuation(state).tr_mul_vec(&state.add(d))
}

/// Shared terms of the condition and of `Y`.
struct Terms {
    gd: Vector,
    theta: f64,
    big_theta: f64,
    norm: f64,
    den: f64,
    /// `|G_d| υ_min + (ζ + d)ᵀ F̂`
    bracket: f64,
    lf_theta: f64,
}

fn terms(
    sys: &impl AffineSystem,
    sf: &impl SafetyFunction,
    state: &Vector,
    prm: &NcbfParams,
    bounds: &ControlBounds,
) -> Result<Terms, FeasibilityError> {
    if bounds.dim() != sys.input_dim() {
        return Err(
            CbfError::DimensionMismatch { what: "bounds", expected: sys.input_dim(), found: bounds.dim() }.into()
        );
    }
    let theta = sf.value(state);
    let big_theta = ncbf_value(theta, state, prm);
    if !(theta > 0.0) {
        return Err(FeasibilityError::PreconditionViolated { reason: "θ must be positive" });
    }
    if !(big_theta > 0.0) {
        return Err(FeasibilityError::PreconditionViolated { reason: "Θ must be positive" });
    }
    let w = state.add(&prm.d);
    let norm = w.norm2();
    if norm < DEGENERATE_NORM {
        return Err(CbfError::DegenerateState.into());
    }
    let gd = gd(sys, state, &prm.d);
    let abs_gd_vmin: f64 = gd.iter().zip(bounds.v_min.iter()).map(|(g, lo)| g.abs() * lo).sum();
    let bracket = abs_gd_vmin + w.dot(&sys.drift(state));
    let lf_theta = lie_drift(&sf.gradient(state), sys, state);
    Ok(Terms { gd, theta, big_theta, norm, den: norm + prm.r, bracket, lf_theta })
}

/// Necessary and sufficient condition for the barrier row to be compatible
/// with the input box, for `θ` with `L_Ĝθ = 0`:
///
/// ```text
/// (Θ+1)θ / ((‖w‖+r)²‖w‖) · [ |G_d| υ_min + wᵀF̂ − (‖w‖+r)‖w‖ L_F̂θ / θ ] ≤ KΘ,   w = ζ + d
/// ```
///
/// Asymmetric boxes should go through [`symmetrize_bounds`] first.
pub fn theorem_condition(
    sys: &impl AffineSystem,
    sf: &impl SafetyFunction,
    state: &Vector,
    prm: &NcbfParams,
    bounds: &ControlBounds,
) -> Result<FeasibilityReport, FeasibilityError> {
    let t = terms(sys, sf, state, prm, bounds)?;
    let lhs =
        (t.big_theta + 1.0) * t.theta / (t.den * t.den * t.norm) * (t.bracket - t.den * t.norm * t.lf_theta / t.theta);
    let alpha_theta = prm.alpha(t.big_theta);
    let y_value = y_from_terms(&t);
    Ok(FeasibilityReport {
        gd: t.gd,
        theta: t.theta,
        big_theta: t.big_theta,
        lhs,
        alpha_theta,
        satisfied: lhs <= alpha_theta,
        y_value,
        margin: alpha_theta - lhs,
    })
}

fn y_from_terms(t: &Terms) -> f64 {
    (t.bracket * t.theta - t.den * t.norm * t.lf_theta) / (t.big_theta * t.den * t.den * t.norm)
}

/// ```text
/// Y(ζ) = ([|G_d| υ_min + wᵀF̂] θ − (‖w‖+r)‖w‖ L_F̂θ) / (Θ (‖w‖+r)² ‖w‖)
/// ```
pub fn y_function(
    sys: &impl AffineSystem,
    sf: &impl SafetyFunction,
    state: &Vector,
    prm: &NcbfParams,
    bounds: &ControlBounds,
) -> Result<f64, FeasibilityError> {
    terms(sys, sf, state, prm, bounds).map(|t| y_from_terms(&t))
}

/// Largest box symmetric about zero inside `bounds`: `±min(|υ_min|, υ_max)`.
pub fn symmetrize_bounds(bounds: &ControlBounds) -> Result<ControlBounds, FeasibilityError> {
    let mut lim = Vector::zeros(bounds.dim());
    for (j, (lo, hi)) in bounds.v_min.iter().zip(bounds.v_max.iter()).enumerate() {
        if !(*lo <= 0.0 && 0.0 <= *hi) {
            return Err(FeasibilityError::PreconditionViolated { reason: "bounds must contain zero" });
        }
        lim[j] = lo.abs().min(*hi);
    }
    Ok(ControlBounds { v_min: lim.scaled(-1.0), v_max: lim })
}

/// Comparison-lemma certificate on sampled `(t, V(t))`.
///
/// `𝓜` is the largest forward-difference `V̇ + χ₃V`; each sample must satisfy
/// `V(t) ≤ 𝓜/χ₃ + (V(t₀) − 𝓜/χ₃) e^{−χ₃(t − t₀)}` within `1e-6 + 1e-3·V(t₀)`.
pub fn tracking_bound_check(
    traj: &[(f64, f64)],
    chi3: f64,
    lambda_min: f64,
) -> Result<TrackingBoundReport, FeasibilityError> {
    let Some(&(t0, v0)) = traj.first() else {
        return Err(FeasibilityError::PreconditionViolated { reason: "trajectory is empty" });
    };
    if !(chi3 > 0.0) || !(lambda_min > 0.0) {
        return Err(FeasibilityError::PreconditionViolated { reason: "χ₃ and λ_min must be positive" });
    }
    if traj.iter().any(|(_, v)| !(*v >= 0.0)) {
        return Err(FeasibilityError::PreconditionViolated { reason: "V must be non-negative" });
    }
    let empirical_m = traj
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0) + chi3 * w[0].1)
        .fold(if traj.len() == 1 { chi3 * v0 } else { f64::NEG_INFINITY }, f64::max);
    let floor = empirical_m / chi3;
    let tolerance = 1e-6 + 1e-3 * v0;
    let mut max_excess = f64::NEG_INFINITY;
    let mut violated_at = None;
    for &(t, v) in traj {
        let excess = v - (floor + (v0 - floor) * libm::exp(-chi3 * (t - t0)));
        max_excess = max_excess.max(excess);
        if excess > tolerance && violated_at.is_none() {
            violated_at = Some(t);
        }
    }
    let epsilon = libm::sqrt(empirical_m.max(0.0) / (lambda_min * chi3)).max(libm::sqrt(v0 / lambda_min));
    Ok(TrackingBoundReport { empirical_m, chi3, v0, epsilon, max_excess, tolerance, violated_at })
}
