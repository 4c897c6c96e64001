//! Safety-critical control with nonlinear control barrier functions.
//!
//! The crate turns a high-relative-degree state constraint `θ(ζ) ≥ 0` into the
//! relative-degree-one barrier
//!
//! ```text
//! Θ(ζ) = exp(θ(ζ) / (‖ζ + d‖ + r) − Δ) − 1
//! ```
//!
//! and combines it with a relaxed control Lyapunov condition and box input
//! limits into one small quadratic program per control step. The QPs are solved
//! by a dense predictor-corrector interior-point method ([`qp`]), feasibility of
//! the barrier/input-limit pair is checked pointwise ([`feasibility`]), and the
//! adaptive cruise control plant ties everything together ([`acc`]).
//!
//! Everything here is `no_std` + `alloc`; file formats and the command line
//! front end live in the companion `ncbf-cli` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod acc;
pub mod cbf_clf;
pub mod feasibility;
pub mod linalg;
pub mod qp;

pub use acc::{AccParams, AccState, Barrier, Integrator, TrajectoryRecord};
pub use cbf_clf::{AffineSystem, CbfError, ClfParams, ConstraintRow, ControlBounds, NcbfParams, SafetyFunction};
pub use feasibility::{FeasibilityError, FeasibilityReport, TrackingBoundReport};
pub use linalg::{LinalgError, Matrix, Vector};
pub use qp::{QpError, QpProblem, QpSolution, SolveStatus, SolverConfig};
