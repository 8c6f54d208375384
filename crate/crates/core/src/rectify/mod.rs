//! The rectifying homeomorphism: a composition of local maps, each supported
//! in a ball, carrying every source of a displacement map onto its target.
//!
//! In dimension one the map is a monotone piecewise-linear function. In
//! higher dimensions every source travels along the segment to its target
//! inside a tube of ball pushes; in the plane a traveler crossing another
//! segment passes through a Dehn half-twist centered at the crossing.

mod audit;
mod bound;
mod general_position;
mod local_map;
mod piecewise;
mod plan;

pub use audit::{audit_schedule, AuditReport, AuditViolation};
pub use bound::{analytic_constant_bound, analytic_log_bound, twist_lipschitz};
pub use general_position::{
    general_position_measure, perturb_general_position, source_separation, Crossing,
    GeneralPosition, GeneralPositionParams, Segment, DEGENERATE_TOL,
};
pub use local_map::{ball_push, half_twist, tube_chain, tube_push, LocalMap, MAX_PUSH_RATIO};
pub use piecewise::MonotonePl;
pub use plan::{build_plan, HomeoPlan, PlanData, TravelerRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RectifyError {
    #[error("push ratio {0} exceeds 1/2")]
    PushRatioExceeded(f64),
    #[error("chain step {step} exceeds half the tube radius {radius}")]
    StepTooLong { step: f64, radius: f64 },
    #[error("no general position found above epsilon floor {0}")]
    GeneralPositionUnreachable(f64),
    #[error("one-dimensional map is not order preserving")]
    NonMonotone1D,
    #[error("tube around pair {0} has no clearance")]
    TubeClearanceViolated(usize),
    #[error("inverse root find failed, residual {0}")]
    InverseRootFindFailed(f64),
    #[error("half twists need dimension 2, got {0}")]
    TwistDimension(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
}
