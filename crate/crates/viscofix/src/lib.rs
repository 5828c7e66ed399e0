//! Viscosity-type fixed-point iterations for nonexpansive mappings with
//! computable rates of asymptotic regularity.
//!
//! The crate provides:
//! - normed-space primitives and convex-set projections ([`geometry`]),
//! - step-size schedules with quantitative moduli ([`moduli`]),
//! - gated nonexpansive mappings, contractions, and monotone operators
//!   ([`operators`]),
//! - explicit/implicit/hybrid iteration engines with instrumented traces
//!   ([`schemes`]),
//! - certified iteration-count bounds and trace verification
//!   ([`certificates`]),
//! - solvers for variational inequalities and zeros of monotone operators
//!   ([`applications`]),
//! - a scenario runner with deterministic reports ([`harness`]).

pub mod applications;
pub mod certificates;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod moduli;
pub mod operators;
pub mod schemes;

pub use error::{Error, Result};
pub use geometry::{ConvexSet, Diameter, NormSpec, Point};
pub use moduli::{StepSchedule, ValidationReport, ValidationStatus};
pub use operators::{Contraction, Drive, Mapping, MonotoneOp};
pub use schemes::{
    explicit_iterate, halpern_iterate, hybrid_iterate, implicit_curve, implicit_solve,
    mann_iterate, ImplicitQuery, ImplicitSolution, Trace,
};
