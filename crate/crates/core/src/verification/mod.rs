//! Manufactured-solution convergence studies and the property suite.

mod convergence;
mod mms;
mod order;
mod random_data;
mod suite;

use thiserror::Error;

pub use convergence::{run_convergence, ConvergenceConfig, ConvergenceReport, LevelErrors, COMBINED_ORDER_THRESHOLD};
pub use mms::{build_mms_case, fd_residuals, mms_template, rhombus_coordinates, rhombus_point, MmsCase, CASE_IDS};
pub use order::{observed_order, OrderEstimate, PairOrder, SATURATION_FLOOR};
pub use random_data::{random_max_principle_data, random_signed_source_data};
pub use suite::{
    bateman_checks, consistency_study, invariant_suite, max_principle_checks, max_principle_trial, operator_identities, poincare_checks,
    poincare_constants, random_chain, rhombus_family, second_half_growth, stability_check, upwind_checks, ConsistencyStudy, SuiteConfig,
    SuiteEntry, SuiteReport, TrialOutcome,
};

use crate::fields::FieldError;
use crate::mesh::MeshError;
use crate::scheme::SchemeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerificationError {
    #[error("unknown case '{0}' (known: {known})", known = CASE_IDS.join(", "))]
    UnknownCase(String),
    #[error("need at least {required} levels, got {found}")]
    TooFewLevels { required: usize, found: usize },
    #[error("error at level {level} is {value}; errors must be positive and finite")]
    NonPositiveError { level: usize, value: f64 },
    #[error("{errors} errors but {hs} mesh sizes")]
    LengthMismatch { errors: usize, hs: usize },
    #[error("level {level}: {source}")]
    Scheme { level: usize, source: SchemeError },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Field(#[from] FieldError),
}
