//! Concrete solvers.
//!
//! * [`bdr`] — joint embedding learning with a block-diagonal
//!   self-expression prior, optimized by alternating minimization with an
//!   adaptive successive-over-relaxation scheme.
//! * [`pvc`] — multi-view nonnegative factorization with an l1 penalty on
//!   the shared embedding, for the missing-view setting.
//! * [`mvliv`] — the unregularized squared-loss special case: low-rank
//!   completion through a shared embedding.

pub mod bdr;
pub mod mvliv;
pub mod pvc;

pub use bdr::{
    bdr_basic_iterate, bdr_fit, bdr_init, bdr_objective, bdr_sor_iterate, bdr_step_b, bdr_step_f,
    bdr_step_p, bdr_step_u, bdr_step_w, bdr_step_z, check_state_invariants, rho_ratio, BdrConfig,
    BdrState, RhoOutcome,
};
pub use mvliv::{mvliv_fit, MvlivModel};
pub use pvc::{pvc_fit, pvc_objective, PvcModel};

use thiserror::Error;

use crate::jella::FrameworkError;
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Framework(#[from] FrameworkError),
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("relaxation factor {0} must be >= 1")]
    InvalidLambda(f64),
    #[error("objective increased at iteration {iteration}: {previous} -> {current}")]
    ObjectiveIncreased {
        iteration: usize,
        previous: f64,
        current: f64,
    },
    #[error("state invariant violated: {0}")]
    InvariantViolated(String),
    #[error("view {view} entry ({row},{col}) is {value}, observed data must be nonnegative")]
    NegativeObservedData {
        view: usize,
        row: usize,
        col: usize,
        value: f64,
    },
}
