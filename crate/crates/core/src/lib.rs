//! Simulation laboratory for exponential weights with one extra observation
//! per round.
//!
//! The crate implements a difference-adjusted exponential weights policy for
//! prediction with limited advice (one played arm plus one observed arm per
//! round), its two learning-rate schedules, oblivious and stochastic loss
//! generators, closed-form regret bounds, baselines, and numerical checks of
//! the inequalities behind the regret analysis.
//!
//! | module | contents |
//! |---|---|
//! | [`types`] | loss matrices, effective range, policy statistics, round records |
//! | [`policy`] | estimators, statistics, learning rates, action distribution |
//! | [`environments`] | stochastic, lower-bound and adversarial generators |
//! | [`baselines`] | EXP3 and uniform play under the same protocol |
//! | [`metrics`] | regret, pseudo-regret, regret bounds |
//! | [`verification`] | trace inequality, sequence lemmas, estimator identities |
//! | [`harness`] | replicated experiments, seeding, CSV/JSON output |
//! | [`cli`] | the `soda-lab` command |
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod baselines;
pub mod cli;
pub mod environments;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod policy;
pub mod sampling;
pub mod types;
pub mod verification;

pub use error::{LabError, Result};
pub use types::{
    validate_loss_matrix, CountingRow, EffectiveRange, LossMatrix, LossRow, PolicyState,
    RoundOutcome, ValidationReport,
};
