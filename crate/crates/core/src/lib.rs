//! Online linear regression and optimistic linear bandits with a
//! reproducible experiment harness.
//!
//! The crate is organized around a shared incremental design-matrix state:
//!
//! * [`design`]: regularized Gram matrix, its inverse (Sherman–Morrison with
//!   periodic refactorization), log-determinant and rank tracking.
//! * [`regressors`]: online ridge, the forward (Azoury–Warmuth / Vovk style)
//!   predictor that folds the upcoming feature into the Gram matrix before
//!   predicting, and its unregularized pseudo-inverse variant, plus per-step
//!   loss diagnostics and a batch least-squares baseline.
//! * [`bounds`]: closed-form confidence radii, regret-bound and
//!   feature-budget evaluators for both estimators.
//! * [`bandits`]: optimism-in-the-face-of-uncertainty action selection on
//!   top of either estimator (`OFUL` style), and discounted variants for
//!   slowly drifting rewards (`D-LinUCB` style).
//! * [`env`]: seeded synthetic data generators for regression streams and
//!   (possibly non-stationary) bandit rounds. Reproducibility is a hard
//!   requirement: every draw is a pure function of `(seed, step)`.
//! * [`harness`]: config-driven experiment runner with replicate-level
//!   parallelism, aggregation, and CSV emission.

pub mod bandits;
pub mod bounds;
pub mod design;
pub mod env;
pub mod harness;
pub mod regressors;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
