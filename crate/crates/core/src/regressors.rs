//! Online ridge and forward linear regressors over a shared design state.
//!
//! Both estimators maintain the same sufficient statistics `(G_t, b_t)` with
//! `G_t = lambda*I + sum_{s<=t} x_s x_s^T` and `b_t = sum_{s<=t} y_s x_s`.
//! They differ in the parameter used to predict at a new feature `x`:
//!
//! * ridge predicts with `theta = G_t^{-1} b_t`, ignoring `x`;
//! * the forward predictor (Azoury-Warmuth / Vovk style) folds the feature it
//!   is about to be scored on into the metric first and predicts with
//!   `theta(x) = (G_t + x x^T)^{-1} b_t`;
//! * the unregularized forward predictor is the same with `lambda = 0`,
//!   using the minimum-norm pseudo-inverse while the design is rank
//!   deficient.
//!
//! [`StepDiagnostics`] exposes the per-step pieces of the regret
//! decomposition used throughout the crate: a "predictable" first term driven
//! by the leverage `x_t^T G_t^{-1} x_t`, and (forward only) a second term that
//! depends on the next step's feature and is therefore attributed back to
//! step `t` once that feature arrives.

use nalgebra::DVector;

use crate::design::{pinv_apply, DesignState};
use crate::{Error, Result};

/// Which online estimator drives predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Ridge,
    Forward,
    /// Forward predictor with `lambda = 0`; solves go through the
    /// pseudo-inverse until the design reaches full rank.
    UnregularizedForward,
}

impl Algo {
    pub fn is_forward_family(self) -> bool {
        matches!(self, Algo::Forward | Algo::UnregularizedForward)
    }
}

/// Estimator state frozen immediately after an observation.
///
/// `theta` is always `G_t^{-1} b_t` (pseudo-inverse when `lambda = 0`): the
/// shared information state. The forward predictor's per-feature parameter
/// `(G_t + x x^T)^{-1} b_t` exists only relative to a candidate feature; see
/// [`OnlineRegressor::prediction_parameter`].
#[derive(Debug, Clone)]
pub struct RegressorSnapshot {
    pub algo: Algo,
    pub theta: DVector<f64>,
    /// Number of observations folded into `theta`.
    pub t: u64,
    pub lambda: f64,
}

/// Per-step loss decomposition.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    /// Squared prediction error `(yhat - y)^2` of the issued prediction.
    pub loss: f64,
    /// Leverage-driven regret term. Ridge: `loss * x^T G_t^{-1} x`.
    /// Forward: `y^2 * x^T G_t^{-1} x`. `G_t` includes the current feature.
    pub first_term: f64,
    /// Forward only: `x' G_t^{-1} x' * (x'^T theta)^2` for the next feature
    /// `x'`. Unknown until that feature arrives, so [`OnlineRegressor::observe`]
    /// reports 0 here and [`Prediction::prev_second_term`] carries the value
    /// once it is computable. The final step of a stream keeps 0.
    pub second_term: f64,
    /// `loss - (y - x^T theta_star)^2` when the generating parameter is known.
    pub instant_oracle_regret: Option<f64>,
}

/// Result of [`OnlineRegressor::predict`].
#[derive(Debug, Clone, Copy)]
pub struct Prediction {
    pub value: f64,
    /// Second regret term of the *previous* step, which becomes computable
    /// exactly when this feature arrives (forward family only, `None` on the
    /// first step and for ridge).
    pub prev_second_term: Option<f64>,
}

/// Online linear regressor with incremental design-state maintenance.
#[derive(Debug, Clone)]
pub struct OnlineRegressor {
    algo: Algo,
    design: DesignState,
}

impl OnlineRegressor {
    pub fn new(algo: Algo, dim: usize, lambda: f64) -> Result<Self> {
        match algo {
            Algo::Ridge | Algo::Forward => {
                // The finiteness check catches NaN as well.
                if lambda <= 0.0 || !lambda.is_finite() {
                    return Err(Error::bad_param("lambda", lambda, "finite and > 0"));
                }
            }
            Algo::UnregularizedForward => {
                if lambda != 0.0 {
                    return Err(Error::bad_param("lambda", lambda, "must be 0"));
                }
            }
        }
        Ok(Self {
            algo,
            design: DesignState::new(dim, lambda)?,
        })
    }

    pub fn algo(&self) -> Algo {
        self.algo
    }

    pub fn lambda(&self) -> f64 {
        self.design.lambda()
    }

    /// Observations absorbed so far.
    pub fn count(&self) -> u64 {
        self.design.count()
    }

    pub fn design(&self) -> &DesignState {
        &self.design
    }

    /// Ridge prediction `x^T G_t^{-1} b_t` on the current state.
    pub fn ridge_predict(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.design.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.design.dim(),
                got: x.len(),
            });
        }
        if self.design.lambda() == 0.0 && self.design.rank() < self.design.dim() {
            let theta = self.design.pinv_solve(self.design.b())?;
            return Ok(x.dot(&theta));
        }
        let theta = self.design.solve_theta()?;
        Ok(x.dot(&theta))
    }

    /// Forward prediction `x^T (G_t + x x^T)^{-1} b_t` through a temporary
    /// rank-one view; the persistent state is untouched.
    pub fn forward_predict(&self, x: &DVector<f64>) -> Result<f64> {
        let theta = self.forward_parameter(x)?;
        Ok(x.dot(&theta))
    }

    /// `(G_t + x x^T)^{-1} b_t`, the parameter the forward predictor uses at
    /// feature `x` (pseudo-inverse when `lambda = 0`). Solved from a fresh
    /// factorization of the viewed matrix.
    pub fn forward_parameter(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.design.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.design.dim(),
                got: x.len(),
            });
        }
        let mut viewed = self.design.gram().clone();
        viewed.ger(1.0, x, x, 1.0);
        if self.design.lambda() > 0.0 {
            let chol = viewed.clone().cholesky().ok_or(Error::SingularDesign {
                rank: self.design.rank(),
                dim: self.design.dim(),
            })?;
            let mut theta = chol.solve(self.design.b());
            // One refinement pass; the viewed matrix is near-singular when
            // lambda is tiny and the stream is short.
            let resid = self.design.b() - &viewed * &theta;
            theta += chol.solve(&resid);
            Ok(theta)
        } else {
            Ok(pinv_apply(&viewed, self.design.b()))
        }
    }

    /// Parameter the configured algorithm would use to predict at `x`.
    pub fn prediction_parameter(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match self.algo {
            Algo::Ridge => {
                if self.design.lambda() == 0.0 && self.design.rank() < self.design.dim() {
                    self.design.pinv_solve(self.design.b())
                } else {
                    self.design.solve_theta()
                }
            }
            Algo::Forward | Algo::UnregularizedForward => self.forward_parameter(x),
        }
    }

    /// Prediction for `x`, plus the previous step's second regret term where
    /// applicable (see [`StepDiagnostics::second_term`]).
    pub fn predict(&self, x: &DVector<f64>) -> Result<Prediction> {
        let value = match self.algo {
            Algo::Ridge => self.ridge_predict(x)?,
            Algo::Forward | Algo::UnregularizedForward => self.forward_predict(x)?,
        };
        let prev_second_term = if self.algo.is_forward_family() && self.design.count() > 0 {
            Some(self.leverage_sq(x)? * value * value)
        } else {
            None
        };
        Ok(Prediction {
            value,
            prev_second_term,
        })
    }

    /// `x^T G^{-1} x` on the current state, via the pseudo-inverse when
    /// unregularized and rank deficient.
    fn leverage_sq(&self, x: &DVector<f64>) -> Result<f64> {
        if self.design.lambda() == 0.0 && self.design.rank() < self.design.dim() {
            let w = self.design.pinv_solve(x)?;
            Ok(x.dot(&w).max(0.0))
        } else {
            self.design.mahalanobis_sq(x)
        }
    }

    /// Scores the issued prediction against `y`, absorbs the observation, and
    /// returns the updated snapshot with per-step diagnostics.
    ///
    /// The prediction is recomputed internally with the same rule as
    /// [`OnlineRegressor::predict`], so calling order cannot desynchronize
    /// loss bookkeeping. `theta_star` enables the oracle-regret diagnostic.
    pub fn observe(
        &mut self,
        x: &DVector<f64>,
        y: f64,
        theta_star: Option<&DVector<f64>>,
    ) -> Result<(RegressorSnapshot, StepDiagnostics)> {
        let yhat = match self.algo {
            Algo::Ridge => self.ridge_predict(x)?,
            Algo::Forward | Algo::UnregularizedForward => self.forward_predict(x)?,
        };
        let loss = (yhat - y) * (yhat - y);
        let instant_oracle_regret = theta_star
            .map(|ts| {
                if ts.len() != x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: x.len(),
                        got: ts.len(),
                    });
                }
                let noise = y - x.dot(ts);
                Ok(loss - noise * noise)
            })
            .transpose()?;

        self.design.rank_one_update(x, y)?;

        let post_leverage = self.leverage_sq(x)?;
        let first_term = match self.algo {
            Algo::Ridge => loss * post_leverage,
            Algo::Forward | Algo::UnregularizedForward => y * y * post_leverage,
        };

        let theta = if self.design.lambda() > 0.0 {
            self.design.solve_theta()?
        } else {
            self.design.pinv_solve(self.design.b())?
        };
        let snapshot = RegressorSnapshot {
            algo: self.algo,
            theta,
            t: self.design.count(),
            lambda: self.design.lambda(),
        };
        let diag = StepDiagnostics {
            loss,
            first_term,
            second_term: 0.0,
            instant_oracle_regret,
        };
        Ok((snapshot, diag))
    }
}

/// Batch least-squares fit.
#[derive(Debug, Clone)]
pub struct BatchFit {
    pub theta: DVector<f64>,
    /// In-sample squared-error loss of `theta`.
    pub loss: f64,
    /// True when the normal equations were rank deficient and `theta` is the
    /// minimum-norm solution.
    pub rank_deficient: bool,
}

/// Unregularized least squares over a full batch, via the normal equations.
/// Rank-deficient designs get the minimum-norm solution and are flagged.
pub fn batch_ols(features: &[DVector<f64>], labels: &[f64]) -> Result<BatchFit> {
    if features.is_empty() {
        return Err(Error::Empty {
            what: "feature batch",
        });
    }
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left_name: "features",
            left: features.len(),
            right_name: "labels",
            right: labels.len(),
        });
    }
    let dim = features[0].len();
    let mut state = DesignState::new(dim, 0.0)?;
    for (x, &y) in features.iter().zip(labels) {
        state.rank_one_update(x, y)?;
    }
    let rank_deficient = state.rank() < dim;
    let theta = if rank_deficient {
        state.pinv_solve(state.b())?
    } else {
        state.solve_theta()?
    };
    let loss = features
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let r = x.dot(&theta) - y;
            r * r
        })
        .sum();
    Ok(BatchFit {
        theta,
        loss,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dv(vals: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(vals)
    }

    fn seeded_regressor(
        algo: Algo,
        dim: usize,
        lambda: f64,
        n: usize,
        seed: u64,
    ) -> OnlineRegressor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut reg = OnlineRegressor::new(algo, dim, lambda).unwrap();
        for _ in 0..n {
            let x = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
            let y = rng.random_range(-2.0..2.0);
            reg.observe(&x, y, None).unwrap();
        }
        reg
    }

    // === construction ===

    #[test]
    fn ridge_requires_positive_lambda() {
        assert!(OnlineRegressor::new(Algo::Ridge, 2, 0.0).is_err());
        assert!(OnlineRegressor::new(Algo::Forward, 2, -1.0).is_err());
        assert!(OnlineRegressor::new(Algo::Ridge, 2, 1.0).is_ok());
    }

    #[test]
    fn unregularized_forward_requires_zero_lambda() {
        assert!(OnlineRegressor::new(Algo::UnregularizedForward, 2, 0.5).is_err());
        assert!(OnlineRegressor::new(Algo::UnregularizedForward, 2, 0.0).is_ok());
    }

    // === predictions ===

    #[test]
    fn fresh_state_predicts_zero() {
        let reg = OnlineRegressor::new(Algo::Forward, 3, 1.0).unwrap();
        let x = dv(&[0.4, -0.2, 0.9]);
        assert_eq!(reg.ridge_predict(&x).unwrap(), 0.0);
        assert_eq!(reg.forward_predict(&x).unwrap(), 0.0);
    }

    #[test]
    fn one_point_predictions_match_hand_values() {
        // After (x=1, y=1) with lambda = 1: ridge predicts 1/2 at x = 1,
        // the forward view (G + x x^T = 3) predicts 1/3.
        let mut reg = OnlineRegressor::new(Algo::Forward, 1, 1.0).unwrap();
        reg.observe(&dv(&[1.0]), 1.0, None).unwrap();
        assert_abs_diff_eq!(
            reg.ridge_predict(&dv(&[1.0])).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            reg.forward_predict(&dv(&[1.0])).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn forward_prediction_shrinks_ridge_by_leverage() {
        // Dual route for the shrinkage identity: the forward route solves a
        // fresh factorization, the right-hand side divides the ridge value.
        let reg = seeded_regressor(Algo::Forward, 4, 0.7, 60, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..50 {
            let x = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let m = reg.design().mahalanobis_sq(&x).unwrap();
            let fwd = reg.forward_predict(&x).unwrap();
            let ridge = reg.ridge_predict(&x).unwrap();
            assert_abs_diff_eq!(fwd, ridge / (1.0 + m), epsilon = 1e-10);
        }
    }

    #[test]
    fn prediction_rejects_dimension_mismatch() {
        let reg = OnlineRegressor::new(Algo::Ridge, 3, 1.0).unwrap();
        assert!(reg.forward_predict(&dv(&[1.0])).is_err());
        let mut reg = reg;
        assert!(reg.observe(&dv(&[1.0, 2.0]), 0.0, None).is_err());
    }

    // === observe diagnostics ===

    #[test]
    fn forward_first_term_is_label_energy_times_leverage() {
        // d = 1, lambda = 1, observe (1, 1): G_1 = 2, so the first term is
        // y^2 * x^T G_1^{-1} x = 1/2.
        let mut reg = OnlineRegressor::new(Algo::Forward, 1, 1.0).unwrap();
        let (snap, diag) = reg.observe(&dv(&[1.0]), 1.0, None).unwrap();
        assert_abs_diff_eq!(diag.first_term, 0.5, epsilon = 1e-12);
        // The forward view on an empty state predicts 0, so the loss is 1.
        assert_abs_diff_eq!(diag.loss, 1.0, epsilon = 1e-12);
        assert_eq!(diag.second_term, 0.0);
        assert_eq!(snap.t, 1);
        assert_abs_diff_eq!(snap.theta[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ridge_first_term_scales_loss_by_post_update_leverage() {
        // Same stream for ridge: prediction 0, loss 1, first term
        // loss * x^T G_1^{-1} x = 1/2.
        let mut reg = OnlineRegressor::new(Algo::Ridge, 1, 1.0).unwrap();
        let (_, diag) = reg.observe(&dv(&[1.0]), 1.0, None).unwrap();
        assert_abs_diff_eq!(diag.loss, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(diag.first_term, 0.5, epsilon = 1e-12);
        assert_eq!(diag.second_term, 0.0);
    }

    #[test]
    fn pending_second_term_surfaces_on_next_predict() {
        // After one forward observation, predicting at the next feature
        // exposes the previous step's second term
        // x' G_1^{-1} x' * (x'^T theta_1(x'))^2 = (1/2) * (1/3)^2 = 1/18.
        let mut reg = OnlineRegressor::new(Algo::Forward, 1, 1.0).unwrap();
        let first = reg.predict(&dv(&[1.0])).unwrap();
        assert_eq!(first.prev_second_term, None);
        reg.observe(&dv(&[1.0]), 1.0, None).unwrap();
        let next = reg.predict(&dv(&[1.0])).unwrap();
        assert_abs_diff_eq!(next.value, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(next.prev_second_term.unwrap(), 1.0 / 18.0, epsilon = 1e-12);
    }

    #[test]
    fn ridge_never_reports_second_terms() {
        let mut reg = OnlineRegressor::new(Algo::Ridge, 1, 1.0).unwrap();
        reg.observe(&dv(&[1.0]), 1.0, None).unwrap();
        assert_eq!(reg.predict(&dv(&[1.0])).unwrap().prev_second_term, None);
    }

    #[test]
    fn oracle_regret_accumulates_to_loss_difference() {
        // Sum of instant oracle regrets == L_T(algo) - L_T(theta_star),
        // recomputed from the recorded stream.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let theta_star = dv(&[0.6, -0.4, 0.2]);
        let mut reg = OnlineRegressor::new(Algo::Forward, 3, 1.0).unwrap();
        let mut history = Vec::new();
        let mut accumulated = 0.0;
        for _ in 0..200 {
            let x = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let y = x.dot(&theta_star) + 0.1 * rng.random_range(-1.0..1.0);
            let yhat = reg.predict(&x).unwrap().value;
            let (_, diag) = reg.observe(&x, y, Some(&theta_star)).unwrap();
            accumulated += diag.instant_oracle_regret.unwrap();
            history.push((x, y, yhat));
        }
        let algo_loss: f64 = history.iter().map(|(_, y, yh)| (yh - y) * (yh - y)).sum();
        let star_loss: f64 = history
            .iter()
            .map(|(x, y, _)| {
                let e = y - x.dot(&theta_star);
                e * e
            })
            .sum();
        assert_abs_diff_eq!(accumulated, algo_loss - star_loss, epsilon = 1e-8);
    }

    #[test]
    fn noise_free_unregularized_forward_recovers_parameter() {
        // With sigma = 0 the post-update estimate interpolates the data and
        // equals the generating parameter once the design is full rank.
        let theta_star = dv(&[2.0, -1.0]);
        let mut reg = OnlineRegressor::new(Algo::UnregularizedForward, 2, 0.0).unwrap();
        let xs = [dv(&[1.0, 0.0]), dv(&[1.0, 1.0]), dv(&[0.3, -0.8])];
        for (i, x) in xs.iter().enumerate() {
            let y = x.dot(&theta_star);
            let (snap, _) = reg.observe(x, y, Some(&theta_star)).unwrap();
            if i >= 1 {
                assert!((snap.theta.clone() - &theta_star).norm() <= 1e-10);
            }
        }
    }

    // === batch least squares ===

    #[test]
    fn batch_ols_interpolates_consistent_data() {
        let fit = batch_ols(&[dv(&[1.0]), dv(&[2.0])], &[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(fit.theta[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.loss, 0.0, epsilon = 1e-12);
        assert!(!fit.rank_deficient);
    }

    #[test]
    fn batch_ols_flags_rank_deficiency_and_returns_min_norm() {
        let fit = batch_ols(&[dv(&[1.0, 0.0])], &[3.0]).unwrap();
        assert!(fit.rank_deficient);
        assert_abs_diff_eq!(fit.theta[0], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.theta[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn batch_ols_rejects_degenerate_inputs() {
        assert!(matches!(batch_ols(&[], &[]), Err(Error::Empty { .. })));
        assert!(matches!(
            batch_ols(&[dv(&[1.0])], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn batch_ols_matches_svd_least_squares() {
        // Independent oracle: stack the design into a tall matrix and solve
        // with SVD instead of the normal equations.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (n, d) = (40, 4);
        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let x = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            labels.push(rng.random_range(-1.0..1.0));
            features.push(x);
        }
        let fit = batch_ols(&features, &labels).unwrap();

        let mut mat = DMatrix::zeros(n, d);
        for (i, x) in features.iter().enumerate() {
            mat.set_row(i, &x.transpose());
        }
        let rhs = DVector::from_column_slice(&labels);
        let svd_theta = mat.svd(true, true).solve(&rhs, 1e-12).unwrap();
        assert!((fit.theta.clone() - svd_theta).norm() <= 1e-8);
    }

    // === properties ===

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn prop_shrinkage_identity_holds(
            dim in 1usize..=5,
            lambda in 0.01f64..5.0,
            n in 0usize..80,
            seed in any::<u64>(),
        ) {
            let reg = seeded_regressor(Algo::Forward, dim, lambda, n, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let x = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
            let m = reg.design().mahalanobis_sq(&x).unwrap();
            let fwd = reg.forward_predict(&x).unwrap();
            let ridge = reg.ridge_predict(&x).unwrap();
            prop_assert!((fwd - ridge / (1.0 + m)).abs() <= 1e-10);
            prop_assert!(m >= 0.0);
        }

        #[test]
        fn prop_diagnostics_are_nonnegative(
            lambda in 0.05f64..5.0,
            seed in any::<u64>(),
            algo_ridge in any::<bool>(),
        ) {
            let algo = if algo_ridge { Algo::Ridge } else { Algo::Forward };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut reg = OnlineRegressor::new(algo, 3, lambda).unwrap();
            for _ in 0..30 {
                let x = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
                let y = rng.random_range(-2.0..2.0);
                let pred = reg.predict(&x).unwrap();
                if let Some(s) = pred.prev_second_term {
                    prop_assert!(s >= 0.0);
                }
                let (_, diag) = reg.observe(&x, y, None).unwrap();
                prop_assert!(diag.loss >= 0.0);
                prop_assert!(diag.first_term >= 0.0);
            }
        }
    }
}
