//! Optimistic action selection for stochastic linear bandits.
//!
//! Two agent families, each in a ridge and a forward flavor:
//!
//! * [`LinearBanditAgent`] — stationary optimism-in-the-face-of-uncertainty
//!   (OFUL-style). The ridge flavor scores an arm by `a^T theta_hat +
//!   beta_t ||a||_{G_t^{-1}}`. The forward flavor folds the candidate arm
//!   into the design *before* scoring, in the spirit of the
//!   Azoury–Warmuth/Vovk one-step lookahead: the exploitation term shrinks
//!   by `1/(1 + m)` and the uncertainty is measured in the augmented metric,
//!   which removes the design-dependent front factor from its regret bound
//!   and lets the width track the norms actually played.
//! * [`DiscountedBanditAgent`] — geometrically discounted variants that
//!   forget old rounds and so track a drifting target. At `gamma = 1` they
//!   reproduce the stationary agents decision-for-decision.
//!
//! Both forward flavors cost the same order of arithmetic per arm as their
//! ridge counterparts: the augmented-design quantities come from
//! Sherman–Morrison algebra on the maintained inverse, never from a fresh
//! factorization.

use nalgebra::{DMatrix, DVector};

use crate::bounds::{self, BoundParams, Estimator};
use crate::design::DesignState;
use crate::{Error, Result};

fn check_arm(arm: &DVector<f64>, dim: usize) -> Result<()> {
    if arm.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: arm.len(),
        });
    }
    if let Some(bad) = arm.iter().find(|v| !v.is_finite()) {
        return Err(Error::bad_param("arm", *bad, "all entries finite"));
    }
    Ok(())
}

fn argmax_by<F>(arms: &[DVector<f64>], mut score: F) -> Result<(usize, f64)>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    if arms.is_empty() {
        return Err(Error::Empty { what: "arm set" });
    }
    let mut best_idx = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, arm) in arms.iter().enumerate() {
        let v = score(arm)?;
        // Strict comparison: ties go to the earliest arm.
        if v > best_val {
            best_idx = i;
            best_val = v;
        }
    }
    Ok((best_idx, best_val))
}

/// Instantaneous pseudo-regret of playing `arms[chosen]` against the best
/// arm under `theta_star`.
pub fn pseudo_regret(
    arms: &[DVector<f64>],
    chosen: usize,
    theta_star: &DVector<f64>,
) -> Result<f64> {
    if arms.is_empty() {
        return Err(Error::Empty { what: "arm set" });
    }
    if chosen >= arms.len() {
        return Err(Error::InvalidSize {
            name: "chosen",
            value: chosen,
            requirement: "must index into the arm set",
        });
    }
    let mut best = f64::NEG_INFINITY;
    for arm in arms {
        if arm.len() != theta_star.len() {
            return Err(Error::DimensionMismatch {
                expected: theta_star.len(),
                got: arm.len(),
            });
        }
        best = best.max(arm.dot(theta_star));
    }
    Ok((best - arms[chosen].dot(theta_star)).max(0.0))
}

/// Stationary optimistic agent over a regularized least-squares design.
#[derive(Debug, Clone)]
pub struct LinearBanditAgent {
    variant: Estimator,
    params: BoundParams,
    design: DesignState,
    /// Largest arm norm played so far; the forward width tracks this
    /// instead of the a-priori bound.
    running_x: f64,
}

impl LinearBanditAgent {
    pub fn new(variant: Estimator, params: BoundParams) -> Result<Self> {
        Ok(Self {
            variant,
            params,
            design: DesignState::new(params.dim, params.lambda)?,
            running_x: 0.0,
        })
    }

    pub fn variant(&self) -> Estimator {
        self.variant
    }

    pub fn params(&self) -> &BoundParams {
        &self.params
    }

    /// Number of (arm, reward) pairs observed.
    pub fn rounds(&self) -> u64 {
        self.design.count()
    }

    /// Regularized least-squares point estimate `G_t^{-1} b_t`.
    pub fn point_estimate(&self) -> Result<DVector<f64>> {
        self.design.solve_theta()
    }

    /// Confidence ellipsoid radius at the current round (ridge form; the
    /// forward flavor's width is arm-dependent, see `forward_width_scalar`).
    pub fn ridge_width(&self) -> f64 {
        // gamma = 1 cannot be rejected, so the unwrap is safe.
        bounds::dlinucb_beta(Estimator::Ridge, &self.params, self.design.count(), 1.0)
            .expect("gamma = 1 is always admissible")
    }

    /// Width multiplier for the forward score of an arm with norm
    /// `arm_norm`: the ellipsoid offset grows to `(sqrt(lambda) + ||a||) S`
    /// and the determinant factor counts the round being played.
    fn forward_width_scalar(&self, arm_norm: f64) -> f64 {
        let p = &self.params;
        let d = p.dim as f64;
        let t = (self.design.count() + 1) as f64;
        let x = self.running_x.max(arm_norm);
        let noise = p.sigma
            * (2.0 * (1.0 / p.delta).ln() + d * (t * x * x / (p.lambda * d)).ln_1p()).sqrt();
        (p.lambda.sqrt() + arm_norm) * p.s_bound + noise
    }

    fn index_with(&self, theta: &DVector<f64>, arm: &DVector<f64>) -> Result<f64> {
        check_arm(arm, self.params.dim)?;
        let m = self.design.mahalanobis_sq(arm)?;
        match self.variant {
            Estimator::Ridge => Ok(arm.dot(theta) + self.ridge_width() * m.sqrt()),
            Estimator::Forward => {
                // Sherman–Morrison view of the augmented design G + aa^T:
                // the prediction shrinks by 1/(1+m) and the arm's norm in
                // the augmented inverse metric is m/(1+m).
                let exploit = arm.dot(theta) / (1.0 + m);
                let norm = (m / (1.0 + m)).sqrt();
                Ok(exploit + norm * self.forward_width_scalar(arm.norm()))
            }
        }
    }

    /// Optimistic score of a single arm.
    pub fn index(&self, arm: &DVector<f64>) -> Result<f64> {
        let theta = self.design.solve_theta()?;
        self.index_with(&theta, arm)
    }

    /// Pick the arm with the highest index; ties resolve to the earliest.
    pub fn select(&self, arms: &[DVector<f64>]) -> Result<(usize, f64)> {
        let theta = self.design.solve_theta()?;
        argmax_by(arms, |arm| self.index_with(&theta, arm))
    }

    /// Record the reward of the played arm.
    pub fn update(&mut self, arm: &DVector<f64>, reward: f64) -> Result<()> {
        self.design.rank_one_update(arm, reward)?;
        self.running_x = self.running_x.max(arm.norm());
        Ok(())
    }
}

/// Discounted optimistic agent: past rounds decay geometrically so the
/// point estimate follows a drifting target. Maintains the discounted
/// design `V_t`, the squared-discount design `V~_t` that calibrates the
/// width, and the discounted response vector.
#[derive(Debug, Clone)]
pub struct DiscountedBanditAgent {
    variant: Estimator,
    params: BoundParams,
    gamma: f64,
    v: DMatrix<f64>,
    v_tilde: DMatrix<f64>,
    b: DVector<f64>,
    v_inv: DMatrix<f64>,
    theta: DVector<f64>,
    rounds: u64,
    running_x: f64,
}

impl DiscountedBanditAgent {
    /// `gamma` in `(0, 1]`; at `gamma = 1` the agent coincides with
    /// [`LinearBanditAgent`] of the same variant.
    pub fn new(variant: Estimator, params: BoundParams, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 || gamma > 1.0 {
            return Err(Error::bad_param("gamma", gamma, "in (0, 1]"));
        }
        let d = params.dim;
        let eye = DMatrix::identity(d, d);
        Ok(Self {
            variant,
            params,
            gamma,
            v: &eye * params.lambda,
            v_tilde: &eye * params.lambda,
            b: DVector::zeros(d),
            v_inv: eye / params.lambda,
            theta: DVector::zeros(d),
            rounds: 0,
            running_x: 0.0,
        })
    }

    pub fn variant(&self) -> Estimator {
        self.variant
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Discounted least-squares point estimate `V_t^{-1} b_t`.
    pub fn point_estimate(&self) -> &DVector<f64> {
        &self.theta
    }

    fn ridge_width(&self) -> f64 {
        bounds::dlinucb_beta(Estimator::Ridge, &self.params, self.rounds, self.gamma)
            .expect("gamma validated at construction")
    }

    /// Forward width: effective sample weight counts the round being
    /// played at full (undiscounted) weight, and the norm bound tracks the
    /// arms actually played.
    fn forward_width_scalar(&self, arm_norm: f64) -> f64 {
        let p = &self.params;
        let d = p.dim as f64;
        let w = bounds::discounted_weight(self.gamma, self.rounds) + 1.0;
        let x = self.running_x.max(arm_norm);
        let noise = p.sigma
            * (2.0 * (1.0 / p.delta).ln() + d * (x * x * w / (p.lambda * d)).ln_1p()).sqrt();
        (p.lambda.sqrt() + arm_norm) * p.s_bound + noise
    }

    /// Optimistic score of a single arm.
    pub fn index(&self, arm: &DVector<f64>) -> Result<f64> {
        check_arm(arm, self.params.dim)?;
        let vinv_a = &self.v_inv * arm;
        match self.variant {
            Estimator::Ridge => {
                // Width in the V^{-1} V~ V^{-1} metric.
                let width_sq = vinv_a.dot(&(&self.v_tilde * &vinv_a)).max(0.0);
                Ok(arm.dot(&self.theta) + self.ridge_width() * width_sq.sqrt())
            }
            Estimator::Forward => {
                let m = arm.dot(&vinv_a).max(0.0);
                let u = vinv_a / (1.0 + m);
                // (V + aa^T)^{-1} V~_a (V + aa^T)^{-1} metric, expanded by
                // Sherman–Morrison with V~_a = V~ + aa^T.
                let width_sq = (u.dot(&(&self.v_tilde * &u)) + arm.dot(&u).powi(2)).max(0.0);
                let exploit = arm.dot(&self.theta) / (1.0 + m);
                Ok(exploit + self.forward_width_scalar(arm.norm()) * width_sq.sqrt())
            }
        }
    }

    /// Pick the arm with the highest index; ties resolve to the earliest.
    pub fn select(&self, arms: &[DVector<f64>]) -> Result<(usize, f64)> {
        argmax_by(arms, |arm| self.index(arm))
    }

    /// Record the reward of the played arm and decay the past.
    pub fn update(&mut self, arm: &DVector<f64>, reward: f64) -> Result<()> {
        check_arm(arm, self.params.dim)?;
        if !reward.is_finite() {
            return Err(Error::bad_param("reward", reward, "finite"));
        }
        let g = self.gamma;
        let lam = self.params.lambda;
        let d = self.params.dim;
        // V <- g V + aa^T + (1-g) lambda I keeps V >= lambda I at all times;
        // V~ uses g^2 and (1-g^2) so that V~ >= lambda I as well.
        self.v *= g;
        self.v.ger(1.0, arm, arm, 1.0);
        self.v_tilde *= g * g;
        self.v_tilde.ger(1.0, arm, arm, 1.0);
        for i in 0..d {
            self.v[(i, i)] += (1.0 - g) * lam;
            self.v_tilde[(i, i)] += (1.0 - g * g) * lam;
        }
        self.b *= g;
        self.b.axpy(reward, arm, 1.0);
        self.v_inv = self
            .v
            .clone()
            .cholesky()
            .expect("V >= lambda I stays positive definite on finite inputs")
            .inverse();
        self.theta = &self.v_inv * &self.b;
        self.rounds += 1;
        self.running_x = self.running_x.max(arm.norm());
        Ok(())
    }
}
