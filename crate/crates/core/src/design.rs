//! Incremental design-matrix state shared by the regressors and bandits.
//!
//! [`DesignState`] tracks the regularized Gram matrix `G = lambda*I + sum x x^T`,
//! the response vector `b = sum y x`, and the derived quantities every online
//! algorithm here relies on: the inverse `G^{-1}` (rank-one Sherman-Morrison
//! updates with periodic refactorization), `log det G` (maintained through the
//! rank-one determinant identity `det(G + x x^T) = det(G) * (1 + x^T G^{-1} x)`),
//! and the rank of the unregularized part `sum x x^T`.
//!
//! The inverse is maintained only for `lambda > 0`, where `G` is positive
//! definite by construction. With `lambda = 0` the state is still usable:
//! solves go through a fresh factorization once the design is full rank, or
//! through the spectral pseudo-inverse otherwise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Rank-one inverse updates accumulate rounding drift, so the inverse and
/// log-determinant are recomputed from a fresh factorization this often.
const REFACTOR_INTERVAL: u32 = 512;

/// Relative cutoff below which a direction counts as numerically dependent.
/// Shared by rank tracking and the spectral pseudo-inverse.
pub const SINGULAR_REL_TOL: f64 = 1e-10;

/// Regularized second-moment state of an online linear model.
#[derive(Debug, Clone)]
pub struct DesignState {
    dim: usize,
    lambda: f64,
    gram: DMatrix<f64>,
    /// Maintained iff `lambda > 0`.
    gram_inv: Option<DMatrix<f64>>,
    b: DVector<f64>,
    /// `log det(gram)`; only meaningful while `gram_inv` is maintained.
    log_det: f64,
    count: u64,
    /// Orthonormal basis of the span of the observed features; its length is
    /// the rank of the unregularized Gram matrix.
    span_basis: Vec<DVector<f64>>,
    updates_since_refactor: u32,
}

impl DesignState {
    /// Fresh state: `gram = lambda*I`, empty response vector.
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSize {
                name: "dim",
                value: 0,
                requirement: "must be at least 1",
            });
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::bad_param("lambda", lambda, "finite and >= 0"));
        }
        let gram = DMatrix::identity(dim, dim) * lambda;
        let gram_inv = (lambda > 0.0).then(|| DMatrix::identity(dim, dim) / lambda);
        let log_det = if lambda > 0.0 {
            dim as f64 * lambda.ln()
        } else {
            f64::NEG_INFINITY
        };
        Ok(Self {
            dim,
            lambda,
            gram,
            gram_inv,
            b: DVector::zeros(dim),
            log_det,
            count: 0,
            span_basis: Vec::new(),
            updates_since_refactor: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of rank-one updates applied so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Rank of the unregularized part `sum x x^T`.
    pub fn rank(&self) -> usize {
        self.span_basis.len()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// `log det(gram)`, or `None` when the matrix is singular
    /// (`lambda = 0` and rank-deficient).
    pub fn log_det(&self) -> Option<f64> {
        if self.gram_inv.is_some() {
            return Some(self.log_det);
        }
        if self.rank() < self.dim {
            return None;
        }
        self.gram
            .clone()
            .cholesky()
            .map(|c| 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }

    /// Absorbs the observation `(x, y)`: `gram += x x^T`, `b += y x`.
    pub fn rank_one_update(&mut self, x: &DVector<f64>, y: f64) -> Result<()> {
        self.check_dim(x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::bad_param("x", f64::NAN, "all entries finite"));
        }
        if !y.is_finite() {
            return Err(Error::bad_param("y", y, "finite"));
        }

        if let Some(inv) = self.gram_inv.as_mut() {
            // Sherman-Morrison: (G + x x^T)^{-1} = G^{-1} - w w^T / (1 + m)
            // with w = G^{-1} x and m = x^T G^{-1} x.
            let w = &*inv * x;
            let m = x.dot(&w).max(0.0);
            let scale = 1.0 / (1.0 + m);
            inv.ger(-scale, &w, &w, 1.0);
            self.log_det += m.ln_1p();
        }

        self.gram.ger(1.0, x, x, 1.0);
        self.b.axpy(y, x, 1.0);
        self.count += 1;
        self.update_span(x);

        self.updates_since_refactor += 1;
        if self.updates_since_refactor >= REFACTOR_INTERVAL && self.lambda > 0.0 {
            self.refactor();
        }
        Ok(())
    }

    /// Grows the orthonormal span basis when `x` leaves the current span.
    fn update_span(&mut self, x: &DVector<f64>) {
        if self.span_basis.len() == self.dim {
            return;
        }
        let x_norm = x.norm();
        if x_norm == 0.0 {
            return;
        }
        // Two projection passes keep the basis orthonormal under roundoff.
        let mut resid = x.clone();
        for _ in 0..2 {
            for q in &self.span_basis {
                let c = q.dot(&resid);
                resid.axpy(-c, q, 1.0);
            }
        }
        let r_norm = resid.norm();
        if r_norm > SINGULAR_REL_TOL * x_norm {
            self.span_basis.push(resid / r_norm);
        }
    }

    /// Rebuilds the inverse and log-determinant from a fresh Cholesky
    /// factorization of the current Gram matrix.
    fn refactor(&mut self) {
        if let Some(chol) = self.gram.clone().cholesky() {
            self.log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            self.gram_inv = Some(chol.inverse());
        }
        // A failed factorization keeps the rank-one maintained inverse; the
        // counter resets either way so we retry at the next interval.
        self.updates_since_refactor = 0;
    }

    /// `x^T G^{-1} x`, the squared Mahalanobis norm in the inverse metric.
    pub fn mahalanobis_sq(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x.len())?;
        match &self.gram_inv {
            Some(inv) => Ok(x.dot(&(inv * x)).max(0.0)),
            None => {
                let w = self.dense_solve(x)?;
                Ok(x.dot(&w).max(0.0))
            }
        }
    }

    /// `G^{-1} rhs`. Errors when the design is singular (`lambda = 0` and
    /// rank-deficient); use [`DesignState::pinv_solve`] in that regime.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(rhs.len())?;
        match &self.gram_inv {
            Some(inv) => {
                let mut sol = inv * rhs;
                // One refinement pass against the stored Gram scrubs the
                // cancellation the rank-one inverse picks up when lambda is
                // tiny and the early design is near-singular.
                let resid = rhs - &self.gram * &sol;
                sol += inv * resid;
                Ok(sol)
            }
            None => self.dense_solve(rhs),
        }
    }

    /// Current estimate `theta = G^{-1} b`.
    pub fn solve_theta(&self) -> Result<DVector<f64>> {
        self.solve(&self.b)
    }

    fn dense_solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let singular = Error::SingularDesign {
            rank: self.rank(),
            dim: self.dim,
        };
        if self.rank() < self.dim {
            return Err(singular);
        }
        self.gram
            .clone()
            .cholesky()
            .map(|c| c.solve(rhs))
            .ok_or(singular)
    }

    /// Minimum-norm solve `G^+ rhs` through the spectral decomposition.
    /// Eigenvalues below `SINGULAR_REL_TOL` times the largest are dropped.
    pub fn pinv_solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(rhs.len())?;
        Ok(pinv_apply(&self.gram, rhs))
    }

    /// `v^T G v`, the squared norm in the design metric (used by the
    /// confidence-ellipsoid audits).
    pub fn quad_form(&self, v: &DVector<f64>) -> Result<f64> {
        self.check_dim(v.len())?;
        Ok(v.dot(&(&self.gram * v)).max(0.0))
    }

    /// Smallest nonzero eigenvalue of the unregularized part, if any.
    pub fn min_positive_data_eigenvalue(&self) -> Option<f64> {
        let data = &self.gram - DMatrix::identity(self.dim, self.dim) * self.lambda;
        let eig = SymmetricEigen::new(data);
        let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
        if max == 0.0 {
            return None;
        }
        let cut = SINGULAR_REL_TOL * max;
        eig.eigenvalues
            .iter()
            .copied()
            .filter(|&v| v > cut)
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.min(v)))
            })
    }
}

/// Applies the spectral pseudo-inverse of a symmetric PSD matrix to `rhs`.
pub(crate) fn pinv_apply(mat: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(mat.clone());
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    if max == 0.0 {
        return DVector::zeros(rhs.len());
    }
    let cut = SINGULAR_REL_TOL * max;
    let mut coeffs = eig.eigenvectors.transpose() * rhs;
    for (i, c) in coeffs.iter_mut().enumerate() {
        let ev = eig.eigenvalues[i];
        *c = if ev > cut { *c / ev } else { 0.0 };
    }
    &eig.eigenvectors * coeffs
}
