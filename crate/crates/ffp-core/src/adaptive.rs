//! Adaptive forgetting: derivative recursions in the forgetting factor and
//! a one-step gradient update for lambda driven by the Whittle likelihood.
//!
//! The derivative sense is the simultaneous perturbation of every factor in
//! the taper, d/d eps of the accumulators with lambda_t replaced by
//! lambda_t + eps. Applied to the recursions
//!
//! ```text
//! J_{T+1} = lambda_T J_T + x e^{-i 2 pi f (T+1)}
//! C_{T+1} = lambda_T^2 C_T + 1
//! ```
//!
//! this gives the running derivative accumulators
//!
//! ```text
//! dJ <- lambda * dJ + J          (pre-update J)
//! dC <- lambda^2 * dC + 2 lambda * C   (pre-update C)
//! ```
//!
//! both updated before J and C themselves. From these, the derivative of
//! the estimate S_hat = |J|^2 / C follows by the quotient rule, and the
//! lambda ascent direction is the derivative of the Whittle likelihood,
//! optionally regularized by the gradient of a log Beta(alpha, 1) prior
//! density, (alpha - 1) / lambda, which pulls lambda toward 1.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::sdf::SdfModel;
use crate::spectral::{Centering, ForgettingState, SpectralEstimate};

/// Tuning for the lambda update.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdaptiveConfig {
    /// Learning rate r_lambda for the one-step gradient update; 0 disables
    /// adaptation entirely.
    pub learn_rate_lambda: f64,
    /// Hard clipping bounds for lambda, strictly inside (0, 1).
    pub lambda_bounds: (f64, f64),
    /// Beta(alpha, 1) prior on lambda; `None` disables the prior term.
    pub prior_alpha: Option<f64>,
    /// Weight multiplying the prior gradient (alpha - 1) / lambda. A value
    /// of 1/M puts the prior on the same per-frequency scale as the
    /// likelihood term.
    pub prior_weight: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            learn_rate_lambda: 0.01,
            lambda_bounds: (0.5, 1.0 - 1e-6),
            prior_alpha: None,
            prior_weight: 0.0,
        }
    }
}

impl AdaptiveConfig {
    fn check(&self) -> Result<()> {
        let (lo, hi) = self.lambda_bounds;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::Parameter(format!(
                "lambda bounds must satisfy 0 < min <= max < 1, got ({lo}, {hi})"
            )));
        }
        if !(self.learn_rate_lambda >= 0.0 && self.learn_rate_lambda.is_finite()) {
            return Err(Error::Parameter(format!(
                "lambda learning rate must be nonnegative, got {}",
                self.learn_rate_lambda
            )));
        }
        if let Some(a) = self.prior_alpha {
            if !(a >= 1.0 && a.is_finite()) {
                return Err(Error::Parameter(format!("prior alpha must be >= 1, got {a}")));
            }
        }
        if !(self.prior_weight >= 0.0 && self.prior_weight.is_finite()) {
            return Err(Error::Parameter(format!(
                "prior weight must be nonnegative, got {}",
                self.prior_weight
            )));
        }
        Ok(())
    }
}

/// Forgetting-factor periodogram state extended with the per-frequency
/// derivative of J and the scalar derivative of C with respect to the
/// lambda perturbation.
#[derive(Debug, Clone)]
pub struct AdaptiveState {
    base: ForgettingState,
    dj: Vec<Complex64>,
    dc: f64,
    cfg: AdaptiveConfig,
    ds_buf: Vec<f64>,
}

impl AdaptiveState {
    pub fn new(
        grid: FrequencyGrid,
        lambda0: f64,
        centering: Centering,
        cfg: AdaptiveConfig,
    ) -> Result<Self> {
        cfg.check()?;
        let (lo, hi) = cfg.lambda_bounds;
        if !(lambda0 >= lo && lambda0 <= hi) {
            return Err(Error::Parameter(format!(
                "initial lambda {lambda0} outside bounds ({lo}, {hi})"
            )));
        }
        let m = grid.len();
        let base = ForgettingState::new(grid, lambda0, centering)?;
        Ok(Self { base, dj: vec![Complex64::ZERO; m], dc: 0.0, cfg, ds_buf: vec![0.0; m] })
    }

    pub fn state(&self) -> &ForgettingState {
        &self.base
    }

    pub fn lambda(&self) -> f64 {
        self.base.lambda()
    }

    pub fn config(&self) -> &AdaptiveConfig {
        &self.cfg
    }

    pub fn dj(&self) -> &[Complex64] {
        &self.dj
    }

    pub fn dc(&self) -> f64 {
        self.dc
    }

    /// Override lambda directly (used by deterministic lambda schedules).
    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        self.base.set_lambda(lambda)
    }

    pub fn ffp(&self) -> Result<SpectralEstimate> {
        self.base.ffp()
    }

    pub fn ffp_values_into(&self, out: &mut [f64]) -> Result<()> {
        self.base.ffp_values_into(out)
    }

    /// Absorb one sample: derivative accumulators first (from the pre-update
    /// J and C), then the ordinary J/C update under the current lambda.
    pub fn update(&mut self, x: Complex64) -> Result<()> {
        if !x.re.is_finite() || !x.im.is_finite() {
            return Err(Error::Input(format!("non-finite sample {x}")));
        }
        let lambda = self.base.lambda();
        for (d, j) in self.dj.iter_mut().zip(self.base.j()) {
            *d = lambda * *d + *j;
        }
        self.dc = lambda * lambda * self.dc + 2.0 * lambda * self.base.c();
        self.base.update(x)
    }

    /// Per-frequency derivative of the spectral estimate with respect to
    /// the lambda perturbation:
    /// dS/dlambda = (2 Re(conj(J) dJ) C - |J|^2 dC) / C^2.
    pub fn ds_dlambda_into(&self, out: &mut [f64]) -> Result<()> {
        if self.base.t() == 0 {
            return Err(Error::State("no samples absorbed yet; C = 0".into()));
        }
        assert_eq!(out.len(), self.dj.len());
        let c = self.base.c();
        for (k, o) in out.iter_mut().enumerate() {
            let j = self.base.j_effective(k);
            let dj = self.dj[k];
            *o = (2.0 * (j.conj() * dj).re * c - j.norm_sqr() * self.dc) / (c * c);
        }
        Ok(())
    }

    pub fn ds_dlambda(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dj.len()];
        self.ds_dlambda_into(&mut out)?;
        Ok(out)
    }

    /// Derivative of the Whittle log-likelihood with respect to the lambda
    /// perturbation: -(1/M) sum_k (dS_hat(f_k)/dlambda) / S(f_k).
    pub fn dloglik_dlambda(&mut self, model: &dyn SdfModel, params: &[f64]) -> Result<f64> {
        model.validate(params)?;
        if self.base.t() == 0 {
            return Err(Error::State("no samples absorbed yet".into()));
        }
        let mut ds = std::mem::take(&mut self.ds_buf);
        self.ds_dlambda_into(&mut ds)?;
        let m = ds.len() as f64;
        let mut dl = 0.0;
        for (&f, &d) in self.base.grid().freqs().iter().zip(&ds) {
            let s = model.eval(params, f)?;
            if s <= 0.0 || !s.is_finite() {
                self.ds_buf = ds;
                return Err(Error::Eval(format!(
                    "model spectrum is not positive at frequency {f} (S = {s})"
                )));
            }
            // d/d lambda of -(1/M) sum (log S + shat/S); only shat depends
            dl -= d / s;
        }
        self.ds_buf = ds;
        Ok(dl / m)
    }

    /// One gradient step on lambda against the Whittle likelihood of the
    /// current model fit, plus the prior term when configured; the result is
    /// clipped to the configured bounds. Returns the new lambda.
    pub fn lambda_step(&mut self, model: &dyn SdfModel, params: &[f64]) -> Result<f64> {
        let dl = self.dloglik_dlambda(model, params)?;
        let lambda = self.base.lambda();
        let mut direction = dl;
        if let Some(alpha) = self.cfg.prior_alpha {
            direction += self.cfg.prior_weight * (alpha - 1.0) / lambda;
        }
        if !direction.is_finite() {
            return Err(Error::Eval("non-finite lambda gradient; step rejected".into()));
        }
        let (lo, hi) = self.cfg.lambda_bounds;
        let new_lambda = (lambda + self.cfg.learn_rate_lambda * direction).clamp(lo, hi);
        self.base.set_lambda(new_lambda)?;
        Ok(new_lambda)
    }
}
