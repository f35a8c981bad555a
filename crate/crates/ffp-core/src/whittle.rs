//! Whittle likelihood over the forgetting-factor periodogram, and one-step
//! online gradient ascent on model parameters (FFWE).
//!
//! The likelihood treats the periodogram ordinates as independent
//! exponentials with means S(f_k) and is normalized per grid frequency:
//!
//! ```text
//! L = -(1/M) sum_k ( log S(f_k) + S_hat(f_k) / S(f_k) )
//! ```
//!
//! The per-frequency normalization (rather than a 1/T prefactor) keeps the
//! gradient scale independent of how long the stream has run while leaving
//! the maximizer unchanged.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::sdf::SdfModel;
use crate::spectral::SpectralEstimate;

/// Likelihood value and its gradient with respect to the model parameters.
#[derive(Debug, Clone)]
pub struct WhittleEval {
    pub loglik: f64,
    pub grad: Vec<f64>,
}

/// Non-allocating core of [`whittle_loglik`]: returns the log-likelihood and
/// writes the parameter gradient into `grad_out`.
///
/// `gbuf` is per-frequency gradient scratch of the same length.
pub fn whittle_loglik_into(
    shat: &[f64],
    grid: &FrequencyGrid,
    model: &dyn SdfModel,
    params: &[f64],
    grad_out: &mut [f64],
    gbuf: &mut [f64],
) -> Result<f64> {
    assert_eq!(shat.len(), grid.len());
    assert_eq!(grad_out.len(), model.dim());
    assert_eq!(gbuf.len(), model.dim());
    let m = grid.len() as f64;
    let mut acc = 0.0;
    grad_out.fill(0.0);
    for (&f, &sh) in grid.freqs().iter().zip(shat) {
        let s = model.eval_grad(params, f, gbuf)?;
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::Eval(format!(
                "model spectrum is not positive at frequency {f} (S = {s})"
            )));
        }
        acc += s.ln() + sh / s;
        // d/d theta of -(log S + shat/S) = -(1/S - shat/S^2) dS/d theta
        let w = 1.0 / s - sh / (s * s);
        for (g, &d) in grad_out.iter_mut().zip(gbuf.iter()) {
            *g -= w * d;
        }
    }
    for g in grad_out.iter_mut() {
        *g /= m;
    }
    Ok(-acc / m)
}

/// Whittle log-likelihood of `params` against a spectral estimate, together
/// with its analytic parameter gradient.
pub fn whittle_loglik(
    est: &SpectralEstimate,
    model: &dyn SdfModel,
    params: &[f64],
) -> Result<WhittleEval> {
    model.validate(params)?;
    let mut grad = vec![0.0; model.dim()];
    let mut gbuf = vec![0.0; model.dim()];
    let loglik =
        whittle_loglik_into(est.values(), est.grid(), model, params, &mut grad, &mut gbuf)?;
    Ok(WhittleEval { loglik, grad })
}

/// How a gradient step is kept inside the model's valid region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Projection {
    /// Apply the raw step.
    None,
    /// Halve the step length (up to [`MAX_STEP_HALVINGS`] times) until the
    /// stepped parameters validate.
    StationarityProject,
}

pub const MAX_STEP_HALVINGS: u32 = 30;

/// State of the online Whittle gradient-ascent estimator.
#[derive(Debug, Clone)]
pub struct FfweState {
    pub params: Vec<f64>,
    pub learn_rate: f64,
    pub projection: Projection,
    /// Per-coordinate step multipliers; `None` applies the raw learning
    /// rate to every coordinate. Used by models whose likelihood curvature
    /// differs by orders of magnitude across coordinates.
    pub step_scale: Option<Vec<f64>>,
    // scratch buffers so per-sample steps do not allocate
    grad: Vec<f64>,
    gbuf: Vec<f64>,
    candidate: Vec<f64>,
}

impl FfweState {
    pub fn new(params: Vec<f64>, learn_rate: f64, projection: Projection) -> Result<Self> {
        if !(learn_rate > 0.0 && learn_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "learning rate must be positive, got {learn_rate}"
            )));
        }
        let dim = params.len();
        Ok(Self {
            params,
            learn_rate,
            projection,
            step_scale: None,
            grad: vec![0.0; dim],
            gbuf: vec![0.0; dim],
            candidate: vec![0.0; dim],
        })
    }

    pub fn with_step_scale(mut self, scale: Vec<f64>) -> Result<Self> {
        if scale.len() != self.params.len() {
            return Err(Error::Parameter(format!(
                "step scale has length {}, expected {}",
                scale.len(),
                self.params.len()
            )));
        }
        if scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Parameter("step scales must be positive".into()));
        }
        self.step_scale = Some(scale);
        Ok(self)
    }

    /// One ascent step against the current spectral values. On success the
    /// evaluation (likelihood and gradient at the pre-step parameters) is
    /// returned; on error the state is unchanged.
    ///
    /// When the projection cannot find a valid stepped point even at the
    /// smallest halved scale (parameters pinned against the valid-region
    /// boundary with the gradient pointing outward), the step degenerates
    /// to zero length and the parameters stay put.
    pub fn step_values(
        &mut self,
        shat: &[f64],
        grid: &FrequencyGrid,
        model: &dyn SdfModel,
    ) -> Result<WhittleEval> {
        let loglik = whittle_loglik_into(
            shat,
            grid,
            model,
            &self.params,
            &mut self.grad,
            &mut self.gbuf,
        )?;
        if self.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Eval("non-finite likelihood gradient; step rejected".into()));
        }
        let mut scale = self.learn_rate;
        let mut accepted = false;
        for _ in 0..=MAX_STEP_HALVINGS {
            for (i, ((c, &p), &g)) in self
                .candidate
                .iter_mut()
                .zip(&self.params)
                .zip(&self.grad)
                .enumerate()
            {
                let s = self.step_scale.as_ref().map_or(1.0, |v| v[i]);
                *c = p + scale * s * g;
            }
            match self.projection {
                Projection::None => {
                    accepted = true;
                }
                Projection::StationarityProject => {
                    accepted = model.validate(&self.candidate).is_ok();
                }
            }
            if accepted {
                break;
            }
            scale *= 0.5;
        }
        if accepted {
            self.params.copy_from_slice(&self.candidate);
        }
        Ok(WhittleEval { loglik, grad: self.grad.clone() })
    }
}

/// One FFWE gradient-ascent step from a spectral estimate.
pub fn ffwe_step(
    state: &mut FfweState,
    est: &SpectralEstimate,
    model: &dyn SdfModel,
) -> Result<WhittleEval> {
    model.validate(&state.params)?;
    state.step_values(est.values(), est.grid(), model)
}

/// An axis of a likelihood surface: a parameter index and an inclusive,
/// evenly spaced range.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurfaceAxis {
    pub param_index: usize,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SurfaceAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + h * i as f64).collect()
    }
}

/// Whittle likelihood evaluated over a 2-D slice of the parameter space.
/// Cells where the parameters are invalid (or the spectrum fails to
/// evaluate) are kept as `None` rather than dropped.
#[derive(Debug, Clone)]
pub struct LikelihoodSurface {
    pub axis1_name: String,
    pub axis2_name: String,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Row-major: `values[i * axis2.len() + j]` belongs to
    /// `(axis1[i], axis2[j])`.
    pub values: Vec<Option<f64>>,
}

impl LikelihoodSurface {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.axis2.len() + j]
    }

    /// Coordinates of the largest valid cell, if any.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for i in 0..self.axis1.len() {
            for j in 0..self.axis2.len() {
                if let Some(v) = self.get(i, j) {
                    if best.map_or(true, |(_, b)| v > b) {
                        best = Some(((i, j), v));
                    }
                }
            }
        }
        best.map(|(ij, _)| ij)
    }

    /// CSV with axis-2 values as the header row and axis-1 values as the
    /// first column; invalid cells are written as `nan`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "{}\\{}", self.axis1_name, self.axis2_name)?;
        for v in &self.axis2 {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
        for (i, a) in self.axis1.iter().enumerate() {
            write!(w, "{a}")?;
            for j in 0..self.axis2.len() {
                match self.get(i, j) {
                    Some(v) => write!(w, ",{v}")?,
                    None => write!(w, ",nan")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Evaluate the Whittle likelihood on a 2-D grid over two parameters, the
/// rest held at `fixed`.
pub fn likelihood_surface(
    est: &SpectralEstimate,
    model: &dyn SdfModel,
    axis1: &SurfaceAxis,
    axis2: &SurfaceAxis,
    fixed: &[f64],
) -> Result<LikelihoodSurface> {
    if axis1.steps == 0 || axis2.steps == 0 {
        return Err(Error::Parameter("surface axis has zero steps".into()));
    }
    if fixed.len() != model.dim() {
        return Err(Error::Parameter(format!(
            "fixed parameter vector has length {}, model expects {}",
            fixed.len(),
            model.dim()
        )));
    }
    if axis1.param_index >= model.dim()
        || axis2.param_index >= model.dim()
        || axis1.param_index == axis2.param_index
    {
        return Err(Error::Parameter("surface axes must be two distinct parameters".into()));
    }
    let names = model.param_names();
    let a1 = axis1.values();
    let a2 = axis2.values();
    let mut values = Vec::with_capacity(a1.len() * a2.len());
    let mut params = fixed.to_vec();
    let mut grad = vec![0.0; model.dim()];
    let mut gbuf = vec![0.0; model.dim()];
    for &v1 in &a1 {
        for &v2 in &a2 {
            params[axis1.param_index] = v1;
            params[axis2.param_index] = v2;
            let cell = if model.validate(&params).is_ok() {
                whittle_loglik_into(est.values(), est.grid(), model, &params, &mut grad, &mut gbuf)
                    .ok()
            } else {
                None
            };
            values.push(cell);
        }
    }
    Ok(LikelihoodSurface {
        axis1_name: names[axis1.param_index].clone(),
        axis2_name: names[axis2.param_index].clone(),
        axis1: a1,
        axis2: a2,
        values,
    })
}
