//! Parametric spectral density families with analytic parameter gradients.

mod ar;
mod ocean;

pub use ar::{ar2_from_polar, ar_sdf, ar_sdf_grad, ArParams, ArSdf};
pub use ocean::{ocean_sdf, ocean_sdf_grad, OceanParams, OceanSdf, OceanSdfLog};

use crate::error::Result;

/// A parametric SDF family: pointwise evaluation S(f) > 0 plus the gradient
/// with respect to the parameter vector.
///
/// `eval` and `grad` assume `validate` has passed; estimation loops validate
/// once per step, not once per frequency.
pub trait SdfModel: Send + Sync {
    /// Length of the parameter vector.
    fn dim(&self) -> usize;

    /// Parameter names, in vector order (used for CSV headers and CLI axes).
    fn param_names(&self) -> Vec<String>;

    /// Check that the parameter vector lies in the model's valid region.
    fn validate(&self, params: &[f64]) -> Result<()>;

    /// Spectral density at frequency `f` (cycles per sample).
    fn eval(&self, params: &[f64], f: f64) -> Result<f64>;

    /// Gradient of S with respect to the parameters, written into `out`.
    fn grad(&self, params: &[f64], f: f64, out: &mut [f64]) -> Result<()>;

    /// Evaluate S and its gradient in one pass.
    fn eval_grad(&self, params: &[f64], f: f64, grad_out: &mut [f64]) -> Result<f64> {
        self.grad(params, f, grad_out)?;
        self.eval(params, f)
    }
}
