//! Lorentzian-plus-background spectral model for inertial oscillations in
//! drifter velocity streams.
//!
//! ```text
//! S(f) = A^2 / ((f - omega)^2 + damp^2)  +  B / (omega^2 + h^2)^alpha
//! ```
//!
//! The damping parameter is named `damp` here (the usual symbol collides
//! with the forgetting factor). As printed, the background term depends on
//! the peak frequency omega rather than f; `background_in_f` substitutes f
//! for sensitivity checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::SdfModel;

/// Parameters of the inertial-peak model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OceanParams {
    /// Peak amplitude scale, > 0.
    pub amp_a: f64,
    /// Lorentzian half-width at half maximum, > 0.
    pub damp: f64,
    /// Background level, >= 0.
    pub back_b: f64,
    /// Background bandwidth parameter, > 0.
    pub back_h: f64,
    /// Background slope exponent, > 0.
    pub slope_alpha: f64,
    /// Inertial peak frequency, in (-1/2, 1/2).
    pub omega: f64,
}

impl OceanParams {
    pub fn new(
        amp_a: f64,
        damp: f64,
        back_b: f64,
        back_h: f64,
        slope_alpha: f64,
        omega: f64,
    ) -> Result<Self> {
        let p = Self { amp_a, damp, back_b, back_h, slope_alpha, omega };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        let positives = [
            ("amp_a", self.amp_a),
            ("damp", self.damp),
            ("back_h", self.back_h),
            ("slope_alpha", self.slope_alpha),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.back_b >= 0.0 && self.back_b.is_finite()) {
            return Err(Error::Parameter(format!(
                "back_b must be nonnegative, got {}",
                self.back_b
            )));
        }
        if !(self.omega.abs() < 0.5 && self.omega.is_finite()) {
            return Err(Error::Parameter(format!(
                "omega must lie strictly inside (-1/2, 1/2), got {}",
                self.omega
            )));
        }
        Ok(())
    }

    /// Parameter vector in the order used by [`OceanSdf`]:
    /// [amp_a, damp, back_b, back_h, slope_alpha, omega].
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.amp_a, self.damp, self.back_b, self.back_h, self.slope_alpha, self.omega]
    }

    pub fn from_vec(v: &[f64]) -> Result<Self> {
        if v.len() != 6 {
            return Err(Error::Parameter(format!(
                "ocean model expects 6 parameters, got {}",
                v.len()
            )));
        }
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }
}

/// Spectral value at frequency `f`.
pub fn ocean_sdf(params: &OceanParams, f: f64) -> Result<f64> {
    params.check()?;
    OceanSdf::default().eval(&params.to_vec(), f)
}

/// Gradient over (amp_a, damp, back_b, back_h, slope_alpha, omega).
pub fn ocean_sdf_grad(params: &OceanParams, f: f64) -> Result<Vec<f64>> {
    params.check()?;
    let mut out = vec![0.0; 6];
    OceanSdf::default().grad(&params.to_vec(), f, &mut out)?;
    Ok(out)
}

/// The ocean family as an [`SdfModel`] over the raw parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OceanSdf {
    /// Evaluate the background term at f instead of omega.
    pub background_in_f: bool,
}

impl Default for OceanSdf {
    fn default() -> Self {
        Self { background_in_f: false }
    }
}

const NAMES: [&str; 6] = ["amp_a", "damp", "back_b", "back_h", "slope_alpha", "omega"];

impl SdfModel for OceanSdf {
    fn dim(&self) -> usize {
        6
    }

    fn param_names(&self) -> Vec<String> {
        NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn validate(&self, params: &[f64]) -> Result<()> {
        OceanParams::from_vec(params)?;
        Ok(())
    }

    fn eval(&self, params: &[f64], f: f64) -> Result<f64> {
        let mut scratch = [0.0; 6];
        self.eval_grad_inner(params, f, &mut scratch, false)
    }

    fn grad(&self, params: &[f64], f: f64, out: &mut [f64]) -> Result<()> {
        self.eval_grad_inner(params, f, out, true)?;
        Ok(())
    }

    fn eval_grad(&self, params: &[f64], f: f64, grad_out: &mut [f64]) -> Result<f64> {
        self.eval_grad_inner(params, f, grad_out, true)
    }
}

impl OceanSdf {
    fn eval_grad_inner(
        &self,
        params: &[f64],
        f: f64,
        out: &mut [f64],
        want_grad: bool,
    ) -> Result<f64> {
        let [a, damp, b, h, alpha, omega] = params else {
            return Err(Error::Parameter(format!(
                "ocean model expects 6 parameters, got {}",
                params.len()
            )));
        };
        let df = f - omega;
        let g = df * df + damp * damp;
        if g <= 0.0 {
            return Err(Error::Eval(format!("vanishing Lorentzian denominator at f = {f}")));
        }
        let peak = a * a / g;
        let qbase = if self.background_in_f { f } else { *omega };
        let q = qbase * qbase + h * h;
        if q <= 0.0 {
            return Err(Error::Eval(format!("vanishing background base at f = {f}")));
        }
        let qma = q.powf(-alpha);
        let s = peak + b * qma;
        if !s.is_finite() {
            return Err(Error::Eval(format!("non-finite spectral value at f = {f}")));
        }
        if want_grad {
            out[0] = 2.0 * a / g;
            out[1] = -2.0 * damp * peak / g;
            out[2] = qma;
            out[3] = -2.0 * alpha * h * b * qma / q;
            out[4] = -b * qma * q.ln();
            out[5] = 2.0 * peak * df / g
                + if self.background_in_f {
                    0.0
                } else {
                    -2.0 * alpha * omega * b * qma / q
                };
        }
        Ok(s)
    }
}

/// Ocean family over log-scaled positive parameters:
/// [ln amp_a, ln damp, ln back_b, ln back_h, ln slope_alpha, omega].
///
/// Gradient ascent in this coordinate system is unconstrained in all
/// positivity directions and naturally step-scales parameters of very
/// different magnitudes; estimation paths use it, while reporting converts
/// back to the raw parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OceanSdfLog {
    pub inner: OceanSdf,
}

impl OceanSdfLog {
    pub fn to_raw(params: &[f64]) -> Vec<f64> {
        let mut raw = params.to_vec();
        for v in raw.iter_mut().take(5) {
            *v = v.exp();
        }
        raw
    }

    pub fn from_raw(raw: &[f64]) -> Vec<f64> {
        let mut p = raw.to_vec();
        for v in p.iter_mut().take(5) {
            *v = v.ln();
        }
        p
    }
}

impl SdfModel for OceanSdfLog {
    fn dim(&self) -> usize {
        6
    }

    fn param_names(&self) -> Vec<String> {
        ["log_amp_a", "log_damp", "log_back_b", "log_back_h", "log_slope_alpha", "omega"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn validate(&self, params: &[f64]) -> Result<()> {
        if params.len() != 6 {
            return Err(Error::Parameter(format!(
                "ocean model expects 6 parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite ocean parameter".into()));
        }
        // keep exp() of every log coordinate finite and nonzero
        if params[..5].iter().any(|v| v.abs() > 300.0) {
            return Err(Error::Parameter(
                "log-scale ocean parameter outside [-300, 300]".into(),
            ));
        }
        if params[5].abs() >= 0.5 {
            return Err(Error::Parameter(format!(
                "omega must lie strictly inside (-1/2, 1/2), got {}",
                params[5]
            )));
        }
        Ok(())
    }

    fn eval(&self, params: &[f64], f: f64) -> Result<f64> {
        self.inner.eval(&Self::to_raw(params), f)
    }

    fn grad(&self, params: &[f64], f: f64, out: &mut [f64]) -> Result<()> {
        self.eval_grad(params, f, out)?;
        Ok(())
    }

    fn eval_grad(&self, params: &[f64], f: f64, grad_out: &mut [f64]) -> Result<f64> {
        let raw = Self::to_raw(params);
        let s = self.inner.eval_grad(&raw, f, grad_out)?;
        for i in 0..5 {
            grad_out[i] *= raw[i];
        }
        Ok(s)
    }
}
