//! Autoregressive spectral density family.
//!
//! An AR(p) process X_t = sum_j phi_j X_{t-j} + eps_t with innovation
//! variance sigma^2 has SDF
//!
//! ```text
//! S(f) = sigma^2 / |1 - sum_j phi_j exp(-i 2 pi j f)|^2
//! ```
//!
//! The family is parameterised as [phi_1, ..., phi_p, log sigma^2]; the log
//! scale keeps gradient ascent unconstrained in the variance coordinate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

use super::SdfModel;

/// AR coefficients plus log innovation variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArParams {
    pub phi: Vec<f64>,
    pub log_sigma2: f64,
}

impl ArParams {
    /// Build and validate: finite coefficients, phi_p != 0 when p >= 1,
    /// stationarity.
    pub fn new(phi: Vec<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Parameter(format!(
                "innovation variance must be positive, got {sigma2}"
            )));
        }
        if phi.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("non-finite AR coefficient".into()));
        }
        if let Some(&last) = phi.last() {
            if last == 0.0 {
                return Err(Error::Parameter(
                    "phi_p must be nonzero; reduce the model order instead".into(),
                ));
            }
        }
        let params = Self { phi, log_sigma2: sigma2.ln() };
        if !params.is_stationary() {
            return Err(Error::Domain(format!(
                "AR coefficients {:?} are not stationary",
                params.phi
            )));
        }
        Ok(params)
    }

    pub fn p(&self) -> usize {
        self.phi.len()
    }

    pub fn sigma2(&self) -> f64 {
        self.log_sigma2.exp()
    }

    /// Stationarity of the coefficient vector.
    ///
    /// Uses the reflection-coefficient (Schur-Cohn) recursion, which decides
    /// "all roots of 1 - sum phi_j z^j outside the unit circle" in O(p^2)
    /// without an eigensolve; `root_moduli` provides the eigenvalue route
    /// for diagnostics and cross-checks.
    pub fn is_stationary(&self) -> bool {
        phi_is_stationary(&self.phi)
    }

    /// Moduli of the companion-matrix eigenvalues (the inverse roots of the
    /// characteristic polynomial). Stationarity is equivalent to all of
    /// these being < 1.
    pub fn root_moduli(&self) -> Vec<f64> {
        companion_eigenvalues(&self.phi)
            .iter()
            .map(|z| z.norm())
            .collect()
    }

    /// Parameter vector in the order used by [`ArSdf`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.phi.clone();
        v.push(self.log_sigma2);
        v
    }

    /// Rebuild from an [`ArSdf`] parameter vector without validity checks.
    pub fn from_vec(v: &[f64]) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Parameter("empty AR parameter vector".into()));
        }
        Ok(Self { phi: v[..v.len() - 1].to_vec(), log_sigma2: v[v.len() - 1] })
    }
}

/// Schur-Cohn stationarity test on AR coefficients.
pub(crate) fn phi_is_stationary(phi: &[f64]) -> bool {
    if phi.iter().any(|c| !c.is_finite()) {
        return false;
    }
    let mut a = phi.to_vec();
    let mut next = vec![0.0; a.len()];
    for m in (1..=phi.len()).rev() {
        let kappa = a[m - 1];
        if kappa.abs() >= 1.0 {
            return false;
        }
        if m > 1 {
            let denom = 1.0 - kappa * kappa;
            for j in 0..m - 1 {
                next[j] = (a[j] + kappa * a[m - 2 - j]) / denom;
            }
            a[..m - 1].copy_from_slice(&next[..m - 1]);
        }
    }
    true
}

/// Eigenvalues of the AR companion matrix.
pub(crate) fn companion_eigenvalues(phi: &[f64]) -> Vec<Complex64> {
    let p = phi.len();
    if p == 0 {
        return Vec::new();
    }
    if p == 1 {
        return vec![Complex64::new(phi[0], 0.0)];
    }
    let mut m = nalgebra::DMatrix::<f64>::zeros(p, p);
    for (j, &c) in phi.iter().enumerate() {
        m[(0, j)] = c;
    }
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect()
}

/// AR(2) coefficients from the polar form of a complex conjugate root pair
/// z0 = (1/r) exp(+-i 2 pi f'): phi_1 = 2 r cos(2 pi f'), phi_2 = -r^2.
pub fn ar2_from_polar(r: f64, f_prime: f64) -> Result<(f64, f64)> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Parameter(format!(
            "root modulus parameter r must lie in (0, 1), got {r}"
        )));
    }
    if !(f_prime > 0.0 && f_prime < 0.5) {
        return Err(Error::Parameter(format!(
            "peak frequency must lie in (0, 1/2), got {f_prime}"
        )));
    }
    Ok((2.0 * r * (TAU * f_prime).cos(), -r * r))
}

fn eval_raw(phi: &[f64], log_sigma2: f64, f: f64) -> Result<f64> {
    let z = Complex64::from_polar(1.0, -TAU * f);
    let mut zj = Complex64::ONE;
    let mut pol = Complex64::ONE;
    for &c in phi {
        zj *= z;
        pol -= c * zj;
    }
    let a2 = pol.norm_sqr();
    if a2 <= 0.0 || !a2.is_finite() {
        return Err(Error::Eval(format!(
            "AR characteristic polynomial vanishes at frequency {f}"
        )));
    }
    Ok(log_sigma2.exp() / a2)
}

/// AR(p) SDF at frequency `f`, with an explicit stationarity check.
pub fn ar_sdf(params: &ArParams, f: f64) -> Result<f64> {
    if !params.is_stationary() {
        return Err(Error::Domain(format!(
            "AR coefficients {:?} are not stationary",
            params.phi
        )));
    }
    eval_raw(&params.phi, params.log_sigma2, f)
}

/// Gradient of the AR(p) SDF over [phi_1..phi_p, log sigma^2].
/// Note d S / d log sigma^2 = S.
pub fn ar_sdf_grad(params: &ArParams, f: f64) -> Result<Vec<f64>> {
    if !params.is_stationary() {
        return Err(Error::Domain(format!(
            "AR coefficients {:?} are not stationary",
            params.phi
        )));
    }
    let model = ArSdf::new(params.p());
    let v = params.to_vec();
    let mut out = vec![0.0; v.len()];
    model.grad(&v, f, &mut out)?;
    Ok(out)
}

/// The AR(p) family as an [`SdfModel`] over [phi_1..phi_p, log sigma^2].
///
/// Unlike [`ArParams`], the family imposes only stationarity (phi_p may
/// pass through zero while a gradient path wanders).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArSdf {
    p: usize,
}

impl ArSdf {
    pub fn new(p: usize) -> Self {
        Self { p }
    }

    /// White noise: AR(0), a flat spectrum at level sigma^2.
    pub fn white_noise() -> Self {
        Self { p: 0 }
    }

    pub fn order(&self) -> usize {
        self.p
    }
}

impl SdfModel for ArSdf {
    fn dim(&self) -> usize {
        self.p + 1
    }

    fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.p).map(|j| format!("phi{j}")).collect();
        names.push("log_sigma2".into());
        names
    }

    fn validate(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.dim() {
            return Err(Error::Parameter(format!(
                "AR({}) expects {} parameters, got {}",
                self.p,
                self.dim(),
                params.len()
            )));
        }
        if params.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("non-finite AR parameter".into()));
        }
        if !phi_is_stationary(&params[..self.p]) {
            return Err(Error::Domain(format!(
                "AR coefficients {:?} are not stationary",
                &params[..self.p]
            )));
        }
        Ok(())
    }

    fn eval(&self, params: &[f64], f: f64) -> Result<f64> {
        eval_raw(&params[..self.p], params[self.p], f)
    }

    fn grad(&self, params: &[f64], f: f64, out: &mut [f64]) -> Result<()> {
        self.eval_grad(params, f, out)?;
        Ok(())
    }

    fn eval_grad(&self, params: &[f64], f: f64, grad_out: &mut [f64]) -> Result<f64> {
        let phi = &params[..self.p];
        let z = Complex64::from_polar(1.0, -TAU * f);
        let mut zj = Complex64::ONE;
        let mut pol = Complex64::ONE;
        for &c in phi {
            zj *= z;
            pol -= c * zj;
        }
        let a2 = pol.norm_sqr();
        if a2 <= 0.0 || !a2.is_finite() {
            return Err(Error::Eval(format!(
                "AR characteristic polynomial vanishes at frequency {f}"
            )));
        }
        let s = params[self.p].exp() / a2;
        let pc = pol.conj();
        let scale = 2.0 * s / a2;
        zj = Complex64::ONE;
        for g in grad_out.iter_mut().take(self.p) {
            zj *= z;
            *g = scale * (pc * zj).re;
        }
        grad_out[self.p] = s;
        Ok(s)
    }
}
