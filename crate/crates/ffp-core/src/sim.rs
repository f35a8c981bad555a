//! Seeded generators for the processes used throughout the experiments:
//! a sinusoid with drifting instantaneous frequency in Gaussian noise,
//! AR(p) streams with change-points, and a modulated complex AR(1).
//!
//! Generators are pure functions of (spec, stream index): identical inputs
//! reproduce identical series on any machine or thread count. Monte Carlo
//! replication uses one RNG stream per replication.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::sdf::ArParams;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sinusoid with a slowly cycling instantaneous frequency
/// g'(t) = (1 + 0.6 sin(gamma t)) / 4, which stays inside [0.1, 0.4]
/// cycles per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidDriftSpec {
    pub len: usize,
    /// Drift rate; larger values cycle the instantaneous frequency faster.
    pub gamma: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub noise_sd: f64,
    pub seed: u64,
}

impl SinusoidDriftSpec {
    fn check(&self) -> Result<()> {
        if self.len == 0 {
            return Err(Error::Parameter("series length must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Parameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise standard deviation must be nonnegative, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }

    /// Phase-modulation function g(t) = t/4 + 3 (1 - cos(gamma t)) / (20 gamma).
    pub fn g(&self, t: f64) -> f64 {
        t / 4.0 + 3.0 / (20.0 * self.gamma) * (1.0 - (self.gamma * t).cos())
    }

    /// Instantaneous frequency g'(t), cycles per sample.
    pub fn g_prime(&self, t: f64) -> f64 {
        (1.0 + 0.6 * (self.gamma * t).sin()) / 4.0
    }
}

/// Generate x_t = sin(2 pi g(t) + zeta) + noise, zeta ~ U[-pi, pi] drawn
/// once per replication; returns the series and the ground-truth g'(t).
pub fn gen_sinusoid_drift(spec: &SinusoidDriftSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    gen_sinusoid_drift_stream(spec, 0)
}

/// Replication variant: `stream` selects an independent RNG stream.
pub fn gen_sinusoid_drift_stream(
    spec: &SinusoidDriftSpec,
    stream: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.check()?;
    let mut rng = rng_for(spec.seed, stream);
    let zeta = rng.random_range(-PI..PI);
    let mut xs = Vec::with_capacity(spec.len);
    let mut gprime = Vec::with_capacity(spec.len);
    for t in 1..=spec.len {
        let tf = t as f64;
        let noise: f64 = rng.sample(StandardNormal);
        xs.push((TAU * spec.g(tf) + zeta).sin() + spec.noise_sd * noise);
        gprime.push(spec.g_prime(tf));
    }
    Ok((xs, gprime))
}

/// Piecewise-AR stream: each segment runs from its start index (1-based)
/// to the next segment's start; the last-p history carries across
/// change-points, only the parameters switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArSegmentSpec {
    /// (start_t, parameters), start_t strictly increasing, first at 1.
    pub segments: Vec<(usize, ArParams)>,
    pub len: usize,
    /// Samples generated and discarded before t = 1; defaults to
    /// 10 p / (1 - max root modulus) of the first segment, capped at 5000.
    #[serde(default)]
    pub burn_in: Option<usize>,
    pub seed: u64,
}

impl ArSegmentSpec {
    fn check(&self) -> Result<()> {
        if self.len == 0 {
            return Err(Error::Parameter("series length must be positive".into()));
        }
        if self.segments.is_empty() {
            return Err(Error::Parameter("at least one AR segment is required".into()));
        }
        if self.segments[0].0 != 1 {
            return Err(Error::Parameter("first segment must start at t = 1".into()));
        }
        for pair in self.segments.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Parameter("segment starts must be strictly increasing".into()));
            }
        }
        if let Some(&(last, _)) = self.segments.last() {
            if last > self.len {
                return Err(Error::Parameter(format!(
                    "segment start {last} beyond series length {}",
                    self.len
                )));
            }
        }
        for (start, params) in &self.segments {
            if !(params.sigma2() > 0.0 && params.sigma2().is_finite()) {
                return Err(Error::Parameter(format!(
                    "segment at t = {start}: innovation variance must be positive"
                )));
            }
            if !params.is_stationary() {
                return Err(Error::Domain(format!(
                    "segment at t = {start} has nonstationary coefficients {:?}",
                    params.phi
                )));
            }
        }
        Ok(())
    }

    fn default_burn_in(&self) -> usize {
        let params = &self.segments[0].1;
        let p = params.p();
        if p == 0 {
            return 0;
        }
        let max_mod = params.root_moduli().into_iter().fold(0.0, f64::max);
        let denom = (1.0 - max_mod).max(1e-6);
        ((10.0 * p as f64 / denom).ceil() as usize).min(5000)
    }
}

pub fn gen_ar(spec: &ArSegmentSpec) -> Result<Vec<f64>> {
    gen_ar_stream(spec, 0)
}

pub fn gen_ar_stream(spec: &ArSegmentSpec, stream: u64) -> Result<Vec<f64>> {
    spec.check()?;
    let mut rng = rng_for(spec.seed, stream);
    let burn_in = spec.burn_in.unwrap_or_else(|| spec.default_burn_in());
    let max_p = spec.segments.iter().map(|(_, p)| p.p()).max().unwrap_or(0);
    // history[0] is x_{t-1}, history[1] is x_{t-2}, ...
    let mut history = vec![0.0; max_p];
    let mut out = Vec::with_capacity(spec.len);
    let mut seg_idx = 0;
    let first = &spec.segments[0].1;
    let mut phi: &[f64] = &first.phi;
    let mut sd = first.sigma2().sqrt();

    let push = |history: &mut Vec<f64>, x: f64| {
        if !history.is_empty() {
            history.rotate_right(1);
            history[0] = x;
        }
    };

    for _ in 0..burn_in {
        let eps: f64 = rng.sample(StandardNormal);
        let mut x = sd * eps;
        for (c, past) in phi.iter().zip(history.iter()) {
            x += c * past;
        }
        push(&mut history, x);
    }
    for t in 1..=spec.len {
        while seg_idx + 1 < spec.segments.len() && spec.segments[seg_idx + 1].0 == t {
            seg_idx += 1;
            let params = &spec.segments[seg_idx].1;
            phi = &params.phi;
            sd = params.sigma2().sqrt();
        }
        let eps: f64 = rng.sample(StandardNormal);
        let mut x = sd * eps;
        for (c, past) in phi.iter().zip(history.iter()) {
            x += c * past;
        }
        push(&mut history, x);
        out.push(x);
    }
    Ok(out)
}

/// Deterministic phase-increment path for the modulated AR(1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BetaPath {
    /// Constant phase advance per sample, radians.
    Const { beta: f64 },
    /// Explicit per-sample phase increments, radians.
    Radians { values: Vec<f64> },
    /// Derived from a peak-frequency path: beta_t = 2 pi omega_t.
    FromOmega { omega: Vec<f64> },
}

/// Modulated complex AR(1): Z_t = r exp(i beta_t) Z_{t-1} + eps_t with
/// circularly symmetric Gaussian innovations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulatedCar1Spec {
    pub len: usize,
    pub r: f64,
    pub beta: BetaPath,
    pub sigma2: f64,
    pub seed: u64,
}

impl ModulatedCar1Spec {
    fn check(&self) -> Result<()> {
        if self.len == 0 {
            return Err(Error::Parameter("series length must be positive".into()));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::Parameter(format!(
                "modulus r must lie in (0, 1), got {}",
                self.r
            )));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Parameter(format!(
                "innovation variance must be positive, got {}",
                self.sigma2
            )));
        }
        let path_len = match &self.beta {
            BetaPath::Const { .. } => self.len,
            BetaPath::Radians { values } => values.len(),
            BetaPath::FromOmega { omega } => omega.len(),
        };
        if path_len != self.len {
            return Err(Error::Parameter(format!(
                "phase path has length {path_len}, expected {}",
                self.len
            )));
        }
        Ok(())
    }

    fn beta_at(&self, i: usize) -> f64 {
        match &self.beta {
            BetaPath::Const { beta } => *beta,
            BetaPath::Radians { values } => values[i],
            BetaPath::FromOmega { omega } => TAU * omega[i],
        }
    }
}

/// Generate the modulated complex AR(1); the second output is the
/// ground-truth omega path when the spec carries one.
pub fn gen_modulated_car1(
    spec: &ModulatedCar1Spec,
) -> Result<(Vec<Complex64>, Option<Vec<f64>>)> {
    gen_modulated_car1_stream(spec, 0)
}

pub fn gen_modulated_car1_stream(
    spec: &ModulatedCar1Spec,
    stream: u64,
) -> Result<(Vec<Complex64>, Option<Vec<f64>>)> {
    spec.check()?;
    let mut rng = rng_for(spec.seed, stream);
    // CN(0, v): independent real and imaginary parts of variance v/2
    let cn = |v: f64, rng: &mut ChaCha8Rng| -> Complex64 {
        let sd = (v / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(sd * re, sd * im)
    };
    let mut z = cn(spec.sigma2 / (1.0 - spec.r * spec.r), &mut rng);
    let mut out = Vec::with_capacity(spec.len);
    for i in 0..spec.len {
        let rot = Complex64::from_polar(spec.r, spec.beta_at(i));
        z = rot * z + cn(spec.sigma2, &mut rng);
        out.push(z);
    }
    let truth = match &spec.beta {
        BetaPath::FromOmega { omega } => Some(omega.clone()),
        _ => None,
    };
    Ok((out, truth))
}

/// Inertial frequency from latitude: omega_t = -k sin(latitude_t), with
/// latitude in degrees.
pub fn omega_from_latitude(lat_deg: &[f64], coriolis_k: f64) -> Vec<f64> {
    lat_deg
        .iter()
        .map(|&d| -coriolis_k * (d * PI / 180.0).sin())
        .collect()
}
