//! Recursive forgetting-factor periodogram.
//!
//! The estimator keeps, per grid frequency, a geometrically down-weighted
//! DFT accumulator `J` together with a scalar normalizer `C`, and updates
//! both in O(1) per sample:
//!
//! ```text
//! J(f) <- lambda * J(f) + x * exp(-i 2 pi f (T+1))
//! C    <- lambda^2 * C + 1
//! ```
//!
//! The spectral estimate is `|J(f)|^2 / C`. With `lambda = 1` this is the
//! classical periodogram, updated sequentially. Memory is fixed at the grid
//! size regardless of how many samples have been absorbed.
//!
//! Streams with unknown (possibly drifting) mean are handled by sequential
//! centering: a weighted running mean with its own normalizer `D` feeds a
//! second accumulator `J_mean`, and the estimate uses `J - J_mean`.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;

/// Phase recurrences are renormalized from the absolute sample index this
/// often, which bounds rotator drift on arbitrarily long streams.
const PHASE_RENORM_PERIOD: u64 = 1 << 16;

/// How the state treats the process mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Centering {
    /// The stream is taken as already zero-mean.
    None,
    /// A forgetting-weighted running mean is estimated and subtracted
    /// within the accumulators.
    Sequential,
}

/// Exact phase factor exp(-i 2 pi f t).
///
/// Rational frequencies use integer arithmetic modulo the denominator, so
/// the phase is exact for any t; other frequencies reduce f*t into
/// [-1/2, 1/2] in f64, which keeps the absolute phase error near machine
/// precision for any realistic stream length.
fn phase_at(f: f64, rational: Option<(i64, i64)>, t: u64) -> Complex64 {
    let angle = match rational {
        Some((num, den)) => {
            let tm = (t % den as u64) as i64;
            let pm = (tm * num).rem_euclid(den);
            -TAU * pm as f64 / den as f64
        }
        None => {
            let r = f * t as f64;
            -TAU * (r - r.round())
        }
    };
    Complex64::from_polar(1.0, angle)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Parameter(format!(
            "forgetting factor must lie in (0, 1], got {lambda}"
        )));
    }
    Ok(())
}

fn check_sample(x: Complex64) -> Result<()> {
    if !x.re.is_finite() || !x.im.is_finite() {
        return Err(Error::Input(format!("non-finite sample {x}")));
    }
    Ok(())
}

/// Spectral estimate on a frequency grid: nonnegative power per unit
/// frequency, together with the sample count it was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    grid: FrequencyGrid,
    values: Vec<f64>,
    t: u64,
}

impl SpectralEstimate {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>, t: u64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Parameter(format!(
                "estimate has {} values for a grid of {} frequencies",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Parameter(
                "spectral values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { grid, values, t })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t(&self) -> u64 {
        self.t
    }
}

/// Per-frequency forgetting-factor DFT state plus normalizers.
#[derive(Debug, Clone)]
pub struct ForgettingState {
    grid: FrequencyGrid,
    t: u64,
    lambda: f64,
    centering: Centering,
    /// Forgetting factor of the running mean; `None` follows `lambda`.
    centering_lambda: Option<f64>,
    j: Vec<Complex64>,
    c: f64,
    mean_bar: Complex64,
    d: f64,
    j_mean: Vec<Complex64>,
    // Rotating phase factors exp(-i 2 pi f t), advanced once per sample.
    phase: Vec<Complex64>,
    phase_step: Vec<Complex64>,
}

impl ForgettingState {
    pub fn new(grid: FrequencyGrid, lambda: f64, centering: Centering) -> Result<Self> {
        check_lambda(lambda)?;
        let m = grid.len();
        let phase_step = grid
            .freqs()
            .iter()
            .enumerate()
            .map(|(k, &f)| phase_at(f, grid.rationals().map(|r| r[k]), 1))
            .collect();
        let j_mean = match centering {
            Centering::None => Vec::new(),
            Centering::Sequential => vec![Complex64::ZERO; m],
        };
        Ok(Self {
            grid,
            t: 0,
            lambda,
            centering,
            centering_lambda: None,
            j: vec![Complex64::ZERO; m],
            c: 0.0,
            mean_bar: Complex64::ZERO,
            d: 0.0,
            j_mean,
            phase: vec![Complex64::ONE; m],
            phase_step,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Change the forgetting factor applied from the next update on.
    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        check_lambda(lambda)?;
        self.lambda = lambda;
        Ok(())
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    /// Give the running mean its own forgetting factor instead of
    /// following the periodogram's.
    pub fn with_centering_lambda(mut self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        self.centering_lambda = Some(lambda);
        Ok(self)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn mean_bar(&self) -> Complex64 {
        self.mean_bar
    }

    pub fn j(&self) -> &[Complex64] {
        &self.j
    }

    pub fn j_mean(&self) -> &[Complex64] {
        &self.j_mean
    }

    /// Accumulator actually entering the estimate: J - J_mean.
    pub(crate) fn j_effective(&self, k: usize) -> Complex64 {
        match self.centering {
            Centering::None => self.j[k],
            Centering::Sequential => self.j[k] - self.j_mean[k],
        }
    }

    fn advance_phase(&mut self) {
        // self.t has already been incremented to the index of the new sample.
        if self.t % PHASE_RENORM_PERIOD == 0 {
            let rats = self.grid.rationals();
            for (k, (p, &f)) in self.phase.iter_mut().zip(self.grid.freqs()).enumerate() {
                *p = phase_at(f, rats.map(|r| r[k]), self.t);
            }
        } else {
            for (p, s) in self.phase.iter_mut().zip(&self.phase_step) {
                *p *= *s;
            }
        }
    }

    /// Absorb one sample. Each sample is read exactly once; cost is O(M).
    pub fn update(&mut self, x: Complex64) -> Result<()> {
        check_sample(x)?;
        self.t += 1;
        self.advance_phase();
        let lambda = self.lambda;
        for (j, p) in self.j.iter_mut().zip(&self.phase) {
            *j = lambda * *j + x * *p;
        }
        self.c = lambda * lambda * self.c + 1.0;
        if self.centering == Centering::Sequential {
            let lambda_mean = self.centering_lambda.unwrap_or(lambda);
            let d_new = lambda_mean * self.d + 1.0;
            // Equivalent to (lambda d / d_new) mean + x / d_new; this form
            // propagates a constant stream without rounding.
            self.mean_bar += (x - self.mean_bar) / d_new;
            self.d = d_new;
            let m = self.mean_bar;
            for (jm, p) in self.j_mean.iter_mut().zip(&self.phase) {
                *jm = lambda * *jm + m * *p;
            }
        }
        Ok(())
    }

    /// Write the current spectral values into `out` without allocating.
    pub fn ffp_values_into(&self, out: &mut [f64]) -> Result<()> {
        if self.t == 0 {
            return Err(Error::State(
                "no samples absorbed yet; the estimate is undefined (C = 0)".into(),
            ));
        }
        assert_eq!(out.len(), self.grid.len());
        match self.centering {
            Centering::None => {
                for (o, j) in out.iter_mut().zip(&self.j) {
                    *o = j.norm_sqr() / self.c;
                }
            }
            Centering::Sequential => {
                for ((o, j), jm) in out.iter_mut().zip(&self.j).zip(&self.j_mean) {
                    *o = (*j - *jm).norm_sqr() / self.c;
                }
            }
        }
        Ok(())
    }

    /// Current forgetting-factor periodogram.
    pub fn ffp(&self) -> Result<SpectralEstimate> {
        let mut values = vec![0.0; self.grid.len()];
        self.ffp_values_into(&mut values)?;
        Ok(SpectralEstimate { grid: self.grid.clone(), values, t: self.t })
    }

    /// Heap bytes held by the state; independent of how many samples have
    /// been absorbed.
    pub fn heap_footprint_bytes(&self) -> usize {
        use std::mem::size_of;
        self.j.capacity() * size_of::<Complex64>()
            + self.j_mean.capacity() * size_of::<Complex64>()
            + self.phase.capacity() * size_of::<Complex64>()
            + self.phase_step.capacity() * size_of::<Complex64>()
            + self.grid.freqs().len() * size_of::<f64>()
    }
}

/// Forgetting taper weights h_t for T samples under the factor sequence
/// lambda_seq = (lambda_1, ..., lambda_{T-1}):
/// h_t = prod_{s=t..T-1} lambda_s, h_T = 1.
fn taper_weights(lambda_seq: &[f64], t_len: usize) -> Result<Vec<f64>> {
    if lambda_seq.len() + 1 != t_len {
        return Err(Error::Parameter(format!(
            "lambda sequence has length {}, expected T-1 = {}",
            lambda_seq.len(),
            t_len - 1
        )));
    }
    for &l in lambda_seq {
        check_lambda(l)?;
    }
    let mut h = vec![1.0; t_len];
    for i in (0..t_len - 1).rev() {
        h[i] = h[i + 1] * lambda_seq[i];
    }
    Ok(h)
}

/// Direct O(T*M) evaluation of the weighted DFT and its normalizer:
/// J(f) = sum_t h_t x_t exp(-i 2 pi f t), C = sum_t h_t^2.
///
/// This is the test oracle for the recursive updates; it never appears in
/// streaming paths.
pub fn batch_weighted_dft(
    samples: &[Complex64],
    lambda_seq: &[f64],
    grid: &FrequencyGrid,
) -> Result<(Vec<Complex64>, f64)> {
    if samples.is_empty() {
        return Err(Error::Parameter("no samples".into()));
    }
    let h = taper_weights(lambda_seq, samples.len())?;
    let c = h.iter().map(|w| w * w).sum();
    let mut j = vec![Complex64::ZERO; grid.len()];
    for (out, &f) in j.iter_mut().zip(grid.freqs()) {
        let mut acc = Complex64::ZERO;
        for (i, (&x, &w)) in samples.iter().zip(&h).enumerate() {
            let t = (i + 1) as f64;
            acc += w * x * Complex64::from_polar(1.0, -TAU * f * t);
        }
        *out = acc;
    }
    Ok((j, c))
}

/// Squared modulus of the taper's first Fourier moment,
/// |H_1(f)|^2 = |sum_t h_t exp(-i 2 pi f t)|^2, per grid frequency.
///
/// Diagnostic for the sidelobe structure of the forgetting taper. With
/// lambda = 1 this is sin^2(T pi f) / sin^2(pi f), i.e. T times the Fejer
/// kernel.
pub fn spectral_window(
    lambda_seq: &[f64],
    t_len: usize,
    grid: &FrequencyGrid,
) -> Result<Vec<f64>> {
    if t_len == 0 {
        return Err(Error::Parameter("taper length must be at least 1".into()));
    }
    let h = taper_weights(lambda_seq, t_len)?;
    let mut out = vec![0.0; grid.len()];
    for (o, &f) in out.iter_mut().zip(grid.freqs()) {
        let mut acc = Complex64::ZERO;
        for (i, &w) in h.iter().enumerate() {
            let t = (i + 1) as f64;
            acc += w * Complex64::from_polar(1.0, -TAU * f * t);
        }
        *o = acc.norm_sqr();
    }
    Ok(out)
}

/// `spectral_window` for a constant forgetting factor.
pub fn spectral_window_const(lambda: f64, t_len: usize, grid: &FrequencyGrid) -> Result<Vec<f64>> {
    if t_len == 0 {
        return Err(Error::Parameter("taper length must be at least 1".into()));
    }
    spectral_window(&vec![lambda; t_len - 1], t_len, grid)
}

/// Closed-form C_T(lambda) for a constant factor; exact counter at lambda = 1.
pub fn c_closed_form(lambda: f64, t: u64) -> f64 {
    if lambda == 1.0 {
        t as f64
    } else {
        let l2 = lambda * lambda;
        (1.0 - l2.powi(t as i32)) / (1.0 - l2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gauss_stream(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
            .collect()
    }

    #[test]
    fn states_move_between_threads() {
        fn assert_send<T: Send + 'static>() {}
        assert_send::<ForgettingState>();
        assert_send::<SpectralEstimate>();
    }

    #[test]
    fn new_state_validation() {
        let grid = FrequencyGrid::real_default(4).unwrap();
        let s = ForgettingState::new(grid.clone(), 0.9, Centering::None).unwrap();
        assert_eq!(s.t(), 0);
        assert_eq!(s.c(), 0.0);
        assert!(s.j().iter().all(|j| *j == Complex64::ZERO));
        assert!(ForgettingState::new(grid.clone(), 1.0, Centering::None).is_ok());
        assert!(ForgettingState::new(grid.clone(), 1.5, Centering::None).is_err());
        assert!(ForgettingState::new(grid.clone(), 0.0, Centering::None).is_err());
        assert!(ForgettingState::new(grid, -0.1, Centering::None).is_err());
    }

    #[test]
    fn first_update_quarter_frequency() {
        let grid = FrequencyGrid::new(vec![0.25]).unwrap();
        let mut s = ForgettingState::new(grid, 0.9, Centering::None).unwrap();
        s.update(Complex64::ONE).unwrap();
        // exp(-i pi / 2) = -i
        assert_abs_diff_eq!(s.j()[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.j()[0].im, -1.0, epsilon = 1e-15);
        assert_eq!(s.c(), 1.0);
    }

    #[test]
    fn zero_signal_counts_samples() {
        let grid = FrequencyGrid::real_default(3).unwrap();
        let mut s = ForgettingState::new(grid, 1.0, Centering::None).unwrap();
        for _ in 0..50 {
            s.update(Complex64::ZERO).unwrap();
        }
        assert!(s.j().iter().all(|j| *j == Complex64::ZERO));
        assert_eq!(s.c(), 50.0);
    }

    #[test]
    fn nonfinite_sample_rejected_state_unchanged() {
        let grid = FrequencyGrid::real_default(3).unwrap();
        let mut s = ForgettingState::new(grid, 0.9, Centering::None).unwrap();
        s.update(Complex64::new(1.0, 0.0)).unwrap();
        let j_before = s.j().to_vec();
        let (t_before, c_before) = (s.t(), s.c());
        assert!(s.update(Complex64::new(f64::NAN, 0.0)).is_err());
        assert!(s.update(Complex64::new(0.0, f64::INFINITY)).is_err());
        assert_eq!(s.t(), t_before);
        assert_eq!(s.c(), c_before);
        assert_eq!(s.j(), j_before.as_slice());
    }

    #[test]
    fn recursion_matches_batch_oracle() {
        let grid = FrequencyGrid::real_default(8).unwrap();
        let xs = gauss_stream(100, 7);
        let lambda = 0.95;
        let mut s = ForgettingState::new(grid.clone(), lambda, Centering::None).unwrap();
        for &x in &xs {
            s.update(x).unwrap();
        }
        let (j_batch, c_batch) = batch_weighted_dft(&xs, &vec![lambda; 99], &grid).unwrap();
        for (a, b) in s.j().iter().zip(&j_batch) {
            assert!((a - b).norm() <= 1e-12, "|{a} - {b}| too large");
        }
        assert_abs_diff_eq!(s.c(), c_batch, epsilon = 1e-12);
    }

    #[test]
    fn lambda_one_equals_classical_periodogram() {
        let grid = FrequencyGrid::real_default(16).unwrap();
        let xs = gauss_stream(64, 3);
        let mut s = ForgettingState::new(grid.clone(), 1.0, Centering::None).unwrap();
        for &x in &xs {
            s.update(x).unwrap();
        }
        let est = s.ffp().unwrap();
        for (k, &f) in grid.freqs().iter().enumerate() {
            let mut acc = Complex64::ZERO;
            for (i, &x) in xs.iter().enumerate() {
                acc += x * Complex64::from_polar(1.0, -TAU * f * (i + 1) as f64);
            }
            let classical = acc.norm_sqr() / xs.len() as f64;
            assert_relative_eq!(est.values()[k], classical, max_relative = 1e-10);
        }
    }

    #[test]
    fn sequential_centering_kills_constant_stream() {
        let grid = FrequencyGrid::real_default(5).unwrap();
        let mut s = ForgettingState::new(grid, 0.9, Centering::Sequential).unwrap();
        for _ in 0..40 {
            s.update(Complex64::new(3.25, 0.0)).unwrap();
        }
        let est = s.ffp().unwrap();
        assert!(est.values().iter().all(|&v| v == 0.0), "{:?}", est.values());
    }

    #[test]
    fn independent_centering_lambda() {
        let grid = FrequencyGrid::real_default(4).unwrap();
        let (lam, lam_mean) = (0.9, 0.99);
        let mut s = ForgettingState::new(grid, lam, Centering::Sequential)
            .unwrap()
            .with_centering_lambda(lam_mean)
            .unwrap();
        for &x in &gauss_stream(60, 13) {
            s.update(x).unwrap();
        }
        // D follows the mean's own factor, C the periodogram's
        let d_expect = (1.0 - lam_mean.powi(60)) / (1.0 - lam_mean);
        assert_relative_eq!(s.d(), d_expect, max_relative = 1e-12);
        assert_relative_eq!(s.c(), c_closed_form(lam, 60), max_relative = 1e-9);
        // constant streams still cancel exactly
        let grid = FrequencyGrid::real_default(4).unwrap();
        let mut s = ForgettingState::new(grid, 0.9, Centering::Sequential)
            .unwrap()
            .with_centering_lambda(0.7)
            .unwrap();
        for _ in 0..30 {
            s.update(Complex64::new(2.5, 0.0)).unwrap();
        }
        assert!(s.ffp().unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn centering_decomposes_as_difference_of_dfts() {
        // J_Y = J_X - J_{mean}: feeding the sequence of running means through
        // a plain accumulator reproduces j_mean.
        let grid = FrequencyGrid::real_default(6).unwrap();
        let xs = gauss_stream(80, 11);
        let lambda = 0.93;
        let mut centered =
            ForgettingState::new(grid.clone(), lambda, Centering::Sequential).unwrap();
        let mut plain = ForgettingState::new(grid.clone(), lambda, Centering::None).unwrap();
        let mut means = Vec::new();
        let mut mean = Complex64::ZERO;
        let mut d = 0.0;
        for &x in &xs {
            centered.update(x).unwrap();
            plain.update(x).unwrap();
            d = lambda * d + 1.0;
            mean += (x - mean) / d;
            means.push(mean);
        }
        let mut mean_acc = ForgettingState::new(grid, lambda, Centering::None).unwrap();
        for &m in &means {
            mean_acc.update(m).unwrap();
        }
        for k in 0..plain.j().len() {
            let expect = plain.j()[k] - mean_acc.j()[k];
            assert!((centered.j_effective(k) - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn ffp_requires_samples() {
        let grid = FrequencyGrid::real_default(4).unwrap();
        let s = ForgettingState::new(grid, 0.9, Centering::None).unwrap();
        assert!(matches!(s.ffp(), Err(Error::State(_))));
    }

    #[test]
    fn ffp_nonnegative() {
        let grid = FrequencyGrid::real_default(8).unwrap();
        let mut s = ForgettingState::new(grid, 0.7, Centering::None).unwrap();
        for &x in &gauss_stream(200, 5) {
            s.update(x).unwrap();
        }
        assert!(s.ffp().unwrap().values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn white_noise_ffp_is_unbiased() {
        // E[S_hat] = sigma^2 = 1 for white noise under any taper.
        let grid = FrequencyGrid::real_default(16).unwrap();
        let reps = 10_000;
        let t_len = 64;
        let m = grid.len();
        let mut sum = vec![0.0; m];
        let mut sumsq = vec![0.0; m];
        let mut values = vec![0.0; m];
        for rep in 0..reps {
            let mut s = ForgettingState::new(grid.clone(), 0.99, Centering::None).unwrap();
            for &x in &gauss_stream(t_len, 1000 + rep) {
                s.update(x).unwrap();
            }
            s.ffp_values_into(&mut values).unwrap();
            for k in 0..m {
                sum[k] += values[k];
                sumsq[k] += values[k] * values[k];
            }
        }
        let n = reps as f64;
        for k in 0..m {
            let mean = sum[k] / n;
            let var = (sumsq[k] / n - mean * mean).max(0.0);
            let se = (var / n).sqrt();
            assert!(
                (mean - 1.0).abs() < 3.0 * se,
                "freq {k}: mean {mean}, se {se}"
            );
        }
    }

    #[test]
    fn batch_single_sample() {
        let grid = FrequencyGrid::new(vec![0.25]).unwrap();
        let (j, c) = batch_weighted_dft(&[Complex64::ONE], &[], &grid).unwrap();
        assert_abs_diff_eq!(j[0].im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j[0].re, 0.0, epsilon = 1e-15);
        assert_eq!(c, 1.0);
    }

    #[test]
    fn batch_unweighted_normalizer() {
        let grid = FrequencyGrid::real_default(2).unwrap();
        let xs = gauss_stream(17, 2);
        let (_, c) = batch_weighted_dft(&xs, &vec![1.0; 16], &grid).unwrap();
        assert_eq!(c, 17.0);
    }

    #[test]
    fn batch_rejects_length_mismatch() {
        let grid = FrequencyGrid::real_default(2).unwrap();
        let xs = gauss_stream(5, 2);
        assert!(batch_weighted_dft(&xs, &[0.9; 3], &grid).is_err());
        assert!(batch_weighted_dft(&xs, &[0.9; 5], &grid).is_err());
        assert!(batch_weighted_dft(&[], &[], &grid).is_err());
        assert!(batch_weighted_dft(&xs, &[0.9, 0.9, 0.9, 1.2], &grid).is_err());
    }

    #[test]
    fn c_closed_form_matches_recursion() {
        for &lambda in &[0.5, 0.9, 0.99] {
            let grid = FrequencyGrid::real_default(1).unwrap();
            let mut s = ForgettingState::new(grid, lambda, Centering::None).unwrap();
            for _ in 0..200 {
                s.update(Complex64::ZERO).unwrap();
            }
            let closed = c_closed_form(lambda, 200);
            assert!((s.c() - closed).abs() <= 1e-9 * closed);
        }
    }

    #[test]
    fn spectral_window_fejer_at_lambda_one() {
        let grid = FrequencyGrid::real_default(64).unwrap();
        let t_len = 32;
        let win = spectral_window_const(1.0, t_len, &grid).unwrap();
        for (k, &f) in grid.freqs().iter().enumerate() {
            let fejer_t = (t_len as f64 * std::f64::consts::PI * f).sin().powi(2)
                / (std::f64::consts::PI * f).sin().powi(2);
            assert_relative_eq!(win[k], fejer_t, max_relative = 1e-9);
        }
    }

    #[test]
    fn spectral_window_single_point() {
        let grid = FrequencyGrid::real_default(8).unwrap();
        let win = spectral_window(&[], 1, &grid).unwrap();
        assert!(win.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn spectral_window_geometric_closed_form() {
        // For constant lambda, H_1(f) = e^{-i2 pi f T} (1 - (l z)^T)/(1 - l z)
        // with z = e^{+i 2 pi f}.
        let lambda = 0.9_f64;
        let t_len = 200;
        let grid = FrequencyGrid::new(vec![0.1, 0.25, 0.4]).unwrap();
        let win = spectral_window_const(lambda, t_len, &grid).unwrap();
        for (k, &f) in grid.freqs().iter().enumerate() {
            let z = Complex64::from_polar(1.0, TAU * f);
            let lz = lambda * z;
            let h1 = Complex64::from_polar(1.0, -TAU * f * t_len as f64)
                * (Complex64::ONE - lz.powi(t_len as i32))
                / (Complex64::ONE - lz);
            assert!((win[k] - h1.norm_sqr()).abs() <= 1e-12 * h1.norm_sqr().max(1.0));
        }
    }

    #[test]
    fn fixed_memory_footprint() {
        let grid = FrequencyGrid::real_default(32).unwrap();
        let mut s = ForgettingState::new(grid, 0.9, Centering::Sequential).unwrap();
        for &x in &gauss_stream(10, 1) {
            s.update(x).unwrap();
        }
        let small = s.heap_footprint_bytes();
        for &x in &gauss_stream(10_000, 2) {
            s.update(x).unwrap();
        }
        assert_eq!(small, s.heap_footprint_bytes());
    }

    #[test]
    fn phase_renormalization_stays_exact() {
        // cross the renormalization boundary on both the rational and the
        // float phase paths and compare against the direct sum
        let rational = FrequencyGrid::real_default(3).unwrap();
        let custom = FrequencyGrid::new(vec![0.0731, 0.2113, 0.3989]).unwrap();
        let t_len = (PHASE_RENORM_PERIOD + 4000) as usize;
        let lambda = 0.999;
        let xs: Vec<Complex64> = (0..t_len)
            .map(|i| Complex64::new(((i * 2654435761) % 1000) as f64 / 500.0 - 1.0, 0.0))
            .collect();
        for grid in [rational, custom] {
            let mut s = ForgettingState::new(grid.clone(), lambda, Centering::None).unwrap();
            for &x in &xs {
                s.update(x).unwrap();
            }
            // direct sum over the samples that still carry weight
            let keep = 40_000; // lambda^40000 ~ 4e-18, below f64 noise here
            let tail = &xs[t_len - keep..];
            for (k, &f) in grid.freqs().iter().enumerate() {
                let mut acc = Complex64::ZERO;
                for (i, &x) in tail.iter().enumerate() {
                    let t = (t_len - keep + i + 1) as f64;
                    let w = lambda.powi((keep - 1 - i) as i32);
                    acc += w * x * Complex64::from_polar(1.0, -TAU * f * t);
                }
                assert!(
                    (s.j()[k] - acc).norm() < 1e-8,
                    "freq {f}: {} vs {acc}",
                    s.j()[k]
                );
            }
        }
    }

    #[test]
    fn shift_weight_property() {
        // After one update every previous sample's weight in J is exactly
        // lambda times its previous weight. Weights are read off by driving
        // unit impulses through the batch oracle.
        let grid = FrequencyGrid::new(vec![0.2]).unwrap();
        let f = 0.2;
        let lambda = 0.8;
        let t_len = 9;
        let weight = |n: usize, t: usize| -> f64 {
            let mut xs = vec![Complex64::ZERO; n];
            xs[t] = Complex64::ONE;
            let (j, _) = batch_weighted_dft(&xs, &vec![lambda; n - 1], &grid).unwrap();
            // strip the phase to recover h_t
            (j[0] * Complex64::from_polar(1.0, TAU * f * (t + 1) as f64)).re
        };
        for t in 0..t_len {
            let before = weight(t_len, t);
            let after = weight(t_len + 1, t);
            assert_abs_diff_eq!(after, lambda * before, epsilon = 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn recursion_oracle_equivalence(
                xs in proptest::collection::vec(-10.0f64..10.0, 1..128),
                lambda_idx in 0usize..4,
                irregular_grid in proptest::bool::ANY,
            ) {
                let lambda = [0.5, 0.9, 0.99, 1.0][lambda_idx];
                let grid = if irregular_grid {
                    FrequencyGrid::new(vec![-0.433, -0.127, 0.0619, 0.25, 0.377]).unwrap()
                } else {
                    FrequencyGrid::real_default(7).unwrap()
                };
                let samples: Vec<Complex64> =
                    xs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                let mut s = ForgettingState::new(grid.clone(), lambda, Centering::None).unwrap();
                for &x in &samples {
                    s.update(x).unwrap();
                }
                let (j, c) =
                    batch_weighted_dft(&samples, &vec![lambda; samples.len() - 1], &grid).unwrap();
                for (a, b) in s.j().iter().zip(&j) {
                    prop_assert!((a - b).norm() <= 1e-10);
                }
                prop_assert!((s.c() - c).abs() <= 1e-10 * c.max(1.0));
            }

            #[test]
            fn ffp_always_nonnegative(
                xs in proptest::collection::vec(-100.0f64..100.0, 1..64),
                lambda in 0.3f64..1.0,
            ) {
                let grid = FrequencyGrid::real_default(5).unwrap();
                let mut s = ForgettingState::new(grid, lambda, Centering::Sequential).unwrap();
                for &x in &xs {
                    s.update(Complex64::new(x, 0.0)).unwrap();
                }
                prop_assert!(s.ffp().unwrap().values().iter().all(|&v| v >= 0.0));
            }
        }
    }
}
