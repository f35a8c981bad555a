//! Monte Carlo orchestration and scoring.
//!
//! Replications run in parallel over independent RNG streams and are folded
//! into running mean/variance summaries through a fixed binary merge tree,
//! so results are bitwise reproducible for a given seed regardless of the
//! worker count, and memory stays proportional to the number of recorded
//! points rather than replications times stream length.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::adaptive::{AdaptiveConfig, AdaptiveState};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::sdf::{ArSdf, OceanSdf, OceanSdfLog, SdfModel};
use crate::sim::{
    gen_ar_stream, gen_modulated_car1_stream, gen_sinusoid_drift_stream, ArSegmentSpec,
    ModulatedCar1Spec, SinusoidDriftSpec,
};
use crate::spectral::{Centering, ForgettingState, SpectralEstimate};
use crate::whittle::{FfweState, Projection};

/// Result of the dominant-frequency readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgmaxFreq {
    pub freq: f64,
    pub index: usize,
    /// Set when every spectral value is zero; `freq` is then the smallest
    /// grid frequency by the declared tie-break.
    pub all_zero: bool,
}

/// Grid frequency with the largest spectral value; exact ties break toward
/// the smaller frequency.
pub fn argmax_freq(est: &SpectralEstimate) -> ArgmaxFreq {
    argmax_values(est.values(), est.grid())
}

pub(crate) fn argmax_values(values: &[f64], grid: &FrequencyGrid) -> ArgmaxFreq {
    let mut idx = 0;
    let mut best = values[0];
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best {
            best = v;
            idx = i;
        }
    }
    ArgmaxFreq { freq: grid.freqs()[idx], index: idx, all_zero: best == 0.0 }
}

/// Integrated squared error of a tracked frequency against ground truth:
/// sum_t (ghat_t - gtrue_t)^2.
pub fn ise(ghat: &[f64], gtrue: &[f64]) -> Result<f64> {
    if ghat.len() != gtrue.len() {
        return Err(Error::Parameter(format!(
            "trajectory lengths differ: {} vs {}",
            ghat.len(),
            gtrue.len()
        )));
    }
    Ok(ghat
        .iter()
        .zip(gtrue)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Which stochastic process drives a replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Sine(SinusoidDriftSpec),
    Ar(ArSegmentSpec),
    Car1(ModulatedCar1Spec),
}

impl GeneratorSpec {
    pub fn len(&self) -> usize {
        match self {
            GeneratorSpec::Sine(s) => s.len,
            GeneratorSpec::Ar(s) => s.len,
            GeneratorSpec::Car1(s) => s.len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Complex-valued streams use a two-sided grid.
    pub fn is_complex(&self) -> bool {
        matches!(self, GeneratorSpec::Car1(_))
    }

    fn with_seed(&self, seed: u64) -> GeneratorSpec {
        let mut g = self.clone();
        match &mut g {
            GeneratorSpec::Sine(s) => s.seed = seed,
            GeneratorSpec::Ar(s) => s.seed = seed,
            GeneratorSpec::Car1(s) => s.seed = seed,
        }
        g
    }
}

struct GenOutput {
    series: Vec<Complex64>,
}

fn generate(spec: &GeneratorSpec, stream: u64) -> Result<GenOutput> {
    match spec {
        GeneratorSpec::Sine(s) => {
            let (xs, _) = gen_sinusoid_drift_stream(s, stream)?;
            Ok(GenOutput {
                series: xs.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            })
        }
        GeneratorSpec::Ar(s) => {
            let xs = gen_ar_stream(s, stream)?;
            Ok(GenOutput {
                series: xs.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            })
        }
        GeneratorSpec::Car1(s) => {
            let (zs, _) = gen_modulated_car1_stream(s, stream)?;
            Ok(GenOutput { series: zs })
        }
    }
}

/// Parametric family selector for estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    /// AR(p) over [phi_1..phi_p, log sigma^2]; p = 0 is white noise.
    Ar { p: usize },
    /// Inertial-peak model over log-scaled positive parameters plus omega.
    Ocean {
        #[serde(default)]
        background_in_f: bool,
        /// Step multiplier for the omega coordinate. The likelihood
        /// curvature in omega scales like 1/damp^2, far above the other
        /// coordinates, so plain scalar-rate ascent oscillates; this keeps
        /// the omega step inside its stability region.
        #[serde(default = "default_omega_step_scale")]
        omega_step_scale: f64,
    },
}

fn default_omega_step_scale() -> f64 {
    0.02
}

impl ModelSpec {
    pub fn build(&self) -> Box<dyn SdfModel> {
        match self {
            ModelSpec::Ar { p } => Box::new(ArSdf::new(*p)),
            ModelSpec::Ocean { background_in_f, .. } => Box::new(OceanSdfLog {
                inner: OceanSdf { background_in_f: *background_in_f },
            }),
        }
    }

    /// Per-coordinate ascent-step multipliers, when the family needs them.
    pub fn step_scale(&self) -> Option<Vec<f64>> {
        match self {
            ModelSpec::Ar { .. } => None,
            ModelSpec::Ocean { omega_step_scale, .. } => {
                Some(vec![1.0, 1.0, 1.0, 1.0, 1.0, *omega_step_scale])
            }
        }
    }

    /// Starting parameters once the burn-in estimate `shat` is available.
    ///
    /// AR starts from white noise at the mean ordinate; the ocean model
    /// anchors its peak at the current spectral argmax.
    pub fn initial_params(&self, shat: &[f64], grid: &FrequencyGrid) -> Vec<f64> {
        let mean = shat.iter().sum::<f64>() / shat.len() as f64;
        match self {
            ModelSpec::Ar { p } => {
                let mut v = vec![0.0; p + 1];
                v[*p] = mean.max(1e-12).ln();
                v
            }
            ModelSpec::Ocean { .. } => {
                let peak = argmax_values(shat, grid);
                let damp0 = 0.02;
                let alpha0 = 1.0;
                let h0 = 0.1;
                let peak_val = shat[peak.index].max(mean.max(1e-12));
                let amp0 = (peak_val * damp0 * damp0).sqrt();
                let back0 = (mean * (peak.freq * peak.freq + h0 * h0).powf(alpha0)).max(1e-12);
                let raw = [amp0, damp0, back0, h0, alpha0, peak.freq];
                let mut v = OceanSdfLog::from_raw(&raw);
                v[5] = peak.freq;
                v
            }
        }
    }
}

pub const DEFAULT_BURN_IN: usize = 500;

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_lambda_bounds() -> (f64, f64) {
    AdaptiveConfig::default().lambda_bounds
}

/// Estimator driven over each replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EstimatorSpec {
    /// Fixed-lambda periodogram tracking the dominant frequency.
    Ffp { lambda: f64 },
    /// Fixed-lambda online Whittle estimation.
    Ffwe {
        lambda: f64,
        learn_rate: f64,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        model: ModelSpec,
    },
    /// Adaptive-lambda online Whittle estimation.
    Affwe {
        lambda0: f64,
        learn_rate_params: f64,
        learn_rate_lambda: f64,
        #[serde(default)]
        prior_alpha: Option<f64>,
        /// Defaults to 1/M when a prior is set.
        #[serde(default)]
        prior_weight: Option<f64>,
        #[serde(default = "default_lambda_bounds")]
        lambda_bounds: (f64, f64),
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        model: ModelSpec,
    },
}

impl EstimatorSpec {
    /// Names of the quantities recorded per step.
    pub fn quantities(&self, grid_hint: &FrequencyGrid) -> Vec<String> {
        let _ = grid_hint;
        match self {
            EstimatorSpec::Ffp { .. } => vec!["g_hat".to_string()],
            EstimatorSpec::Ffwe { model, .. } => model.build().param_names(),
            EstimatorSpec::Affwe { model, .. } => {
                let mut names = model.build().param_names();
                names.push("lambda".to_string());
                names
            }
        }
    }

    fn burn_in(&self) -> usize {
        match self {
            EstimatorSpec::Ffp { .. } => 0,
            EstimatorSpec::Ffwe { burn_in, .. } => *burn_in,
            EstimatorSpec::Affwe { burn_in, .. } => *burn_in,
        }
    }
}

/// A complete seeded Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    pub estimator: EstimatorSpec,
    /// Grid size M; one-sided for real streams, two-sided for complex.
    pub grid_m: usize,
    pub replications: usize,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
    pub seed: u64,
}

fn default_record_stride() -> usize {
    10
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<FrequencyGrid> {
        if self.generator.is_complex() {
            FrequencyGrid::complex_default(self.grid_m)
        } else {
            FrequencyGrid::real_default(self.grid_m)
        }
    }

    /// Times (1-based sample indices) at which quantities are recorded.
    pub fn recorded_times(&self) -> Vec<u64> {
        let t_len = self.generator.len() as u64;
        let stride = self.record_stride as u64;
        let skip = self.estimator.burn_in() as u64;
        (1..=t_len)
            .filter(|t| t % stride == 0 && *t > skip)
            .collect()
    }

    fn check(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Parameter("at least one replication is required".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::Parameter("record stride must be at least 1".into()));
        }
        if self.recorded_times().is_empty() {
            return Err(Error::Parameter(
                "stream too short: nothing would be recorded after burn-in".into(),
            ));
        }
        Ok(())
    }
}

/// Per-time mean and standard deviation of each tracked quantity across
/// replications.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub times: Vec<u64>,
    pub quantities: Vec<String>,
    /// Indexed `[quantity][time]`.
    pub mean: Vec<Vec<f64>>,
    /// Sample standard deviation, same indexing.
    pub std: Vec<Vec<f64>>,
    /// Replications aggregated (failures excluded).
    pub replications: usize,
    /// (rng stream, error) for replications that failed.
    pub failures: Vec<(u64, String)>,
}

impl TrajectorySummary {
    pub fn quantity_index(&self, name: &str) -> Option<usize> {
        self.quantities.iter().position(|q| q == name)
    }

    pub fn mean_of(&self, name: &str) -> Option<&[f64]> {
        self.quantity_index(name).map(|i| self.mean[i].as_slice())
    }

    pub fn time_index(&self, t: u64) -> Option<usize> {
        self.times.iter().position(|&x| x == t)
    }

    /// Mean over replications of sum_t (x_t - truth_t)^2, reconstructed
    /// from the running moments:
    /// E[(x - g)^2] = (mean - g)^2 + var * (n-1)/n.
    pub fn mise_against(&self, quantity: &str, truth_at_times: &[f64]) -> Result<f64> {
        let qi = self
            .quantity_index(quantity)
            .ok_or_else(|| Error::Parameter(format!("unknown quantity {quantity}")))?;
        if truth_at_times.len() != self.times.len() {
            return Err(Error::Parameter(format!(
                "truth has {} points, summary has {}",
                truth_at_times.len(),
                self.times.len()
            )));
        }
        let n = self.replications as f64;
        let mut acc = 0.0;
        for (i, &g) in truth_at_times.iter().enumerate() {
            let d = self.mean[qi][i] - g;
            let var = self.std[qi][i] * self.std[qi][i];
            acc += d * d + var * (n - 1.0) / n;
        }
        Ok(acc)
    }

    /// Tidy CSV: `time,quantity,mean,std`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,quantity,mean,std")?;
        for (qi, q) in self.quantities.iter().enumerate() {
            for (ti, &t) in self.times.iter().enumerate() {
                writeln!(w, "{t},{q},{},{}", self.mean[qi][ti], self.std[qi][ti])?;
            }
        }
        Ok(())
    }
}

/// Running (mean, M2) moments per recorded cell, mergeable in a fixed order.
struct Partial {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    failures: Vec<(u64, String)>,
}

impl Partial {
    fn empty(cells: usize) -> Self {
        Self { n: 0, mean: vec![0.0; cells], m2: vec![0.0; cells], failures: Vec::new() }
    }

    fn from_single(values: Vec<f64>) -> Self {
        let m2 = vec![0.0; values.len()];
        Self { n: 1, mean: values, m2, failures: Vec::new() }
    }

    fn merge(mut a: Partial, b: Partial) -> Partial {
        if a.n == 0 {
            let mut b = b;
            let mut fails = a.failures;
            fails.append(&mut b.failures);
            b.failures = fails;
            return b;
        }
        if b.n == 0 {
            a.failures.extend(b.failures);
            return a;
        }
        let (na, nb) = (a.n as f64, b.n as f64);
        let n = na + nb;
        for i in 0..a.mean.len() {
            let delta = b.mean[i] - a.mean[i];
            a.m2[i] += b.m2[i] + delta * delta * na * nb / n;
            a.mean[i] += delta * nb / n;
        }
        a.n += b.n;
        a.failures.extend(b.failures);
        a
    }
}

fn init_ffwe(
    model_spec: &ModelSpec,
    shat: &[f64],
    grid: &FrequencyGrid,
    learn_rate: f64,
) -> Result<FfweState> {
    let params = model_spec.initial_params(shat, grid);
    let state = FfweState::new(params, learn_rate, Projection::StationarityProject)?;
    match model_spec.step_scale() {
        Some(scale) => state.with_step_scale(scale),
        None => Ok(state),
    }
}

enum Runner {
    Ffp {
        state: ForgettingState,
    },
    Ffwe {
        state: ForgettingState,
        ffwe: Option<FfweState>,
        model: Box<dyn SdfModel>,
        model_spec: ModelSpec,
        learn_rate: f64,
        burn_in: u64,
    },
    Affwe {
        state: AdaptiveState,
        ffwe: Option<FfweState>,
        model: Box<dyn SdfModel>,
        model_spec: ModelSpec,
        learn_rate: f64,
        burn_in: u64,
    },
}

impl Runner {
    fn build(spec: &EstimatorSpec, grid: &FrequencyGrid) -> Result<Runner> {
        match spec {
            EstimatorSpec::Ffp { lambda } => Ok(Runner::Ffp {
                state: ForgettingState::new(grid.clone(), *lambda, Centering::None)?,
            }),
            EstimatorSpec::Ffwe { lambda, learn_rate, burn_in, model } => Ok(Runner::Ffwe {
                state: ForgettingState::new(grid.clone(), *lambda, Centering::None)?,
                ffwe: None,
                model: model.build(),
                model_spec: model.clone(),
                learn_rate: *learn_rate,
                burn_in: *burn_in as u64,
            }),
            EstimatorSpec::Affwe {
                lambda0,
                learn_rate_params,
                learn_rate_lambda,
                prior_alpha,
                prior_weight,
                lambda_bounds,
                burn_in,
                model,
            } => {
                let cfg = AdaptiveConfig {
                    learn_rate_lambda: *learn_rate_lambda,
                    lambda_bounds: *lambda_bounds,
                    prior_alpha: *prior_alpha,
                    prior_weight: prior_weight.unwrap_or(1.0 / grid.len() as f64),
                };
                Ok(Runner::Affwe {
                    state: AdaptiveState::new(grid.clone(), *lambda0, Centering::None, cfg)?,
                    ffwe: None,
                    model: model.build(),
                    model_spec: model.clone(),
                    learn_rate: *learn_rate_params,
                    burn_in: *burn_in as u64,
                })
            }
        }
    }

    /// Absorb one sample and run the per-sample estimation steps.
    fn step(&mut self, x: Complex64, shat: &mut [f64], grid: &FrequencyGrid) -> Result<()> {
        match self {
            Runner::Ffp { state } => state.update(x),
            Runner::Ffwe { state, ffwe, model, model_spec, learn_rate, burn_in } => {
                state.update(x)?;
                let t = state.t();
                if t == *burn_in {
                    state.ffp_values_into(shat)?;
                    *ffwe = Some(init_ffwe(model_spec, shat, grid, *learn_rate)?);
                } else if t > *burn_in {
                    let est = ffwe.as_mut().ok_or_else(|| {
                        Error::State("estimator stepped before burn-in completed".into())
                    })?;
                    state.ffp_values_into(shat)?;
                    est.step_values(shat, grid, model.as_ref())?;
                }
                Ok(())
            }
            Runner::Affwe { state, ffwe, model, model_spec, learn_rate, burn_in } => {
                state.update(x)?;
                let t = state.state().t();
                if t == *burn_in {
                    state.ffp_values_into(shat)?;
                    *ffwe = Some(init_ffwe(model_spec, shat, grid, *learn_rate)?);
                } else if t > *burn_in {
                    let est = ffwe.as_mut().ok_or_else(|| {
                        Error::State("estimator stepped before burn-in completed".into())
                    })?;
                    state.ffp_values_into(shat)?;
                    est.step_values(shat, grid, model.as_ref())?;
                    state.lambda_step(model.as_ref(), &est.params)?;
                }
                Ok(())
            }
        }
    }

    fn ffp_values(&self, shat: &mut [f64]) -> Result<()> {
        match self {
            Runner::Ffp { state } => state.ffp_values_into(shat),
            Runner::Ffwe { state, .. } => state.ffp_values_into(shat),
            Runner::Affwe { state, .. } => state.ffp_values_into(shat),
        }
    }

    /// Append the tracked quantities at the current time.
    fn record(&self, shat: &mut [f64], grid: &FrequencyGrid, out: &mut Vec<f64>) -> Result<()> {
        match self {
            Runner::Ffp { state } => {
                state.ffp_values_into(shat)?;
                out.push(argmax_values(shat, grid).freq);
            }
            Runner::Ffwe { ffwe, .. } => {
                let est = ffwe
                    .as_ref()
                    .ok_or_else(|| Error::State("recording before burn-in completed".into()))?;
                out.extend_from_slice(&est.params);
            }
            Runner::Affwe { state, ffwe, .. } => {
                let est = ffwe
                    .as_ref()
                    .ok_or_else(|| Error::State("recording before burn-in completed".into()))?;
                out.extend_from_slice(&est.params);
                out.push(state.lambda());
            }
        }
        Ok(())
    }
}

/// A streaming estimator assembled from an [`EstimatorSpec`]: absorb one
/// sample at a time, read back the tracked quantities on demand.
pub struct OnlineEstimator {
    runner: Runner,
    grid: FrequencyGrid,
    shat: Vec<f64>,
    burn_in: u64,
}

impl OnlineEstimator {
    pub fn new(spec: &EstimatorSpec, grid: FrequencyGrid) -> Result<Self> {
        let runner = Runner::build(spec, &grid)?;
        let shat = vec![0.0; grid.len()];
        Ok(Self { runner, grid, shat, burn_in: spec.burn_in() as u64 })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Samples absorbed so far.
    pub fn t(&self) -> u64 {
        match &self.runner {
            Runner::Ffp { state } => state.t(),
            Runner::Ffwe { state, .. } => state.t(),
            Runner::Affwe { state, .. } => state.state().t(),
        }
    }

    /// Burn-in length; tracked quantities are defined for t beyond this.
    pub fn burn_in(&self) -> u64 {
        self.burn_in
    }

    pub fn lambda(&self) -> f64 {
        match &self.runner {
            Runner::Ffp { state } => state.lambda(),
            Runner::Ffwe { state, .. } => state.lambda(),
            Runner::Affwe { state, .. } => state.lambda(),
        }
    }

    /// Current model parameter vector, once initialized.
    pub fn params(&self) -> Option<&[f64]> {
        match &self.runner {
            Runner::Ffp { .. } => None,
            Runner::Ffwe { ffwe, .. } | Runner::Affwe { ffwe, .. } => {
                ffwe.as_ref().map(|e| e.params.as_slice())
            }
        }
    }

    pub fn step(&mut self, x: Complex64) -> Result<()> {
        self.runner.step(x, &mut self.shat, &self.grid)
    }

    /// Append the tracked quantities at the current time to `out`.
    pub fn record(&mut self, out: &mut Vec<f64>) -> Result<()> {
        let Self { runner, grid, shat, .. } = self;
        runner.record(shat, grid, out)
    }

    /// Dominant frequency of the current spectral estimate.
    pub fn argmax(&mut self) -> Result<ArgmaxFreq> {
        let Self { runner, grid, shat, .. } = self;
        runner.ffp_values(shat)?;
        Ok(argmax_values(shat, grid))
    }

    /// Snapshot of the current spectral estimate.
    pub fn current_sdf(&mut self) -> Result<SpectralEstimate> {
        let Self { runner, grid, shat, .. } = self;
        runner.ffp_values(shat)?;
        SpectralEstimate::new(grid.clone(), shat.clone(), self.t())
    }
}

fn run_single(config: &ExperimentConfig, grid: &FrequencyGrid, stream: u64) -> Result<Vec<f64>> {
    let generator = config.generator.with_seed(config.seed);
    let data = generate(&generator, stream)?;
    let mut est = OnlineEstimator::new(&config.estimator, grid.clone())?;
    let stride = config.record_stride as u64;
    let skip = config.estimator.burn_in() as u64;
    let mut out = Vec::new();
    for (i, &x) in data.series.iter().enumerate() {
        let t = (i + 1) as u64;
        est.step(x)?;
        if t % stride == 0 && t > skip {
            est.record(&mut out)?;
        }
    }
    Ok(out)
}

fn run_tree(config: &ExperimentConfig, grid: &FrequencyGrid, lo: u64, hi: u64, cells: usize) -> Partial {
    if hi - lo == 1 {
        return match run_single(config, grid, lo) {
            Ok(values) => {
                if values.len() == cells {
                    Partial::from_single(values)
                } else {
                    let mut p = Partial::empty(cells);
                    p.failures.push((
                        lo,
                        format!("recorded {} cells, expected {cells}", values.len()),
                    ));
                    p
                }
            }
            Err(e) => {
                let mut p = Partial::empty(cells);
                p.failures.push((lo, e.to_string()));
                p
            }
        };
    }
    let mid = lo + (hi - lo) / 2;
    let (a, b) = rayon::join(
        || run_tree(config, grid, lo, mid, cells),
        || run_tree(config, grid, mid, hi, cells),
    );
    Partial::merge(a, b)
}

/// Run the experiment: independent replications on derived RNG streams,
/// aggregated into per-time means and standard deviations.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<TrajectorySummary> {
    config.check()?;
    let grid = config.grid()?;
    let times = config.recorded_times();
    let quantities = config.estimator.quantities(&grid);
    let cells = times.len() * quantities.len();
    let partial = run_tree(config, &grid, 0, config.replications as u64, cells);
    if partial.n == 0 {
        return Err(Error::Eval(format!(
            "every replication failed; first failure: {}",
            partial
                .failures
                .first()
                .map(|(s, e)| format!("stream {s}: {e}"))
                .unwrap_or_default()
        )));
    }
    let nq = quantities.len();
    let nt = times.len();
    let mut mean = vec![vec![0.0; nt]; nq];
    let mut std = vec![vec![0.0; nt]; nq];
    for ti in 0..nt {
        for qi in 0..nq {
            let cell = ti * nq + qi;
            mean[qi][ti] = partial.mean[cell];
            std[qi][ti] = if partial.n > 1 {
                (partial.m2[cell] / (partial.n as f64 - 1.0)).max(0.0).sqrt()
            } else {
                0.0
            };
        }
    }
    Ok(TrajectorySummary {
        times,
        quantities,
        mean,
        std,
        replications: partial.n,
        failures: partial.failures,
    })
}

/// Run a fixed-lambda-schedule periodogram over a sample slice;
/// `lambdas[i]` is the factor in effect when sample i arrives.
pub fn ffp_with_lambda_schedule(
    samples: &[Complex64],
    lambdas: &[f64],
    grid: &FrequencyGrid,
) -> Result<SpectralEstimate> {
    if samples.len() != lambdas.len() {
        return Err(Error::Parameter(format!(
            "schedule length {} does not match sample count {}",
            lambdas.len(),
            samples.len()
        )));
    }
    let mut state = ForgettingState::new(grid.clone(), lambdas[0], Centering::None)?;
    for (&x, &l) in samples.iter().zip(lambdas) {
        state.set_lambda(l)?;
        state.update(x)?;
    }
    state.ffp()
}

/// Kolmogorov-Smirnov distance between a sample and the chi^2_2
/// distribution (exponential with mean 2).
pub fn ks_distance_chi2_2(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = 1.0 - (-x / 2.0).exp();
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((cdf - lo).abs()).max((hi - cdf).abs());
    }
    d
}

/// Distributional check of periodogram ordinates against the asymptotic
/// chi^2_2 law.
#[derive(Debug, Clone)]
pub struct OrdinateTestResult {
    /// KS distance of 2 S_hat / S to chi^2_2, per tested frequency.
    pub ks: Vec<f64>,
    /// Mean of S_hat / S per frequency (asymptotically 1).
    pub mean_ratio: Vec<f64>,
    /// Standard error of `mean_ratio` entries.
    pub se_ratio: Vec<f64>,
    /// Pearson correlations between ordinates at frequency pairs,
    /// indexed `[i][j]`.
    pub correlations: Vec<Vec<f64>>,
}

/// Compare replicated spectral ordinates against independent chi^2_2
/// behavior: per-frequency KS distances of 2 S_hat / S and cross-frequency
/// Pearson correlations. Caller chooses the frequencies (columns).
pub fn chi2_ordinate_test(
    s_true: &[f64],
    ordinates: &[Vec<f64>],
) -> Result<OrdinateTestResult> {
    if ordinates.len() < 100 {
        return Err(Error::Parameter(format!(
            "{} replications are too few for a distributional check (need >= 100)",
            ordinates.len()
        )));
    }
    let nf = s_true.len();
    if s_true.iter().any(|&s| s <= 0.0) {
        return Err(Error::Parameter("model spectrum must be positive".into()));
    }
    for row in ordinates {
        if row.len() != nf {
            return Err(Error::Parameter(format!(
                "ordinate row has {} entries, expected {nf}",
                row.len()
            )));
        }
    }
    let r = ordinates.len();
    let mut ks = Vec::with_capacity(nf);
    let mut mean_ratio = Vec::with_capacity(nf);
    let mut se_ratio = Vec::with_capacity(nf);
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(r); nf];
    for row in ordinates {
        for (k, &v) in row.iter().enumerate() {
            cols[k].push(v / s_true[k]);
        }
    }
    for col in &cols {
        let scaled: Vec<f64> = col.iter().map(|v| 2.0 * v).collect();
        ks.push(ks_distance_chi2_2(&scaled));
        let mean = col.iter().sum::<f64>() / r as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r as f64 - 1.0);
        mean_ratio.push(mean);
        se_ratio.push((var / r as f64).sqrt());
    }
    let mut correlations = vec![vec![0.0; nf]; nf];
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / r as f64).collect();
    let sds: Vec<f64> = cols
        .iter()
        .zip(&means)
        .map(|(c, m)| {
            (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (r as f64 - 1.0)).sqrt()
        })
        .collect();
    for i in 0..nf {
        for j in 0..nf {
            if i == j {
                correlations[i][j] = 1.0;
                continue;
            }
            let cov = cols[i]
                .iter()
                .zip(&cols[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                / (r as f64 - 1.0);
            correlations[i][j] = cov / (sds[i] * sds[j]);
        }
    }
    Ok(OrdinateTestResult { ks, mean_ratio, se_ratio, correlations })
}
