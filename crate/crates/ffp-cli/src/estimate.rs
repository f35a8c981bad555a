//! `ffp estimate`: run an online estimator over a CSV stream.
//!
//! Input is headered CSV, read one row at a time: a real stream has an `x`
//! column, a complex stream has `x_re` and `x_im`. An optional `lat`
//! column plus `--coriolis-k` adds a ground-truth `omega_true` column to
//! the output. Memory stays fixed regardless of the stream length.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num_complex::Complex64;

use ffp_core::harness::{EstimatorSpec, ModelSpec, OnlineEstimator};
use ffp_core::FrequencyGrid;

use crate::cli_io::{create_output, open_input, sibling_path};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorKind {
    /// Nonparametric spectral tracking only.
    Ffp,
    /// Online Whittle estimation at fixed lambda.
    Ffwe,
    /// Online Whittle estimation with adaptive lambda.
    Affwe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnError {
    /// Skip malformed rows with a warning.
    Skip,
    /// Stop at the first malformed row.
    Abort,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Input CSV path, or `-` for stdin.
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = EstimatorKind::Ffwe)]
    estimator: EstimatorKind,
    /// Model family: `white`, `ar:<p>` or `ocean`.
    #[arg(long, default_value = "white")]
    model: String,
    /// Evaluate the ocean background term at f instead of the peak
    /// frequency.
    #[arg(long, default_value_t = false)]
    background_in_f: bool,
    /// Fixed forgetting factor (ffp/ffwe) or the initial one (affwe).
    #[arg(long, default_value_t = 0.99)]
    lambda: f64,
    /// Parameter learning rate.
    #[arg(long, default_value_t = 0.05)]
    learn_rate: f64,
    /// Lambda learning rate (affwe).
    #[arg(long, default_value_t = 0.01)]
    learn_rate_lambda: f64,
    /// Beta prior strength alpha (affwe); omit for no prior.
    #[arg(long)]
    prior_alpha: Option<f64>,
    /// Weight of the prior gradient (affwe); defaults to 1/M.
    #[arg(long)]
    prior_weight: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    lambda_min: f64,
    #[arg(long, default_value_t = 1.0 - 1e-6)]
    lambda_max: f64,
    /// Samples absorbed before parameter estimation starts.
    #[arg(long, default_value_t = 500)]
    burn_in: usize,
    /// Grid size M.
    #[arg(long, default_value_t = 256)]
    grid_m: usize,
    /// Emit one output row every this many samples.
    #[arg(long, default_value_t = 10)]
    record_stride: usize,
    /// Also emit the dominant-frequency readout `g_hat`.
    #[arg(long, default_value_t = false)]
    track_argmax: bool,
    /// Write full spectral snapshots at these sample indices
    /// (comma-separated), as sibling files `<out>_sdf_<t>.csv`.
    #[arg(long, value_delimiter = ',')]
    dump_sdf_at: Vec<u64>,
    #[arg(long, value_enum, default_value_t = OnError::Abort)]
    on_error: OnError,
    /// Coriolis constant for `lat` to omega conversion.
    #[arg(long)]
    coriolis_k: Option<f64>,
}

pub fn parse_model(text: &str, background_in_f: bool) -> Result<ModelSpec, CliError> {
    if text == "white" {
        return Ok(ModelSpec::Ar { p: 0 });
    }
    if text == "ocean" {
        return Ok(ModelSpec::Ocean { background_in_f, omega_step_scale: 0.02 });
    }
    if let Some(p) = text.strip_prefix("ar:") {
        let p: usize = p
            .parse()
            .map_err(|_| CliError::usage(format!("bad AR order in --model {text}")))?;
        return Ok(ModelSpec::Ar { p });
    }
    Err(CliError::usage(format!(
        "unknown model `{text}` (expected white, ar:<p> or ocean)"
    )))
}

struct InputLayout {
    x: Option<usize>,
    x_re: Option<usize>,
    x_im: Option<usize>,
    lat: Option<usize>,
}

impl InputLayout {
    fn from_headers(headers: &csv::StringRecord) -> Result<Self, CliError> {
        let find = |name: &str| headers.iter().position(|h| h == name);
        let layout = InputLayout {
            x: find("x"),
            x_re: find("x_re"),
            x_im: find("x_im"),
            lat: find("lat"),
        };
        match (layout.x, layout.x_re, layout.x_im) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => Ok(layout),
            _ => Err(CliError::data(
                "input header must contain either `x` or both `x_re` and `x_im`",
            )),
        }
    }

    fn is_complex(&self) -> bool {
        self.x.is_none()
    }
}

fn parse_field(record: &csv::StringRecord, idx: usize, name: &str) -> Result<f64, CliError> {
    let field = record
        .get(idx)
        .ok_or_else(|| CliError::data(format!("row too short, missing `{name}`")))?;
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| CliError::data(format!("bad value `{field}` in `{name}`")))?;
    if !v.is_finite() {
        return Err(CliError::data(format!("non-finite value in `{name}`")));
    }
    Ok(v)
}

/// Output column names plus a value transform (the ocean family is driven
/// in log scale internally but reported raw).
struct Emission {
    names: Vec<String>,
    ocean_log: bool,
}

impl Emission {
    fn new(spec: &EstimatorSpec, grid: &FrequencyGrid) -> Self {
        let mut names = spec.quantities(grid);
        let ocean_log = names.iter().any(|n| n == "log_amp_a");
        if ocean_log {
            for n in names.iter_mut() {
                if let Some(stripped) = n.strip_prefix("log_") {
                    if stripped != "sigma2" {
                        *n = stripped.to_string();
                    }
                }
            }
        }
        Emission { names, ocean_log }
    }

    fn transform(&self, values: &mut [f64]) {
        if self.ocean_log {
            for v in values.iter_mut().take(5) {
                *v = v.exp();
            }
        }
    }
}

pub fn run(args: EstimateArgs) -> Result<(), CliError> {
    if args.record_stride == 0 {
        return Err(CliError::usage("--record-stride must be at least 1"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(open_input(&args.input)?);
    let headers = reader.headers()?.clone();
    let layout = InputLayout::from_headers(&headers)?;
    if layout.lat.is_some() && args.coriolis_k.is_none() && args.model == "ocean" {
        eprintln!("note: `lat` column present but --coriolis-k not given; omega_true omitted");
    }

    // configuration is fully validated before any data row is read
    let model = parse_model(&args.model, args.background_in_f)?;
    if matches!(model, ModelSpec::Ocean { .. }) && !layout.is_complex() {
        return Err(CliError::usage(
            "the ocean model expects a complex stream (columns x_re,x_im)",
        ));
    }
    if matches!(model, ModelSpec::Ar { .. })
        && layout.is_complex()
        && !matches!(args.estimator, EstimatorKind::Ffp)
    {
        return Err(CliError::usage(
            "AR models describe real streams; got complex input (x_re,x_im)",
        ));
    }
    let grid = if layout.is_complex() {
        FrequencyGrid::complex_default(args.grid_m)
    } else {
        FrequencyGrid::real_default(args.grid_m)
    }?;
    let spec = match args.estimator {
        EstimatorKind::Ffp => EstimatorSpec::Ffp { lambda: args.lambda },
        EstimatorKind::Ffwe => EstimatorSpec::Ffwe {
            lambda: args.lambda,
            learn_rate: args.learn_rate,
            burn_in: args.burn_in,
            model: model.clone(),
        },
        EstimatorKind::Affwe => EstimatorSpec::Affwe {
            lambda0: args.lambda,
            learn_rate_params: args.learn_rate,
            learn_rate_lambda: args.learn_rate_lambda,
            prior_alpha: args.prior_alpha,
            prior_weight: args.prior_weight,
            lambda_bounds: (args.lambda_min, args.lambda_max),
            burn_in: args.burn_in,
            model: model.clone(),
        },
    };
    let emission = Emission::new(&spec, &grid);
    let mut est = OnlineEstimator::new(&spec, grid)?;

    let dump_at: BTreeSet<u64> = args.dump_sdf_at.iter().copied().collect();
    let track_lat = layout.lat.is_some() && args.coriolis_k.is_some();

    let mut out: Option<Box<dyn Write>> = None;
    let mut skipped = 0usize;
    let mut values = Vec::new();
    let stride = args.record_stride as u64;

    for record in reader.records() {
        let parsed: Result<(Complex64, Option<f64>), CliError> = (|| {
            let record = record.map_err(CliError::from)?;
            let x = match (layout.x, layout.x_re, layout.x_im) {
                (Some(i), _, _) => Complex64::new(parse_field(&record, i, "x")?, 0.0),
                (None, Some(re), Some(im)) => Complex64::new(
                    parse_field(&record, re, "x_re")?,
                    parse_field(&record, im, "x_im")?,
                ),
                _ => unreachable!(),
            };
            let lat = match (layout.lat, track_lat) {
                (Some(i), true) => Some(parse_field(&record, i, "lat")?),
                _ => None,
            };
            Ok((x, lat))
        })();
        let (x, lat) = match parsed {
            Ok(v) => v,
            Err(e) => match args.on_error {
                OnError::Abort => {
                    return Err(CliError::data(format!(
                        "row {} unusable: {} (use --on-error skip to continue)",
                        est.t() + 1,
                        e.message
                    )))
                }
                OnError::Skip => {
                    skipped += 1;
                    eprintln!("warning: skipping row: {}", e.message);
                    continue;
                }
            },
        };
        est.step(x).map_err(CliError::from)?;
        let t = est.t();
        if out.is_none() {
            // create the output only once a sample exists
            let mut w: Box<dyn Write> = Box::new(create_output(&args.out)?);
            write!(w, "t")?;
            for n in &emission.names {
                write!(w, ",{n}")?;
            }
            if matches!(args.estimator, EstimatorKind::Ffwe) {
                write!(w, ",lambda")?;
            }
            if args.track_argmax && !matches!(args.estimator, EstimatorKind::Ffp) {
                write!(w, ",g_hat")?;
            }
            if track_lat {
                write!(w, ",omega_true")?;
            }
            writeln!(w)?;
            out = Some(w);
        }
        let w = out.as_mut().unwrap();
        if t % stride == 0 && t > est.burn_in() {
            values.clear();
            est.record(&mut values).map_err(CliError::from)?;
            emission.transform(&mut values);
            write!(w, "{t}")?;
            for v in &values {
                write!(w, ",{v}")?;
            }
            if matches!(args.estimator, EstimatorKind::Ffwe) {
                write!(w, ",{}", est.lambda())?;
            }
            if args.track_argmax && !matches!(args.estimator, EstimatorKind::Ffp) {
                write!(w, ",{}", est.argmax().map_err(CliError::from)?.freq)?;
            }
            if track_lat {
                let k = args.coriolis_k.unwrap();
                let omega = -k * (lat.unwrap_or(f64::NAN).to_radians()).sin();
                write!(w, ",{omega}")?;
            }
            writeln!(w)?;
        }
        if dump_at.contains(&t) {
            let est_sdf = est.current_sdf().map_err(CliError::from)?;
            let path = sibling_path(&args.out, &format!("sdf_{t}"));
            let mut dw = create_output(&path)?;
            writeln!(dw, "f,s_hat")?;
            for (f, v) in est_sdf.grid().freqs().iter().zip(est_sdf.values()) {
                writeln!(dw, "{f},{v}")?;
            }
        }
    }
    if est.t() == 0 {
        return Err(CliError::data("no samples in input"));
    }
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} unusable rows");
    }
    if let Some(mut w) = out {
        w.flush()?;
    }
    Ok(())
}
