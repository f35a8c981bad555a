//! `ffp surface`: Whittle likelihood over a 2-D parameter slice, evaluated
//! against a saved spectrum snapshot (`f,s_hat` CSV as written by
//! `estimate --dump-sdf-at`).

use std::path::PathBuf;

use clap::Args;

use ffp_core::harness::ModelSpec;
use ffp_core::sdf::SdfModel;
use ffp_core::whittle::{likelihood_surface, SurfaceAxis};
use ffp_core::{FrequencyGrid, SpectralEstimate};

use crate::cli_io::{create_output, open_input};
use crate::CliError;

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    /// Spectrum snapshot CSV with columns `f,s_hat`.
    #[arg(long)]
    est: String,
    /// Model family: `white`, `ar:<p>` or `ocean`.
    #[arg(long)]
    model: String,
    /// First axis, `name:start:stop:steps` (rows of the output matrix).
    #[arg(long)]
    axis1: String,
    /// Second axis, `name:start:stop:steps` (columns).
    #[arg(long)]
    axis2: String,
    /// Values for the remaining parameters, `name=value`; unset
    /// parameters default to 0.
    #[arg(long)]
    fixed: Vec<String>,
    #[arg(long, default_value_t = false)]
    background_in_f: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_axis(text: &str, model: &dyn SdfModel) -> Result<SurfaceAxis, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(CliError::usage(format!(
            "axis `{text}`: expected name:start:stop:steps"
        )));
    }
    let names = model.param_names();
    let param_index = names.iter().position(|n| n == parts[0]).ok_or_else(|| {
        CliError::usage(format!(
            "axis `{text}`: unknown parameter `{}` (have: {})",
            parts[0],
            names.join(", ")
        ))
    })?;
    let parse = |v: &str| -> Result<f64, CliError> {
        v.parse()
            .map_err(|_| CliError::usage(format!("axis `{text}`: bad number `{v}`")))
    };
    Ok(SurfaceAxis {
        param_index,
        start: parse(parts[1])?,
        stop: parse(parts[2])?,
        steps: parts[3]
            .parse()
            .map_err(|_| CliError::usage(format!("axis `{text}`: bad step count")))?,
    })
}

fn read_snapshot(path: &str) -> Result<SpectralEstimate, CliError> {
    let mut reader = csv::Reader::from_reader(open_input(path)?);
    let headers = reader.headers()?.clone();
    let fi = headers
        .iter()
        .position(|h| h == "f")
        .ok_or_else(|| CliError::data(format!("{path}: no `f` column")))?;
    let si = headers
        .iter()
        .position(|h| h == "s_hat")
        .ok_or_else(|| CliError::data(format!("{path}: no `s_hat` column")))?;
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let f: f64 = record[fi]
            .parse()
            .map_err(|_| CliError::data(format!("{path}: bad frequency")))?;
        let v: f64 = record[si]
            .parse()
            .map_err(|_| CliError::data(format!("{path}: bad spectral value")))?;
        freqs.push(f);
        values.push(v);
    }
    let grid = FrequencyGrid::new(freqs).map_err(CliError::from)?;
    SpectralEstimate::new(grid, values, 0).map_err(CliError::from)
}

pub fn run(args: SurfaceArgs) -> Result<(), CliError> {
    let spec = crate::estimate::parse_model(&args.model, args.background_in_f)?;
    let model = spec.build();
    let est = read_snapshot(&args.est)?;
    let axis1 = parse_axis(&args.axis1, model.as_ref())?;
    let axis2 = parse_axis(&args.axis2, model.as_ref())?;
    let names = model.param_names();
    let mut fixed = vec![0.0; model.dim()];
    for assignment in &args.fixed {
        let (name, value) = assignment.split_once('=').ok_or_else(|| {
            CliError::usage(format!("--fixed `{assignment}`: expected name=value"))
        })?;
        let idx = names.iter().position(|n| n == name).ok_or_else(|| {
            CliError::usage(format!("--fixed `{assignment}`: unknown parameter `{name}`"))
        })?;
        fixed[idx] = value.parse().map_err(|_| {
            CliError::usage(format!("--fixed `{assignment}`: bad number `{value}`"))
        })?;
    }
    let surface = likelihood_surface(&est, model.as_ref(), &axis1, &axis2, &fixed)
        .map_err(CliError::from)?;
    let w = create_output(&args.out)?;
    surface.write_csv(w)?;

    if matches!(spec, ModelSpec::Ocean { .. }) {
        // the estimation coordinates are log-scaled; remind the user
        eprintln!("note: ocean surface axes are in the log-scaled coordinates");
    }
    Ok(())
}
