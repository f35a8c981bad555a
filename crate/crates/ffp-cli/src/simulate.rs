//! `ffp simulate`: seeded signal generation to CSV.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand};

use ffp_core::sdf::ArParams;
use ffp_core::sim::{
    gen_ar, gen_modulated_car1, gen_sinusoid_drift, omega_from_latitude, ArSegmentSpec,
    BetaPath, ModulatedCar1Spec, SinusoidDriftSpec,
};

use crate::cli_io::{create_output, read_column};
use crate::CliError;

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    /// Piecewise AR(p) stream with optional change-points.
    Ar(ArArgs),
    /// Sinusoid with drifting instantaneous frequency in Gaussian noise.
    Sine(SineArgs),
    /// Modulated complex AR(1) (drifter-style rotary stream).
    Car1(Car1Args),
}

#[derive(Debug, Args)]
pub struct ArArgs {
    /// Segments `start:phi1,...,phip,sigma2` separated by `;`
    /// (e.g. `1:1.46,-0.81,1;10000:-1.46,-0.81,1`).
    #[arg(long)]
    segments: String,
    /// Series length.
    #[arg(long = "T")]
    t_len: usize,
    /// Warm-up samples discarded before t = 1 (default: derived from the
    /// first segment's root moduli).
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SineArgs {
    /// Drift rate of the instantaneous frequency.
    #[arg(long)]
    gamma: f64,
    #[arg(long = "T")]
    t_len: usize,
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Car1Args {
    /// Modulus of the AR(1) coefficient, in (0, 1).
    #[arg(long)]
    r: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Series length; defaults to the phase-path length when a path file
    /// is given.
    #[arg(long = "T")]
    t_len: Option<usize>,
    /// Constant phase increment per sample, radians.
    #[arg(long, conflicts_with_all = ["omega_path", "lat_path"])]
    beta: Option<f64>,
    /// CSV with an `omega` column: peak frequency per sample.
    #[arg(long, conflicts_with = "lat_path")]
    omega_path: Option<String>,
    /// CSV with a `lat` column (degrees); omega_t = -k sin(lat_t).
    #[arg(long, requires = "coriolis_k")]
    lat_path: Option<String>,
    /// Coriolis constant k for the latitude-to-frequency relation.
    #[arg(long)]
    coriolis_k: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn parse_segments(text: &str) -> Result<Vec<(usize, ArParams)>, CliError> {
    let mut segments = Vec::new();
    for part in text.split(';') {
        let (start, rest) = part.split_once(':').ok_or_else(|| {
            CliError::usage(format!("segment `{part}`: expected `start:phi...,sigma2`"))
        })?;
        let start: usize = start.trim().parse().map_err(|_| {
            CliError::usage(format!("segment `{part}`: bad start index `{start}`"))
        })?;
        let mut values = Vec::new();
        for v in rest.split(',') {
            let v = v.trim();
            values.push(v.parse::<f64>().map_err(|_| {
                CliError::usage(format!("segment `{part}`: bad number `{v}`"))
            })?);
        }
        if values.is_empty() {
            return Err(CliError::usage(format!("segment `{part}`: no parameters")));
        }
        let sigma2 = values.pop().unwrap();
        let params = ArParams::new(values, sigma2)
            .map_err(|e| CliError::usage(format!("segment `{part}`: {e}")))?;
        segments.push((start, params));
    }
    Ok(segments)
}

pub fn run(cmd: SimulateCmd) -> Result<(), CliError> {
    match cmd {
        SimulateCmd::Ar(args) => {
            let spec = ArSegmentSpec {
                segments: parse_segments(&args.segments)?,
                len: args.t_len,
                burn_in: args.burn_in,
                seed: args.seed,
            };
            let xs = gen_ar(&spec)?;
            let mut w = create_output(&args.out)?;
            writeln!(w, "t,x")?;
            for (i, x) in xs.iter().enumerate() {
                writeln!(w, "{},{x}", i + 1)?;
            }
            Ok(())
        }
        SimulateCmd::Sine(args) => {
            let spec = SinusoidDriftSpec {
                len: args.t_len,
                gamma: args.gamma,
                noise_sd: args.noise_sd,
                seed: args.seed,
            };
            let (xs, gp) = gen_sinusoid_drift(&spec)?;
            let mut w = create_output(&args.out)?;
            writeln!(w, "t,x,g_prime")?;
            for (i, (x, g)) in xs.iter().zip(&gp).enumerate() {
                writeln!(w, "{},{x},{g}", i + 1)?;
            }
            Ok(())
        }
        SimulateCmd::Car1(args) => {
            let (beta, omega_truth): (BetaPath, Option<Vec<f64>>) =
                if let Some(b) = args.beta {
                    (BetaPath::Const { beta: b }, None)
                } else if let Some(path) = &args.omega_path {
                    let omega = read_column(path, "omega")?;
                    (BetaPath::FromOmega { omega: omega.clone() }, Some(omega))
                } else if let Some(path) = &args.lat_path {
                    let lat = read_column(path, "lat")?;
                    let omega = omega_from_latitude(&lat, args.coriolis_k.unwrap());
                    (BetaPath::FromOmega { omega: omega.clone() }, Some(omega))
                } else {
                    return Err(CliError::usage(
                        "car1 needs one of --beta, --omega-path or --lat-path",
                    ));
                };
            let len = match (&beta, args.t_len) {
                (BetaPath::Const { .. }, Some(t)) => t,
                (BetaPath::Const { .. }, None) => {
                    return Err(CliError::usage("--T is required with --beta"))
                }
                (BetaPath::FromOmega { omega }, Some(t)) => {
                    if t != omega.len() {
                        return Err(CliError::usage(format!(
                            "--T {t} does not match the path length {}",
                            omega.len()
                        )));
                    }
                    t
                }
                (BetaPath::FromOmega { omega }, None) => omega.len(),
                (BetaPath::Radians { .. }, _) => unreachable!(),
            };
            let spec = ModulatedCar1Spec {
                len,
                r: args.r,
                beta,
                sigma2: args.sigma2,
                seed: args.seed,
            };
            let (zs, _) = gen_modulated_car1(&spec)?;
            let mut w = create_output(&args.out)?;
            match &omega_truth {
                Some(omega) => {
                    writeln!(w, "t,x_re,x_im,omega")?;
                    for (i, (z, om)) in zs.iter().zip(omega).enumerate() {
                        writeln!(w, "{},{},{},{om}", i + 1, z.re, z.im)?;
                    }
                }
                None => {
                    writeln!(w, "t,x_re,x_im")?;
                    for (i, z) in zs.iter().enumerate() {
                        writeln!(w, "{},{},{}", i + 1, z.re, z.im)?;
                    }
                }
            }
            Ok(())
        }
    }
}
