//! latdisc: lattice-point discrepancy experiments from the command line.
//!
//! Exit codes: 0 on success (and on a passing `run`), 2 when a `run`
//! completes but its acceptance checks fail, 1 on usage or runtime errors.
//! `--threads` configures the global worker pool; the RAYON_NUM_THREADS
//! environment variable is the only ambient override. Results never depend
//! on the thread count.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use latdisc_core::lattice::{count_points, discrepancy, lp_norm};
use latdisc_core::spectral::{chi_hat_2d, chi_hat_slice};
use latdisc_lab::config::{build_body_from_parts, load_config};
use latdisc_lab::csvio::{fit_rows, fmt_float, parse_csv};
use latdisc_lab::experiments::{run_experiment, write_artifacts, RunReport};
use latdisc_lab::Result;

#[derive(Parser)]
#[command(
    name = "latdisc",
    version,
    about = "Lattice point counts, discrepancy norms, and scaling experiments \
             for convex planar bodies"
)]
struct Cli {
    /// Worker threads for this invocation (default: all cores, or
    /// RAYON_NUM_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct BodyArgs {
    /// Body family: disk, gen_ellipse, superellipse, profile_power.
    #[arg(long, default_value = "disk")]
    body: String,
    /// Flatness parameter (required for every family except disk).
    #[arg(long)]
    gamma: Option<f64>,
    /// Rotation angle in radians applied after construction.
    #[arg(long)]
    theta: Option<f64>,
    /// Profile half-width (profile_power only).
    #[arg(long, default_value_t = 0.8)]
    b: f64,
}

impl BodyArgs {
    fn build(&self) -> Result<latdisc_core::body::Body2D> {
        build_body_from_parts(&self.body, self.gamma, self.theta, self.b)
    }
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"a,b\", got {s:?}"));
    }
    let a = parts[0].trim().parse().map_err(|e| format!("{e}: {:?}", parts[0]))?;
    let b = parts[1].trim().parse().map_err(|e| format!("{e}: {:?}", parts[1]))?;
    Ok((a, b))
}

#[derive(Subcommand)]
enum Command {
    /// Count lattice points in the dilated, translated body.
    Count {
        #[command(flatten)]
        body: BodyArgs,
        /// Dilation factor.
        #[arg(long = "R")]
        r: f64,
        /// Translation "z1,z2" on the torus.
        #[arg(long, default_value = "0,0", value_parser = parse_pair)]
        z: (f64, f64),
    },
    /// Estimate the L^p norm of the discrepancy over torus translations.
    Lpnorm {
        #[command(flatten)]
        body: BodyArgs,
        /// Dilation factor.
        #[arg(long = "R")]
        r: f64,
        /// Norm exponent in [1, inf].
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Stratified z2 samples.
        #[arg(long, default_value_t = 256)]
        samples: usize,
        /// Seed for the sampler (runs are deterministic given the seed).
        #[arg(long)]
        seed: u64,
    },
    /// Evaluate the body's Fourier transform at one frequency.
    #[command(group = ArgGroup::new("freq").required(true).args(["zeta", "s"]))]
    Fourier {
        #[command(flatten)]
        body: BodyArgs,
        /// Frequency vector "zeta1,zeta2" (boundary-integral path).
        #[arg(long, value_parser = parse_pair)]
        zeta: Option<(f64, f64)>,
        /// Axis frequency s, evaluated as (0, s) via the slice transform.
        #[arg(long)]
        s: Option<f64>,
    },
    /// Run an experiment described by a TOML config; writes CSV + JSON.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Override the artifact prefix from the config.
        #[arg(long)]
        out: Option<String>,
    },
    /// Re-fit a log-log slope from a previously emitted CSV artifact.
    Refit {
        /// Path to the CSV artifact.
        csv: PathBuf,
        /// Fit window "lo,hi" on the R column (default: all R > 0).
        #[arg(long, value_parser = parse_pair)]
        window: Option<(f64, f64)>,
        /// Keep only rows with this body label.
        #[arg(long)]
        body: Option<String>,
        /// Keep only rows with this p value.
        #[arg(long)]
        p: Option<f64>,
    },
}

fn main() -> ExitCode {
    // Die by SIGPIPE like other line-oriented tools when the reader goes
    // away (e.g. `latdisc refit ... | head`) instead of panicking on the
    // failed stdout write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Count { body, r, z } => {
            let body = body.build()?;
            let count = count_points(&body, r, [z.0, z.1])?;
            let disc = discrepancy(&body, r, [z.0, z.1])?;
            println!("count: {count}");
            println!("discrepancy: {}", fmt_float(disc));
            Ok(ExitCode::SUCCESS)
        }
        Command::Lpnorm {
            body,
            r,
            p,
            samples,
            seed,
        } => {
            let body = body.build()?;
            let est = lp_norm(&body, r, p, samples, seed, None)?;
            println!("value: {}", fmt_float(est.value));
            println!("stderr: {}", fmt_float(est.stderr));
            println!("samples: {}", est.samples);
            println!("seed: {}", est.seed);
            Ok(ExitCode::SUCCESS)
        }
        Command::Fourier { body, zeta, s } => {
            let body = body.build()?;
            let value = match (zeta, s) {
                (Some(z), None) => chi_hat_2d(&body, [z.0, z.1])?,
                (None, Some(s)) => chi_hat_slice(&body, s)?,
                _ => unreachable!("clap group enforces exactly one of zeta/s"),
            };
            println!("re: {}", fmt_float(value.re));
            println!("im: {}", fmt_float(value.im));
            println!("abs: {}", fmt_float(value.norm()));
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = load_config(&text)?;
            let report = run_experiment(&cfg)?;
            let (csv_path, json_path) = write_artifacts(&report, out.as_deref())?;
            print_run_summary(&report);
            println!("csv: {}", csv_path.display());
            println!("json: {}", json_path.display());
            if report.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        Command::Refit {
            csv,
            window,
            body,
            p,
        } => {
            let text = std::fs::read_to_string(&csv)?;
            let rows = parse_csv(&text)?;
            let window = window.unwrap_or((f64::MIN_POSITIVE, f64::INFINITY));
            let fit = fit_rows(&rows, window, body.as_deref(), p)?;
            println!("exponent: {}", fmt_float(fit.exponent));
            println!("intercept: {}", fmt_float(fit.intercept));
            println!("r2: {}", fmt_float(fit.r2));
            println!("window: {},{}", fmt_float(fit.window[0]), fmt_float(fit.window[1]));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_run_summary(report: &RunReport) {
    println!("experiment: {}", report.config.experiment.label());
    for fit in &report.fits {
        let verdict = match fit.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "info",
        };
        let predicted = fit
            .predicted
            .map(|v| format!(" predicted {v:.4}"))
            .unwrap_or_default();
        println!(
            "fit {} [{}] p={} exponent {:.4} r2 {:.4}{} -> {}",
            fit.label, fit.body, fit.p, fit.fit.exponent, fit.fit.r2, predicted, verdict
        );
    }
    if let Some(norm) = report.series_norm {
        println!("series_norm: {}", fmt_float(norm));
    }
    if let Some(ratio) = report.top_ratio {
        println!("top_ratio: {}", fmt_float(ratio));
    }
    if let Some(d) = &report.diophantine {
        println!(
            "diophantine: base_slope {:.4} rotated_slope {:.4} gap {:.4} l2_ratio_top {:.4}",
            d.base_slope, d.rotated_slope, d.slope_gap, d.l2_ratio_top
        );
    }
    for c in &report.identities {
        if !c.pass {
            println!("identity {} FAIL: err {} tol {}", c.name, c.err, c.tol);
        }
    }
    if !report.identities.is_empty() {
        let ok = report.identities.iter().filter(|c| c.pass).count();
        println!("identities: {ok}/{} pass", report.identities.len());
    }
    for s in &report.stages {
        eprintln!("stage {}: {:.2}s", s.name, s.seconds);
    }
    println!("pass: {}", report.pass);
}
