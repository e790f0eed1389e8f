//! `kolsphere` — command-line front end for the spectral analysis of the
//! linearized two-jet Kolmogorov type flow on the unit sphere.
//!
//! Configuration is layered: built-in defaults, then an optional TOML file
//! (`--config`), then command-line flags. Every summary JSON echoes the
//! resolved configuration. Failures print a one-line JSON error record to
//! stderr and exit with 2 (validation), 3 (numerical contract), or 4 (I/O).

mod commands;
mod config;
mod errors;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::StudyConfig;
use crate::errors::CliError;

#[derive(Parser)]
#[command(
    name = "kolsphere",
    version,
    about = "Spectral analysis of the linearized two-jet Kolmogorov type flow on the sphere",
    after_help = "Environment: KOLSPHERE_WORKERS caps the worker-thread count."
)]
struct Cli {
    /// TOML configuration file; flags override file values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory (default "out")
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Render static SVG charts next to the CSV outputs
    #[arg(long, global = true)]
    svg: bool,

    #[command(subcommand)]
    command: Command,
}

/// Shared overrides for commands that scan an `(alpha, m)` grid.
#[derive(Args, Debug, Default)]
struct PairArgs {
    /// Advection strengths, comma separated (overrides params.alpha)
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    alpha: Option<Vec<f64>>,

    /// Azimuthal wavenumbers, comma separated, nonzero (overrides params.m)
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    m: Option<Vec<i32>>,

    /// Force the starting truncation degree (0 = per-command policy)
    #[arg(long, value_name = "N")]
    n_hi: Option<u32>,

    /// Envelope regime parameter kappa, in (0, 1/2)
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Export the banded operators A, Lambda, L as text files plus a JSON header
    Assemble {
        /// Azimuthal wavenumber (nonzero)
        #[arg(long)]
        m: Option<i32>,
        /// Truncation degree
        #[arg(long, value_name = "N")]
        n_hi: Option<u32>,
        /// Advection strength
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Resolvent norms along the imaginary axis with envelope ratios
    Sweep(PairArgs),
    /// Pseudospectral bound Psi and fitted envelope constant per (alpha, m)
    Psbound(PairArgs),
    /// Coercivity scan of the advection pencil mu - Lambda
    Coercivity {
        /// Azimuthal wavenumbers, comma separated (overrides params.m)
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        m: Option<Vec<i32>>,
        /// Normalized spectral parameters mu, comma separated
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        mu: Option<Vec<f64>>,
        /// Truncation degree (0 = default 128)
        #[arg(long, value_name = "N")]
        n_hi: Option<u32>,
        /// Envelope regime parameter kappa, in (0, 1/2)
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Propagator norm curves and certified decay rates
    Semigroup {
        #[command(flatten)]
        pair: PairArgs,
        /// Decay-certificate prefactor cap (> 1)
        #[arg(long, value_name = "C")]
        c_cap: Option<f64>,
        /// Points in the log-spaced time grid
        #[arg(long, value_name = "N")]
        points: Option<usize>,
        /// Target floor for the qq norm when sizing the grid
        #[arg(long, value_name = "Q")]
        qq_floor: Option<f64>,
        /// Decay-rate guess for grid sizing (0 = derive from a sweep)
        #[arg(long, value_name = "S")]
        sigma_guess: Option<f64>,
        /// Explicit sample times, comma separated (overrides the log grid)
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        times: Option<Vec<f64>>,
    },
    /// Enhanced-dissipation scaling study in alpha and m
    Scaling {
        #[command(flatten)]
        pair: PairArgs,
        /// Decay-certificate prefactor cap (> 1)
        #[arg(long, value_name = "C")]
        c_cap: Option<f64>,
    },
    /// Kernel-direction transient amplitudes versus alpha
    Transient {
        /// Advection strengths, comma separated, all |alpha| > 4
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        alpha: Option<Vec<f64>>,
        /// Azimuthal wavenumber, |m| in {1, 2}
        #[arg(long)]
        m: Option<i32>,
        /// Decay-certificate prefactor cap (> 1)
        #[arg(long, value_name = "C")]
        c_cap: Option<f64>,
    },
    /// Zonal velocity profile of the n-jet base flow
    Velocity {
        /// Jet degree n >= 1
        #[arg(long, value_name = "N")]
        jet_degree: Option<u32>,
        /// Flow amplitude
        #[arg(long)]
        amplitude: Option<f64>,
        /// Number of interior colatitude samples
        #[arg(long, value_name = "N")]
        theta_points: Option<usize>,
    },
}

fn apply_pair_args(cfg: &mut StudyConfig, args: &PairArgs) {
    if let Some(alpha) = &args.alpha {
        cfg.params.alpha = alpha.clone();
    }
    if let Some(m) = &args.m {
        cfg.params.m = m.clone();
    }
    if let Some(n_hi) = args.n_hi {
        cfg.truncation.n_hi = n_hi;
    }
    if let Some(kappa) = args.kappa {
        cfg.params.kappa = kappa;
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = StudyConfig::load(cli.config.as_deref())?;
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    if cli.svg {
        cfg.output.svg = true;
    }

    match &cli.command {
        Command::Assemble { m, n_hi, alpha } => {
            if let Some(m) = m {
                cfg.assemble.m = *m;
            }
            if let Some(n_hi) = n_hi {
                cfg.assemble.n_hi = *n_hi;
            }
            if let Some(alpha) = alpha {
                cfg.assemble.alpha = *alpha;
            }
            cfg.validate()?;
            commands::cmd_assemble(&cfg)
        }
        Command::Sweep(pair) => {
            apply_pair_args(&mut cfg, pair);
            cfg.validate()?;
            commands::cmd_sweep(&cfg)
        }
        Command::Psbound(pair) => {
            apply_pair_args(&mut cfg, pair);
            cfg.validate()?;
            commands::cmd_psbound(&cfg)
        }
        Command::Coercivity { m, mu, n_hi, kappa } => {
            if let Some(m) = m {
                cfg.params.m = m.clone();
            }
            if let Some(mu) = mu {
                cfg.coercivity.mu = mu.clone();
            }
            if let Some(n_hi) = n_hi {
                cfg.truncation.n_hi = *n_hi;
            }
            if let Some(kappa) = kappa {
                cfg.params.kappa = *kappa;
            }
            cfg.validate()?;
            commands::cmd_coercivity(&cfg)
        }
        Command::Semigroup { pair, c_cap, points, qq_floor, sigma_guess, times } => {
            apply_pair_args(&mut cfg, pair);
            if let Some(c) = c_cap {
                cfg.params.c_cap = *c;
            }
            if let Some(points) = points {
                cfg.time.points = *points;
            }
            if let Some(floor) = qq_floor {
                cfg.time.qq_floor = *floor;
            }
            if let Some(sigma) = sigma_guess {
                cfg.time.sigma_guess = *sigma;
            }
            if let Some(times) = times {
                cfg.time.times = times.clone();
            }
            cfg.validate()?;
            commands::cmd_semigroup(&cfg)
        }
        Command::Scaling { pair, c_cap } => {
            apply_pair_args(&mut cfg, pair);
            if let Some(c) = c_cap {
                cfg.params.c_cap = *c;
            }
            cfg.validate()?;
            commands::cmd_scaling(&cfg)
        }
        Command::Transient { alpha, m, c_cap } => {
            if let Some(alpha) = alpha {
                cfg.params.alpha = alpha.clone();
            }
            if let Some(m) = m {
                cfg.params.m = vec![*m];
            }
            if let Some(c) = c_cap {
                cfg.params.c_cap = *c;
            }
            cfg.validate()?;
            commands::cmd_transient(&cfg)
        }
        Command::Velocity { jet_degree, amplitude, theta_points } => {
            if let Some(n) = jet_degree {
                cfg.velocity.jet_degree = *n;
            }
            if let Some(a) = amplitude {
                cfg.velocity.amplitude = *a;
            }
            if let Some(pts) = theta_points {
                cfg.velocity.theta_points = *pts;
            }
            cfg.validate()?;
            commands::cmd_velocity(&cfg)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version go to stdout with status 0; usage errors keep
            // clap's human-readable text (already exit code 2) plus the
            // machine-readable record on stderr.
            if e.use_stderr() {
                let _ = e.print();
                let record = CliError::Validation(format!("argument parsing: {}", e.kind()));
                eprintln!("{}", record.to_json());
                std::process::exit(2);
            }
            let _ = e.print();
            std::process::exit(0);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
