//! `omt-sim`: steady states, stability maps, transmission and delay spectra,
//! and figure reproduction for the three-mode optomechanical transistor.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod csv;
mod error;
mod figures;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use omt_core::Grid;

use crate::config::{parse_grid, parse_scalar, CouplingSpec, RunConfig};
use crate::error::{config as config_error, CliResult};
use crate::figures::Figure;

const THREADS_ENV: &str = "OMT_SIM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "omt-sim", version, about = "Optomechanical transistor simulator")]
struct Cli {
    /// Worker threads for parameter sweeps [env: OMT_SIM_THREADS; default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Raise log verbosity (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,

    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Half-width of the marginal band around zero stability margin
    #[arg(long)]
    tol_stab: Option<f64>,
}

#[derive(Debug, Args)]
struct PointArgs {
    /// Probe offset from the pump used when the config holds physical parameters
    #[arg(long, allow_hyphen_values = true, value_parser = parse_scalar)]
    probe_offset: Option<f64>,
}

#[derive(Debug, Args)]
struct MapArgs {
    /// Loop-phase grid `min:max:n` in radians; bounds accept a `pi` suffix
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    theta_grid: Option<Grid>,

    /// Cavity-cavity coupling grid `min:max:n`
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    j_grid: Option<Grid>,
}

#[derive(Debug, Args)]
struct DeltaArgs {
    /// Detuning grid `min:max:n`
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    delta_grid: Option<Grid>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the classical steady state of a physical parameter set
    SteadyState {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Stability classification over the (theta, J) plane
    StabilityMap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        map: MapArgs,
        /// Mechanical frequency of the pump-frame matrix
        #[arg(long)]
        omega_m: Option<f64>,
        /// `tied` for G = sqrt(J G_m / sin theta), or a fixed magnitude
        #[arg(long, value_parser = parse_coupling)]
        coupling: Option<CouplingSpec>,
    },
    /// Scattering matrix over a detuning grid
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        delta: DeltaArgs,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Forward gain at the optimal unidirectional point over (theta, J)
    GainMap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Phase and group delay of one channel over a detuning grid
    Delay {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        delta: DeltaArgs,
        #[command(flatten)]
        point: PointArgs,
        /// t11, t12, t21 or t22
        #[arg(long)]
        channel: Option<String>,
    },
    /// Check algebraic responses against time-domain integration
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: PointArgs,
        /// Probe port, 1 or 2 (both when omitted)
        #[arg(long)]
        port: Option<u8>,
        /// Relative agreement tolerance
        #[arg(long)]
        tol: Option<f64>,
        /// Also verify this many seeded random stable draws
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Regenerate the data behind one figure
    ReproduceFigure {
        #[arg(value_enum)]
        figure: Figure,
        /// Directory for the CSV and summary JSON
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn parse_coupling(s: &str) -> Result<CouplingSpec, String> {
    if s == "tied" {
        return Ok(CouplingSpec::Named(s.into()));
    }
    s.parse()
        .map(CouplingSpec::Fixed)
        .map_err(|_| format!("expected `tied` or a number, got `{s}`"))
}

fn load(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = config::load(&common.config)?;
    if common.out.is_some() {
        cfg.command.out.clone_from(&common.out);
    }
    cfg.command.tol_stab = common.tol_stab.or(cfg.command.tol_stab);
    Ok(cfg)
}

fn apply_point(cfg: &mut RunConfig, p: &PointArgs) {
    cfg.command.probe_offset = p.probe_offset.or(cfg.command.probe_offset);
}

fn apply_map(cfg: &mut RunConfig, m: &MapArgs) {
    cfg.command.theta_grid = m.theta_grid.or(cfg.command.theta_grid);
    cfg.command.j_grid = m.j_grid.or(cfg.command.j_grid);
}

fn init_threads(flag: Option<usize>) -> CliResult<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| config_error(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(config_error("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_error(format!("cannot start thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::SteadyState { common, point } => {
            let mut cfg = load(&common)?;
            apply_point(&mut cfg, &point);
            commands::steady_state(&cfg)
        }
        Command::StabilityMap {
            common,
            map,
            omega_m,
            coupling,
        } => {
            let mut cfg = load(&common)?;
            apply_map(&mut cfg, &map);
            cfg.command.omega_m = omega_m.or(cfg.command.omega_m);
            if coupling.is_some() {
                cfg.command.coupling = coupling;
            }
            commands::stability_map_cmd(&cfg)
        }
        Command::Spectrum { common, delta, point } => {
            let mut cfg = load(&common)?;
            apply_point(&mut cfg, &point);
            cfg.command.delta_grid = delta.delta_grid.or(cfg.command.delta_grid);
            commands::spectrum(&cfg)
        }
        Command::GainMap { common, map } => {
            let mut cfg = load(&common)?;
            apply_map(&mut cfg, &map);
            commands::gain_map_cmd(&cfg)
        }
        Command::Delay {
            common,
            delta,
            point,
            channel,
        } => {
            let mut cfg = load(&common)?;
            apply_point(&mut cfg, &point);
            cfg.command.delta_grid = delta.delta_grid.or(cfg.command.delta_grid);
            if channel.is_some() {
                cfg.command.channel = channel;
            }
            commands::delay(&cfg)
        }
        Command::Verify {
            common,
            point,
            port,
            tol,
            draws,
            seed,
        } => {
            let mut cfg = load(&common)?;
            apply_point(&mut cfg, &point);
            cfg.command.port = port.or(cfg.command.port);
            cfg.command.tol = tol.or(cfg.command.tol);
            cfg.command.draws = draws.or(cfg.command.draws);
            cfg.seed = seed.unwrap_or(cfg.seed);
            commands::verify(&cfg)
        }
        Command::ReproduceFigure { figure, out_dir } => {
            let summary = figures::reproduce(figure, &out_dir)?;
            commands::write_json(None, &summary)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("omt-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
