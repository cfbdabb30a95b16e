//! Subcommand implementations. Each reads a merged [`RunConfig`] and writes
//! CSV or JSON to the configured output, or to stdout.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use omt_core::delay::delay_spectrum;
use omt_core::response::{gain_map, peak_gain, transmission_spectrum, GainCell, SpectrumRow};
use omt_core::stability::{classify_stability, stability_map, CouplingRule, MapCell, DEFAULT_TOL_STAB};
use omt_core::steadystate::{effective_params_from_steady_state, solve_steady_state};
use omt_core::timedomain::{integrate_probe, verify_response, VerifyReport};
use omt_core::{Channel, EffectiveParams, Error, Grid, Port, Rates, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{config_grid, CouplingSpec, EffectiveBlock, Params, RunConfig};
use crate::csv::{num, opt, CsvWriter};
use crate::error::{config, CliError, CliResult};

/// Mechanical frequency used for pump-frame maps when the parameter block does
/// not carry one. Real parts of the spectrum do not depend on it.
pub const DEFAULT_OMEGA_M: f64 = 1e3;

pub fn default_delta_grid() -> Grid {
    Grid {
        min: -10.0,
        max: 10.0,
        n: 2001,
    }
}

pub fn default_theta_grid() -> Grid {
    Grid {
        min: 0.01 * PI,
        max: 0.99 * PI,
        n: 99,
    }
}

pub fn default_j_grid() -> Grid {
    Grid {
        min: 0.5,
        max: 20.0,
        n: 40,
    }
}

fn tol_stab(cfg: &RunConfig) -> f64 {
    cfg.command.tol_stab.unwrap_or(DEFAULT_TOL_STAB)
}

/// Probe-frame working point from either parameter block.
pub fn working_point(cfg: &RunConfig) -> CliResult<EffectiveParams> {
    match cfg.params()? {
        Params::Effective(e) => e.point(),
        Params::Physical(p) => {
            let s = solve_steady_state(p, &cfg.command.solve.options())?;
            Ok(effective_params_from_steady_state(p, &s, cfg.command.probe_offset.unwrap_or(0.0))?)
        }
    }
}

fn rates_and_omega(cfg: &RunConfig) -> CliResult<(Rates, f64)> {
    match cfg.params()? {
        Params::Effective(e) => Ok((e.rates(), cfg.command.omega_m.unwrap_or(DEFAULT_OMEGA_M))),
        Params::Physical(p) => {
            p.validate()?;
            let rates = Rates::new(p.gamma_1, p.gamma_2, p.mech_gain, p.j).with_eta(p.eta);
            Ok((rates, cfg.command.omega_m.unwrap_or(p.omega_m)))
        }
    }
}

fn channel(cfg: &RunConfig) -> CliResult<Channel> {
    match &cfg.command.channel {
        None => Ok(Channel::T21),
        Some(s) => s.parse().map_err(|_| config(format!("unknown channel `{s}`, expected one of t11, t12, t21, t22"))),
    }
}

fn coupling_rule(cfg: &RunConfig) -> CliResult<CouplingRule> {
    match &cfg.command.coupling {
        None => Ok(CouplingRule::Tied),
        Some(CouplingSpec::Named(s)) if s == "tied" => Ok(CouplingRule::Tied),
        Some(CouplingSpec::Named(s)) => Err(config(format!("coupling must be \"tied\" or a number, got \"{s}\""))),
        Some(CouplingSpec::Fixed(g)) if g.is_finite() && *g >= 0.0 => Ok(CouplingRule::Fixed(*g)),
        Some(CouplingSpec::Fixed(g)) => Err(config(format!("fixed coupling must be finite and >= 0, got {g}"))),
    }
}

fn ports(cfg: &RunConfig) -> CliResult<Vec<Port>> {
    match cfg.command.port {
        None => Ok(vec![Port::One, Port::Two]),
        Some(1) => Ok(vec![Port::One]),
        Some(2) => Ok(vec![Port::Two]),
        Some(k) => Err(config(format!("port must be 1 or 2, got {k}"))),
    }
}

pub fn write_json(path: Option<&Path>, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    let shown = path.map_or_else(|| Path::new("<stdout>").to_path_buf(), Path::to_path_buf);
    let io_err = |source: io::Error| CliError::Output {
        path: shown.clone(),
        source,
    };
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).map_err(io_err)?);
            writeln!(f, "{text}").map_err(io_err)?;
            f.flush().map_err(io_err)
        }
        None => writeln!(io::stdout().lock(), "{text}").map_err(io_err),
    }
}

pub fn steady_state(cfg: &RunConfig) -> CliResult<()> {
    let Params::Physical(p) = cfg.params()? else {
        return Err(config("steady-state needs a `physical` parameter block"));
    };
    let s = solve_steady_state(p, &cfg.command.solve.options())?;
    let e = effective_params_from_steady_state(p, &s, cfg.command.probe_offset.unwrap_or(0.0))?;
    let verdict = classify_stability(&e, tol_stab(cfg));
    write_json(
        cfg.command.out.as_deref(),
        &json!({
            "steady_state": s,
            "effective": EffectiveBlock::from_params(&e),
            "stability": verdict,
        }),
    )
}

pub const MAP_HEADER: [&str; 11] = [
    "theta", "j", "g", "margin", "stable_flag", "eig1_re", "eig1_im", "eig2_re", "eig2_im", "eig3_re", "eig3_im",
];

pub fn write_stability_map(path: Option<&Path>, cells: &[MapCell]) -> CliResult<()> {
    let mut w = CsvWriter::create(path, &MAP_HEADER)?;
    for c in cells {
        let mut row = vec![
            num(c.theta),
            num(c.j),
            num(c.g),
            num(c.verdict.margin),
            c.verdict.class.code().to_string(),
        ];
        for z in c.verdict.eigenvalues {
            row.push(num(z.re));
            row.push(num(z.im));
        }
        w.row(&row)?;
    }
    w.finish()
}

pub fn stability_map_cmd(cfg: &RunConfig) -> CliResult<()> {
    let (rates, omega_m) = rates_and_omega(cfg)?;
    let cells = stability_map(
        rates,
        omega_m,
        coupling_rule(cfg)?,
        &config_grid(cfg.command.theta_grid, default_theta_grid()),
        &config_grid(cfg.command.j_grid, default_j_grid()),
        tol_stab(cfg),
    )?;
    let bad = cells.iter().filter(|c| !c.verdict.is_stable()).count();
    log::info!("{bad} of {} cells are not stable", cells.len());
    write_stability_map(cfg.command.out.as_deref(), &cells)
}

pub const SPECTRUM_HEADER: [&str; 16] = [
    "delta",
    "t11_re",
    "t11_im",
    "t12_re",
    "t12_im",
    "t21_re",
    "t21_im",
    "t22_re",
    "t22_im",
    "T11",
    "T12",
    "T21",
    "T22",
    "phase21",
    "stable_flag",
    "singular",
];

pub fn write_spectrum(path: Option<&Path>, rows: &[SpectrumRow]) -> CliResult<()> {
    let mut w = CsvWriter::create(path, &SPECTRUM_HEADER)?;
    let nan = C64::new(f64::NAN, f64::NAN);
    for r in rows {
        let ts = r.s.map_or([nan; 4], |s| [s.t11, s.t12, s.t21, s.t22]);
        let mut row = vec![num(r.delta)];
        for t in ts {
            row.push(num(t.re));
            row.push(num(t.im));
        }
        row.extend(ts.iter().map(|t| num(t.norm_sqr())));
        row.push(num(ts[2].arg()));
        row.push(r.class.code().to_string());
        row.push(u8::from(r.singular()).to_string());
        w.row(&row)?;
    }
    w.finish()
}

pub fn spectrum(cfg: &RunConfig) -> CliResult<()> {
    let template = working_point(cfg)?;
    let rows = transmission_spectrum(
        &template,
        &config_grid(cfg.command.delta_grid, default_delta_grid()),
        tol_stab(cfg),
    )?;
    write_spectrum(cfg.command.out.as_deref(), &rows)
}

pub const GAIN_HEADER: [&str; 8] = ["theta", "j", "g", "delta", "t21_re", "t21_im", "lg_T21", "stable_flag"];

pub fn write_gain_map(path: Option<&Path>, cells: &[GainCell]) -> CliResult<()> {
    let mut w = CsvWriter::create(path, &GAIN_HEADER)?;
    for c in cells {
        w.row(&[
            num(c.theta),
            num(c.j),
            num(c.g),
            num(c.delta),
            opt(c.t21.map(|t| t.re)),
            opt(c.t21.map(|t| t.im)),
            opt(c.lg_t21()),
            c.class.code().to_string(),
        ])?;
    }
    w.finish()
}

pub fn gain_map_cmd(cfg: &RunConfig) -> CliResult<()> {
    let (rates, _) = rates_and_omega(cfg)?;
    let cells = gain_map(
        rates,
        &config_grid(cfg.command.theta_grid, default_theta_grid()),
        &config_grid(cfg.command.j_grid, default_j_grid()),
        tol_stab(cfg),
    )?;
    match peak_gain(&cells) {
        Some((lg, c)) => log::info!("max stable lg T21 = {lg} at theta = {}, J = {}", c.theta, c.j),
        None => log::info!("no stable cell"),
    }
    write_gain_map(cfg.command.out.as_deref(), &cells)
}

pub fn delay(cfg: &RunConfig) -> CliResult<()> {
    let template = working_point(cfg)?;
    let rows = delay_spectrum(
        &template,
        &config_grid(cfg.command.delta_grid, default_delta_grid()),
        channel(cfg)?,
    )?;
    let mut w = CsvWriter::create(cfg.command.out.as_deref(), &["delta", "phase_unwrapped", "tau"])?;
    for r in &rows {
        w.row(&[num(r.delta), opt(r.phase_unwrapped), opt(r.point.map(|p| p.tau))])?;
    }
    w.finish()
}

/// Draws a working point from a box of moderate rates with random phases.
pub fn random_working_point(rng: &mut ChaCha8Rng) -> EffectiveParams {
    let rates = Rates::new(
        rng.random_range(1.0..10.0),
        rng.random_range(1.0..10.0),
        rng.random_range(0.2..2.0),
        rng.random_range(0.0..8.0),
    )
    .with_eta(rng.random_range(0.5..=1.0));
    let g1 = C64::from_polar(rng.random_range(0.0..4.0), rng.random_range(-PI..PI));
    let g2 = C64::from_polar(rng.random_range(0.0..4.0), rng.random_range(-PI..PI));
    let d = (
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
    );
    EffectiveParams::new(rates, g1, g2, d).expect("draws lie inside the parameter domain")
}

/// Smallest `|margin|` a random draw needs to enter the batch.
pub const BATCH_MARGIN_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub seed: u64,
    pub stable_draws: usize,
    pub unstable_draws: usize,
    pub skipped_near_marginal: usize,
    pub max_rel_err: f64,
    pub all_agree: bool,
    pub unstable_not_diverged: usize,
}

/// Collects `n` stable draws, verifies both ports of each, and checks that
/// every unstable draw met along the way diverges.
pub fn verify_batch(seed: u64, n: usize, tol: f64) -> BatchReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut stable, mut unstable, mut skipped) = (Vec::new(), Vec::new(), 0);
    while stable.len() < n {
        let e = random_working_point(&mut rng);
        let margin = classify_stability(&e, DEFAULT_TOL_STAB).margin;
        if margin >= BATCH_MARGIN_FLOOR {
            stable.push(e);
        } else if margin <= -BATCH_MARGIN_FLOOR {
            unstable.push((e, margin));
        } else {
            skipped += 1;
        }
    }
    let max_rel_err = stable
        .par_iter()
        .flat_map_iter(|e| [Port::One, Port::Two].map(|p| verify_response(e, p, tol)))
        .map(|r| r.map_or(f64::INFINITY, |r| r.max_rel_err))
        .reduce(|| 0.0, f64::max);
    let unstable_not_diverged = unstable
        .par_iter()
        .filter(|(e, m)| !matches!(integrate_probe(e, Port::One, 80.0 / -m), Err(Error::Diverged { .. })))
        .count();
    BatchReport {
        seed,
        stable_draws: stable.len(),
        unstable_draws: unstable.len(),
        skipped_near_marginal: skipped,
        max_rel_err,
        all_agree: max_rel_err < tol,
        unstable_not_diverged,
    }
}

pub fn verify(cfg: &RunConfig) -> CliResult<()> {
    let tol = cfg.command.tol.unwrap_or(1e-6);
    if !(tol > 0.0) {
        return Err(config(format!("tol must be > 0, got {tol}")));
    }
    let e = working_point(cfg)?;
    let mut reports: Vec<(String, VerifyReport)> = Vec::new();
    for port in ports(cfg)? {
        let name = match port {
            Port::One => "port_1",
            Port::Two => "port_2",
        };
        reports.push((name.into(), verify_response(&e, port, tol)?));
    }
    let mut out = serde_json::Map::new();
    out.insert("tol".into(), json!(tol));
    for (k, r) in reports {
        out.insert(k, json!(r));
    }
    if let Some(n) = cfg.command.draws.filter(|n| *n > 0) {
        out.insert("batch".into(), json!(verify_batch(cfg.seed, n, tol)));
    }
    write_json(cfg.command.out.as_deref(), &out)
}
