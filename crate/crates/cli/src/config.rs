//! JSON run configuration.

use std::path::{Path, PathBuf};

use omt_core::{EffectiveParams, Grid, PhysicalParams, Rates, SolveOptions, C64};
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub physical: Option<PhysicalParams>,
    pub effective: Option<EffectiveBlock>,
    #[serde(default)]
    pub command: CommandBlock,
    #[serde(default)]
    pub seed: u64,
}

/// Working point given directly in the probe frame.
///
/// Either the unified form (`g_mag`, `theta`, `delta`) or the general form
/// (`g1_re` .. `delta_m`) may be given, not both. Sweeps that only need
/// rates accept a block with neither.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveBlock {
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub g_m: f64,
    pub j: f64,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_mag: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1_im: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2_im: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_1pp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_2pp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_m: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl EffectiveBlock {
    pub fn rates(&self) -> Rates {
        Rates::new(self.gamma_1, self.gamma_2, self.g_m, self.j).with_eta(self.eta)
    }

    pub fn point(&self) -> CliResult<EffectiveParams> {
        let unified = [self.g_mag, self.theta, self.delta];
        let general = [
            self.g1_re,
            self.g1_im,
            self.g2_re,
            self.g2_im,
            self.delta_1pp,
            self.delta_2pp,
            self.delta_m,
        ];
        let any_u = unified.iter().any(Option::is_some);
        let any_g = general.iter().any(Option::is_some);
        match (any_u, any_g) {
            (true, true) => Err(config(
                "effective block mixes the unified keys (g_mag, theta, delta) with the general keys (g1_re .. delta_m)",
            )),
            (true, false) => match unified {
                [Some(g), Some(theta), Some(delta)] => Ok(EffectiveParams::unified(self.rates(), g, theta, delta)?),
                _ => Err(config("unified effective block needs all of g_mag, theta, delta")),
            },
            (false, true) => match general {
                [Some(a), Some(b), Some(c), Some(d), Some(d1), Some(d2), Some(dm)] => Ok(EffectiveParams::new(
                    self.rates(),
                    C64::new(a, b),
                    C64::new(c, d),
                    (d1, d2, dm),
                )?),
                _ => Err(config(
                    "general effective block needs all of g1_re, g1_im, g2_re, g2_im, delta_1pp, delta_2pp, delta_m",
                )),
            },
            (false, false) => Err(config("this command needs a working point: add g_mag/theta/delta to the effective block")),
        }
    }

    /// General-form block describing `e`.
    pub fn from_params(e: &EffectiveParams) -> Self {
        Self {
            gamma_1: e.gamma_1,
            gamma_2: e.gamma_2,
            g_m: e.mech_gain,
            j: e.j,
            eta: e.eta,
            g1_re: Some(e.coupling_1.re),
            g1_im: Some(e.coupling_1.im),
            g2_re: Some(e.coupling_2.re),
            g2_im: Some(e.coupling_2.im),
            delta_1pp: Some(e.delta_1),
            delta_2pp: Some(e.delta_2),
            delta_m: Some(e.delta_m),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CouplingSpec {
    /// `"tied"`
    Named(String),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub relaxation: Option<f64>,
}

impl SolveBlock {
    pub fn options(&self) -> SolveOptions {
        let d = SolveOptions::default();
        SolveOptions {
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            relaxation: self.relaxation.unwrap_or(d.relaxation),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandBlock {
    pub delta_grid: Option<Grid>,
    pub theta_grid: Option<Grid>,
    pub j_grid: Option<Grid>,
    pub tol_stab: Option<f64>,
    pub omega_m: Option<f64>,
    pub coupling: Option<CouplingSpec>,
    pub channel: Option<String>,
    pub port: Option<u8>,
    pub tol: Option<f64>,
    pub draws: Option<usize>,
    pub probe_offset: Option<f64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub solve: SolveBlock,
}

/// Exactly one parameter block.
pub enum Params<'a> {
    Physical(&'a PhysicalParams),
    Effective(&'a EffectiveBlock),
}

impl RunConfig {
    pub fn params(&self) -> CliResult<Params<'_>> {
        match (&self.physical, &self.effective) {
            (Some(p), None) => Ok(Params::Physical(p)),
            (None, Some(e)) => Ok(Params::Effective(e)),
            (Some(_), Some(_)) => Err(config("give either a `physical` or an `effective` block, not both")),
            (None, None) => Err(config("missing parameter block: add `physical` or `effective`")),
        }
    }
}

pub fn parse(text: &str, path: &Path) -> CliResult<RunConfig> {
    serde_json::from_str(text).map_err(|e| CliError::ConfigSyntax {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, path)
}

/// The configured grid, or `default` when absent.
pub fn config_grid(g: Option<Grid>, default: Grid) -> Grid {
    g.unwrap_or(default)
}

/// Parses `min:max:n`; a bound may carry a `pi` suffix (`0.25pi`).
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [min, max, n] = parts[..] else {
        return Err(format!("expected min:max:n, got `{s}`"));
    };
    let n: usize = n.trim().parse().map_err(|_| format!("bad point count `{n}`"))?;
    Ok(Grid {
        min: parse_scalar(min)?,
        max: parse_scalar(max)?,
        n,
    })
}

/// A float, optionally suffixed with `pi`.
pub fn parse_scalar(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (num, factor) = match s.strip_suffix("pi") {
        Some("") | Some("-") => (if s.starts_with('-') { "-1" } else { "1" }, std::f64::consts::PI),
        Some(rest) => (rest.trim_end_matches('*'), std::f64::consts::PI),
        None => (s, 1.0),
    };
    num.parse::<f64>()
        .map(|x| x * factor)
        .map_err(|_| format!("bad number `{s}`"))
}
