//! Preconfigured parameter sets for each figure. Rates are in units of the
//! mechanical gain except for the gain sweep, which is in units of `gamma_1`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use omt_core::delay::{delay_spectrum, peak_abs_delay};
use omt_core::response::{gain_map, peak_gain, scattering_matrix, transmission_spectrum};
use omt_core::stability::{classify_stability, stability_map, stability_onset, CouplingRule, DEFAULT_TOL_STAB};
use omt_core::{Channel, EffectiveParams, Grid, Rates};
use serde_json::{json, Value};

use crate::commands::{write_gain_map, write_json, write_spectrum, write_stability_map, DEFAULT_OMEGA_M};
use crate::csv::{num, opt, CsvWriter};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    #[value(name = "2a")]
    Fig2a,
    #[value(name = "2b")]
    Fig2b,
    #[value(name = "3a")]
    Fig3a,
    #[value(name = "3b")]
    Fig3b,
    #[value(name = "4a")]
    Fig4a,
    #[value(name = "4b")]
    Fig4b,
    #[value(name = "5")]
    Fig5,
}

impl Figure {
    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig2a => "2a",
            Figure::Fig2b => "2b",
            Figure::Fig3a => "3a",
            Figure::Fig3b => "3b",
            Figure::Fig4a => "4a",
            Figure::Fig4b => "4b",
            Figure::Fig5 => "5",
        }
    }
}

pub const FIG5_THETAS: [f64; 4] = [0.3, 0.4, 0.45, 0.47];

fn theta_grid(n: usize) -> Grid {
    Grid {
        min: 0.01 * PI,
        max: 0.99 * PI,
        n,
    }
}

fn j_grid() -> Grid {
    Grid {
        min: 0.5,
        max: 20.0,
        n: 40,
    }
}

fn grid_json(g: &Grid) -> Value {
    json!({"min": g.min, "max": g.max, "n": g.n})
}

/// Writes `fig<id>.csv` and `fig<id>_summary.json` under `dir` and returns the
/// summary.
pub fn reproduce(fig: Figure, dir: &Path) -> CliResult<Value> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    let csv = dir.join(format!("fig{}.csv", fig.id()));
    let mut summary = match fig {
        Figure::Fig2a => fig2(&csv, 15.0, 11.0)?,
        Figure::Fig2b => fig2(&csv, 10.0, 10.0)?,
        Figure::Fig3a => fig3a(&csv)?,
        Figure::Fig3b => fig3b(&csv)?,
        Figure::Fig4a => fig4(&csv, 15.0)?,
        Figure::Fig4b => fig4(&csv, 10.0)?,
        Figure::Fig5 => fig5(&csv)?,
    };
    summary["figure"] = json!(fig.id());
    summary["data"] = json!(csv.file_name().and_then(|s| s.to_str()));
    let path: PathBuf = dir.join(format!("fig{}_summary.json", fig.id()));
    write_json(Some(&path), &summary)?;
    Ok(summary)
}

fn fig2(csv: &Path, gamma_2: f64, line_j: f64) -> CliResult<Value> {
    let rates = Rates::new(10.0, gamma_2, 1.0, 0.0);
    let thetas = theta_grid(197);
    let js = j_grid();
    let cells = stability_map(rates, DEFAULT_OMEGA_M, CouplingRule::Tied, &thetas, &js, DEFAULT_TOL_STAB)?;
    write_stability_map(Some(csv), &cells)?;
    let line = stability_map(
        rates,
        DEFAULT_OMEGA_M,
        CouplingRule::Tied,
        &thetas,
        &Grid {
            min: line_j,
            max: line_j,
            n: 1,
        },
        DEFAULT_TOL_STAB,
    )?;
    let line_bad: Vec<f64> = line
        .iter()
        .filter(|c| !c.verdict.is_stable())
        .map(|c| c.theta / PI)
        .collect();
    Ok(json!({
        "gamma_1": 10.0,
        "gamma_2": gamma_2,
        "omega_m": DEFAULT_OMEGA_M,
        "theta_grid": grid_json(&thetas),
        "j_grid": grid_json(&js),
        "non_stable_cells": cells.iter().filter(|c| !c.verdict.is_stable()).count(),
        "cells": cells.len(),
        "line_j": line_j,
        "line_all_stable": line_bad.is_empty(),
        "line_non_stable_theta_over_pi": line_bad,
    }))
}

fn fig3a(csv: &Path) -> CliResult<Value> {
    let j = 11.0;
    let template = EffectiveParams::unified(Rates::new(10.0, 15.0, 1.0, j), j.sqrt(), FRAC_PI_2, 0.0)?;
    let grid = Grid {
        min: -10.0,
        max: 10.0,
        n: 2001,
    };
    let rows = transmission_spectrum(&template, &grid, DEFAULT_TOL_STAB)?;
    write_spectrum(Some(csv), &rows)?;
    let s0 = scattering_matrix(&template)?;
    let peak = rows
        .iter()
        .filter_map(|r| r.s.map(|s| (r.delta, s.probability(Channel::T21))))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    Ok(json!({
        "delta_grid": grid_json(&grid),
        "t21_at_zero": s0.probability(Channel::T21),
        "t12_at_zero": s0.probability(Channel::T12),
        "lg_t21_at_zero": s0.probability(Channel::T21).log10(),
        "peak_t21": peak.map(|p| p.1),
        "peak_t21_delta": peak.map(|p| p.0),
        "all_stable": rows.iter().all(|r| r.class == omt_core::Class::Stable),
    }))
}

fn fig3b_point(gm_over_gamma1: f64) -> omt_core::Result<EffectiveParams> {
    EffectiveParams::unified(Rates::new(1.0, 1.5, gm_over_gamma1, 1.3), 1.3, FRAC_PI_2, 0.0)
}

fn fig3b(csv: &Path) -> CliResult<Value> {
    let grid = Grid {
        min: 0.05,
        max: 1.5,
        n: 146,
    };
    let mut w = CsvWriter::create(
        Some(csv),
        &["gm_over_gamma1", "T12", "T21", "lg_T12", "lg_T21", "margin", "stable_flag"],
    )?;
    for x in grid.points() {
        let e = fig3b_point(x)?;
        let s = scattering_matrix(&e).ok();
        let t12 = s.map(|s| s.probability(Channel::T12));
        let t21 = s.map(|s| s.probability(Channel::T21));
        let v = classify_stability(&e, DEFAULT_TOL_STAB);
        w.row(&[
            num(x),
            opt(t12),
            opt(t21),
            opt(t12.map(f64::log10)),
            opt(t21.map(f64::log10)),
            num(v.margin),
            v.class.code().to_string(),
        ])?;
    }
    w.finish()?;
    let onset = stability_onset(fig3b_point, 1.0, 2.0, 1e-12)?;
    let at_13 = scattering_matrix(&fig3b_point(1.3)?)?;
    Ok(json!({
        "gm_over_gamma1_grid": grid_json(&grid),
        "instability_onset_gm_over_gamma1": onset,
        "t21_at_1_3": at_13.probability(Channel::T21),
        "t12_at_1_3": at_13.probability(Channel::T12),
    }))
}

fn fig4(csv: &Path, gamma_2: f64) -> CliResult<Value> {
    let thetas = theta_grid(99);
    let js = j_grid();
    let cells = gain_map(Rates::new(10.0, gamma_2, 1.0, 0.0), &thetas, &js, DEFAULT_TOL_STAB)?;
    write_gain_map(Some(csv), &cells)?;
    let peak = peak_gain(&cells);
    Ok(json!({
        "gamma_1": 10.0,
        "gamma_2": gamma_2,
        "theta_grid": grid_json(&thetas),
        "j_grid": grid_json(&js),
        "max_lg_t21": peak.map(|p| p.0),
        "max_theta_over_pi": peak.map(|p| p.1.theta / PI),
        "max_j": peak.map(|p| p.1.j),
        "stable_cells": cells.iter().filter(|c| c.stable_gain().is_some()).count(),
        "cells": cells.len(),
    }))
}

fn fig5_template(theta_over_pi: f64) -> omt_core::Result<EffectiveParams> {
    let j = 10.0;
    let theta = theta_over_pi * PI;
    EffectiveParams::unified(Rates::new(10.0, 15.0, 1.0, j), (j / theta.sin()).sqrt(), theta, 0.0)
}

fn fig5(csv: &Path) -> CliResult<Value> {
    let grid = Grid {
        min: -10.0,
        max: 10.0,
        n: 20001,
    };
    let mut w = CsvWriter::create(Some(csv), &["theta_over_pi", "delta", "phase_unwrapped", "tau", "stable_flag"])?;
    let mut peaks = Vec::new();
    for t in FIG5_THETAS {
        let template = fig5_template(t)?;
        let rows = delay_spectrum(&template, &grid, Channel::T21)?;
        for r in &rows {
            let class = classify_stability(&template.with_unified_detuning(r.delta), DEFAULT_TOL_STAB).class;
            w.row(&[
                num(t),
                num(r.delta),
                opt(r.phase_unwrapped),
                opt(r.point.map(|p| p.tau)),
                class.code().to_string(),
            ])?;
        }
        let peak = peak_abs_delay(&rows);
        peaks.push(json!({
            "theta_over_pi": t,
            "peak_abs_tau21": peak.map(|p| p.1.abs()),
            "peak_delta": peak.map(|p| p.0),
        }));
    }
    w.finish()?;
    let values: Vec<f64> = peaks
        .iter()
        .map(|p| p["peak_abs_tau21"].as_f64().unwrap_or(f64::NAN))
        .collect();
    Ok(json!({
        "delta_grid": grid_json(&grid),
        "peaks": peaks,
        "peak_tau21": values.last(),
        "peaks_increasing": values.windows(2).all(|w| w[1] > w[0]),
    }))
}
