//! Transmitted-field phase and group delay.
//!
//! The group delay is `tau = d arg(t) / d omega_p`. Every complex rate depends
//! on the probe frequency through `-i omega_p`, so `t(omega_p)` is a rational
//! function with closed-form derivative and `tau = Im(t' / t)`. A central
//! finite difference of the unwrapped phase is provided as a cross-check.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::EffectiveParams;
use crate::response::{denominator, scattering_matrix, singular_threshold, Channel};

/// Default finite-difference step in probe frequency.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

const ZERO_REL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayPoint {
    /// Unified detuning of the working point (`delta_m`).
    pub delta: f64,
    /// `arg t` in `(-pi, pi]`.
    pub phase: f64,
    pub tau: f64,
}

/// `t`, `dt/d omega_p`, and the magnitude scale of the summands of `t`.
struct RationalValue {
    t: C64,
    dt: C64,
    scale: f64,
}

fn rational(e: &EffectiveParams, ch: Channel) -> Result<RationalValue> {
    let d = denominator(e);
    if d.norm() <= singular_threshold(e) {
        return Err(Error::NearSingularDenominator { magnitude: d.norm() });
    }
    let r = e.complex_rates();
    let (g1, g2) = (e.coupling_1, e.coupling_2);
    let (c1, c2, cm) = (r.cavity_1, r.cavity_2, r.mechanics);
    let i = C64::i();
    let j = e.j;
    let mi = -i;

    let dd = mi * ((cm * c2 + g2.norm_sqr()) + (cm * c1 + g1.norm_sqr()) + (j * j + c1 * c2));
    let (ge1, ge2) = e.external_rates();
    let cross = 2.0 * (ge1 * ge2).sqrt();

    let (t, dt, scale) = match ch {
        Channel::T21 | Channel::T12 => {
            let prod = if ch == Channel::T21 { g1.conj() * g2 } else { g2.conj() * g1 };
            let n = -(prod + i * j * cm);
            let dn = C64::new(-j, 0.0);
            let t = cross * n / d;
            let dt = cross * (dn * d - n * dd) / (d * d);
            let scale = cross * (prod.norm() + j * cm.norm()) / d.norm();
            (t, dt, scale)
        }
        Channel::T11 | Channel::T22 => {
            let (ge, other, g_other) = if ch == Channel::T11 { (ge1, c2, g2) } else { (ge2, c1, g1) };
            let n = other * cm + g_other.norm_sqr();
            let dn = mi * (other + cm);
            let t = 2.0 * ge * n / d - 1.0;
            let dt = 2.0 * ge * (dn * d - n * dd) / (d * d);
            let scale = 2.0 * ge * (other.norm() * cm.norm() + g_other.norm_sqr()) / d.norm() + 1.0;
            (t, dt, scale)
        }
    };
    Ok(RationalValue { t, dt, scale })
}

fn check_nonzero(v: &RationalValue) -> Result<()> {
    if v.t.norm() <= ZERO_REL * v.scale.max(1.0) {
        return Err(Error::ZeroTransmission { magnitude: v.t.norm() });
    }
    Ok(())
}

/// Closed-form `dt/d omega_p` of one channel.
pub fn transmission_derivative(e: &EffectiveParams, ch: Channel) -> Result<(C64, C64)> {
    let v = rational(e, ch)?;
    Ok((v.t, v.dt))
}

pub fn group_delay_analytic(e: &EffectiveParams, ch: Channel) -> Result<DelayPoint> {
    let v = rational(e, ch)?;
    check_nonzero(&v)?;
    Ok(DelayPoint {
        delta: e.delta_m,
        phase: v.t.arg(),
        tau: (v.dt / v.t).im,
    })
}

/// Finite-difference delay with its phase-jump flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdDelay {
    pub point: DelayPoint,
    /// Phase moved by more than `pi/2` across the stencil.
    pub phase_jump: bool,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Central difference of `arg t` for any transmission function of the probe
/// frequency offset.
pub fn fd_delay<F>(t_at: F, step: f64) -> Result<(f64, bool)>
where
    F: Fn(f64) -> Result<C64>,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Domain(format!("finite-difference step must be > 0, got {step}")));
    }
    let plus = t_at(step)?;
    let minus = t_at(-step)?;
    for z in [plus, minus] {
        if z.norm() < ZERO_REL {
            return Err(Error::ZeroTransmission { magnitude: z.norm() });
        }
    }
    let dphi = wrap_phase(plus.arg() - minus.arg());
    Ok((dphi / (2.0 * step), dphi.abs() > PI / 2.0))
}

pub fn group_delay_fd(e: &EffectiveParams, ch: Channel, step: f64) -> Result<FdDelay> {
    let centre = scattering_matrix(e)?.get(ch);
    if centre.norm() < ZERO_REL {
        return Err(Error::ZeroTransmission { magnitude: centre.norm() });
    }
    let (tau, phase_jump) = fd_delay(|dw| Ok(scattering_matrix(&e.with_probe_shift(dw))?.get(ch)), step)?;
    Ok(FdDelay {
        point: DelayPoint {
            delta: e.delta_m,
            phase: centre.arg(),
            tau,
        },
        phase_jump,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayRow {
    pub delta: f64,
    /// `None` where the phase is undefined or the denominator is singular.
    pub point: Option<DelayPoint>,
    /// Phase continued along the grid to the nearest branch.
    pub phase_unwrapped: Option<f64>,
}

/// Group delay of one channel over a grid of unified detunings.
pub fn delay_spectrum(template: &EffectiveParams, delta_grid: &Grid, ch: Channel) -> Result<Vec<DelayRow>> {
    delta_grid.validate()?;
    let points: Vec<(f64, Option<DelayPoint>)> = delta_grid
        .points()
        .into_par_iter()
        .map(|delta| (delta, group_delay_analytic(&template.with_unified_detuning(delta), ch).ok()))
        .collect();
    let mut prev: Option<(f64, f64)> = None;
    Ok(points
        .into_iter()
        .map(|(delta, point)| {
            let phase_unwrapped = point.map(|p| {
                let u = match prev {
                    Some((raw, unwrapped)) => unwrapped + wrap_phase(p.phase - raw),
                    None => p.phase,
                };
                prev = Some((p.phase, u));
                u
            });
            DelayRow {
                delta,
                point,
                phase_unwrapped,
            }
        })
        .collect())
}

/// Largest `|tau|` in a delay spectrum.
pub fn peak_abs_delay(rows: &[DelayRow]) -> Option<(f64, f64)> {
    rows.iter()
        .filter_map(|r| r.point.map(|p| (r.delta, p.tau)))
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
}
