//! Classical steady state of the pumped system.
//!
//! The radiation-pressure shift enters the cavity equations only through
//! `2 g_i Re<b>`, so the solver iterates on that one real quantity: for a
//! given `Re<b>` the cavity amplitudes solve a 2x2 linear system, and the
//! mechanical amplitude follows from the mechanical equation. The update is
//! under-relaxed and started from `<b> = 0`; in a multistable regime the
//! branch connected to the undisplaced resonator is the one returned.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EffectiveParams, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            relaxation: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub a_1: C64,
    pub a_2: C64,
    pub b: C64,
    /// Shifted detunings `delta_i + 2 g_i Re<b>`.
    pub delta_1p: f64,
    pub delta_2p: f64,
    /// Effective couplings `g_i <a_i>`.
    pub coupling_1: C64,
    pub coupling_2: C64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Normalized residuals of the three steady-state equations.
///
/// Each equation is divided by the largest magnitude among its own terms, so
/// the value is a relative error; an equation whose terms all vanish
/// contributes zero.
pub fn residuals(p: &PhysicalParams, a_1: C64, a_2: C64, b: C64) -> [f64; 3] {
    let i = C64::i();
    let (d1, d2) = p.detunings();
    let (f1, f2) = p.drives();
    let shift = 2.0 * b.re;
    let rel = |terms: &[C64]| {
        let sum: C64 = terms.iter().sum();
        let scale = terms.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            0.0
        } else {
            sum.norm() / scale
        }
    };
    let eq1 = [
        -C64::new(p.gamma_1, d1 + p.g_1 * shift) * a_1,
        -i * p.j * a_2,
        f1,
    ];
    let eq2 = [
        -C64::new(p.gamma_2, d2 + p.g_2 * shift) * a_2,
        -i * p.j * a_1,
        f2,
    ];
    let eq3 = [
        C64::new(p.mech_gain, -p.omega_m) * b,
        -i * (p.g_1 * a_1.norm_sqr() + p.g_2 * a_2.norm_sqr()),
    ];
    [rel(&eq1), rel(&eq2), rel(&eq3)]
}

/// Cavity amplitudes for fixed shifted detunings.
fn cavity_amplitudes(p: &PhysicalParams, delta_1p: f64, delta_2p: f64) -> Result<(C64, C64)> {
    let i = C64::i();
    let (f1, f2) = p.drives();
    let c1 = C64::new(p.gamma_1, delta_1p);
    let c2 = C64::new(p.gamma_2, delta_2p);
    let det = c1 * c2 + p.j * p.j;
    let scale = [p.gamma_1, p.gamma_2, delta_1p.abs(), delta_2p.abs(), p.j]
        .into_iter()
        .fold(0.0, f64::max);
    if det.norm() <= 1e-14 * scale * scale {
        return Err(Error::SingularLinearSystem { magnitude: det.norm() });
    }
    let a_1 = (c2 * f1 - i * p.j * f2) / det;
    let a_2 = (c1 * f2 - i * p.j * f1) / det;
    Ok((a_1, a_2))
}

fn mechanical_amplitude(p: &PhysicalParams, a_1: C64, a_2: C64) -> C64 {
    let i = C64::i();
    -i * (p.g_1 * a_1.norm_sqr() + p.g_2 * a_2.norm_sqr()) / C64::new(-p.mech_gain, p.omega_m)
}

pub fn solve_steady_state(p: &PhysicalParams, opts: &SolveOptions) -> Result<SteadyState> {
    p.validate()?;
    if p.mech_gain >= p.omega_m {
        return Err(Error::Domain(format!(
            "steady state requires mechanical gain below omega_m (resolved sidebands), got G_m = {} >= omega_m = {}",
            p.mech_gain, p.omega_m
        )));
    }
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return Err(Error::Domain(format!("relaxation must lie in (0, 1], got {}", opts.relaxation)));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::Domain("tolerance must be > 0 and max_iter >= 1".into()));
    }
    let (d1, d2) = p.detunings();
    let mut re_b = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let (a_1, a_2) = cavity_amplitudes(p, d1 + 2.0 * p.g_1 * re_b, d2 + 2.0 * p.g_2 * re_b)?;
        let b = mechanical_amplitude(p, a_1, a_2);
        residual = residuals(p, a_1, a_2, b).into_iter().fold(0.0, f64::max);
        if residual < opts.tol {
            return Ok(SteadyState {
                a_1,
                a_2,
                b,
                delta_1p: d1 + 2.0 * p.g_1 * b.re,
                delta_2p: d2 + 2.0 * p.g_2 * b.re,
                coupling_1: p.g_1 * a_1,
                coupling_2: p.g_2 * a_2,
                converged: true,
                iterations: it,
                residual,
            });
        }
        if !residual.is_finite() {
            break;
        }
        re_b += opts.relaxation * (b.re - re_b);
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Probe-frame working point for a probe at `omega_d + probe_offset`.
pub fn effective_params_from_steady_state(
    p: &PhysicalParams,
    s: &SteadyState,
    probe_offset: f64,
) -> Result<EffectiveParams> {
    if !s.converged {
        return Err(Error::UnconvergedSteadyState);
    }
    EffectiveParams::new(
        crate::model::Rates {
            gamma_1: p.gamma_1,
            gamma_2: p.gamma_2,
            mech_gain: p.mech_gain,
            j: p.j,
            eta: p.eta,
        },
        s.coupling_1,
        s.coupling_2,
        (
            s.delta_1p - probe_offset,
            s.delta_2p - probe_offset,
            p.omega_m - probe_offset,
        ),
    )
}
