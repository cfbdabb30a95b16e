//! Fixed-step integration of the linear fluctuation dynamics
//! `d/dt x = -M x + drive`, used as an independent check on the algebraic
//! probe responses and on the eigenvalue stability verdicts.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EffectiveParams;
use crate::response::{intracavity_response, Port};
use crate::stability::{build_dynamic_matrix, classify_stability, DynamicMatrix, Frame, DEFAULT_TOL_STAB};

/// Largest allowed `dt * max|M_ij|`.
pub const MAX_STEP_FACTOR: f64 = 0.1;

const DIVERGENCE_FACTOR: f64 = 1e12;
const MAX_VERIFY_STEPS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<[C64; 3]>,
    pub norm_history: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> [C64; 3] {
        *self.states.last().expect("trajectory holds the initial sample")
    }
}

fn to_array(v: &Vector3<C64>) -> [C64; 3] {
    [v[0], v[1], v[2]]
}

/// RK4 integration recording every step.
pub fn integrate(m: &DynamicMatrix, drive: [C64; 3], lambda0: [C64; 3], dt: f64, t_end: f64) -> Result<Trajectory> {
    integrate_strided(m, drive, lambda0, dt, t_end, 1)
}

/// RK4 integration recording every `stride`-th step plus the final state.
///
/// The step is shrunk to `t_end / ceil(t_end / dt)` so the last sample lands
/// on `t_end`. Integration stops with [`Error::Diverged`] once
/// `||x|| > 1e12 * max(||drive|| t_end, ||x0||)`.
pub fn integrate_strided(
    m: &DynamicMatrix,
    drive: [C64; 3],
    lambda0: [C64; 3],
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<Trajectory> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be > 0, got {t_end}")));
    }
    let limit = MAX_STEP_FACTOR / m.max_entry().max(f64::MIN_POSITIVE);
    if !(dt > 0.0) || dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }
    let stride = stride.max(1);
    let steps = (t_end / dt).ceil() as usize;
    let h = t_end / steps as f64;

    let a: Matrix3<C64> = -m.entries;
    let f = Vector3::new(drive[0], drive[1], drive[2]);
    let rhs = |x: &Vector3<C64>| a * x + f;
    let mut x = Vector3::new(lambda0[0], lambda0[1], lambda0[2]);
    let cutoff = DIVERGENCE_FACTOR * (f.norm() * t_end).max(x.norm());

    let cap = steps / stride + 2;
    let mut out = Trajectory {
        times: Vec::with_capacity(cap),
        states: Vec::with_capacity(cap),
        norm_history: Vec::with_capacity(cap),
    };
    out.times.push(0.0);
    out.states.push(to_array(&x));
    out.norm_history.push(x.norm());

    let hc = C64::new(h, 0.0);
    for n in 1..=steps {
        let k1 = rhs(&x);
        let k2 = rhs(&(x + k1 * (hc * 0.5)));
        let k3 = rhs(&(x + k2 * (hc * 0.5)));
        let k4 = rhs(&(x + k3 * hc));
        x += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * (hc / 6.0);
        let t = if n == steps { t_end } else { n as f64 * h };
        let norm = x.norm();
        if !norm.is_finite() || norm > cutoff {
            return Err(Error::Diverged { t });
        }
        if n % stride == 0 || n == steps {
            out.times.push(t);
            out.states.push(to_array(&x));
            out.norm_history.push(norm);
        }
    }
    Ok(out)
}

/// Unit drive on one cavity.
pub fn unit_drive(port: Port) -> [C64; 3] {
    let mut d = [C64::new(0.0, 0.0); 3];
    d[match port {
        Port::One => 0,
        Port::Two => 1,
    }] = C64::new(1.0, 0.0);
    d
}

/// Largest step satisfying the integrator precondition.
pub fn default_step(m: &DynamicMatrix) -> f64 {
    MAX_STEP_FACTOR / m.max_entry().max(f64::MIN_POSITIVE)
}

/// Probe-frame integration from rest with a unit drive on `port`, keeping only
/// the first and last samples.
pub fn integrate_probe(e: &EffectiveParams, port: Port, t_end: f64) -> Result<Trajectory> {
    let m = build_dynamic_matrix(e, Frame::Probe);
    let dt = default_step(&m);
    let steps = (t_end / dt).ceil() as usize;
    integrate_strided(&m, unit_drive(port), [C64::new(0.0, 0.0); 3], dt, t_end, steps.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub agrees: bool,
    pub max_rel_err: f64,
    pub margin: f64,
    pub t_end: f64,
    pub terminal: [C64; 3],
    pub algebraic: [C64; 3],
}

/// Horizon long enough for transients to decay below double precision.
pub fn settle_time(e: &EffectiveParams, margin: f64) -> f64 {
    (50.0 / e.gamma_1.min(e.gamma_2)).max(40.0 / margin)
}

/// Integrates to steady state and compares with the algebraic response.
///
/// The error is `max_k |x_k - chi_k| / max_k |chi_k|`.
pub fn verify_response(e: &EffectiveParams, port: Port, tol: f64) -> Result<VerifyReport> {
    let verdict = classify_stability(e, DEFAULT_TOL_STAB);
    if !verdict.is_stable() {
        return Err(Error::RefusesUnstable { margin: verdict.margin });
    }
    let t_end = settle_time(e, verdict.margin);
    let m = build_dynamic_matrix(e, Frame::Probe);
    let steps = t_end / default_step(&m);
    if steps > MAX_VERIFY_STEPS as f64 {
        return Err(Error::Domain(format!(
            "margin {:e} needs {steps:.0} integration steps, above the {MAX_VERIFY_STEPS} cap",
            verdict.margin
        )));
    }
    let algebraic = intracavity_response(e, port)?.as_array();
    let terminal = integrate_probe(e, port, t_end)?.last();
    let scale = algebraic.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let err = terminal
        .iter()
        .zip(&algebraic)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    let max_rel_err = if scale > 0.0 { err / scale } else { err };
    Ok(VerifyReport {
        agrees: max_rel_err < tol,
        max_rel_err,
        margin: verdict.margin,
        t_end,
        terminal,
        algebraic,
    })
}
