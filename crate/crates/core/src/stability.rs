//! Fluctuation dynamic matrix and its stability classification.
//!
//! Fluctuations obey `d/dt x = -M x + drive`, so a working point is stable
//! when every eigenvalue of `M` has a strictly positive real part.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{EffectiveParams, Rates};

/// Default width of the marginal band around zero margin.
pub const DEFAULT_TOL_STAB: f64 = 1e-9;

/// Which rotating frame sets the diagonal of the dynamic matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    /// Probe frame: diagonal `(gamma_i + i delta_i'', -G_m + i delta_m)`.
    Probe,
    /// Pump frame: diagonal `(gamma_i + i delta_i', -G_m + i omega_m)`.
    Pump {
        delta_1p: f64,
        delta_2p: f64,
        omega_m: f64,
    },
}

impl Frame {
    /// Pump frame at the red-sideband working point `delta_i' = omega_m`.
    pub fn pump_red_sideband(omega_m: f64) -> Self {
        Frame::Pump {
            delta_1p: omega_m,
            delta_2p: omega_m,
            omega_m,
        }
    }
}

/// 3x3 matrix acting on `(da_1, da_2, db)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicMatrix {
    pub entries: Matrix3<C64>,
    pub frame: Frame,
}

impl DynamicMatrix {
    pub fn eigenvalues(&self) -> [C64; 3] {
        eigen::eigenvalues(&self.entries)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn build_dynamic_matrix(e: &EffectiveParams, frame: Frame) -> DynamicMatrix {
    let i = C64::i();
    let (d1, d2, dm) = match frame {
        Frame::Probe => (e.delta_1, e.delta_2, e.delta_m),
        Frame::Pump {
            delta_1p,
            delta_2p,
            omega_m,
        } => (delta_1p, delta_2p, omega_m),
    };
    let g1 = e.coupling_1;
    let g2 = e.coupling_2;
    let ij = i * e.j;
    #[rustfmt::skip]
    let entries = Matrix3::new(
        C64::new(e.gamma_1, d1), ij,                    i * g1,
        ij,                      C64::new(e.gamma_2, d2), i * g2,
        i * g1.conj(),           i * g2.conj(),          C64::new(-e.mech_gain, dm),
    );
    DynamicMatrix { entries, frame }
}

pub fn eigenvalues(m: &DynamicMatrix) -> [C64; 3] {
    m.eigenvalues()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    Stable,
    Marginal,
    Unstable,
}

impl Class {
    pub fn code(self) -> char {
        match self {
            Class::Stable => 'S',
            Class::Marginal => 'M',
            Class::Unstable => 'U',
        }
    }

    pub fn from_margin(margin: f64, tol_stab: f64) -> Self {
        if margin > tol_stab {
            Class::Stable
        } else if margin >= -tol_stab {
            Class::Marginal
        } else {
            Class::Unstable
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub eigenvalues: [C64; 3],
    /// Smallest real part over the eigenvalues of `M`.
    pub margin: f64,
    pub class: Class,
}

impl StabilityVerdict {
    pub fn from_matrix(m: &DynamicMatrix, tol_stab: f64) -> Self {
        let eigenvalues = m.eigenvalues();
        let margin = eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        Self {
            eigenvalues,
            margin,
            class: Class::from_margin(margin, tol_stab),
        }
    }

    pub fn is_stable(&self) -> bool {
        self.class == Class::Stable
    }
}

/// Verdict for the probe-frame matrix of `e`. The real parts of the spectrum
/// do not depend on the frame, since frames differ by a multiple of `i I`.
pub fn classify_stability(e: &EffectiveParams, tol_stab: f64) -> StabilityVerdict {
    StabilityVerdict::from_matrix(&build_dynamic_matrix(e, Frame::Probe), tol_stab)
}

/// How the coupling magnitude is chosen at each map cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CouplingRule {
    /// `G = sqrt(J G_m / sin(theta))`.
    Tied,
    /// Fixed magnitude, phase taken from the grid.
    Fixed(f64),
}

impl CouplingRule {
    pub fn magnitude(self, j: f64, mech_gain: f64, theta: f64) -> Result<f64> {
        match self {
            CouplingRule::Fixed(g) => Ok(g),
            CouplingRule::Tied => {
                let s = theta.sin();
                if !(s > 0.0) {
                    return Err(Error::GridDomain(format!(
                        "tied coupling needs sin(theta) > 0, got theta = {theta}"
                    )));
                }
                Ok((j * mech_gain / s).sqrt())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub theta: f64,
    pub j: f64,
    pub g: f64,
    pub verdict: StabilityVerdict,
}

/// Stability verdicts over the `(theta, J)` plane, theta-major.
///
/// Each cell uses `G_1 = G`, `G_2 = G exp(-i theta)` and the pump-frame matrix
/// at `delta_i' = omega_m`.
pub fn stability_map(
    rates: Rates,
    omega_m: f64,
    rule: CouplingRule,
    theta_grid: &Grid,
    j_grid: &Grid,
    tol_stab: f64,
) -> Result<Vec<MapCell>> {
    theta_grid.validate()?;
    j_grid.validate()?;
    let thetas = theta_grid.points();
    let js = j_grid.points();
    let frame = Frame::pump_red_sideband(omega_m);
    (0..thetas.len() * js.len())
        .into_par_iter()
        .map(|k| {
            let theta = thetas[k / js.len()];
            let j = js[k % js.len()];
            let g = rule.magnitude(j, rates.mech_gain, theta)?;
            let e = EffectiveParams::unified(rates.with_j(j), g, theta, 0.0)?;
            let verdict = StabilityVerdict::from_matrix(&build_dynamic_matrix(&e, frame), tol_stab);
            Ok(MapCell { theta, j, g, verdict })
        })
        .collect()
}

/// Parameter value at which a one-parameter family loses stability.
///
/// The margin must be positive at one end of `[lo, hi]` and non-positive at
/// the other; the bracket is bisected until narrower than `xtol`.
pub fn stability_onset<F>(family: F, lo: f64, hi: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<EffectiveParams>,
{
    if !(lo < hi) || !(xtol > 0.0) {
        return Err(Error::Domain(format!("onset search needs lo < hi and xtol > 0, got [{lo}, {hi}], {xtol}")));
    }
    let margin = |x: f64| -> Result<f64> { Ok(classify_stability(&family(x)?, 0.0).margin) };
    let stable_lo = margin(lo)? > 0.0;
    if stable_lo == (margin(hi)? > 0.0) {
        return Err(Error::Domain(format!("stability does not change across [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > xtol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (margin(mid)? > 0.0) == stable_lo {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
