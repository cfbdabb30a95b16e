//! Parameter model of the cyclic two-cavity / one-mechanics system.
//!
//! Two layers are exposed. [`PhysicalParams`] carries the bare Hamiltonian
//! symbols (frequencies, single-photon couplings, pump amplitudes and phases)
//! and feeds the self-consistent steady-state solver. [`EffectiveParams`]
//! carries the linearized working point (complex effective couplings, probe
//! frame detunings) that the stability, response and delay routines consume.
//!
//! All rates and detunings share one frequency unit. The library never
//! converts units; by convention the mechanical gain is the reference
//! (`mech_gain = 1`), matching the figure axes this crate reproduces.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};


fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite, got {v}")))
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    check_finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be > 0, got {v}")))
    }
}

fn check_non_negative(name: &'static str, v: f64) -> Result<()> {
    check_finite(name, v)?;
    if v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be >= 0, got {v}")))
    }
}

fn check_eta(v: f64) -> Result<()> {
    check_finite("eta", v)?;
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(invalid("eta", format!("must lie in (0, 1], got {v}")))
    }
}

fn warn_zero_gain(mech_gain: f64) {
    if mech_gain == 0.0 {
        log::warn!("mechanical gain is zero: the mechanical mode is undamped and the system is at best marginal");
    }
}

/// Bare system parameters in the pump rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub omega_1: f64,
    pub omega_2: f64,
    pub omega_m: f64,
    pub omega_d: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    /// Mechanical gain (negative mechanical damping).
    #[serde(rename = "g_m")]
    pub mech_gain: f64,
    /// Direct cavity-cavity coupling.
    #[serde(rename = "j")]
    pub j: f64,
    /// Single-photon optomechanical couplings.
    pub g_1: f64,
    pub g_2: f64,
    /// Pump amplitudes.
    pub eps_1: f64,
    pub eps_2: f64,
    /// Pump phases in radians.
    pub theta_1: f64,
    pub theta_2: f64,
    /// External-to-total cavity damping ratio.
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_eta() -> f64 {
    1.0
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_1", self.omega_1),
            ("omega_2", self.omega_2),
            ("omega_d", self.omega_d),
            ("g_1", self.g_1),
            ("g_2", self.g_2),
            ("theta_1", self.theta_1),
            ("theta_2", self.theta_2),
        ] {
            check_finite(name, v)?;
        }
        check_positive("omega_m", self.omega_m)?;
        check_positive("gamma_1", self.gamma_1)?;
        check_positive("gamma_2", self.gamma_2)?;
        check_non_negative("g_m", self.mech_gain)?;
        check_non_negative("j", self.j)?;
        check_non_negative("eps_1", self.eps_1)?;
        check_non_negative("eps_2", self.eps_2)?;
        check_eta(self.eta)?;
        warn_zero_gain(self.mech_gain);
        Ok(())
    }

    /// Pump detunings `(omega_1 - omega_d, omega_2 - omega_d)`.
    pub fn detunings(&self) -> (f64, f64) {
        (self.omega_1 - self.omega_d, self.omega_2 - self.omega_d)
    }

    /// Complex pump drives `eps_i * exp(i theta_i)`.
    pub fn drives(&self) -> (C64, C64) {
        (
            C64::from_polar(self.eps_1, self.theta_1),
            C64::from_polar(self.eps_2, self.theta_2),
        )
    }

    /// Every rate multiplied by `s`; phases and `eta` are untouched.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            omega_1: self.omega_1 * s,
            omega_2: self.omega_2 * s,
            omega_m: self.omega_m * s,
            omega_d: self.omega_d * s,
            gamma_1: self.gamma_1 * s,
            gamma_2: self.gamma_2 * s,
            mech_gain: self.mech_gain * s,
            j: self.j * s,
            g_1: self.g_1 * s,
            g_2: self.g_2 * s,
            eps_1: self.eps_1 * s,
            eps_2: self.eps_2 * s,
            ..*self
        }
    }
}

/// Pump detunings of a physical parameter set.
pub fn detunings(p: &PhysicalParams) -> (f64, f64) {
    p.detunings()
}

/// Linearized working point in the probe frame.
///
/// `delta_1`, `delta_2` and `delta_m` are the probe-frame detunings of the two
/// cavities and of the mechanics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub coupling_1: C64,
    pub coupling_2: C64,
    pub j: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub mech_gain: f64,
    pub delta_1: f64,
    pub delta_2: f64,
    pub delta_m: f64,
    pub eta: f64,
}

/// Decay rates and direct coupling shared by every working point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub mech_gain: f64,
    pub j: f64,
    pub eta: f64,
}

impl Rates {
    pub fn new(gamma_1: f64, gamma_2: f64, mech_gain: f64, j: f64) -> Self {
        Self {
            gamma_1,
            gamma_2,
            mech_gain,
            j,
            eta: 1.0,
        }
    }

    pub fn with_j(self, j: f64) -> Self {
        Self { j, ..self }
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }
}

impl EffectiveParams {
    /// General working point with arbitrary complex couplings and detunings.
    pub fn new(
        rates: Rates,
        coupling_1: C64,
        coupling_2: C64,
        (delta_1, delta_2, delta_m): (f64, f64, f64),
    ) -> Result<Self> {
        let e = Self {
            coupling_1,
            coupling_2,
            j: rates.j,
            gamma_1: rates.gamma_1,
            gamma_2: rates.gamma_2,
            mech_gain: rates.mech_gain,
            delta_1,
            delta_2,
            delta_m,
            eta: rates.eta,
        };
        e.validate()?;
        Ok(e)
    }

    /// Symmetric-magnitude convention: `G_1 = g`, `G_2 = g exp(-i theta)`, and
    /// one detuning `delta` shared by both cavities and the mechanics.
    pub fn unified(rates: Rates, g: f64, theta: f64, delta: f64) -> Result<Self> {
        check_non_negative("g_mag", g)?;
        check_finite("theta", theta)?;
        Self::new(
            rates,
            C64::new(g, 0.0),
            C64::from_polar(g, -theta),
            (delta, delta, delta),
        )
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("gamma_1", self.gamma_1)?;
        check_positive("gamma_2", self.gamma_2)?;
        check_non_negative("g_m", self.mech_gain)?;
        check_non_negative("j", self.j)?;
        check_eta(self.eta)?;
        for (name, v) in [
            ("g1_re", self.coupling_1.re),
            ("g1_im", self.coupling_1.im),
            ("g2_re", self.coupling_2.re),
            ("g2_im", self.coupling_2.im),
            ("delta_1pp", self.delta_1),
            ("delta_2pp", self.delta_2),
            ("delta_m", self.delta_m),
        ] {
            check_finite(name, v)?;
        }
        warn_zero_gain(self.mech_gain);
        Ok(())
    }

    pub fn rates(&self) -> Rates {
        Rates {
            gamma_1: self.gamma_1,
            gamma_2: self.gamma_2,
            mech_gain: self.mech_gain,
            j: self.j,
            eta: self.eta,
        }
    }

    pub fn complex_rates(&self) -> ComplexRates {
        ComplexRates {
            cavity_1: C64::new(self.gamma_1, self.delta_1),
            cavity_2: C64::new(self.gamma_2, self.delta_2),
            mechanics: C64::new(-self.mech_gain, self.delta_m),
        }
    }

    /// Same point with every detuning set to `delta`.
    pub fn with_unified_detuning(&self, delta: f64) -> Self {
        Self {
            delta_1: delta,
            delta_2: delta,
            delta_m: delta,
            ..*self
        }
    }

    /// Same point with the probe frequency moved by `dw`: every probe-frame
    /// detuning decreases by `dw`.
    pub fn with_probe_shift(&self, dw: f64) -> Self {
        Self {
            delta_1: self.delta_1 - dw,
            delta_2: self.delta_2 - dw,
            delta_m: self.delta_m - dw,
            ..*self
        }
    }

    /// Both couplings multiplied by `exp(i phi)`.
    pub fn with_common_phase(&self, phi: f64) -> Self {
        let r = C64::from_polar(1.0, phi);
        Self {
            coupling_1: self.coupling_1 * r,
            coupling_2: self.coupling_2 * r,
            ..*self
        }
    }

    /// Labels of the two cavities exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            coupling_1: self.coupling_2,
            coupling_2: self.coupling_1,
            gamma_1: self.gamma_2,
            gamma_2: self.gamma_1,
            delta_1: self.delta_2,
            delta_2: self.delta_1,
            ..*self
        }
    }

    /// Every rate and detuning multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coupling_1: self.coupling_1 * s,
            coupling_2: self.coupling_2 * s,
            j: self.j * s,
            gamma_1: self.gamma_1 * s,
            gamma_2: self.gamma_2 * s,
            mech_gain: self.mech_gain * s,
            delta_1: self.delta_1 * s,
            delta_2: self.delta_2 * s,
            delta_m: self.delta_m * s,
            eta: self.eta,
        }
    }

    /// Largest rate magnitude; sets the scale of singularity thresholds.
    pub fn max_rate(&self) -> f64 {
        [
            self.coupling_1.norm(),
            self.coupling_2.norm(),
            self.j,
            self.gamma_1,
            self.gamma_2,
            self.mech_gain,
            self.delta_1.abs(),
            self.delta_2.abs(),
            self.delta_m.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// External damping rates `eta * gamma_i`.
    pub fn external_rates(&self) -> (f64, f64) {
        (self.eta * self.gamma_1, self.eta * self.gamma_2)
    }
}

/// Complex decay-plus-detuning rates of the three modes in the probe frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexRates {
    /// `gamma_1 + i delta_1`
    pub cavity_1: C64,
    /// `gamma_2 + i delta_2`
    pub cavity_2: C64,
    /// `-G_m + i delta_m`
    pub mechanics: C64,
}

pub fn complex_rates(e: &EffectiveParams) -> ComplexRates {
    e.complex_rates()
}

/// Coupling magnitude and detuning at which transmission from port 2 to port
/// 1 vanishes identically, for the convention of [`EffectiveParams::unified`].
///
/// Returns `(g, delta)` with `g^2 = j G_m / sin(theta)` and
/// `delta = G_m cot(theta)`.
pub fn optimal_unidirectional_params(j: f64, mech_gain: f64, theta: f64) -> Result<(f64, f64)> {
    let s = theta.sin();
    if !(s > 0.0) {
        return Err(crate::Error::Domain(format!(
            "optimal unidirectional point requires sin(theta) > 0, got theta = {theta}"
        )));
    }
    check_positive("j", j)?;
    check_positive("g_m", mech_gain)?;
    Ok(((j * mech_gain / s).sqrt(), mech_gain * theta.cos() / s))
}
