//! Linear probe response, scattering matrix and transmission sweeps.
//!
//! A weak probe on cavity `j` drives the probe-frame fluctuation equations
//! with a constant term. Their steady state gives the intracavity
//! susceptibilities; the input-output relation turns those into the 2x2
//! scattering matrix `t_ij` (output port `i`, input port `j`).

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{optimal_unidirectional_params, EffectiveParams, Rates};
use crate::stability::{classify_stability, Class};

const SINGULAR_REL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    One,
    Two,
}

/// One element of the scattering matrix, named `T<out><in>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    T11,
    T12,
    T21,
    T22,
}

impl Channel {
    pub fn output(self) -> Port {
        match self {
            Channel::T11 | Channel::T12 => Port::One,
            Channel::T21 | Channel::T22 => Port::Two,
        }
    }

    pub fn input(self) -> Port {
        match self {
            Channel::T11 | Channel::T21 => Port::One,
            Channel::T12 | Channel::T22 => Port::Two,
        }
    }

    pub fn from_ports(output: Port, input: Port) -> Self {
        match (output, input) {
            (Port::One, Port::One) => Channel::T11,
            (Port::One, Port::Two) => Channel::T12,
            (Port::Two, Port::One) => Channel::T21,
            (Port::Two, Port::Two) => Channel::T22,
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "11" | "t11" => Ok(Channel::T11),
            "12" | "t12" => Ok(Channel::T12),
            "21" | "t21" => Ok(Channel::T21),
            "22" | "t22" => Ok(Channel::T22),
            other => Err(Error::Domain(format!("unknown channel `{other}`"))),
        }
    }
}

/// Response denominator, equal to `det M` of the probe-frame dynamic matrix.
pub fn denominator(e: &EffectiveParams) -> C64 {
    let r = e.complex_rates();
    let (g1, g2) = (e.coupling_1, e.coupling_2);
    let j = e.j;
    let i = C64::i();
    r.mechanics * (j * j + r.cavity_1 * r.cavity_2) + r.cavity_1 * g2.norm_sqr()
        + r.cavity_2 * g1.norm_sqr()
        - i * j * (g1.conj() * g2 + g1 * g2.conj())
}

/// `|D|` below this is treated as singular.
pub fn singular_threshold(e: &EffectiveParams) -> f64 {
    SINGULAR_REL * e.max_rate().powi(3)
}

fn checked_denominator(e: &EffectiveParams) -> Result<C64> {
    let d = denominator(e);
    if d.norm() <= singular_threshold(e) {
        return Err(Error::NearSingularDenominator { magnitude: d.norm() });
    }
    Ok(d)
}

/// Intracavity amplitudes per unit probe amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResponse {
    pub chi_a1: C64,
    pub chi_a2: C64,
    pub chi_b: C64,
    pub probe_port: Port,
    pub denominator: C64,
}

impl ProbeResponse {
    pub fn as_array(&self) -> [C64; 3] {
        [self.chi_a1, self.chi_a2, self.chi_b]
    }
}

/// Responses `(driven cavity, other cavity, mechanics)` for a probe on
/// cavity 1 of `e`.
fn port_one_response(e: &EffectiveParams, d: C64) -> (C64, C64, C64) {
    let r = e.complex_rates();
    let (g1, g2) = (e.coupling_1, e.coupling_2);
    let i = C64::i();
    let own = (r.cavity_2 * r.mechanics + g2.norm_sqr()) / d;
    let other = -(g1.conj() * g2 + i * e.j * r.mechanics) / d;
    let mech = -(i * g1.conj() * r.cavity_2 + e.j * g2.conj()) / d;
    (own, other, mech)
}

pub fn intracavity_response(e: &EffectiveParams, probe_port: Port) -> Result<ProbeResponse> {
    let d = checked_denominator(e)?;
    let (chi_a1, chi_a2, chi_b) = match probe_port {
        Port::One => port_one_response(e, d),
        Port::Two => {
            let (own, other, mech) = port_one_response(&e.swapped(), d);
            (other, own, mech)
        }
    };
    Ok(ProbeResponse {
        chi_a1,
        chi_a2,
        chi_b,
        probe_port,
        denominator: d,
    })
}

/// 2x2 probe scattering matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringMatrix {
    pub t11: C64,
    pub t12: C64,
    pub t21: C64,
    pub t22: C64,
}

impl ScatteringMatrix {
    pub fn get(&self, ch: Channel) -> C64 {
        match ch {
            Channel::T11 => self.t11,
            Channel::T12 => self.t12,
            Channel::T21 => self.t21,
            Channel::T22 => self.t22,
        }
    }

    /// Transmission probability `|t|^2` of one channel.
    pub fn probability(&self, ch: Channel) -> f64 {
        self.get(ch).norm_sqr()
    }

    /// `T21 / T12`; infinite when `T12` is exactly zero.
    pub fn isolation(&self) -> f64 {
        let t12 = self.probability(Channel::T12);
        let t21 = self.probability(Channel::T21);
        if t12 == 0.0 {
            if t21 == 0.0 {
                f64::NAN
            } else {
                f64::INFINITY
            }
        } else {
            t21 / t12
        }
    }

    pub fn peak_gain(&self) -> f64 {
        self.probability(Channel::T21).max(self.probability(Channel::T12))
    }
}

pub fn scattering_matrix(e: &EffectiveParams) -> Result<ScatteringMatrix> {
    let p1 = intracavity_response(e, Port::One)?;
    let p2 = intracavity_response(e, Port::Two)?;
    let (ge1, ge2) = e.external_rates();
    let cross = 2.0 * (ge1 * ge2).sqrt();
    Ok(ScatteringMatrix {
        t11: 2.0 * ge1 * p1.chi_a1 - 1.0,
        t12: cross * p2.chi_a1,
        t21: cross * p1.chi_a2,
        t22: 2.0 * ge2 * p2.chi_a2 - 1.0,
    })
}

/// Working point at which `t12` vanishes for phase `theta`.
pub fn optimal_point(rates: Rates, theta: f64) -> Result<EffectiveParams> {
    let (g, delta) = optimal_unidirectional_params(rates.j, rates.mech_gain, theta)?;
    EffectiveParams::unified(rates, g, theta, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub delta: f64,
    /// `None` when the denominator is singular at this detuning.
    pub s: Option<ScatteringMatrix>,
    pub class: Class,
}

impl SpectrumRow {
    pub fn singular(&self) -> bool {
        self.s.is_none()
    }
}

/// Scattering matrix over a grid of unified detunings.
pub fn transmission_spectrum(
    template: &EffectiveParams,
    delta_grid: &Grid,
    tol_stab: f64,
) -> Result<Vec<SpectrumRow>> {
    delta_grid.validate()?;
    // real parts of the spectrum are detuning independent under a unified shift,
    // but the template may carry unequal detunings, so classify per row
    Ok(delta_grid
        .points()
        .into_par_iter()
        .map(|delta| {
            let e = template.with_unified_detuning(delta);
            SpectrumRow {
                delta,
                s: scattering_matrix(&e).ok(),
                class: classify_stability(&e, tol_stab).class,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainCell {
    pub theta: f64,
    pub j: f64,
    pub g: f64,
    pub delta: f64,
    /// `None` when the denominator is singular.
    pub t21: Option<C64>,
    pub class: Class,
}

impl GainCell {
    pub fn lg_t21(&self) -> Option<f64> {
        self.t21.map(|t| t.norm_sqr().log10())
    }

    /// Gain counted only on stable, non-singular cells.
    pub fn stable_gain(&self) -> Option<f64> {
        if self.class == Class::Stable {
            self.lg_t21()
        } else {
            None
        }
    }
}

/// `lg T21` at the optimal unidirectional point of every `(theta, J)` cell,
/// theta-major. `rates.j` is ignored.
pub fn gain_map(rates: Rates, theta_grid: &Grid, j_grid: &Grid, tol_stab: f64) -> Result<Vec<GainCell>> {
    theta_grid.validate()?;
    j_grid.validate()?;
    let thetas = theta_grid.points();
    let js = j_grid.points();
    (0..thetas.len() * js.len())
        .into_par_iter()
        .map(|k| {
            let theta = thetas[k / js.len()];
            let j = js[k % js.len()];
            let e = optimal_point(rates.with_j(j), theta).map_err(|err| match err {
                Error::Domain(m) => Error::GridDomain(m),
                other => other,
            })?;
            Ok(GainCell {
                theta,
                j,
                g: e.coupling_1.re,
                delta: e.delta_m,
                t21: scattering_matrix(&e).ok().map(|s| s.t21),
                class: classify_stability(&e, tol_stab).class,
            })
        })
        .collect()
}

/// Highest stable `lg T21` and the cell attaining it.
pub fn peak_gain(cells: &[GainCell]) -> Option<(f64, GainCell)> {
    cells
        .iter()
        .filter_map(|c| c.stable_gain().map(|g| (g, *c)))
        .max_by(|a, b| a.0.total_cmp(&b.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{build_dynamic_matrix, Frame, DEFAULT_TOL_STAB};
    use nalgebra::{Matrix3, Vector3};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn fig3a() -> EffectiveParams {
        EffectiveParams::unified(Rates::new(10.0, 15.0, 1.0, 11.0), 11f64.sqrt(), FRAC_PI_2, 0.0).unwrap()
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm().max(a.norm())
    }

    /// Steady probe-frame equations solved as a dense linear system.
    fn solve_linear(e: &EffectiveParams, port: Port) -> [C64; 3] {
        let m = build_dynamic_matrix(e, Frame::Probe).entries;
        let mut drive = Vector3::zeros();
        drive[match port {
            Port::One => 0,
            Port::Two => 1,
        }] = C64::new(1.0, 0.0);
        let x = m.lu().solve(&drive).unwrap();
        [x[0], x[1], x[2]]
    }

    fn linear_residual(e: &EffectiveParams, r: &ProbeResponse) -> f64 {
        let m: Matrix3<C64> = build_dynamic_matrix(e, Frame::Probe).entries;
        let x = Vector3::new(r.chi_a1, r.chi_a2, r.chi_b);
        let mut drive = Vector3::zeros();
        drive[if r.probe_port == Port::One { 0 } else { 1 }] = C64::new(1.0, 0.0);
        (m * x - drive).norm()
    }

    #[test]
    fn denominator_hand_value_at_fig3a_centre() {
        // -J^2 G_m - g1 g2 G_m + (g1 + g2) J G_m = -121 - 150 + 275
        let d = denominator(&fig3a());
        assert!((d - C64::new(4.0, 0.0)).norm() < 1e-12, "{d}");
    }

    #[test]
    fn denominator_factorises_without_optomechanics() {
        let e = EffectiveParams::new(Rates::new(2.0, 3.0, 0.5, 1.5), C64::new(0.0, 0.0), C64::new(0.0, 0.0), (0.3, -0.2, 0.7))
            .unwrap();
        let r = e.complex_rates();
        let want = r.mechanics * (e.j * e.j + r.cavity_1 * r.cavity_2);
        assert!(rel(denominator(&e), want) < 1e-14);
    }

    #[test]
    fn denominator_is_determinant_and_swap_invariant() {
        let e = EffectiveParams::new(Rates::new(2.0, 3.0, 0.5, 1.5), C64::new(0.4, 1.0), C64::new(-1.2, 0.3), (0.3, -0.2, 0.7))
            .unwrap();
        let det = build_dynamic_matrix(&e, Frame::Probe).entries.determinant();
        assert!(rel(denominator(&e), det) < 1e-13);
        assert!(rel(denominator(&e.swapped()), denominator(&e)) < 1e-14);
    }

    #[test]
    fn bare_cavity_response() {
        let e = EffectiveParams::unified(Rates::new(10.0, 15.0, 1.0, 0.0), 0.0, 0.0, 0.0).unwrap();
        let r = intracavity_response(&e, Port::One).unwrap();
        assert!((r.chi_a1 - C64::new(0.1, 0.0)).norm() < 1e-15);
        assert_eq!(r.chi_a2.norm(), 0.0);
        assert_eq!(r.chi_b.norm(), 0.0);
    }

    #[test]
    fn optimal_point_cancels_port_two_leakage() {
        let r = intracavity_response(&fig3a(), Port::Two).unwrap();
        assert!(r.chi_a1.norm() < 1e-15, "{}", r.chi_a1);
    }

    #[test]
    fn responses_solve_linear_system() {
        let e = fig3a();
        for port in [Port::One, Port::Two] {
            let r = intracavity_response(&e, port).unwrap();
            assert!(linear_residual(&e, &r) < 1e-12);
            let x = solve_linear(&e, port);
            for (a, b) in r.as_array().iter().zip(&x) {
                assert!((a - b).norm() < 1e-12 * b.norm().max(1e-3));
            }
            // chi_own * D reproduces the numerator
            let rr = e.complex_rates();
            let (own, num) = match port {
                Port::One => (r.chi_a1, rr.cavity_2 * rr.mechanics + e.coupling_2.norm_sqr()),
                Port::Two => (r.chi_a2, rr.cavity_1 * rr.mechanics + e.coupling_1.norm_sqr()),
            };
            assert!(rel(own * r.denominator, num) < 1e-12);
        }
    }

    #[test]
    fn singular_denominator_is_reported() {
        // D = -(J - g1)(J - g2) at theta = pi/2, delta = 0 under the tied rule
        let e = EffectiveParams::unified(Rates::new(10.0, 15.0, 1.0, 10.0), 10f64.sqrt(), FRAC_PI_2, 0.0).unwrap();
        assert!(matches!(
            intracavity_response(&e, Port::One),
            Err(Error::NearSingularDenominator { .. })
        ));
        assert!(scattering_matrix(&e).is_err());
    }

    #[test]
    fn fig3a_centre_transmission() {
        let s = scattering_matrix(&fig3a()).unwrap();
        // t21 = -2 sqrt(150) (-2 i J) / 4 = 11 i sqrt(150)
        let want = C64::new(0.0, 11.0 * 150f64.sqrt());
        assert!(rel(s.t21, want) < 1e-12);
        assert!((s.t21.norm() - 134.722).abs() < 1e-3);
        assert!((s.probability(Channel::T21) - 18150.0).abs() < 1e-8);
        assert!(s.probability(Channel::T12) < 1e-20 * s.probability(Channel::T21));
        assert!(s.isolation() > 1e20);
    }

    #[test]
    fn empty_overcoupled_cavity_reflects_fully() {
        let e = EffectiveParams::unified(Rates::new(10.0, 15.0, 1.0, 0.0), 0.0, 0.0, 0.0).unwrap();
        let s = scattering_matrix(&e).unwrap();
        assert!((s.t11 - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((s.t22 - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(s.t12.norm(), 0.0);
        assert!(s.isolation().is_nan());
    }

    #[test]
    fn real_couplings_are_reciprocal() {
        for theta in [0.0, PI] {
            let e = EffectiveParams::unified(Rates::new(10.0, 15.0, 1.0, 11.0), 2.0, theta, 0.7).unwrap();
            let s = scattering_matrix(&e).unwrap();
            assert!(rel(s.t12, s.t21) < 1e-12);
        }
    }

    #[test]
    fn optimal_condition_numerator_vanishes() {
        let (j, gm, theta) = (10.0, 1.0, FRAC_PI_4);
        let (g, delta) = optimal_unidirectional_params(j, gm, theta).unwrap();
        let i = C64::i();
        let term = -i * j * C64::new(-gm, delta);
        let num = term - C64::from_polar(g * g, theta);
        assert!(num.norm() < 1e-12 * term.norm());
        let s = scattering_matrix(&optimal_point(Rates::new(10.0, 15.0, gm, j), theta).unwrap()).unwrap();
        assert!(s.t12.norm() < 1e-10 * s.t21.norm());
        assert!(s.t21.norm() > 0.0);
    }

    #[test]
    fn far_detuned_probe_passes_by() {
        let mut e = fig3a();
        for delta in [-1e4, 1e4] {
            e = e.with_unified_detuning(delta);
            let s = scattering_matrix(&e).unwrap();
            assert!(s.t12.norm() < 1e-3 && s.t21.norm() < 1e-3);
            assert!((s.t11.norm() - 1.0).abs() < 1e-3);
            assert!((s.t22.norm() - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn fig3a_spectrum_peaks_near_zero() {
        let rows = transmission_spectrum(&fig3a(), &Grid::new(-30.0, 30.0, 601).unwrap(), DEFAULT_TOL_STAB).unwrap();
        let (best, _) = rows
            .iter()
            .filter_map(|r| {
                r.s.map(|s| (r.delta, s.probability(Channel::T21).log10() - s.probability(Channel::T12).log10()))
            })
            .fold((f64::NAN, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!(best.abs() < 0.1 + 1e-12, "best contrast at {best}");
        assert!(rows.iter().all(|r| r.class == Class::Stable));
    }

    #[test]
    fn fig3b_gain_rises_toward_onset() {
        let t21 = |gm: f64| {
            let e = EffectiveParams::unified(Rates::new(1.0, 1.5, gm, 1.3), 1.3, FRAC_PI_2, 0.0).unwrap();
            scattering_matrix(&e).unwrap().probability(Channel::T21)
        };
        let mut prev = t21(0.0);
        for k in 1..=132 {
            let v = t21(k as f64 * 0.01);
            assert!(v > prev, "not increasing at G_m = {}", k as f64 * 0.01);
            prev = v;
        }
    }

    #[test]
    fn gain_map_closed_form_cell() {
        // |t21| = 4 sqrt(g1 g2) J / (J (g1 + g2) - g1 g2 - J^2) at theta = pi/2
        let cells = gain_map(
            Rates::new(10.0, 15.0, 1.0, 0.0),
            &Grid::new(FRAC_PI_2, FRAC_PI_2, 1).unwrap(),
            &Grid::new(12.5, 12.5, 1).unwrap(),
            DEFAULT_TOL_STAB,
        )
        .unwrap();
        let c = cells[0];
        let closed = 4.0 * 150f64.sqrt() * 12.5 / (12.5 * 25.0 - 150.0 - 12.5 * 12.5);
        assert!((c.t21.unwrap().norm() - closed).abs() < 1e-9 * closed);
        assert!((c.t21.unwrap().norm_sqr() - 9600.0).abs() < 1e-6);
        assert_eq!(c.class, Class::Stable);
        assert!(c.stable_gain().unwrap().is_finite());
    }

    #[test]
    fn gain_map_rejects_theta_outside_open_interval() {
        let r = gain_map(
            Rates::new(10.0, 15.0, 1.0, 0.0),
            &Grid::new(0.0, 1.0, 3).unwrap(),
            &Grid::new(1.0, 2.0, 2).unwrap(),
            DEFAULT_TOL_STAB,
        );
        assert!(matches!(r, Err(Error::GridDomain(_))));
    }

    #[test]
    fn channel_parsing() {
        assert_eq!("21".parse::<Channel>().unwrap(), Channel::T21);
        assert_eq!("T12".parse::<Channel>().unwrap(), Channel::T12);
        assert!("13".parse::<Channel>().is_err());
        assert_eq!(Channel::from_ports(Port::Two, Port::One), Channel::T21);
    }

    fn arb_point() -> impl Strategy<Value = EffectiveParams> {
        (
            0.5..20.0f64,
            0.5..20.0f64,
            0.0..5.0f64,
            0.0..20.0f64,
            0.0..8.0f64,
            -PI..PI,
            -10.0..10.0f64,
            0.1..1.0f64,
        )
            .prop_map(|(g1, g2, gm, j, g, theta, delta, eta)| {
                EffectiveParams::unified(Rates::new(g1, g2, gm, j).with_eta(eta), g, theta, delta).unwrap()
            })
    }

    proptest! {
        #[test]
        fn phase_conjugation_swaps_directions(e in arb_point(), theta in -PI..PI) {
            let g = e.coupling_1.re;
            let fwd = EffectiveParams::unified(e.rates(), g, theta, e.delta_m).unwrap();
            let back = EffectiveParams::unified(e.rates(), g, -theta, e.delta_m).unwrap();
            if let (Ok(a), Ok(b)) = (scattering_matrix(&fwd), scattering_matrix(&back)) {
                prop_assert!((a.t12 - b.t21).norm() <= 1e-12 * a.t12.norm().max(b.t21.norm()).max(1e-300));
            }
        }

        #[test]
        fn common_phase_leaves_magnitudes(e in arb_point(), phi in -PI..PI) {
            if let (Ok(a), Ok(b)) = (scattering_matrix(&e), scattering_matrix(&e.with_common_phase(phi))) {
                for ch in [Channel::T11, Channel::T12, Channel::T21, Channel::T22] {
                    let (x, y) = (a.get(ch).norm(), b.get(ch).norm());
                    prop_assert!((x - y).abs() <= 1e-10 * x.max(1.0));
                }
            }
        }
    }
}
