//! Acceptance criteria, one line per criterion.
//!
//! Runs as a plain binary so every criterion reports even when an earlier one
//! fails. The process exits non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use nalgebra::Matrix3;
use omt_core::delay::{delay_spectrum, group_delay_fd, peak_abs_delay};
use omt_core::eigen::eigenvalues;
use omt_core::response::{gain_map, peak_gain, scattering_matrix};
use omt_core::stability::{
    build_dynamic_matrix, classify_stability, stability_map, CouplingRule, DEFAULT_TOL_STAB,
};
use omt_core::steadystate::solve_steady_state;
use omt_core::timedomain::{integrate_probe, verify_response};
use omt_core::{
    optimal_unidirectional_params, Channel, Class, EffectiveParams, Error, Frame, Grid, PhysicalParams, Port, Rates,
    ScatteringMatrix, SolveOptions, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run(id: &str, title: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let o = f();
    let dt = t0.elapsed();
    let in_time = dt < limit;
    let pass = o.pass && in_time;
    let timing = if in_time {
        format!("{:.2} s", dt.as_secs_f64())
    } else {
        format!("{:.2} s, over the {:.0} s limit", dt.as_secs_f64(), limit.as_secs_f64())
    };
    println!(
        "{} {id} {title}: {} ({timing})",
        if pass { "PASS" } else { "FAIL" },
        o.detail
    );
    pass
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn perfect_isolation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut zero_forward = 0;
    for _ in 0..50 {
        let j = rng.random_range(0.1..20.0);
        let gm = rng.random_range(0.1..5.0);
        let theta = rng.random_range(0.01 * PI..0.99 * PI);
        let rates = Rates::new(rng.random_range(0.5..20.0), rng.random_range(0.5..20.0), gm, j);
        let (g, delta) = optimal_unidirectional_params(j, gm, theta).unwrap();
        let e = EffectiveParams::unified(rates, g, theta, delta).unwrap();
        let s = scattering_matrix(&e).unwrap();
        if s.t21.norm() == 0.0 || s.t21.norm().is_nan() {
            zero_forward += 1;
            continue;
        }
        worst = worst.max(s.t12.norm() / s.t21.norm());
    }
    let pass = zero_forward == 0 && worst < 1e-10;
    outcome(pass, format!("max |t12|/|t21| = {worst:.3e} over 50 draws, {zero_forward} with t21 = 0"))
}

fn fig3b_margin(gm_over_gamma1: f64) -> f64 {
    let rates = Rates::new(1.0, 1.5, gm_over_gamma1, 1.3);
    let e = EffectiveParams::unified(rates, 1.3, FRAC_PI_2, 0.0).unwrap();
    classify_stability(&e, DEFAULT_TOL_STAB).margin
}

fn instability_onset() -> Outcome {
    let (mut lo, mut hi) = (1.0, 2.0);
    if !(fig3b_margin(lo) > 0.0 && fig3b_margin(hi) < 0.0) {
        return outcome(false, "bracket [1, 2] does not straddle the onset");
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fig3b_margin(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let onset = 0.5 * (lo + hi);
    outcome((onset - 1.325).abs() <= 0.005, format!("onset G_m/gamma_1 = {onset:.6}"))
}

fn fig2_classifications() -> Outcome {
    let thetas = Grid::new(0.01 * PI, 0.99 * PI, 197).unwrap();
    let a = stability_map(
        Rates::new(10.0, 15.0, 1.0, 0.0),
        1e3,
        CouplingRule::Tied,
        &thetas,
        &Grid::new(11.0, 11.0, 1).unwrap(),
        DEFAULT_TOL_STAB,
    )
    .unwrap();
    let a_bad = a.iter().filter(|c| c.verdict.class != Class::Stable).count();
    let b = stability_map(
        Rates::new(10.0, 10.0, 1.0, 0.0),
        1e3,
        CouplingRule::Tied,
        &thetas,
        &Grid::new(10.0, 10.0, 1).unwrap(),
        DEFAULT_TOL_STAB,
    )
    .unwrap();
    let b_bad: Vec<f64> = b
        .iter()
        .filter(|c| c.verdict.class != Class::Stable)
        .map(|c| c.theta / PI)
        .collect();
    let b_local = b_bad.iter().all(|t| (t - 0.5).abs() < 0.05);
    let pass = a_bad == 0 && !b_bad.is_empty() && b_local;
    outcome(
        pass,
        format!(
            "(a) {a_bad}/197 non-stable cells; (b) non-stable theta/pi = {:?}",
            b_bad.iter().map(|t| format!("{t:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn fig4_peak_gain() -> Outcome {
    let rates = Rates::new(10.0, 15.0, 1.0, 0.0);
    let cells = gain_map(
        rates,
        &Grid::new(0.01 * PI, 0.99 * PI, 99).unwrap(),
        &Grid::new(0.5, 20.0, 40).unwrap(),
        DEFAULT_TOL_STAB,
    )
    .unwrap();
    let Some((lg, cell)) = peak_gain(&cells) else {
        return outcome(false, "no stable cell");
    };
    let fine = gain_map(
        rates,
        &Grid::new(0.01 * PI, 0.99 * PI, 197).unwrap(),
        &Grid::new(0.1, 19.6, 196).unwrap(),
        DEFAULT_TOL_STAB,
    )
    .unwrap();
    let fine_peak = peak_gain(&fine).map(|p| p.0).unwrap_or(f64::NAN);
    let pass = (4.0..=6.0).contains(&lg) && (cell.theta - FRAC_PI_2).abs() <= 0.02 * PI;
    outcome(
        pass,
        format!(
            "max lg T21 = {lg:.4} at theta = {:.3} pi, J = {} on 99x40; {fine_peak:.4} on 197x196",
            cell.theta / PI,
            cell.j
        ),
    )
}

fn fig3a_spectrum() -> Outcome {
    let j = 11.0;
    let rates = Rates::new(10.0, 15.0, 1.0, j);
    let at = |delta: f64| {
        let e = EffectiveParams::unified(rates, j.sqrt(), FRAC_PI_2, delta).unwrap();
        scattering_matrix(&e).unwrap()
    };
    let s0 = at(0.0);
    // D = J^2 Gamma_m + Gamma_m g1 g2 + g1 G^2 + g2 G^2 = -121 - 150 + 110 + 165 = 4,
    // numerator G^2 (-i) + i J (-1) = -22 i
    let oracle_t21 = -2.0 * 150f64.sqrt() * C64::new(0.0, -22.0) / 4.0;
    let oracle_t_21 = oracle_t21.norm_sqr();
    let t21_rel = (s0.probability(Channel::T21) - oracle_t_21).abs() / oracle_t_21;
    let t12_zero = s0.probability(Channel::T12) / s0.probability(Channel::T21) < 1e-20;
    let min_ratio = (1..200)
        .map(|k| -0.1 + 0.001 * k as f64)
        .map(|d| {
            let s = at(d);
            s.probability(Channel::T21) / s.probability(Channel::T12)
        })
        .fold(f64::INFINITY, f64::min);
    let pass = t12_zero && t21_rel <= 1e-10 && min_ratio > 1e6;
    outcome(
        pass,
        format!(
            "T12(0)/T21(0) = {:.3e}, T21(0) = {} (rel err {t21_rel:.2e} against {oracle_t_21}), \
             min T21/T12 over |delta| < 0.1 = {min_ratio:.4e}",
            s0.probability(Channel::T12) / s0.probability(Channel::T21),
            s0.probability(Channel::T21)
        ),
    )
}

fn fig5_delay() -> Outcome {
    let j = 10.0;
    let grid = Grid::new(-20.0, 20.0, 40001).unwrap();
    let mut peaks = Vec::new();
    let mut worst_fd: f64 = 0.0;
    let mut checked = 0usize;
    for theta_over_pi in [0.3, 0.4, 0.45, 0.47] {
        let theta = theta_over_pi * PI;
        let template =
            EffectiveParams::unified(Rates::new(10.0, 15.0, 1.0, j), (j / theta.sin()).sqrt(), theta, 0.0).unwrap();
        let rows = delay_spectrum(&template, &grid, Channel::T21).unwrap();
        peaks.push(peak_abs_delay(&rows).map(|p| p.1.abs()).unwrap_or(f64::NAN));
        let errs: Vec<Option<f64>> = rows
            .par_iter()
            .map(|r| {
                let p = r.point?;
                let e = template.with_unified_detuning(r.delta);
                if !classify_stability(&e, DEFAULT_TOL_STAB).is_stable() {
                    return None;
                }
                let fd = group_delay_fd(&e, Channel::T21, 1e-6).ok()?;
                if fd.phase_jump {
                    return None;
                }
                Some((fd.point.tau - p.tau).abs() / p.tau.abs())
            })
            .collect();
        for e in errs.into_iter().flatten() {
            checked += 1;
            worst_fd = worst_fd.max(e);
        }
    }
    let increasing = peaks.windows(2).all(|w| w[1] > w[0]);
    outcome(
        increasing && checked > 0 && worst_fd < 1e-6,
        format!(
            "peak |tau21| = {:?}; max FD rel err {worst_fd:.2e} over {checked} stable points",
            peaks.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn random_working_point(rng: &mut ChaCha8Rng) -> EffectiveParams {
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
    EffectiveParams::new(rates, g1, g2, d).unwrap()
}

fn oracle_equivalence() -> Outcome {
    // draws within 0.01 of the boundary are neither counted as stable nor as
    // unstable: their settling or divergence horizon is unbounded
    const MARGIN_FLOOR: f64 = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut stable = Vec::new();
    let mut unstable = Vec::new();
    let mut skipped = 0;
    while stable.len() < 100 {
        let e = random_working_point(&mut rng);
        let margin = classify_stability(&e, DEFAULT_TOL_STAB).margin;
        if margin >= MARGIN_FLOOR {
            stable.push(e);
        } else if margin <= -MARGIN_FLOOR {
            unstable.push((e, margin));
        } else {
            skipped += 1;
        }
    }
    let worst = stable
        .par_iter()
        .flat_map_iter(|e| [Port::One, Port::Two].map(|port| verify_response(e, port, 1e-6)))
        .map(|r| r.map(|r| r.max_rel_err).unwrap_or(f64::INFINITY))
        .reduce(|| 0.0, f64::max);
    let missed = unstable
        .par_iter()
        .filter(|(e, margin)| !matches!(integrate_probe(e, Port::One, 80.0 / -margin), Err(Error::Diverged { .. })))
        .count();
    outcome(
        worst < 1e-6 && missed == 0,
        format!(
            "max rel err {worst:.2e} over {} stable draws (both ports); {missed}/{} unstable draws failed to diverge; \
             {skipped} near-marginal draws skipped",
            stable.len(),
            unstable.len()
        ),
    )
}

fn rel_diff(a: &ScatteringMatrix, b: &ScatteringMatrix) -> f64 {
    let scale = [a.t11, a.t12, a.t21, a.t22].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = [a.t11 - b.t11, a.t12 - b.t12, a.t21 - b.t21, a.t22 - b.t22]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    diff / scale
}

fn random_unified(rng: &mut ChaCha8Rng, theta: f64) -> EffectiveParams {
    let rates = Rates::new(
        rng.random_range(0.5..20.0),
        rng.random_range(0.5..20.0),
        rng.random_range(0.1..5.0),
        rng.random_range(0.0..20.0),
    )
    .with_eta(rng.random_range(0.5..=1.0));
    EffectiveParams::unified(rates, rng.random_range(0.0..6.0), theta, rng.random_range(-10.0..10.0)).unwrap()
}

fn property(name: &str, tol: f64, worst: f64) -> (bool, String) {
    (worst < tol, format!("{name} {worst:.2e} (tol {tol:.0e})"))
}

fn property_suite() -> Outcome {
    const N: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut results = Vec::new();

    let mut worst: f64 = 0.0;
    for _ in 0..N {
        let e = random_working_point(&mut rng);
        let phi = rng.random_range(-PI..PI);
        let a = scattering_matrix(&e).unwrap();
        let b = scattering_matrix(&e.with_common_phase(phi)).unwrap();
        worst = worst.max(rel_diff(&a, &b));
    }
    results.push(property("gauge", 1e-12, worst));

    let mut worst: f64 = 0.0;
    for _ in 0..N {
        let e = random_working_point(&mut rng);
        let s = 10f64.powf(rng.random_range(-3.0..3.0));
        worst = worst.max(rel_diff(&scattering_matrix(&e).unwrap(), &scattering_matrix(&e.scaled(s)).unwrap()));
    }
    results.push(property("rate scaling", 1e-9, worst));

    let mut worst: f64 = 0.0;
    for _ in 0..N {
        let theta = rng.random_range(-PI..PI);
        let e = random_unified(&mut rng, theta);
        let mirrored = EffectiveParams::unified(e.rates(), e.coupling_1.re, -theta, e.delta_m).unwrap();
        let a = scattering_matrix(&e).unwrap();
        let b = scattering_matrix(&mirrored).unwrap();
        let scale = a.t12.norm().max(a.t21.norm());
        worst = worst.max((a.t12 - b.t21).norm() / scale);
    }
    results.push(property("t12(theta) = t21(-theta)", 1e-12, worst));

    let mut worst: f64 = 0.0;
    for k in 0..N {
        let e = random_unified(&mut rng, if k % 2 == 0 { 0.0 } else { PI });
        let s = scattering_matrix(&e).unwrap();
        worst = worst.max((s.t12 - s.t21).norm() / s.t12.norm().max(s.t21.norm()));
    }
    results.push(property("reciprocity", 1e-12, worst));

    let mut worst: f64 = 0.0;
    for k in 0..N {
        let m: Matrix3<C64> = if k % 2 == 0 {
            Matrix3::from_fn(|_, _| C64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
        } else {
            build_dynamic_matrix(&random_working_point(&mut rng), Frame::Probe).entries
        };
        let norm = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mu = eigenvalues(&m);
        let sum = (mu[0] + mu[1] + mu[2] - m.trace()).norm() / norm;
        let prod = (mu[0] * mu[1] * mu[2] - m.determinant()).norm() / norm.powi(3);
        let pairs = (mu[0] * mu[1] + mu[1] * mu[2] + mu[0] * mu[2]
            - (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)])
            - (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
            - (m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]))
            .norm()
            / norm.powi(2);
        worst = worst.max(sum).max(prod).max(pairs);
    }
    results.push(property("Vieta", 1e-10, worst));

    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..N {
        let p = random_physical(&mut rng);
        match solve_steady_state(&p, &SolveOptions::default()) {
            Ok(s) => worst = worst.max(steady_residual(&p, s.a_1, s.a_2, s.b)),
            Err(_) => failures += 1,
        }
    }
    let (ok, text) = property("steady-state residual", 1e-10, worst);
    results.push((ok && failures == 0, format!("{text}, {failures} solver failures")));

    let pass = results.iter().all(|r| r.0);
    let detail = results
        .iter()
        .map(|(ok, t)| format!("{}{t}", if *ok { "" } else { "FAILED " }))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, format!("{N} cases each: {detail}"))
}

fn random_physical(rng: &mut ChaCha8Rng) -> PhysicalParams {
    let wm = 1.0;
    PhysicalParams {
        omega_1: 5.0 + wm * rng.random_range(0.8..1.2),
        omega_2: 5.0 + wm * rng.random_range(0.8..1.2),
        omega_m: wm,
        omega_d: 5.0,
        gamma_1: rng.random_range(0.005..0.05),
        gamma_2: rng.random_range(0.005..0.05),
        mech_gain: rng.random_range(1e-4..5e-3),
        j: rng.random_range(0.0..0.05),
        g_1: rng.random_range(1e-5..2e-4),
        g_2: rng.random_range(1e-5..2e-4),
        eps_1: rng.random_range(0.0..1.0),
        eps_2: rng.random_range(0.0..1.0),
        theta_1: rng.random_range(-PI..PI),
        theta_2: rng.random_range(-PI..PI),
        eta: 1.0,
    }
}

/// Largest relative imbalance of the three steady-state equations.
fn steady_residual(p: &PhysicalParams, a1: C64, a2: C64, b: C64) -> f64 {
    let i = C64::i();
    let f1 = C64::from_polar(p.eps_1, p.theta_1);
    let f2 = C64::from_polar(p.eps_2, p.theta_2);
    let d1 = p.omega_1 - p.omega_d + 2.0 * p.g_1 * b.re;
    let d2 = p.omega_2 - p.omega_d + 2.0 * p.g_2 * b.re;
    let imbalance = |terms: &[C64]| {
        let scale = terms.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            0.0
        } else {
            terms.iter().sum::<C64>().norm() / scale
        }
    };
    [
        imbalance(&[-(p.gamma_1 + i * d1) * a1, -i * p.j * a2, f1]),
        imbalance(&[-(p.gamma_2 + i * d2) * a2, -i * p.j * a1, f2]),
        imbalance(&[(p.mech_gain - i * p.omega_m) * b, -i * (p.g_1 * a1.norm_sqr() + p.g_2 * a2.norm_sqr())]),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn main() {
    let results = [
        run("1", "perfect isolation at the optimal point", secs(1), perfect_isolation),
        run("2", "instability onset of the gain sweep", secs(1), instability_onset),
        run("3", "loop-phase stability classification", secs(5), fig2_classifications),
        run("4", "peak gain over the (theta, J) plane", secs(30), fig4_peak_gain),
        run("5", "transmission spectrum at theta = pi/2", secs(1), fig3a_spectrum),
        run("6", "group delay trend and finite-difference agreement", secs(5), fig5_delay),
        run("7", "time-domain oracle equivalence", secs(60), oracle_equivalence),
        run("8", "property suite", secs(60), property_suite),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
