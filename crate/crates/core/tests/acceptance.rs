//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{closed_loop, open_loop, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpsquash::control::is_stable;
use rpsquash::model::steady_state;
use rpsquash::oracle::{band_ratio, compare_to_analytic, estimate_psd, simulate, Channel};
use rpsquash::spectra::{
    compare_squeezing_vs_feedback, highgain_limit, intracavity_amplitude_spectrum,
    intracavity_amplitude_spectrum_fb, loop_coupling, reflected_phase_spectrum, suppression_ratio,
    NoiseSource,
};
use rpsquash::{
    CavityParams, DetectorParams, DriveField, FrequencyGrid, LoopFilter, MechanicalResponse,
    NoiseBudget, TimeSeries,
};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_cavities(seed: u64, n: usize) -> Vec<CavityParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let k_in = 10f64.powf(rng.random_range(-2.0..2.0));
            let k_out = 10f64.powf(rng.random_range(-2.0..2.0));
            let k_l = rng.random_range(0.0..1.0) * k_in.max(k_out);
            CavityParams::new(k_in, k_out, k_l).unwrap()
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn sample_calculation() -> Outcome {
    let cav = CavityParams::new(4.9, 4.9, 1.0).unwrap();
    let s = suppression_ratio(&cav, &DetectorParams::new(0.91).unwrap()).unwrap();
    let pass = (s.linear - 0.60552).abs() < 5e-6 && (s.db + 2.2).abs() <= 0.05;
    outcome(pass, format!("linear {:.5}, {:.3} dB", s.linear, s.db))
}

fn impedance_matched_limit() -> Outcome {
    let mut worst: f64 = 0.0;
    for kappa in [1e-3, 0.37, 1.0, 2.0, 5e4] {
        let cav = CavityParams::impedance_matched(kappa).unwrap();
        let s = suppression_ratio(&cav, &DetectorParams::ideal()).unwrap();
        worst = worst.max((s.linear - 0.5).abs());
    }
    outcome(worst <= 1e-12, format!("max |ratio - 0.5| = {worst:e}"))
}

fn coherent_open_loop_dc() -> Outcome {
    let drive = DriveField::coherent(1.0).unwrap();
    let dc = FrequencyGrid::single(0.0).unwrap();
    let worst = random_cavities(3, 20)
        .iter()
        .map(|c| {
            let v = intracavity_amplitude_spectrum(c, &drive, &dc).unwrap().total()[0];
            rel(v, 2.0 / c.kappa())
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-12, format!("20 cavities, max relative error {worst:e}"))
}

fn vacuum_unitarity() -> Outcome {
    let drive = DriveField::coherent(2.0).unwrap();
    let mech = MechanicalResponse::decoupled();
    let mut worst: f64 = 0.0;
    for c in random_cavities(4, 20) {
        let grid = FrequencyGrid::log(1e-3 * c.kappa(), 1e3 * c.kappa(), 400).unwrap();
        let b = reflected_phase_spectrum(&c, &drive, &steady_state(&c, &drive), &mech, &grid, None)
            .unwrap();
        worst = b.total().iter().map(|v| (v - 1.0).abs()).fold(worst, f64::max);
    }
    outcome(worst <= 1e-12, format!("20 cavities x 400 points, max |V - 1| = {worst:e}"))
}

fn high_gain_convergence() -> Outcome {
    let cav = CavityParams::impedance_matched(1.0).unwrap();
    let det = DetectorParams::ideal();
    let drive = DriveField::with_flat_noise(1.0, 1e6, 1.0).unwrap();
    let dc = FrequencyGrid::single(0.0).unwrap();
    let b = intracavity_amplitude_spectrum_fb(&cav, &drive, &det, &LoopFilter::flat(1e4), &dc)
        .unwrap();
    let v = b.total()[0];
    let floor = highgain_limit(&cav, &det).unwrap();
    let classical = b.contribution(NoiseSource::InputAmplitude).unwrap()[0] / floor;
    outcome(
        (v - 1.009998).abs() <= 1e-5,
        format!("V_a^f(0) = {v:.7}, classical residual {:.3}% of floor", 100.0 * classical),
    )
}

fn run(s: &Scenario) -> TimeSeries {
    simulate(&s.cavity, &s.drive, &s.steady, None, &s.det, s.filter.as_ref(), &s.cfg).unwrap()
}

fn analytic(s: &Scenario, grid: &FrequencyGrid) -> NoiseBudget {
    match &s.filter {
        Some(k) => intracavity_amplitude_spectrum_fb(&s.cavity, &s.drive, &s.det, k, grid).unwrap(),
        None => intracavity_amplitude_spectrum(&s.cavity, &s.drive, grid).unwrap(),
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let scenarios = [
        ("open-loop coherent", open_loop(1.0, 6.4e5, 61)),
        ("open-loop V_in=1e4", open_loop(1e4, 6.4e5, 62)),
        ("closed-loop g=1e3 eta=0.9", closed_loop(1e3, 0.9, 1e4, 6.4e5, 63)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, s) in &scenarios {
        let ts = run(s);
        let grid = s.cfg.psd_grid().unwrap();
        let b = analytic(s, &grid);
        let est = estimate_psd(&ts, Channel::Amplitude, &s.cfg).unwrap();
        let r = compare_to_analytic(&ts, Channel::Amplitude, &b, &s.cfg, Some((0.02, 0.5)), 0.05)
            .unwrap();
        pass &= r.passed && est.segments() >= 200;
        parts.push(format!(
            "{name}: rms {:.2}% over {} bins, {} segments",
            100.0 * r.rms_deviation,
            r.bins,
            est.segments()
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 300.0;
    parts.push(format!("{secs:.0} s"));
    outcome(pass, parts.join("; "))
}

fn cross_term_negative_control() -> Outcome {
    let mut s = closed_loop(1e3, 0.9, 1e4, 1.6e6, 71);
    s.cfg.break_output_correlation = true;
    let ts = run(&s);
    let grid = s.cfg.psd_grid().unwrap();
    let b = analytic(&s, &grid);
    let r = band_ratio(&ts, Channel::Amplitude, &b, &s.cfg, (0.02, 50.0), 16).unwrap();
    let sigmas = (r.mean - 1.0).abs() / r.std_error;
    outcome(
        sigmas > 3.0,
        format!(
            "estimate/analytic = {:.5} +- {:.5} ({sigmas:.1} sigma from the closed form)",
            r.mean, r.std_error
        ),
    )
}

/// Smallest flat gain at which `g·c·e^{−iωτ}/(κ+iω)` reaches −1, from the
/// phase condition `ωτ + atan(ω/κ) = π` solved by bisection.
fn threshold_by_phase_crossing(kappa: f64, c: f64, tau: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI / tau);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * tau + (mid / kappa).atan() > std::f64::consts::PI {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let w = 0.5 * (lo + hi);
    (kappa * kappa + w * w).sqrt() / c
}

fn reported_threshold(cav: &CavityParams, det: &DetectorParams, tau: f64) -> f64 {
    let stable = |g: f64| {
        is_stable(cav, det, &LoopFilter::flat_with_delay(g, tau).unwrap())
            .unwrap()
            .stable
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while stable(hi) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn stability_contract() -> Outcome {
    let mut delay_free_ok = true;
    for c in random_cavities(8, 20) {
        let det = DetectorParams::new(0.8).unwrap();
        for g in [1e-6, 1e-2, 1.0, 1e2, 1e4, 1e8] {
            delay_free_ok &= is_stable(&c, &det, &LoopFilter::flat(g)).unwrap().stable;
        }
    }
    let mut worst: f64 = 0.0;
    for (cav, det) in [
        (CavityParams::impedance_matched(1.0).unwrap(), DetectorParams::ideal()),
        (CavityParams::new(4.9, 4.9, 1.0).unwrap(), DetectorParams::new(0.91).unwrap()),
        (CavityParams::new(0.02, 0.3, 0.05).unwrap(), DetectorParams::new(0.5).unwrap()),
    ] {
        let tau = 1.0 / cav.kappa();
        let want = threshold_by_phase_crossing(cav.kappa(), loop_coupling(&cav, &det), tau);
        worst = worst.max(rel(reported_threshold(&cav, &det, tau), want));
    }
    outcome(
        delay_free_ok && worst < 0.01,
        format!(
            "delay-free flat gains all stable: {delay_free_ok}; tau = 1/kappa threshold max deviation {:.4}%",
            100.0 * worst
        ),
    )
}

fn phase_penalty() -> Outcome {
    let cav = CavityParams::impedance_matched(1.0).unwrap();
    let drive = DriveField::coherent(1.0).unwrap();
    let steady = steady_state(&cav, &drive);
    let grid = FrequencyGrid::single(1.0).unwrap();
    let cmp = compare_squeezing_vs_feedback(
        &cav,
        &drive,
        &steady,
        &MechanicalResponse::constant(0.1, 0.0).unwrap(),
        &grid,
        &DetectorParams::ideal(),
        &LoopFilter::flat(1e3),
        0.5,
    )
    .unwrap();
    let sq = cmp.squeezed.contribution(NoiseSource::InputPhase).unwrap()[0];
    let fb = cmp.feedback.contribution(NoiseSource::InputPhase).unwrap()[0];
    outcome(
        (sq - 0.5).abs() <= 1e-10 && fb.abs() <= 1e-10,
        format!("input-phase term at omega = kappa: squeezed {sq}, feedback {fb}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("sample-calculation suppression", sample_calculation),
        ("impedance-matched limit", impedance_matched_limit),
        ("coherent open-loop DC", coherent_open_loop_dc),
        ("vacuum unitarity", vacuum_unitarity),
        ("high-gain convergence", high_gain_convergence),
        ("oracle equivalence", oracle_equivalence),
        ("cross-term negative control", cross_term_negative_control),
        ("stability contract", stability_contract),
        ("phase-penalty comparison", phase_penalty),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {name}: {}", i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
