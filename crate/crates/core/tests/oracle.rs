//! Statistical agreement between the time-domain oracle and the closed
//! forms. Durations are chosen so each run takes a few seconds.

mod common;

use std::collections::BTreeMap;

use common::{closed_loop, open_loop, Scenario};
use rpsquash::filter::LoopFilter;
use rpsquash::model::{
    steady_state, CavityParams, DetectorParams, DriveField, MechanicalResponse, Spectrum,
};
use rpsquash::oracle::{
    band_ratio, compare_to_analytic, estimate_psd, simulate, Channel, SimulationConfig,
    TimeSeries,
};
use rpsquash::spectra::{
    intracavity_amplitude_spectrum, intracavity_amplitude_spectrum_fb, reflected_phase_spectrum,
    FrequencyGrid, NoiseBudget,
};
use rpsquash::Complex;

fn run(s: &Scenario) -> TimeSeries<f64> {
    simulate(
        &s.cavity,
        &s.drive,
        &s.steady,
        None,
        &s.det,
        s.filter.as_ref(),
        &s.cfg,
    )
    .unwrap()
}

fn analytic(s: &Scenario, grid: &FrequencyGrid<f64>) -> NoiseBudget<f64> {
    match &s.filter {
        Some(k) => intracavity_amplitude_spectrum_fb(&s.cavity, &s.drive, &s.det, k, grid).unwrap(),
        None => intracavity_amplitude_spectrum(&s.cavity, &s.drive, grid).unwrap(),
    }
}

#[test]
fn coherent_open_loop_dc_is_two() {
    let s = open_loop(1.0, 4.0e5, 101);
    let ts = run(&s);
    let grid = s.cfg.psd_grid().unwrap();
    let b = analytic(&s, &grid);
    assert_eq!(analytic(&s, &FrequencyGrid::single(0.0).unwrap()).total()[0], 2.0);
    // the lowest bins, where V_a stays above 2/(1 + 0.2²)
    let r = band_ratio(&ts, Channel::Amplitude, &b, &s.cfg, (0.0, 0.2), 8).unwrap();
    assert!((r.mean - 1.0).abs() < 4.0 * r.std_error, "{r:?}");
    assert!(r.std_error < 0.02, "{r:?}");
}

#[test]
fn closed_loop_matches_feedback_spectrum() {
    // flat K = 10³, η = 1, V_in = 10⁴: DC level 1 + 10⁴/(1 + 10³)²
    let s = closed_loop(1e3, 1.0, 1e4, 1.0e5, 202);
    let ts = run(&s);
    let grid = s.cfg.psd_grid().unwrap();
    let b = analytic(&s, &grid);
    let dc = analytic(&s, &FrequencyGrid::single(0.0).unwrap()).total()[0];
    assert!((dc - (1.0 + 1e4 / 1001f64.powi(2))).abs() < 1e-12);
    let r = band_ratio(&ts, Channel::Amplitude, &b, &s.cfg, (0.02, 50.0), 16).unwrap();
    assert!((r.mean - 1.0).abs() < 4.0 * r.std_error, "{r:?}");
    assert!(r.std_error < 5e-3);
}

#[test]
fn detector_efficiency_mismatch_is_detected() {
    let s = closed_loop(1e3, 0.5, 1.0, 6.4e4, 303);
    let ts = run(&s);
    let grid = s.cfg.psd_grid().unwrap();
    let wrong = intracavity_amplitude_spectrum_fb(
        &s.cavity,
        &s.drive,
        &DetectorParams::ideal(),
        s.filter.as_ref().unwrap(),
        &grid,
    )
    .unwrap();
    let report =
        compare_to_analytic(&ts, Channel::Amplitude, &wrong, &s.cfg, Some((0.02, 0.5)), 0.05)
            .unwrap();
    assert!(report.max_relative_deviation > 0.2, "{report:?}");
    assert!(!report.passed);
    let right = analytic(&s, &grid);
    let report =
        compare_to_analytic(&ts, Channel::Amplitude, &right, &s.cfg, Some((0.02, 0.5)), 0.25)
            .unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn halving_the_step_stays_within_error_bars() {
    let coarse = open_loop(1e4, 1.0e5, 404);
    let mut fine = open_loop(1e4, 1.0e5, 405);
    fine.cfg.dt = 0.005;
    fine.cfg.record_every = 8;
    let grid = coarse.cfg.psd_grid().unwrap();
    assert_eq!(grid, fine.cfg.psd_grid().unwrap());
    let b = analytic(&coarse, &grid);
    let a = band_ratio(&run(&coarse), Channel::Amplitude, &b, &coarse.cfg, (0.0, 0.1), 8).unwrap();
    let f = band_ratio(&run(&fine), Channel::Amplitude, &b, &fine.cfg, (0.0, 0.1), 8).unwrap();
    let sigma = a.std_error.hypot(f.std_error);
    assert!((a.mean - f.mean).abs() < 3.0 * sigma, "{a:?} vs {f:?}");
}

#[test]
fn lorentzian_drive_and_shaped_filter_match() {
    let cavity = CavityParams::new(0.6, 0.3, 0.1).unwrap();
    let drive = DriveField::coherent(1.0)
        .unwrap()
        .with_amp_noise(Spectrum::Lorentzian {
            floor: 1.0,
            peak: 400.0,
            corner: 0.3,
        })
        .unwrap();
    let det = DetectorParams::new(0.8).unwrap();
    // single-pole low-pass with a short delay
    let k = LoopFilter::new(40.0, vec![], vec![Complex::new(-20.0, 0.0)], 0.02).unwrap();
    let mut cfg = SimulationConfig::new(1e-3, 6.0e4, 505, 20.0, 8_000);
    cfg.record_every = 20;
    cfg.channels = Some(vec![Channel::Amplitude]);
    let steady = steady_state(&cavity, &drive);
    let ts = simulate(&cavity, &drive, &steady, None, &det, Some(&k), &cfg).unwrap();
    let est = estimate_psd(&ts, Channel::Amplitude, &cfg).unwrap();
    let b = intracavity_amplitude_spectrum_fb(&cavity, &drive, &det, &k, est.grid()).unwrap();
    let report =
        compare_to_analytic(&ts, Channel::Amplitude, &b, &cfg, Some((0.05, 10.0)), 0.06).unwrap();
    assert!(report.passed, "{report:?}");
}

fn phase_run(amplitude: f64, mech: &MechanicalResponse<f64>, seed: u64) -> TimeSeries<f64> {
    let cavity = CavityParams::impedance_matched(1.0).unwrap();
    let drive = DriveField::coherent(amplitude).unwrap();
    let steady = steady_state(&cavity, &drive);
    let mut cfg = SimulationConfig::new(0.005, 5.0e4, seed, 20.0, 16_000);
    cfg.record_every = 8;
    cfg.channels = Some(vec![Channel::ReflectedPhase]);
    simulate(
        &cavity,
        &drive,
        &steady,
        Some(mech),
        &DetectorParams::ideal(),
        None,
        &cfg,
    )
    .unwrap()
}

fn phase_cfg() -> SimulationConfig<f64> {
    let mut cfg = SimulationConfig::new(0.005, 5.0e4, 0, 20.0, 4_000);
    cfg.record_every = 8;
    cfg
}

#[test]
fn reflected_phase_is_linear_in_alpha() {
    let mech = MechanicalResponse::harmonic(0.02, 0.5, 4.0, 0.005).unwrap();
    let runs: Vec<TimeSeries<f64>> =
        [0.0, 1.0, 2.0].iter().map(|&a| phase_run(a, &mech, 606)).collect();
    let y: Vec<&[f64]> = runs
        .iter()
        .map(|r| r.channel(Channel::ReflectedPhase).unwrap())
        .collect();
    let mut excess = Vec::with_capacity(y[0].len());
    for ((base, a1), a2) in y[0].iter().zip(y[1]).zip(y[2]) {
        let once = a1 - base;
        let twice = a2 - base;
        assert!((twice - 2.0 * once).abs() <= 1e-9 * (1.0 + once.abs()));
        excess.push(once);
    }

    // the α-dependent part alone carries 8κ_in α² (V_ΔR + V_ΔT) / (κ² + ω²)
    let cfg = phase_cfg();
    let ts = TimeSeries::new(
        runs[1].dt(),
        BTreeMap::from([(Channel::ReflectedPhase, excess)]),
    );
    let est = estimate_psd(&ts, Channel::ReflectedPhase, &cfg).unwrap();
    let cavity = CavityParams::impedance_matched(1.0).unwrap();
    let drive = DriveField::coherent(1.0).unwrap();
    let steady = steady_state(&cavity, &drive);
    let full =
        reflected_phase_spectrum(&cavity, &drive, &steady, &mech, est.grid(), None).unwrap();
    let mech_only: Vec<f64> = [
        rpsquash::spectra::NoiseSource::Thermal,
        rpsquash::spectra::NoiseSource::RadiationPressure,
    ]
    .iter()
    .map(|s| full.contribution(*s).unwrap())
    .fold(vec![0.0; est.grid().len()], |acc, v| {
        acc.iter().zip(v).map(|(a, b)| a + b).collect()
    });
    let target = NoiseBudget::from_contributions(
        est.grid().clone(),
        BTreeMap::from([(rpsquash::spectra::NoiseSource::Thermal, mech_only)]),
    );
    let report =
        rpsquash::oracle::compare_psd(&est, &target, Some((0.1, 2.0)), 0.08).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn reflected_phase_matches_budget() {
    let mech = MechanicalResponse::constant(0.05, 0.02).unwrap();
    let ts = phase_run(1.5, &mech, 707);
    let cfg = phase_cfg();
    let est = estimate_psd(&ts, Channel::ReflectedPhase, &cfg).unwrap();
    let cavity = CavityParams::impedance_matched(1.0).unwrap();
    let drive = DriveField::coherent(1.5).unwrap();
    let steady = steady_state(&cavity, &drive);
    let b = reflected_phase_spectrum(&cavity, &drive, &steady, &mech, est.grid(), None).unwrap();
    let report = rpsquash::oracle::compare_psd(&est, &b, Some((0.05, 20.0)), 0.06).unwrap();
    assert!(report.passed, "{report:?}");
}
