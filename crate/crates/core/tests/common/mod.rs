#![allow(dead_code)]

use rpsquash::filter::LoopFilter;
use rpsquash::model::{steady_state, CavityParams, DetectorParams, DriveField, SteadyState};
use rpsquash::oracle::{Channel, SimulationConfig};

/// Everything `simulate` needs for an amplitude-channel run.
pub struct Scenario {
    pub cavity: CavityParams<f64>,
    pub drive: DriveField<f64>,
    pub steady: SteadyState<f64>,
    pub det: DetectorParams<f64>,
    pub filter: Option<LoopFilter<f64>>,
    pub cfg: SimulationConfig<f64>,
}

/// Open loop, κ = 1: dt = 0.01, samples every 0.04 s, 1280 s segments.
pub fn open_loop(v_in: f64, duration: f64, seed: u64) -> Scenario {
    let cavity = CavityParams::impedance_matched(1.0).unwrap();
    let drive = DriveField::with_flat_noise(1.0, v_in, 1.0).unwrap();
    let mut cfg = SimulationConfig::new(0.01, duration, seed, 20.0, 32_000);
    cfg.record_every = 4;
    cfg.channels = Some(vec![Channel::Amplitude]);
    Scenario {
        steady: steady_state(&cavity, &drive),
        cavity,
        drive,
        det: DetectorParams::ideal(),
        filter: None,
        cfg,
    }
}

/// Flat-gain loop on κ = 1. The closed-loop rate is close to 10³, so the
/// step is 10⁻³ and samples are 25-step block averages (1280 s segments).
pub fn closed_loop(gain: f64, eta: f64, v_in: f64, duration: f64, seed: u64) -> Scenario {
    let cavity = CavityParams::impedance_matched(1.0).unwrap();
    let drive = DriveField::with_flat_noise(1.0, v_in, 1.0).unwrap();
    let mut cfg = SimulationConfig::new(1e-3, duration, seed, 20.0, 51_200);
    cfg.record_every = 25;
    cfg.channels = Some(vec![Channel::Amplitude]);
    Scenario {
        steady: steady_state(&cavity, &drive),
        cavity,
        drive,
        det: DetectorParams::new(eta).unwrap(),
        filter: Some(LoopFilter::flat(gain)),
        cfg,
    }
}
