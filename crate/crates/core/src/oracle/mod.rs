//! Time-domain check of the closed forms: the linearized quadrature
//! equations are integrated with an explicit stochastic Euler scheme and
//! their spectra estimated with Welch's method.
//!
//! Vacuum quadratures are replaced by independent real white noises of unit
//! spectral density. For a linear system this reproduces the symmetrized
//! spectra exactly, which is all the closed forms describe.
//!
//! Supported inputs: constant or Lorentzian drive spectra and constant or
//! single-resonance mirror mechanics. Tabulated curves have no time-domain
//! realization here and are rejected.

mod compare;
mod welch;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::control::{is_stable, ControlError};
use crate::filter::LoopFilter;
use crate::model::{
    CavityParams, DetectorParams, DriveField, MechanicalModel, MechanicalResponse, Spectrum,
    SteadyState,
};
use crate::scalar::{from_usize, lit, Scalar};
use crate::spectra::{FrequencyGrid, SpectraError};

pub use compare::{
    band_ratio, compare_psd, compare_to_analytic, BandRatio, ComparisonReport,
};
pub use welch::{estimate_psd, PsdEstimate};

/// Any recorded sample beyond this magnitude aborts the run.
const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("feedback loop is unstable ({0} closed-loop poles in the right half-plane)")]
    UnstableLoop(usize),
    #[error("simulation diverged at step {step}")]
    DivergenceDetected { step: u64 },
    #[error("not supported by the time-domain oracle: {0}")]
    Unsupported(&'static str),
    #[error("need at least {needed} samples, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("channel `{0}` was not recorded")]
    MissingChannel(Channel),
    #[error("estimated and analytic spectra share no frequencies in the requested band")]
    NoBandOverlap,
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// Integration and estimation settings.
///
/// `duration` is the recorded span; `burn_in` is integrated first and
/// discarded. Samples are recorded as block averages over `record_every`
/// integration steps, so the recorded spacing is `dt · record_every`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig<T> {
    pub dt: T,
    pub duration: T,
    pub seed: u64,
    pub burn_in: T,
    /// Welch segment length, in recorded samples.
    pub welch_segment: usize,
    /// Fractional overlap of consecutive segments, in `[0, 0.9]`.
    pub welch_overlap: T,
    pub record_every: usize,
    /// Feed the feedback detector an independent copy of the output-mirror
    /// vacuum instead of the one entering the cavity. Only useful as a
    /// negative control: the closed-loop spectrum then misses its cross
    /// term.
    pub break_output_correlation: bool,
    /// Channels to keep; `None` records every channel the scenario has.
    pub channels: Option<Vec<Channel>>,
}

impl<T: Scalar> SimulationConfig<T> {
    pub fn new(dt: T, duration: T, seed: u64, burn_in: T, welch_segment: usize) -> Self {
        Self {
            dt,
            duration,
            seed,
            burn_in,
            welch_segment,
            welch_overlap: lit(0.5),
            record_every: 1,
            break_output_correlation: false,
            channels: None,
        }
    }

    /// Spacing of recorded samples.
    pub fn sample_interval(&self) -> T {
        self.dt * from_usize(self.record_every)
    }

    pub fn recorded_samples(&self) -> usize {
        (self.duration / self.sample_interval())
            .floor()
            .to_usize()
            .unwrap_or(0)
    }

    /// Frequencies reported by [`estimate_psd`] under this config.
    pub fn psd_grid(&self) -> Result<FrequencyGrid<T>, OracleError> {
        welch::output_grid(self.welch_segment, self.sample_interval())
    }

    /// Checks the config against the cavity it will drive: the cavity pole
    /// must be resolved (`dt ≤ 0.01/κ`), the record must hold at least 50
    /// Welch segments and the burn-in must cover ten cavity lifetimes.
    pub fn validate(&self, cavity: &CavityParams<T>) -> Result<(), OracleError> {
        let bad = |msg: String| Err(OracleError::InvalidConfig(msg));
        for (name, v) in [
            ("dt", self.dt),
            ("duration", self.duration),
            ("burn_in", self.burn_in),
            ("welch_overlap", self.welch_overlap),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} is not finite"));
            }
        }
        if self.dt <= T::zero() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if self.welch_segment < 8 {
            return bad(format!("welch_segment {} is too short", self.welch_segment));
        }
        if !(self.welch_overlap >= T::zero() && self.welch_overlap <= lit(0.9)) {
            return bad(format!(
                "welch_overlap must lie in [0, 0.9], got {}",
                self.welch_overlap
            ));
        }
        let kappa = cavity.kappa();
        if self.dt * kappa > lit(0.01) {
            return bad(format!(
                "dt = {} does not resolve the cavity pole (need dt <= 0.01/kappa = {})",
                self.dt,
                lit::<T>(0.01) / kappa
            ));
        }
        let min_duration = lit::<T>(50.0) * from_usize(self.welch_segment) * self.sample_interval();
        if self.duration < min_duration {
            return bad(format!(
                "duration {} is shorter than 50 Welch segments ({min_duration})",
                self.duration
            ));
        }
        if self.burn_in * kappa < lit(10.0) {
            return bad(format!(
                "burn_in {} is shorter than 10/kappa = {}",
                self.burn_in,
                lit::<T>(10.0) / kappa
            ));
        }
        Ok(())
    }
}

/// Named sample streams of a [`TimeSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    /// Intra-cavity amplitude quadrature `δX_a`.
    Amplitude,
    /// Intra-cavity phase quadrature `δX⁻_a`.
    Phase,
    /// Reflected phase readout `√(2κ_in) δX⁻_a − δX⁻_in`.
    ReflectedPhase,
    /// Feedback detector signal.
    Detected,
    /// Modulator drive `u`, the filtered detector signal.
    Actuation,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::Amplitude,
        Channel::Phase,
        Channel::ReflectedPhase,
        Channel::Detected,
        Channel::Actuation,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Channel::Amplitude => "amplitude",
            Channel::Phase => "phase",
            Channel::ReflectedPhase => "reflected_phase",
            Channel::Detected => "detected",
            Channel::Actuation => "actuation",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == label)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Uniformly sampled, equal-length channels.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    dt: T,
    channels: BTreeMap<Channel, Vec<T>>,
}

impl<T: Scalar> TimeSeries<T> {
    /// Panics if the channels differ in length.
    pub fn new(dt: T, channels: BTreeMap<Channel, Vec<T>>) -> Self {
        let mut lens = channels.values().map(Vec::len);
        if let Some(first) = lens.next() {
            assert!(lens.all(|l| l == first), "channels differ in length");
        }
        Self { dt, channels }
    }

    /// Sample spacing.
    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.channels.values().next().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, channel: Channel) -> Option<&[T]> {
        self.channels.get(&channel).map(Vec::as_slice)
    }

    pub fn channels(&self) -> impl Iterator<Item = Channel> + '_ {
        self.channels.keys().copied()
    }

    /// Comma-separated dump: a header line `t,<channel>...` then one row
    /// per sample.
    pub fn write_delimited<W: Write>(&self, mut out: W) -> io::Result<()> {
        let names: Vec<&str> = self.channels.keys().map(|c| c.label()).collect();
        writeln!(out, "t,{}", names.join(","))?;
        for i in 0..self.len() {
            write!(out, "{:e}", self.dt * from_usize(i))?;
            for values in self.channels.values() {
                write!(out, ",{:e}", values[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// White noise source with unit spectral density per channel: each step
/// draws a normal deviate scaled to variance `1/dt`.
struct Noise<T> {
    rng: ChaCha8Rng,
    scale: T,
}

impl<T: Scalar> Noise<T> {
    fn new(seed: u64, dt: T) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            scale: dt.sqrt().recip(),
        }
    }

    #[inline]
    fn white(&mut self) -> T {
        let z: f64 = self.rng.sample(StandardNormal);
        lit::<T>(z) * self.scale
    }
}

/// Time-domain realization of a drive [`Spectrum`]: a white part plus an
/// optional Ornstein–Uhlenbeck excess for the Lorentzian shape.
struct ColoredNoise<T> {
    white: T,
    /// `(corner, drive)` of `dy = −corner·y dt + drive·dW`.
    excess: Option<(T, T)>,
    state: T,
}

impl<T: Scalar> ColoredNoise<T> {
    fn new(spectrum: &Spectrum<T>) -> Result<Self, OracleError> {
        match spectrum {
            Spectrum::Constant(v) => Ok(Self {
                white: v.sqrt(),
                excess: None,
                state: T::zero(),
            }),
            Spectrum::Lorentzian {
                floor,
                peak,
                corner,
            } => Ok(Self {
                white: floor.sqrt(),
                excess: (*peak > T::zero()).then(|| (*corner, peak.sqrt() * *corner)),
                state: T::zero(),
            }),
            Spectrum::Tabulated(_) => Err(OracleError::Unsupported("tabulated drive spectrum")),
        }
    }

    fn is_silent(&self) -> bool {
        self.white == T::zero() && self.excess.is_none()
    }

    #[inline]
    fn sample(&mut self, noise: &mut Noise<T>, dt: T) -> T {
        let mut v = if self.white == T::zero() {
            T::zero()
        } else {
            self.white * noise.white()
        };
        if let Some((corner, drive)) = self.excess {
            v += self.state;
            self.state += dt * (drive * noise.white() - corner * self.state);
        }
        v
    }
}

/// Euler realization of the loop filter: companion-form state for the
/// rational part followed by an interpolating delay line.
struct Controller<T> {
    feedback_row: Vec<T>,
    output: Vec<T>,
    feedthrough: T,
    state: Vec<T>,
    scratch: Vec<T>,
    delay: Option<DelayLine<T>>,
}

impl<T: Scalar> Controller<T> {
    fn new(filter: &LoopFilter<T>, dt: T) -> Self {
        let ss = filter.state_space();
        let n = ss.order();
        Self {
            feedback_row: ss.feedback_row,
            output: ss.output,
            feedthrough: ss.feedthrough,
            state: vec![T::zero(); n],
            scratch: vec![T::zero(); n],
            delay: filter.has_delay().then(|| DelayLine::new(filter.delay() / dt)),
        }
    }

    /// Filter output for input `e` at the current step, then advances the
    /// internal state by one step.
    #[inline]
    fn step(&mut self, e: T, dt: T) -> T {
        let mut v = self.feedthrough * e;
        for (c, z) in self.output.iter().zip(&self.state) {
            v += *c * *z;
        }
        let n = self.state.len();
        if n > 0 {
            self.scratch.copy_from_slice(&self.state);
            for i in 0..n - 1 {
                self.state[i] += dt * self.scratch[i + 1];
            }
            let mut last = e;
            for (a, z) in self.feedback_row.iter().zip(&self.scratch) {
                last += *a * *z;
            }
            self.state[n - 1] += dt * last;
        }
        match &mut self.delay {
            Some(line) => line.push_and_read(v),
            None => v,
        }
    }
}

/// Delay of `steps` (possibly fractional) integration steps.
struct DelayLine<T> {
    whole: usize,
    frac: T,
    history: VecDeque<T>,
}

impl<T: Scalar> DelayLine<T> {
    fn new(steps: T) -> Self {
        let whole = steps.floor().to_usize().unwrap_or(0);
        let frac = steps - from_usize(whole);
        Self {
            whole,
            frac,
            history: VecDeque::from(vec![T::zero(); whole + 2]),
        }
    }

    #[inline]
    fn push_and_read(&mut self, v: T) -> T {
        self.history.pop_back();
        self.history.push_front(v);
        let a = self.history[self.whole];
        let b = self.history[self.whole + 1];
        a + (b - a) * self.frac
    }
}

/// Mirror detuning `X_ΔT + X_ΔR` driven by the amplitude quadrature and a
/// thermal white force.
enum Mechanics<T> {
    Instant { rp: T, thermal: T },
    Oscillator {
        rp: T,
        thermal: T,
        omega_m2: T,
        damping: T,
        position: T,
        velocity: T,
    },
}

impl<T: Scalar> Mechanics<T> {
    fn new(mech: &MechanicalResponse<T>) -> Result<Self, OracleError> {
        match mech.model() {
            MechanicalModel::Constant { coupling, thermal } => Ok(Mechanics::Instant {
                rp: coupling.sqrt(),
                thermal: thermal.sqrt(),
            }),
            MechanicalModel::HarmonicOscillator {
                coupling,
                omega_m,
                q_factor,
                thermal,
            } => Ok(Mechanics::Oscillator {
                rp: coupling.sqrt(),
                thermal: thermal.sqrt(),
                omega_m2: *omega_m * *omega_m,
                damping: *omega_m / *q_factor,
                position: T::zero(),
                velocity: T::zero(),
            }),
            MechanicalModel::Tabulated { .. } => {
                Err(OracleError::Unsupported("tabulated mechanical response"))
            }
        }
    }

    fn needs_thermal_noise(&self) -> bool {
        match self {
            Mechanics::Instant { thermal, .. } | Mechanics::Oscillator { thermal, .. } => {
                *thermal > T::zero()
            }
        }
    }

    /// Current detuning, then a semi-implicit Euler step of the oscillator.
    #[inline]
    fn step(&mut self, amplitude: T, thermal_noise: T, dt: T) -> T {
        match self {
            Mechanics::Instant { rp, thermal } => *rp * amplitude + *thermal * thermal_noise,
            Mechanics::Oscillator {
                rp,
                thermal,
                omega_m2,
                damping,
                position,
                velocity,
            } => {
                let x = *position;
                let force = *rp * amplitude + *thermal * thermal_noise;
                *velocity += dt * (force - *damping * *velocity - *omega_m2 * x);
                *position += dt * *velocity;
                x
            }
        }
    }
}

/// Block averager for one recorded channel.
struct Recorder<T> {
    channel: Channel,
    /// Position of `channel` in [`Channel::ALL`].
    index: usize,
    sum: T,
    samples: Vec<T>,
}

/// Integrates the linearized fluctuation equations and records the
/// requested channels. The cavity pole is stepped exactly; inputs, the
/// loop filter and the mirror are stepped with explicit Euler.
///
/// The amplitude quadrature obeys
/// `dδX_a = [−κ δX_a + √(2κ_in)(W_in − u) + √(2κ_out) W_ν + √(2κ_L) W_L] dt`
/// with `u` the filter output for the detector signal
/// `√(2κ_out η) δX_a − √η W_ν − √(1−η) W_D`. The same `W_ν` sample enters
/// the cavity and the detector. With `mech` present the phase quadrature
/// is integrated too, driven by its own vacuum inputs and by `2α` times the
/// mirror detuning.
pub fn simulate<T: Scalar>(
    cavity: &CavityParams<T>,
    drive: &DriveField<T>,
    steady: &SteadyState<T>,
    mech: Option<&MechanicalResponse<T>>,
    det: &DetectorParams<T>,
    filter: Option<&LoopFilter<T>>,
    cfg: &SimulationConfig<T>,
) -> Result<TimeSeries<T>, OracleError> {
    cfg.validate(cavity)?;
    if let Some(k) = filter {
        let report = is_stable(cavity, det, k)?;
        if !report.stable {
            return Err(OracleError::UnstableLoop(report.unstable_pole_count));
        }
        if k.max_corner() * cfg.dt > lit(0.1) {
            return Err(OracleError::InvalidConfig(format!(
                "dt = {} does not resolve the filter corner at {} rad/s",
                cfg.dt,
                k.max_corner()
            )));
        }
    }
    if let Some(MechanicalModel::HarmonicOscillator { omega_m, .. }) = mech.map(|m| m.model()) {
        if *omega_m * cfg.dt > lit(0.1) {
            return Err(OracleError::InvalidConfig(format!(
                "dt = {} does not resolve the mechanical resonance at {} rad/s",
                cfg.dt, omega_m
            )));
        }
    }

    let dt = cfg.dt;
    let two: T = lit(2.0);
    let (k_in, k_out, k_l) = (cavity.kappa_in(), cavity.kappa_out(), cavity.kappa_loss());
    let kappa = cavity.kappa();
    let eta = det.eta();
    let g_in = (two * k_in).sqrt();
    let g_out = (two * k_out).sqrt();
    let g_l = (two * k_l).sqrt();
    let det_signal = (two * k_out * eta).sqrt();
    let det_vac = eta.sqrt();
    let det_loss = (T::one() - eta).sqrt();
    let has_loss = k_l > T::zero();
    let has_det_loss = eta < T::one();

    let (decay, hold) = cavity_step(kappa, dt);
    let mut noise = Noise::new(cfg.seed, dt);
    let mut amp_in = ColoredNoise::new(drive.amp_noise())?;
    let mut controller = filter.filter(|k| !k.is_zero()).map(|k| Controller::new(k, dt));
    let mut phase = match mech {
        Some(m) => Some((
            Mechanics::new(m)?,
            ColoredNoise::new(drive.phase_noise())?,
        )),
        None => None,
    };
    let coupling = two * steady.alpha;

    let available: Vec<Channel> = Channel::ALL
        .into_iter()
        .filter(|c| match c {
            Channel::Amplitude => true,
            Channel::Phase | Channel::ReflectedPhase => phase.is_some(),
            Channel::Detected | Channel::Actuation => controller.is_some(),
        })
        .collect();
    let wanted: Vec<Channel> = match &cfg.channels {
        None => available.clone(),
        Some(list) => {
            for c in list {
                if !available.contains(c) {
                    return Err(OracleError::InvalidConfig(format!(
                        "channel `{c}` does not exist in this scenario"
                    )));
                }
            }
            available.into_iter().filter(|c| list.contains(c)).collect()
        }
    };
    let n_rec = cfg.recorded_samples();
    let mut recorders: Vec<Recorder<T>> = wanted
        .iter()
        .map(|&channel| Recorder {
            channel,
            index: Channel::ALL.iter().position(|&c| c == channel).unwrap_or(0),
            sum: T::zero(),
            samples: Vec::with_capacity(n_rec),
        })
        .collect();

    let every = cfg.record_every;
    let burn_steps = (cfg.burn_in / dt).ceil().to_u64().unwrap_or(0);
    let burn_steps = burn_steps.div_ceil(every as u64) * every as u64;
    let total_steps = burn_steps + (n_rec * every) as u64;
    let inv_every = from_usize::<T>(every).recip();
    let limit = lit::<T>(DIVERGENCE_LIMIT);

    let mut x = T::zero();
    let mut xm = T::zero();
    let mut values = [T::zero(); 5];
    for step in 0..total_steps {
        let w_in = amp_in.sample(&mut noise, dt);
        let w_nu = noise.white();
        let w_l = if has_loss { noise.white() } else { T::zero() };

        let mut u = T::zero();
        if let Some(ctrl) = controller.as_mut() {
            let w_nu_det = if cfg.break_output_correlation {
                noise.white()
            } else {
                w_nu
            };
            let w_d = if has_det_loss { noise.white() } else { T::zero() };
            let e = det_signal * x - det_vac * w_nu_det - det_loss * w_d;
            u = ctrl.step(e, dt);
            values[3] = e;
            values[4] = u;
        }
        values[0] = x;

        let x_next = decay * x + hold * (g_in * (w_in - u) + g_out * w_nu + g_l * w_l);

        if let Some((mechanics, phase_in)) = phase.as_mut() {
            let w_th = if mechanics.needs_thermal_noise() {
                noise.white()
            } else {
                T::zero()
            };
            let detuning = mechanics.step(x, w_th, dt);
            let wm_in = if phase_in.is_silent() {
                T::zero()
            } else {
                phase_in.sample(&mut noise, dt)
            };
            let wm_nu = noise.white();
            let wm_l = if has_loss { noise.white() } else { T::zero() };
            values[1] = xm;
            values[2] = g_in * xm - wm_in;
            xm = decay * xm + hold * (g_in * wm_in + g_out * wm_nu + g_l * wm_l + coupling * detuning);
        }
        x = x_next;

        if !(x.abs() <= limit && xm.abs() <= limit) {
            return Err(OracleError::DivergenceDetected { step });
        }
        if step >= burn_steps {
            for rec in recorders.iter_mut() {
                rec.sum += values[rec.index];
            }
            if (step - burn_steps + 1).is_multiple_of(every as u64) {
                for rec in recorders.iter_mut() {
                    rec.samples.push(rec.sum * inv_every);
                    rec.sum = T::zero();
                }
            }
        }
    }

    Ok(TimeSeries::new(
        cfg.sample_interval(),
        recorders
            .into_iter()
            .map(|r| (r.channel, r.samples))
            .collect(),
    ))
}

/// One step of `ẋ = −κx + f` with `f` held constant over the step:
/// `x ← e^(−κ dt) x + (1 − e^(−κ dt))/κ · f`. Exact for the cavity pole,
/// and reduces to the Euler update as `κ dt → 0`.
fn cavity_step<T: Scalar>(kappa: T, dt: T) -> (T, T) {
    let decay = (-kappa * dt).exp();
    (decay, -(-kappa * dt).exp_m1() / kappa)
}

/// Noise-free amplitude quadrature starting from `x0`, sampled every step
/// for `steps` steps (including the initial value). Uses the same cavity
/// and filter updates as [`simulate`].
pub fn free_response<T: Scalar>(
    cavity: &CavityParams<T>,
    det: &DetectorParams<T>,
    filter: Option<&LoopFilter<T>>,
    x0: T,
    dt: T,
    steps: usize,
) -> Vec<T> {
    let two: T = lit(2.0);
    let g_in = (two * cavity.kappa_in()).sqrt();
    let det_signal = (two * cavity.kappa_out() * det.eta()).sqrt();
    let mut controller = filter.filter(|k| !k.is_zero()).map(|k| Controller::new(k, dt));
    let (decay, hold) = cavity_step(cavity.kappa(), dt);
    let mut x = x0;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x);
    for _ in 0..steps {
        let u = controller
            .as_mut()
            .map_or(T::zero(), |c| c.step(det_signal * x, dt));
        x = decay * x - hold * g_in * u;
        out.push(x);
    }
    out
}

/// Intra-cavity carrier amplitude reached by integrating
/// `ȧ = −κa + √(2κ_in) A_in` from `a = 0` for `duration`.
pub fn relax_carrier<T: Scalar>(
    cavity: &CavityParams<T>,
    drive: &DriveField<T>,
    dt: T,
    duration: T,
) -> T {
    let source = (lit::<T>(2.0) * cavity.kappa_in()).sqrt() * drive.amplitude();
    let steps = (duration / dt).ceil().to_usize().unwrap_or(0);
    let mut a = T::zero();
    for _ in 0..steps {
        a += dt * (source - cavity.kappa() * a);
    }
    a
}
