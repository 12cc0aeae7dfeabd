//! Closed-form noise spectra of the linearized cavity, with and without
//! intensity feedback, decomposed by noise source.
//!
//! Amplitude-quadrature spectra (`V_a`, `V_a^f`) carry units of 1/rate:
//! a coherent drive well inside the linewidth gives `2/κ`. The reflected
//! phase spectrum is dimensionless with a vacuum floor of exactly one.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use thiserror::Error;

use crate::filter::LoopFilter;
use crate::model::{
    CavityParams, DetectorParams, DriveField, MechanicalResponse, ModelError, Spectrum,
    SteadyState,
};
use crate::scalar::{from_usize, lit, power_db, to_f64, Scalar};

/// A closed-loop denominator below `DEGENERATE_TOL · κ` is treated as a
/// marginal loop.
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(&'static str),
    #[error("closed-loop denominator vanishes at omega = {omega} (|κ + iω + c·K| = {magnitude}); check loop stability")]
    DegenerateDenominator { omega: f64, magnitude: f64 },
    #[error("kappa_out = 0: there is no transmitted field to feed back")]
    ZeroOutputCoupling,
    #[error("spectrum was evaluated on a different frequency grid")]
    GridMismatch,
    #[error("squeeze factor must lie in (0, 1], got {0}")]
    InvalidSqueezeFactor(f64),
}

// ---------------------------------------------------------------------------
// Frequency grid
// ---------------------------------------------------------------------------

/// Strictly increasing, non-negative angular frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid<T> {
    omegas: Vec<T>,
}

impl<T: Scalar> FrequencyGrid<T> {
    pub fn new(omegas: Vec<T>) -> Result<Self, SpectraError> {
        if omegas.is_empty() {
            return Err(SpectraError::InvalidGrid("empty"));
        }
        if omegas.iter().any(|w| !w.is_finite()) {
            return Err(SpectraError::InvalidGrid("non-finite frequency"));
        }
        if omegas[0] < T::zero() {
            return Err(SpectraError::InvalidGrid("negative frequency"));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SpectraError::InvalidGrid("not strictly increasing"));
        }
        Ok(Self { omegas })
    }

    pub fn single(omega: T) -> Result<Self, SpectraError> {
        Self::new(vec![omega])
    }

    /// `points` evenly spaced values from `min` to `max` inclusive.
    pub fn linear(min: T, max: T, points: usize) -> Result<Self, SpectraError> {
        if points == 0 {
            return Err(SpectraError::InvalidGrid("zero points"));
        }
        if points == 1 {
            return Self::single(min);
        }
        let step = (max - min) / from_usize(points - 1);
        Self::new(
            (0..points)
                .map(|i| {
                    if i == points - 1 {
                        max
                    } else {
                        min + step * from_usize(i)
                    }
                })
                .collect(),
        )
    }

    /// `points` logarithmically spaced values from `min > 0` to `max`.
    pub fn log(min: T, max: T, points: usize) -> Result<Self, SpectraError> {
        if !(min > T::zero()) {
            return Err(SpectraError::InvalidGrid("log grid needs a positive minimum"));
        }
        if points == 0 {
            return Err(SpectraError::InvalidGrid("zero points"));
        }
        if points == 1 {
            return Self::single(min);
        }
        let (lo, hi) = (min.ln(), max.ln());
        let step = (hi - lo) / from_usize(points - 1);
        Self::new(
            (0..points)
                .map(|i| match i {
                    0 => min,
                    i if i == points - 1 => max,
                    i => (lo + step * from_usize(i)).exp(),
                })
                .collect(),
        )
    }

    pub fn omegas(&self) -> &[T] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn min(&self) -> T {
        self.omegas[0]
    }

    pub fn max(&self) -> T {
        self.omegas[self.omegas.len() - 1]
    }

    /// Every frequency multiplied by `s > 0`.
    pub fn scaled(&self, s: T) -> Result<Self, SpectraError> {
        Self::new(self.omegas.iter().map(|&w| w * s).collect())
    }
}

// ---------------------------------------------------------------------------
// Budgets
// ---------------------------------------------------------------------------

/// Physical origin of a spectral contribution. The declaration order is the
/// column order used wherever budgets are serialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NoiseSource {
    /// Amplitude-quadrature noise of the drive laser.
    InputAmplitude,
    /// Excess (above vacuum) phase-quadrature noise of the drive laser.
    InputPhase,
    /// Vacuum share of the drive's phase quadrature.
    InputVacuum,
    /// Vacuum entering through the output mirror, including its correlated
    /// path through the feedback detector.
    OutputVacuum,
    /// Vacuum admitted by intra-cavity loss.
    LossVacuum,
    /// Vacuum admitted by detector inefficiency.
    DetectorVacuum,
    /// Thermal detuning.
    Thermal,
    /// Radiation-pressure detuning.
    RadiationPressure,
}

impl NoiseSource {
    pub const ALL: [NoiseSource; 8] = [
        NoiseSource::InputAmplitude,
        NoiseSource::InputPhase,
        NoiseSource::InputVacuum,
        NoiseSource::OutputVacuum,
        NoiseSource::LossVacuum,
        NoiseSource::DetectorVacuum,
        NoiseSource::Thermal,
        NoiseSource::RadiationPressure,
    ];

    pub fn label(self) -> &'static str {
        match self {
            NoiseSource::InputAmplitude => "input_amplitude",
            NoiseSource::InputPhase => "input_phase",
            NoiseSource::InputVacuum => "input_vacuum",
            NoiseSource::OutputVacuum => "output_vacuum",
            NoiseSource::LossVacuum => "loss_vacuum",
            NoiseSource::DetectorVacuum => "detector_vacuum",
            NoiseSource::Thermal => "thermal",
            NoiseSource::RadiationPressure => "radiation_pressure",
        }
    }
}

impl fmt::Display for NoiseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-source spectra on a grid; `total` is their pointwise sum.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBudget<T> {
    grid: FrequencyGrid<T>,
    contributions: BTreeMap<NoiseSource, Vec<T>>,
    total: Vec<T>,
}

impl<T: Scalar> NoiseBudget<T> {
    /// Assembles a budget and sums its contributions.
    ///
    /// # Panics
    /// If a contribution's length differs from the grid's.
    pub fn from_contributions(
        grid: FrequencyGrid<T>,
        contributions: BTreeMap<NoiseSource, Vec<T>>,
    ) -> Self {
        let mut total = vec![T::zero(); grid.len()];
        for values in contributions.values() {
            assert_eq!(values.len(), grid.len(), "contribution length mismatch");
            for (t, &v) in total.iter_mut().zip(values) {
                *t += v;
            }
        }
        Self {
            grid,
            contributions,
            total,
        }
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn total(&self) -> &[T] {
        &self.total
    }

    pub fn contribution(&self, source: NoiseSource) -> Option<&[T]> {
        self.contributions.get(&source).map(Vec::as_slice)
    }

    pub fn contributions(&self) -> &BTreeMap<NoiseSource, Vec<T>> {
        &self.contributions
    }

    pub fn sources(&self) -> impl Iterator<Item = NoiseSource> + '_ {
        self.contributions.keys().copied()
    }

    /// Linear interpolation of the total at `omega`, `None` outside the grid.
    pub fn total_at(&self, omega: T) -> Option<T> {
        let w = self.grid.omegas();
        if omega < w[0] || omega > w[w.len() - 1] {
            return None;
        }
        let upper = w.partition_point(|&x| x <= omega);
        if upper == w.len() {
            return Some(self.total[w.len() - 1]);
        }
        let t = (omega - w[upper - 1]) / (w[upper] - w[upper - 1]);
        Some(self.total[upper - 1] + (self.total[upper] - self.total[upper - 1]) * t)
    }
}

// ---------------------------------------------------------------------------
// Amplitude quadrature
// ---------------------------------------------------------------------------

fn amp_noise_on_grid<T: Scalar>(
    drive: &DriveField<T>,
    grid: &FrequencyGrid<T>,
) -> Result<Vec<T>, SpectraError> {
    drive.check_uncertainty(grid.omegas())?;
    grid.omegas()
        .iter()
        .map(|&w| drive.amp_noise().eval(w).map_err(SpectraError::from))
        .collect()
}

/// Open-loop intra-cavity amplitude spectrum
/// `V_a = (2κ_in V_in + 2κ_out + 2κ_L) / (κ² + ω²)`.
pub fn intracavity_amplitude_spectrum<T: Scalar>(
    cavity: &CavityParams<T>,
    drive: &DriveField<T>,
    grid: &FrequencyGrid<T>,
) -> Result<NoiseBudget<T>, SpectraError> {
    let v_in = amp_noise_on_grid(drive, grid)?;
    let two: T = lit(2.0);
    let kappa = cavity.kappa();
    let n = grid.len();
    let mut input = Vec::with_capacity(n);
    let mut output = Vec::with_capacity(n);
    let mut loss = Vec::with_capacity(n);
    for (&w, &v) in grid.omegas().iter().zip(&v_in) {
        let den = kappa * kappa + w * w;
        input.push(two * cavity.kappa_in() * v / den);
        output.push(two * cavity.kappa_out() / den);
        loss.push(two * cavity.kappa_loss() / den);
    }
    Ok(NoiseBudget::from_contributions(
        grid.clone(),
        BTreeMap::from([
            (NoiseSource::InputAmplitude, input),
            (NoiseSource::OutputVacuum, output),
            (NoiseSource::LossVacuum, loss),
        ]),
    ))
}

/// Best open-loop amplitude noise without squeezing: `2/κ`.
pub fn coherent_limit<T: Scalar>(cavity: &CavityParams<T>) -> T {
    lit::<T>(2.0) / cavity.kappa()
}

/// `2√(κ_in κ_out η)`, the factor multiplying `K` in the closed-loop
/// denominator.
pub fn loop_coupling<T: Scalar>(cavity: &CavityParams<T>, det: &DetectorParams<T>) -> T {
    lit::<T>(2.0) * (cavity.kappa_in() * cavity.kappa_out() * det.eta()).sqrt()
}

/// `κ + iω + 2√(κ_out κ_in η) K(ω)`.
pub(crate) fn closed_loop_denominator<T: Scalar>(
    cavity: &CavityParams<T>,
    det: &DetectorParams<T>,
    k: Complex<T>,
    omega: T,
) -> Complex<T> {
    let c = loop_coupling(cavity, det);
    Complex::new(cavity.kappa() + c * k.re, omega + c * k.im)
}

/// Closed-loop intra-cavity amplitude spectrum `V_a^f`.
///
/// The output-mirror vacuum reaches the cavity twice, directly and through
/// the feedback detector, so its entry is the coherent sum
/// `|√(2ηκ_in) K + √(2κ_out)|²` over the loop denominator. With `K ≡ 0`
/// this reproduces [`intracavity_amplitude_spectrum`] bit for bit.
pub fn intracavity_amplitude_spectrum_fb<T: Scalar>(
    cavity: &CavityParams<T>,
    drive: &DriveField<T>,
    det: &DetectorParams<T>,
    filter: &LoopFilter<T>,
    grid: &FrequencyGrid<T>,
) -> Result<NoiseBudget<T>, SpectraError> {
    let v_in = amp_noise_on_grid(drive, grid)?;
    let two: T = lit(2.0);
    let four: T = lit(4.0);
    let (k_in, k_out, k_l) = (cavity.kappa_in(), cavity.kappa_out(), cavity.kappa_loss());
    let kappa = cavity.kappa();
    let eta = det.eta();
    let cross = four * (eta * k_in * k_out).sqrt();

    let n = grid.len();
    let mut input = Vec::with_capacity(n);
    let mut detector = Vec::with_capacity(n);
    let mut output = Vec::with_capacity(n);
    let mut loss = Vec::with_capacity(n);
    for (&w, &v) in grid.omegas().iter().zip(&v_in) {
        let k = filter.response(w);
        let d = closed_loop_denominator(cavity, det, k, w);
        let den = d.norm_sqr();
        if den.sqrt() < lit::<T>(DEGENERATE_TOL) * kappa {
            return Err(SpectraError::DegenerateDenominator {
                omega: to_f64(w),
                magnitude: to_f64(den.sqrt()),
            });
        }
        let k2 = k.norm_sqr();
        // |aK + b|² = a²|K|² + 2ab·Re K + b², a = √(2ηκ_in), b = √(2κ_out)
        let out_num = two * eta * k_in * k2 + cross * k.re + two * k_out;
        input.push(two * k_in * v / den);
        detector.push(two * k_in * (T::one() - eta) * k2 / den);
        output.push(out_num / den);
        loss.push(two * k_l / den);
    }
    Ok(NoiseBudget::from_contributions(
        grid.clone(),
        BTreeMap::from([
            (NoiseSource::InputAmplitude, input),
            (NoiseSource::OutputVacuum, output),
            (NoiseSource::LossVacuum, loss),
            (NoiseSource::DetectorVacuum, detector),
        ]),
    ))
}

/// Low-frequency, infinite-gain limit of `V_a^f`: `1/(2ηκ_out)`.
pub fn highgain_limit<T: Scalar>(
    cavity: &CavityParams<T>,
    det: &DetectorParams<T>,
) -> Result<T, SpectraError> {
    if cavity.kappa_out() == T::zero() {
        return Err(SpectraError::ZeroOutputCoupling);
    }
    Ok((lit::<T>(2.0) * det.eta() * cavity.kappa_out()).recip())
}

/// High-gain feedback noise relative to a coherent open-loop drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Suppression<T> {
    pub linear: T,
    pub db: T,
}

/// `V_a^f / V_a = κ / (4ηκ_out)`, exactly `1/(2η)` for an impedance-matched
/// cavity.
pub fn suppression_ratio<T: Scalar>(
    cavity: &CavityParams<T>,
    det: &DetectorParams<T>,
) -> Result<Suppression<T>, SpectraError> {
    if cavity.kappa_out() == T::zero() {
        return Err(SpectraError::ZeroOutputCoupling);
    }
    let linear = if cavity.is_impedance_matched() {
        (lit::<T>(2.0) * det.eta()).recip()
    } else {
        cavity.kappa() / (lit::<T>(4.0) * det.eta() * cavity.kappa_out())
    };
    Ok(Suppression {
        linear,
        db: power_db(linear),
    })
}

// ---------------------------------------------------------------------------
// Phase quadrature
// ---------------------------------------------------------------------------

/// `V_ΔR(ω) = F(ω) V_a(ω)` pointwise, for `va` evaluated on `grid`.
pub fn radiation_pressure_spectrum<T: Scalar>(
    mech: &MechanicalResponse<T>,
    va: &NoiseBudget<T>,
    grid: &FrequencyGrid<T>,
) -> Result<Vec<T>, SpectraError> {
    if va.grid() != grid {
        return Err(SpectraError::GridMismatch);
    }
    grid.omegas()
        .iter()
        .zip(va.total())
        .map(|(&w, &v)| Ok(mech.transfer(w)? * v))
        .collect()
}

/// Phase-quadrature spectrum of the reflected field.
///
/// Radiation pressure is driven by the open-loop `V_a`, or by `V_a^f` when
/// `feedback` is supplied; the amplitude modulator adds nothing to the
/// phase quadrature, so every other term is unchanged by the loop. The
/// vacuum floor is split by origin and sums to one:
/// `(2κ_in − κ)² + ω² + 4κ_in(κ_out + κ_L) = κ² + ω²`.
pub fn reflected_phase_spectrum<T: Scalar>(
    cavity: &CavityParams<T>,
    drive: &DriveField<T>,
    steady: &SteadyState<T>,
    mech: &MechanicalResponse<T>,
    grid: &FrequencyGrid<T>,
    feedback: Option<(&DetectorParams<T>, &LoopFilter<T>)>,
) -> Result<NoiseBudget<T>, SpectraError> {
    let va = match feedback {
        Some((det, filter)) => intracavity_amplitude_spectrum_fb(cavity, drive, det, filter, grid)?,
        None => intracavity_amplitude_spectrum(cavity, drive, grid)?,
    };
    let v_rp = radiation_pressure_spectrum(mech, &va, grid)?;

    let four: T = lit(4.0);
    let eight: T = lit(8.0);
    let k_in = cavity.kappa_in();
    let kappa = cavity.kappa();
    let mismatch = lit::<T>(2.0) * k_in - kappa;
    let readout = eight * k_in * steady.alpha * steady.alpha;

    let n = grid.len();
    let mut thermal = Vec::with_capacity(n);
    let mut rp = Vec::with_capacity(n);
    let mut input_phase = Vec::with_capacity(n);
    let mut input_vacuum = Vec::with_capacity(n);
    let mut output = Vec::with_capacity(n);
    let mut loss = Vec::with_capacity(n);
    for (&w, &vr) in grid.omegas().iter().zip(&v_rp) {
        let den = w * w + kappa * kappa;
        let reflect = mismatch * mismatch + w * w;
        let v_phase = drive.phase_noise().eval(w)?;
        thermal.push(readout * mech.thermal(w)? / den);
        rp.push(readout * vr / den);
        input_phase.push(reflect * (v_phase - T::one()) / den);
        input_vacuum.push(reflect / den);
        output.push(four * k_in * cavity.kappa_out() / den);
        loss.push(four * k_in * cavity.kappa_loss() / den);
    }
    Ok(NoiseBudget::from_contributions(
        grid.clone(),
        BTreeMap::from([
            (NoiseSource::InputPhase, input_phase),
            (NoiseSource::InputVacuum, input_vacuum),
            (NoiseSource::OutputVacuum, output),
            (NoiseSource::LossVacuum, loss),
            (NoiseSource::Thermal, thermal),
            (NoiseSource::RadiationPressure, rp),
        ]),
    ))
}

/// Reflected-phase budgets for the two ways of lowering radiation-pressure
/// noise below the coherent level.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezingComparison<T> {
    /// Coherent-phase drive with the intensity loop closed.
    pub feedback: NoiseBudget<T>,
    /// Open loop, minimum-uncertainty amplitude-squeezed drive.
    pub squeezed: NoiseBudget<T>,
}

/// Contrasts in-loop squashing with an amplitude-squeezed input.
///
/// The feedback scenario keeps `drive_base`'s amplitude noise but sets the
/// phase noise to vacuum; the squeezed scenario uses `V_in = squeeze`,
/// `V_in⁻ = 1/squeeze` with the loop open. `squeeze = 1` is accepted as the
/// coherent reference.
#[allow(clippy::too_many_arguments)]
pub fn compare_squeezing_vs_feedback<T: Scalar>(
    cavity: &CavityParams<T>,
    drive_base: &DriveField<T>,
    steady: &SteadyState<T>,
    mech: &MechanicalResponse<T>,
    grid: &FrequencyGrid<T>,
    det: &DetectorParams<T>,
    filter: &LoopFilter<T>,
    squeeze: T,
) -> Result<SqueezingComparison<T>, SpectraError> {
    if !(squeeze > T::zero() && squeeze <= T::one()) {
        return Err(SpectraError::InvalidSqueezeFactor(to_f64(squeeze)));
    }
    let fb_drive = drive_base.with_phase_noise(Spectrum::vacuum())?;
    let feedback =
        reflected_phase_spectrum(cavity, &fb_drive, steady, mech, grid, Some((det, filter)))?;
    let sq_drive = DriveField::squeezed(drive_base.amplitude(), squeeze)?;
    let squeezed = reflected_phase_spectrum(cavity, &sq_drive, steady, mech, grid, None)?;
    Ok(SqueezingComparison { feedback, squeezed })
}
