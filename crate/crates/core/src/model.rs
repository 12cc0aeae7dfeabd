//! Cavity, drive, detector and mirror-mechanics parameters, plus the
//! zero-detuning steady state that linearization is performed around.
//!
//! Every type here is immutable once constructed and validated; the
//! constructors are the only place invariants are checked.
//!
//! Units: loss rates and angular frequencies are in rad/s, drive amplitudes
//! in √(photons/s), the intra-cavity amplitude in √photons, and all noise
//! spectra are in shot-noise units (vacuum = 1).

use thiserror::Error;

use crate::scalar::{lit, to_f64, Scalar};

/// Relative slack allowed when checking `V_in · V_in⁻ ≥ 1`, so that a
/// minimum-uncertainty pair `(s, 1/s)` is accepted despite rounding.
const UNCERTAINTY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("input coupling rate kappa_in must be positive, got {0}")]
    NonPositiveInputCoupling(f64),
    #[error("rate `{name}` must be non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("parameter `{0}` is not a finite number")]
    NonFinite(&'static str),
    #[error("detector efficiency must lie in (0, 1], got {0}")]
    InvalidEfficiency(f64),
    #[error("drive amplitude must be non-negative, got {0}")]
    NegativeAmplitude(f64),
    #[error("spectrum takes negative value {value} at omega = {omega}")]
    NegativeSpectrum { omega: f64, value: f64 },
    #[error("uncertainty product V_in * V_in^- = {product} is below 1 at omega = {omega}")]
    UncertaintyViolation { omega: f64, product: f64 },
    #[error("invalid table: {0}")]
    InvalidTable(&'static str),
    #[error("omega = {omega} lies outside the tabulated range [{min}, {max}]")]
    OutOfTableRange { omega: f64, min: f64, max: f64 },
    #[error("invalid spectrum model: {0}")]
    InvalidSpectrum(&'static str),
    #[error("invalid mechanical response: {0}")]
    InvalidMechanical(&'static str),
}

fn finite<T: Scalar>(x: T, name: &'static str) -> Result<T, ModelError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ModelError::NonFinite(name))
    }
}

// ---------------------------------------------------------------------------
// Cavity
// ---------------------------------------------------------------------------

/// Loss rates of a two-port cavity with intra-cavity loss.
///
/// The total rate `kappa` is always derived from the three partial rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams<T> {
    kappa_in: T,
    kappa_out: T,
    kappa_loss: T,
}

impl<T: Scalar> CavityParams<T> {
    pub fn new(kappa_in: T, kappa_out: T, kappa_loss: T) -> Result<Self, ModelError> {
        let kappa_in = finite(kappa_in, "kappa_in")?;
        let kappa_out = finite(kappa_out, "kappa_out")?;
        let kappa_loss = finite(kappa_loss, "kappa_loss")?;
        if kappa_in <= T::zero() {
            return Err(ModelError::NonPositiveInputCoupling(to_f64(kappa_in)));
        }
        for (name, value) in [("kappa_out", kappa_out), ("kappa_loss", kappa_loss)] {
            if value < T::zero() {
                return Err(ModelError::NegativeRate {
                    name,
                    value: to_f64(value),
                });
            }
        }
        Ok(Self {
            kappa_in,
            kappa_out,
            kappa_loss,
        })
    }

    /// Impedance-matched cavity with total rate `kappa`.
    pub fn impedance_matched(kappa: T) -> Result<Self, ModelError> {
        let half = kappa / lit(2.0);
        Self::new(half, half, T::zero())
    }

    pub fn kappa_in(&self) -> T {
        self.kappa_in
    }

    pub fn kappa_out(&self) -> T {
        self.kappa_out
    }

    pub fn kappa_loss(&self) -> T {
        self.kappa_loss
    }

    /// Total loss rate.
    pub fn kappa(&self) -> T {
        self.kappa_in + self.kappa_out + self.kappa_loss
    }

    pub fn is_impedance_matched(&self) -> bool {
        self.kappa_in == self.kappa_out && self.kappa_loss == T::zero()
    }

    /// Multiplies every rate by `s`.
    pub fn scaled(&self, s: T) -> Result<Self, ModelError> {
        Self::new(self.kappa_in * s, self.kappa_out * s, self.kappa_loss * s)
    }
}

/// Builds a [`CavityParams`] from raw rates, rejecting undrivable or
/// negative-loss configurations.
pub fn validate_cavity<T: Scalar>(
    kappa_in: T,
    kappa_out: T,
    kappa_loss: T,
) -> Result<CavityParams<T>, ModelError> {
    CavityParams::new(kappa_in, kappa_out, kappa_loss)
}

// ---------------------------------------------------------------------------
// Spectra as functions of omega
// ---------------------------------------------------------------------------

/// Piecewise-linear table on a strictly increasing, non-negative grid.
/// Evaluation outside the grid is an error rather than an extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<T> {
    omegas: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> Table<T> {
    pub fn new(omegas: Vec<T>, values: Vec<T>) -> Result<Self, ModelError> {
        if omegas.is_empty() {
            return Err(ModelError::InvalidTable("empty grid"));
        }
        if omegas.len() != values.len() {
            return Err(ModelError::InvalidTable("grid and values differ in length"));
        }
        if omegas.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidTable("non-finite entry"));
        }
        if omegas[0] < T::zero() {
            return Err(ModelError::InvalidTable("negative frequency"));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::InvalidTable("grid not strictly increasing"));
        }
        Ok(Self { omegas, values })
    }

    pub fn omegas(&self) -> &[T] {
        &self.omegas
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn range(&self) -> (T, T) {
        (self.omegas[0], self.omegas[self.omegas.len() - 1])
    }

    pub fn contains(&self, omega: T) -> bool {
        let (lo, hi) = self.range();
        omega >= lo && omega <= hi
    }

    pub fn eval(&self, omega: T) -> Result<T, ModelError> {
        let (lo, hi) = self.range();
        if !(omega >= lo && omega <= hi) {
            return Err(ModelError::OutOfTableRange {
                omega: to_f64(omega),
                min: to_f64(lo),
                max: to_f64(hi),
            });
        }
        // first index with omegas[i] > omega
        let upper = self.omegas.partition_point(|&w| w <= omega);
        if upper == 0 {
            return Ok(self.values[0]);
        }
        if upper == self.omegas.len() {
            return Ok(self.values[upper - 1]);
        }
        let (w0, w1) = (self.omegas[upper - 1], self.omegas[upper]);
        let (v0, v1) = (self.values[upper - 1], self.values[upper]);
        let t = (omega - w0) / (w1 - w0);
        Ok(v0 + (v1 - v0) * t)
    }
}

/// A noise spectrum `V(ω)` in shot-noise units.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum<T> {
    /// Frequency-independent level.
    Constant(T),
    /// `floor + peak / (1 + (ω/corner)²)`: white floor plus a low-pass
    /// excess, the usual shape of classical laser noise.
    Lorentzian { floor: T, peak: T, corner: T },
    /// Linear interpolation of measured values.
    Tabulated(Table<T>),
}

impl<T: Scalar> Spectrum<T> {
    /// Vacuum level.
    pub fn vacuum() -> Self {
        Spectrum::Constant(T::one())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Spectrum::Constant(v) => {
                finite(*v, "spectrum level")?;
                if *v < T::zero() {
                    return Err(ModelError::NegativeSpectrum {
                        omega: 0.0,
                        value: to_f64(*v),
                    });
                }
            }
            Spectrum::Lorentzian {
                floor,
                peak,
                corner,
            } => {
                for (x, name) in [(*floor, "floor"), (*peak, "peak"), (*corner, "corner")] {
                    finite(x, name)?;
                }
                if *floor < T::zero() || *peak < T::zero() {
                    return Err(ModelError::InvalidSpectrum(
                        "lorentzian floor and peak must be non-negative",
                    ));
                }
                if *corner <= T::zero() {
                    return Err(ModelError::InvalidSpectrum(
                        "lorentzian corner must be positive",
                    ));
                }
            }
            Spectrum::Tabulated(table) => {
                for (&w, &v) in table.omegas.iter().zip(&table.values) {
                    if v < T::zero() {
                        return Err(ModelError::NegativeSpectrum {
                            omega: to_f64(w),
                            value: to_f64(v),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, omega: T) -> Result<T, ModelError> {
        match self {
            Spectrum::Constant(v) => Ok(*v),
            Spectrum::Lorentzian {
                floor,
                peak,
                corner,
            } => {
                let x = omega / *corner;
                Ok(*floor + *peak / (T::one() + x * x))
            }
            Spectrum::Tabulated(table) => table.eval(omega),
        }
    }

    /// Value approached as ω → ∞, if the model defines one.
    pub fn asymptote(&self) -> Option<T> {
        match self {
            Spectrum::Constant(v) => Some(*v),
            Spectrum::Lorentzian { floor, .. } => Some(*floor),
            Spectrum::Tabulated(_) => None,
        }
    }

    /// Points where the model changes character; used as probe points when
    /// validating products of spectra.
    fn knots(&self) -> Vec<T> {
        match self {
            Spectrum::Constant(_) => Vec::new(),
            Spectrum::Lorentzian { corner, .. } => vec![*corner],
            Spectrum::Tabulated(table) => table.omegas.clone(),
        }
    }

    fn defined_at(&self, omega: T) -> bool {
        match self {
            Spectrum::Tabulated(table) => table.contains(omega),
            _ => true,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Spectrum::Constant(_))
    }
}

// ---------------------------------------------------------------------------
// Drive
// ---------------------------------------------------------------------------

/// The laser field driving the input mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveField<T> {
    amplitude: T,
    amp_noise: Spectrum<T>,
    phase_noise: Spectrum<T>,
}

impl<T: Scalar> DriveField<T> {
    pub fn new(
        amplitude: T,
        amp_noise: Spectrum<T>,
        phase_noise: Spectrum<T>,
    ) -> Result<Self, ModelError> {
        finite(amplitude, "amplitude")?;
        if amplitude < T::zero() {
            return Err(ModelError::NegativeAmplitude(to_f64(amplitude)));
        }
        amp_noise.validate()?;
        phase_noise.validate()?;
        let drive = Self {
            amplitude,
            amp_noise,
            phase_noise,
        };

        let mut probes = vec![T::zero()];
        probes.extend(drive.amp_noise.knots());
        probes.extend(drive.phase_noise.knots());
        probes.retain(|&w| drive.amp_noise.defined_at(w) && drive.phase_noise.defined_at(w));
        drive.check_uncertainty(&probes)?;

        // Both analytic models are monotone in ω, so their product is
        // bounded below by the product of the asymptotes.
        if let (Some(a), Some(p)) = (drive.amp_noise.asymptote(), drive.phase_noise.asymptote()) {
            check_product(T::infinity(), a * p)?;
        }
        Ok(drive)
    }

    /// Coherent drive: vacuum-level noise in both quadratures.
    pub fn coherent(amplitude: T) -> Result<Self, ModelError> {
        Self::new(amplitude, Spectrum::vacuum(), Spectrum::vacuum())
    }

    /// Flat amplitude noise `v_in` with vacuum phase noise.
    pub fn with_flat_noise(amplitude: T, v_in: T, v_in_phase: T) -> Result<Self, ModelError> {
        Self::new(
            amplitude,
            Spectrum::Constant(v_in),
            Spectrum::Constant(v_in_phase),
        )
    }

    /// Minimum-uncertainty amplitude-squeezed drive: `V_in = squeeze`,
    /// `V_in⁻ = 1/squeeze`.
    pub fn squeezed(amplitude: T, squeeze: T) -> Result<Self, ModelError> {
        Self::with_flat_noise(amplitude, squeeze, squeeze.recip())
    }

    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    pub fn amp_noise(&self) -> &Spectrum<T> {
        &self.amp_noise
    }

    pub fn phase_noise(&self) -> &Spectrum<T> {
        &self.phase_noise
    }

    /// Copy of this drive with the phase-quadrature noise replaced.
    pub fn with_phase_noise(&self, phase_noise: Spectrum<T>) -> Result<Self, ModelError> {
        Self::new(self.amplitude, self.amp_noise.clone(), phase_noise)
    }

    /// Copy of this drive with the amplitude-quadrature noise replaced.
    pub fn with_amp_noise(&self, amp_noise: Spectrum<T>) -> Result<Self, ModelError> {
        Self::new(self.amplitude, amp_noise, self.phase_noise.clone())
    }

    /// Re-checks non-negativity and the uncertainty product on `omegas`.
    pub fn check_uncertainty(&self, omegas: &[T]) -> Result<(), ModelError> {
        for &w in omegas {
            let a = self.amp_noise.eval(w)?;
            let p = self.phase_noise.eval(w)?;
            for v in [a, p] {
                if v < T::zero() {
                    return Err(ModelError::NegativeSpectrum {
                        omega: to_f64(w),
                        value: to_f64(v),
                    });
                }
            }
            check_product(w, a * p)?;
        }
        Ok(())
    }
}

fn check_product<T: Scalar>(omega: T, product: T) -> Result<(), ModelError> {
    if product < T::one() - lit(UNCERTAINTY_SLACK) {
        Err(ModelError::UncertaintyViolation {
            omega: to_f64(omega),
            product: to_f64(product),
        })
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Detector and steady state
// ---------------------------------------------------------------------------

/// Feedback photodetector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams<T> {
    eta: T,
}

impl<T: Scalar> DetectorParams<T> {
    pub fn new(eta: T) -> Result<Self, ModelError> {
        finite(eta, "eta")?;
        if eta <= T::zero() || eta > T::one() {
            return Err(ModelError::InvalidEfficiency(to_f64(eta)));
        }
        Ok(Self { eta })
    }

    pub fn ideal() -> Self {
        Self { eta: T::one() }
    }

    /// Quantum efficiency.
    pub fn eta(&self) -> T {
        self.eta
    }
}

/// Intra-cavity carrier amplitude at zero detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState<T> {
    pub alpha: T,
}

/// `α = √(2κ_in)·A_in/κ`.
pub fn steady_state<T: Scalar>(cavity: &CavityParams<T>, drive: &DriveField<T>) -> SteadyState<T> {
    let two: T = lit(2.0);
    SteadyState {
        alpha: (two * cavity.kappa_in()).sqrt() * drive.amplitude() / cavity.kappa(),
    }
}

// ---------------------------------------------------------------------------
// Mirror mechanics
// ---------------------------------------------------------------------------

/// Functional form of the radiation-pressure transfer `F(ω)` and of the
/// thermal detuning spectrum `V_ΔT(ω)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MechanicalModel<T> {
    /// `F(ω) = coupling`, `V_ΔT(ω) = thermal`.
    Constant { coupling: T, thermal: T },
    /// Single mechanical resonance. Both the radiation-pressure and the
    /// thermal force act through the same susceptibility:
    /// `F(ω) = coupling / ((ω_m² − ω²)² + (ω ω_m / Q)²)` and likewise
    /// `V_ΔT(ω) = thermal / (…)`.
    HarmonicOscillator {
        coupling: T,
        omega_m: T,
        q_factor: T,
        thermal: T,
    },
    /// Measured or externally computed curves.
    Tabulated { transfer: Table<T>, thermal: Table<T> },
}

/// Validated [`MechanicalModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalResponse<T> {
    model: MechanicalModel<T>,
}

impl<T: Scalar> MechanicalResponse<T> {
    pub fn new(model: MechanicalModel<T>) -> Result<Self, ModelError> {
        match &model {
            MechanicalModel::Constant { coupling, thermal } => {
                finite(*coupling, "coupling")?;
                finite(*thermal, "thermal")?;
                if *coupling < T::zero() || *thermal < T::zero() {
                    return Err(ModelError::InvalidMechanical(
                        "coupling and thermal level must be non-negative",
                    ));
                }
            }
            MechanicalModel::HarmonicOscillator {
                coupling,
                omega_m,
                q_factor,
                thermal,
            } => {
                for (x, name) in [
                    (*coupling, "coupling"),
                    (*omega_m, "omega_m"),
                    (*q_factor, "q_factor"),
                    (*thermal, "thermal"),
                ] {
                    finite(x, name)?;
                }
                if *coupling < T::zero() || *thermal < T::zero() {
                    return Err(ModelError::InvalidMechanical(
                        "coupling and thermal level must be non-negative",
                    ));
                }
                if *omega_m <= T::zero() || *q_factor <= T::zero() {
                    return Err(ModelError::InvalidMechanical(
                        "resonance frequency and quality factor must be positive",
                    ));
                }
            }
            MechanicalModel::Tabulated { transfer, thermal } => {
                if transfer
                    .values()
                    .iter()
                    .chain(thermal.values())
                    .any(|v| *v < T::zero())
                {
                    return Err(ModelError::InvalidMechanical(
                        "tabulated transfer and thermal spectra must be non-negative",
                    ));
                }
            }
        }
        Ok(Self { model })
    }

    pub fn constant(coupling: T, thermal: T) -> Result<Self, ModelError> {
        Self::new(MechanicalModel::Constant { coupling, thermal })
    }

    /// Mirror decoupled from the light: no radiation pressure, no thermal
    /// detuning.
    pub fn decoupled() -> Self {
        Self {
            model: MechanicalModel::Constant {
                coupling: T::zero(),
                thermal: T::zero(),
            },
        }
    }

    pub fn harmonic(coupling: T, omega_m: T, q_factor: T, thermal: T) -> Result<Self, ModelError> {
        Self::new(MechanicalModel::HarmonicOscillator {
            coupling,
            omega_m,
            q_factor,
            thermal,
        })
    }

    pub fn model(&self) -> &MechanicalModel<T> {
        &self.model
    }

    /// Radiation-pressure transfer `F(ω)`.
    pub fn transfer(&self, omega: T) -> Result<T, ModelError> {
        match &self.model {
            MechanicalModel::Constant { coupling, .. } => Ok(*coupling),
            MechanicalModel::HarmonicOscillator {
                coupling,
                omega_m,
                q_factor,
                ..
            } => Ok(*coupling * oscillator_power_response(omega, *omega_m, *q_factor)),
            MechanicalModel::Tabulated { transfer, .. } => transfer.eval(omega),
        }
    }

    /// Thermal detuning spectrum `V_ΔT(ω)`.
    pub fn thermal(&self, omega: T) -> Result<T, ModelError> {
        match &self.model {
            MechanicalModel::Constant { thermal, .. } => Ok(*thermal),
            MechanicalModel::HarmonicOscillator {
                thermal,
                omega_m,
                q_factor,
                ..
            } => Ok(*thermal * oscillator_power_response(omega, *omega_m, *q_factor)),
            MechanicalModel::Tabulated { thermal, .. } => thermal.eval(omega),
        }
    }
}

/// `1 / ((ω_m² − ω²)² + (ω ω_m / Q)²)`
fn oscillator_power_response<T: Scalar>(omega: T, omega_m: T, q: T) -> T {
    let detune = omega_m * omega_m - omega * omega;
    let damping = omega * omega_m / q;
    (detune * detune + damping * damping).recip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cavity_examples() {
        let c = validate_cavity(0.5, 0.5, 0.0).unwrap();
        assert_eq!(c.kappa(), 1.0);
        assert!(c.is_impedance_matched());

        let c = validate_cavity(4.9, 4.9, 1.0).unwrap();
        assert_relative_eq!(c.kappa(), 10.8, max_relative = 1e-15);
        assert!(!c.is_impedance_matched());

        assert_eq!(
            validate_cavity(0.0, 0.5, 0.0),
            Err(ModelError::NonPositiveInputCoupling(0.0))
        );
        assert!(matches!(
            validate_cavity(1.0, -0.1, 0.0),
            Err(ModelError::NegativeRate {
                name: "kappa_out",
                ..
            })
        ));
        assert!(matches!(
            validate_cavity(1.0, 0.1, -2.0),
            Err(ModelError::NegativeRate {
                name: "kappa_loss",
                ..
            })
        ));
        assert!(matches!(
            validate_cavity(f64::NAN, 0.1, 0.0),
            Err(ModelError::NonFinite("kappa_in"))
        ));
    }

    #[test]
    fn construction_is_idempotent() {
        let c = validate_cavity(1.3, 0.2, 0.7).unwrap();
        let again = validate_cavity(c.kappa_in(), c.kappa_out(), c.kappa_loss()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn steady_state_examples() {
        let c = validate_cavity(0.5, 0.5, 0.0).unwrap();
        let d = DriveField::coherent(1.0).unwrap();
        assert_eq!(steady_state(&c, &d).alpha, 1.0);

        let c = validate_cavity(1.0, 0.5, 0.5).unwrap();
        let d = DriveField::coherent(2.0).unwrap();
        assert_relative_eq!(steady_state(&c, &d).alpha, 2f64.sqrt(), max_relative = 1e-15);

        let d = DriveField::coherent(0.0).unwrap();
        assert_eq!(steady_state(&c, &d).alpha, 0.0);
    }

    #[test]
    fn alpha_scales_inverse_sqrt() {
        let c = validate_cavity(1.0, 0.5, 0.5).unwrap();
        let d = DriveField::coherent(2.0).unwrap();
        let a1 = steady_state(&c, &d).alpha;
        let a4 = steady_state(&c.scaled(4.0).unwrap(), &d).alpha;
        assert_relative_eq!(a4, a1 / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn detector_bounds() {
        assert!(DetectorParams::new(1.0).is_ok());
        assert!(DetectorParams::new(0.91).is_ok());
        assert_eq!(
            DetectorParams::new(0.0),
            Err(ModelError::InvalidEfficiency(0.0))
        );
        assert!(DetectorParams::new(1.01).is_err());
    }

    #[test]
    fn drive_uncertainty() {
        assert!(DriveField::with_flat_noise(1.0, 1e6, 1.0).is_ok());
        assert!(DriveField::squeezed(1.0, 0.5).is_ok());
        assert!(DriveField::squeezed(1.0, 0.3).is_ok());
        assert!(matches!(
            DriveField::with_flat_noise(1.0, 0.5, 1.0),
            Err(ModelError::UncertaintyViolation { .. })
        ));
        assert!(matches!(
            DriveField::with_flat_noise(1.0, -1.0, 1.0),
            Err(ModelError::NegativeSpectrum { .. })
        ));
        assert!(DriveField::coherent(-1.0).is_err());

        // Lorentzian excess on top of vacuum is fine, a sub-vacuum floor is not.
        let ok = Spectrum::Lorentzian {
            floor: 1.0,
            peak: 1e4,
            corner: 10.0,
        };
        assert!(DriveField::new(1.0, ok, Spectrum::vacuum()).is_ok());
        let bad = Spectrum::Lorentzian {
            floor: 0.5,
            peak: 1e4,
            corner: 10.0,
        };
        assert!(DriveField::new(1.0, bad, Spectrum::vacuum()).is_err());
    }

    #[test]
    fn tabulated_uncertainty_checked_at_every_knot() {
        let amp = Table::new(vec![0.0, 1.0, 2.0], vec![2.0, 0.4, 2.0]).unwrap();
        let err = DriveField::new(1.0, Spectrum::Tabulated(amp), Spectrum::vacuum()).unwrap_err();
        assert_eq!(
            err,
            ModelError::UncertaintyViolation {
                omega: 1.0,
                product: 0.4
            }
        );
    }

    #[test]
    fn tables_interpolate_and_reject_extrapolation() {
        let t = Table::new(vec![1.0, 2.0, 4.0], vec![10.0, 20.0, 0.0]).unwrap();
        assert_eq!(t.eval(1.0).unwrap(), 10.0);
        assert_eq!(t.eval(1.5).unwrap(), 15.0);
        assert_eq!(t.eval(3.0).unwrap(), 10.0);
        assert_eq!(t.eval(4.0).unwrap(), 0.0);
        assert!(matches!(
            t.eval(0.5),
            Err(ModelError::OutOfTableRange { .. })
        ));
        assert!(t.eval(4.5).is_err());
        assert!(Table::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Table::<f64>::new(vec![], vec![]).is_err());
        assert!(Table::new(vec![1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn oscillator_transfer() {
        let m = MechanicalResponse::harmonic(1.0, 0.1, 10.0, 0.0).unwrap();
        // at resonance only the damping term survives: (ω_m²/Q)²
        assert_relative_eq!(m.transfer(0.1).unwrap(), 1.0 / (0.01f64 / 10.0).powi(2), max_relative = 1e-12);
        assert_relative_eq!(m.transfer(0.0).unwrap(), 1e4, max_relative = 1e-12);
        assert_eq!(m.thermal(0.05).unwrap(), 0.0);
        assert!(MechanicalResponse::harmonic(1.0, 0.0, 10.0, 0.0).is_err());
        assert!(MechanicalResponse::constant(-1.0, 0.0).is_err());
    }
}
