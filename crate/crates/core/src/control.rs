//! Open-loop gain, closed-loop stability and margins of the intensity
//! feedback loop, plus the loop gain needed to bury a given level of
//! classical input noise.
//!
//! The loop gain is normalized so the closed-loop denominator factors as
//! `κ + iω + 2√(κ_in κ_out η) K(ω) = (κ + iω)(1 + L(ω))`.

use std::fmt;

use num_complex::Complex;
use thiserror::Error;

use crate::filter::LoopFilter;
use crate::model::{CavityParams, DetectorParams};
use crate::poly::Poly;
use crate::scalar::{amplitude_db, from_usize, lit, power_db, to_f64, Scalar};
use crate::spectra::loop_coupling;

/// Points on the base logarithmic Nyquist grid.
const NYQUIST_POINTS: usize = 4096;
/// Decades sampled below and above the slowest and fastest loop corner.
const NYQUIST_DECADES: f64 = 3.0;
/// The sweep is extended upward until `|L|` drops below this.
const NYQUIST_TAIL_GAIN: f64 = 0.1;
/// A segment is bisected while the phase of `1 + L` (or of `L` where the
/// loop gain is appreciable) moves by more than this many radians.
const NYQUIST_MAX_PHASE_STEP: f64 = 0.3;
const NYQUIST_MAX_DEPTH: usize = 48;
/// Roots closer than this (relative) to the imaginary axis count as
/// unstable: the loop would be marginal and the closed-loop spectra
/// singular.
const MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("{method} did not converge (residual {residual:e})")]
    NumericalRootFailure { method: StabilityMethod, residual: f64 },
    #[error("residual fraction must lie in (0, 1], got {0}")]
    InvalidResidual(f64),
    #[error("classical noise level must be a finite, non-negative dB value, got {0}")]
    InvalidNoiseLevel(f64),
    #[error("the polynomial method cannot handle a loop delay of {0} s")]
    DelayNotRational(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityMethod {
    PolynomialRoots,
    NyquistSampling,
}

impl StabilityMethod {
    pub fn label(self) -> &'static str {
        match self {
            Self::PolynomialRoots => "polynomial_roots",
            Self::NyquistSampling => "nyquist_sampling",
        }
    }
}

impl fmt::Display for StabilityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Outcome of a stability analysis.
///
/// `stable` holds exactly when `unstable_pole_count == 0`. The gain margin
/// is `+∞` when the locus never crosses the negative real axis and the
/// phase margin is `None` when `|L|` never crosses 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T> {
    pub stable: bool,
    pub gain_margin_db: T,
    pub phase_margin_deg: Option<T>,
    pub unstable_pole_count: usize,
    pub method: StabilityMethod,
    /// Closed-loop poles, populated by the polynomial method only.
    pub closed_loop_poles: Vec<Complex<T>>,
}

/// `L(ω) = 2√(κ_in κ_out η) K(ω) / (κ + iω)`.
pub fn open_loop_gain<T: Scalar>(
    cavity: &CavityParams<T>,
    det: &DetectorParams<T>,
    filter: &LoopFilter<T>,
    omega: T,
) -> Complex<T> {
    let c = loop_coupling(cavity, det);
    filter.response(omega) * c / Complex::new(cavity.kappa(), omega)
}

/// Stability of the closed loop, by polynomial roots for rational filters
/// and by Nyquist sampling when the filter has a delay.
pub fn is_stable<T: Scalar>(
    cavity: &CavityParams<T>,
    det: &DetectorParams<T>,
    filter: &LoopFilter<T>,
) -> Result<StabilityReport<T>, ControlError> {
    let method = if filter.has_delay() {
        StabilityMethod::NyquistSampling
    } else {
        StabilityMethod::PolynomialRoots
    };
    is_stable_with(cavity, det, filter, method)
}

/// [`is_stable`] with the method chosen by the caller. The polynomial
/// method rejects filters with a delay.
pub fn is_stable_with<T: Scalar>(
    cavity: &CavityParams<T>,
    det: &DetectorParams<T>,
    filter: &LoopFilter<T>,
    method: StabilityMethod,
) -> Result<StabilityReport<T>, ControlError> {
    let locus = walk_locus(cavity, det, filter)?;
    let (unstable_pole_count, closed_loop_poles) = match method {
        StabilityMethod::PolynomialRoots => {
            if filter.has_delay() {
                return Err(ControlError::DelayNotRational(to_f64(filter.delay())));
            }
            let poles = closed_loop_poles(cavity, det, filter)?;
            let count = poles
                .iter()
                .filter(|p| p.re >= -lit::<T>(MARGINAL_TOL) * cavity.kappa().max(p.norm()))
                .count();
            (count, poles)
        }
        StabilityMethod::NyquistSampling => (locus.unstable_count()?, Vec::new()),
    };
    Ok(StabilityReport {
        stable: unstable_pole_count == 0,
        gain_margin_db: locus.gain_margin_db(),
        phase_margin_deg: locus.phase_margin_deg(),
        unstable_pole_count,
        method,
        closed_loop_poles,
    })
}

/// Roots of `(s + κ)·den(K) + 2√(κ_in κ_out η)·g·num(K)`.
pub fn closed_loop_poles<T: Scalar>(
    cavity: &CavityParams<T>,
    det: &DetectorParams<T>,
    filter: &LoopFilter<T>,
) -> Result<Vec<Complex<T>>, ControlError> {
    let c = loop_coupling(cavity, det);
    let cavity_pole = Poly::new(vec![cavity.kappa(), T::one()]);
    let char_poly = cavity_pole
        .mul(&filter.denominator())
        .add(&filter.numerator().scale(c * filter.gain()));
    char_poly
        .roots()
        .map_err(|f| ControlError::NumericalRootFailure {
            method: StabilityMethod::PolynomialRoots,
            residual: f.residual,
        })
}

/// Summary of the sampled locus `L(iω)`, `ω ∈ [0, ∞)`.
struct Locus<T> {
    /// Unwrapped change of `arg(1 + L)` from `ω = 0` to the end of the sweep.
    winding_phase: T,
    min_return_difference: T,
    neg_real_crossings: Vec<T>,
    unity_phase_margins: Vec<T>,
}

impl<T: Scalar> Locus<T> {
    fn unstable_count(&self) -> Result<usize, ControlError> {
        // L has no right-half-plane poles, and by conjugate symmetry the
        // full contour winds twice as far as the half sweep.
        let z = -self.winding_phase / T::PI();
        let rounded = z.round();
        let residual = (z - rounded).abs();
        if residual > lit(0.25) || rounded < T::zero() {
            return Err(ControlError::NumericalRootFailure {
                method: StabilityMethod::NyquistSampling,
                residual: to_f64(residual.max(-rounded)),
            });
        }
        let count = rounded.to_usize().unwrap_or(0);
        if self.min_return_difference < lit(MARGINAL_TOL) {
            return Ok(count.max(1));
        }
        Ok(count)
    }

    fn gain_margin_db(&self) -> T {
        self.neg_real_crossings
            .iter()
            .map(|&m| -amplitude_db(m))
            .fold(T::infinity(), T::min)
    }

    fn phase_margin_deg(&self) -> Option<T> {
        self.unity_phase_margins
            .iter()
            .copied()
            .reduce(T::min)
    }
}

#[derive(Clone, Copy)]
struct Sample<T> {
    omega: T,
    l: Complex<T>,
}

fn walk_locus<T: Scalar>(
    cavity: &CavityParams<T>,
    det: &DetectorParams<T>,
    filter: &LoopFilter<T>,
) -> Result<Locus<T>, ControlError> {
    let at = |omega: T| Sample {
        omega,
        l: open_loop_gain(cavity, det, filter, omega),
    };
    let kappa = cavity.kappa();
    let decades = lit::<T>(10.0).powf(lit(NYQUIST_DECADES));
    let lo = filter.min_corner().map_or(kappa, |c| c.min(kappa)) / decades;
    let mut hi = filter.max_corner().max(kappa) * decades;
    let mut extensions = 0;
    while at(hi).l.norm() >= lit(NYQUIST_TAIL_GAIN) {
        hi *= lit(10.0);
        extensions += 1;
        if extensions > 30 {
            return Err(ControlError::NumericalRootFailure {
                method: StabilityMethod::NyquistSampling,
                residual: to_f64(at(hi).l.norm()),
            });
        }
    }

    let mut locus = Locus {
        winding_phase: T::zero(),
        min_return_difference: T::infinity(),
        neg_real_crossings: Vec::new(),
        unity_phase_margins: Vec::new(),
    };
    let first = at(T::zero());
    record_point(&mut locus, first);
    if first.l.im == T::zero() && first.l.re < T::zero() {
        locus.neg_real_crossings.push(first.l.norm());
    }

    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let last = from_usize::<T>(NYQUIST_POINTS - 1);
    let mut prev = first;
    let mut stack: Vec<(Sample<T>, usize)> = Vec::new();
    for i in 0..NYQUIST_POINTS {
        let t = from_usize::<T>(i) / last;
        let next = at((log_lo + (log_hi - log_lo) * t).exp());
        // Depth-first refinement keeps segments in increasing-ω order.
        stack.push((next, 0));
        while let Some(&(b, depth)) = stack.last() {
            if depth < NYQUIST_MAX_DEPTH && needs_split(prev, b) {
                let mid = at((prev.omega + b.omega) / lit(2.0));
                stack.pop();
                stack.push((b, depth + 1));
                stack.push((mid, depth + 1));
                continue;
            }
            stack.pop();
            record_segment(&mut locus, prev, b);
            record_point(&mut locus, b);
            prev = b;
        }
    }
    Ok(locus)
}

fn needs_split<T: Scalar>(a: Sample<T>, b: Sample<T>) -> bool {
    let one = Complex::new(T::one(), T::zero());
    let step = lit::<T>(NYQUIST_MAX_PHASE_STEP);
    if ((one + b.l) / (one + a.l)).arg().abs() > step {
        return true;
    }
    let big = lit::<T>(0.5);
    (a.l.norm() > big || b.l.norm() > big) && (b.l / a.l).arg().abs() > step
}

fn record_point<T: Scalar>(locus: &mut Locus<T>, s: Sample<T>) {
    let d = (Complex::new(T::one(), T::zero()) + s.l).norm();
    locus.min_return_difference = locus.min_return_difference.min(d);
}

fn record_segment<T: Scalar>(locus: &mut Locus<T>, a: Sample<T>, b: Sample<T>) {
    let one = Complex::new(T::one(), T::zero());
    locus.winding_phase += ((one + b.l) / (one + a.l)).arg();

    if a.l.im * b.l.im < T::zero() || (b.l.im == T::zero() && a.l.im != T::zero()) {
        let t = a.l.im / (a.l.im - b.l.im);
        let cross = a.l + (b.l - a.l) * t;
        if cross.re < T::zero() {
            locus.neg_real_crossings.push(cross.re.abs());
        }
    }

    let (ma, mb) = (a.l.norm(), b.l.norm());
    if (ma - T::one()) * (mb - T::one()) < T::zero() || (mb == T::one() && ma != T::one()) {
        let t = (T::one() - ma) / (mb - ma);
        let cross = a.l + (b.l - a.l) * t;
        locus
            .unity_phase_margins
            .push(wrap_degrees(cross.arg().to_degrees() + lit(180.0)));
    }
}

/// Maps an angle in degrees to `(−180°, 180°]`.
fn wrap_degrees<T: Scalar>(deg: T) -> T {
    let full = lit::<T>(360.0);
    let half = lit::<T>(180.0);
    let mut w = deg % full;
    if w > half {
        w -= full;
    } else if w <= -half {
        w += full;
    }
    w
}

/// Loop gain needed to push classical input noise below a fraction of the
/// feedback-limited quantum floor, in both dB conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopGainRequirement<T> {
    /// Required in-band `|L|`.
    pub magnitude: T,
    /// `20·log10|L|`.
    pub amplitude_db: T,
    /// `10·log10|L|`.
    pub power_db: T,
}

/// [`required_loop_gain_for`] an impedance-matched cavity with a perfect
/// detector, where `|L|² = V_in / residual`.
pub fn required_loop_gain<T: Scalar>(
    classical_noise_db: T,
    residual_fraction: T,
) -> Result<LoopGainRequirement<T>, ControlError> {
    let cavity = CavityParams::impedance_matched(T::one()).expect("unit cavity is valid");
    required_loop_gain_for(&cavity, &DetectorParams::ideal(), classical_noise_db, residual_fraction)
}

/// Flat in-band `|L|` such that the input noise term of `V_a^f` at DC,
/// `2κ_in V_in / (κ²|L|²)`, is at most `residual_fraction / (2ηκ_out)`.
///
/// `classical_noise_db` is `10·log10 V_in`.
pub fn required_loop_gain_for<T: Scalar>(
    cavity: &CavityParams<T>,
    det: &DetectorParams<T>,
    classical_noise_db: T,
    residual_fraction: T,
) -> Result<LoopGainRequirement<T>, ControlError> {
    if !(classical_noise_db >= T::zero()) || !classical_noise_db.is_finite() {
        return Err(ControlError::InvalidNoiseLevel(to_f64(classical_noise_db)));
    }
    if !(residual_fraction > T::zero() && residual_fraction <= T::one()) {
        return Err(ControlError::InvalidResidual(to_f64(residual_fraction)));
    }
    let v_in = lit::<T>(10.0).powf(classical_noise_db / lit(10.0));
    let kappa = cavity.kappa();
    let squared = lit::<T>(4.0) * det.eta() * cavity.kappa_in() * cavity.kappa_out() * v_in
        / (residual_fraction * kappa * kappa);
    let magnitude = squared.sqrt();
    Ok(LoopGainRequirement {
        magnitude,
        amplitude_db: power_db(squared),
        power_db: power_db(magnitude),
    })
}
