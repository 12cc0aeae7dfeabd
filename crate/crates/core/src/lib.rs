//! Intensity-noise propagation in a driven optical cavity with
//! electro-optic intensity feedback.
//!
//! * [`model`]: cavity, drive, detector and mirror-mechanics parameters.
//! * [`spectra`]: closed-form amplitude and reflected-phase noise budgets,
//!   open and closed loop.
//! * [`control`]: loop gain, stability and required-gain analysis.
//! * [`oracle`]: time-domain stochastic integration of the same linear
//!   system, with a Welch estimator to check the closed forms.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod filter;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod scalar;
pub mod spectra;

pub use num_complex::Complex;
pub use scalar::Scalar;

pub type CavityParams = model::CavityParams<f64>;
pub type DriveField = model::DriveField<f64>;
pub type DetectorParams = model::DetectorParams<f64>;
pub type SteadyState = model::SteadyState<f64>;
pub type Spectrum = model::Spectrum<f64>;
pub type MechanicalResponse = model::MechanicalResponse<f64>;
pub type LoopFilter = filter::LoopFilter<f64>;
pub type FrequencyGrid = spectra::FrequencyGrid<f64>;
pub type NoiseBudget = spectra::NoiseBudget<f64>;
pub type StabilityReport = control::StabilityReport<f64>;
pub type SimulationConfig = oracle::SimulationConfig<f64>;
pub type TimeSeries = oracle::TimeSeries<f64>;

pub type CavityParams32 = model::CavityParams<f32>;
pub type DriveField32 = model::DriveField<f32>;
pub type LoopFilter32 = filter::LoopFilter<f32>;
pub type FrequencyGrid32 = spectra::FrequencyGrid<f32>;
pub type NoiseBudget32 = spectra::NoiseBudget<f32>;
