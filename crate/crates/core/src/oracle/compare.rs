//! Estimated-versus-analytic spectrum comparison.

use rustfft::FftNum;

use super::welch::{welch, PsdEstimate};
use super::{Channel, OracleError, SimulationConfig, TimeSeries};
use crate::scalar::{from_usize, Scalar};
use crate::spectra::NoiseBudget;

/// Relative deviation of an estimated spectrum from a closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport<T> {
    pub max_relative_deviation: T,
    /// Frequency at which the largest deviation occurs.
    pub max_deviation_omega: T,
    pub rms_deviation: T,
    /// Lowest and highest compared frequency.
    pub band: (T, T),
    pub bins: usize,
    pub tolerance: T,
    /// `rms_deviation ≤ tolerance`.
    pub passed: bool,
}

/// Compares `estimate` with `budget.total`, linearly interpolated onto the
/// estimator grid, over the bins inside `band` (all bins if `None`) that
/// the budget grid also covers.
pub fn compare_psd<T: Scalar>(
    estimate: &PsdEstimate<T>,
    budget: &NoiseBudget<T>,
    band: Option<(T, T)>,
    tolerance: T,
) -> Result<ComparisonReport<T>, OracleError> {
    let pairs = band_pairs(estimate, budget, band);
    if pairs.is_empty() {
        return Err(OracleError::NoBandOverlap);
    }
    let mut max_dev = T::zero();
    let mut max_omega = pairs[0].0;
    let mut sum_sq = T::zero();
    for &(w, est, want) in &pairs {
        let dev = ((est - want) / want).abs();
        if dev > max_dev {
            max_dev = dev;
            max_omega = w;
        }
        sum_sq += dev * dev;
    }
    let rms = (sum_sq / from_usize(pairs.len())).sqrt();
    Ok(ComparisonReport {
        max_relative_deviation: max_dev,
        max_deviation_omega: max_omega,
        rms_deviation: rms,
        band: (pairs[0].0, pairs[pairs.len() - 1].0),
        bins: pairs.len(),
        tolerance,
        passed: rms <= tolerance,
    })
}

/// [`estimate_psd`](super::estimate_psd) followed by [`compare_psd`].
pub fn compare_to_analytic<T: Scalar + FftNum>(
    ts: &TimeSeries<T>,
    channel: Channel,
    budget: &NoiseBudget<T>,
    cfg: &SimulationConfig<T>,
    band: Option<(T, T)>,
    tolerance: T,
) -> Result<ComparisonReport<T>, OracleError> {
    let estimate = super::estimate_psd(ts, channel, cfg)?;
    compare_psd(&estimate, budget, band, tolerance)
}

/// Band-averaged ratio of estimated to analytic spectrum, with a
/// batch-means standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRatio<T> {
    pub mean: T,
    pub std_error: T,
    pub batches: usize,
    pub bins: usize,
}

/// Splits the channel into `batches` contiguous pieces, forms the mean of
/// `estimate / analytic` over the in-band bins of each piece's Welch
/// estimate, and reports the mean and standard error across pieces.
pub fn band_ratio<T: Scalar + FftNum>(
    ts: &TimeSeries<T>,
    channel: Channel,
    budget: &NoiseBudget<T>,
    cfg: &SimulationConfig<T>,
    band: (T, T),
    batches: usize,
) -> Result<BandRatio<T>, OracleError> {
    let samples = ts
        .channel(channel)
        .ok_or(OracleError::MissingChannel(channel))?;
    let batches = batches.max(2);
    let len = samples.len() / batches;
    let mut ratios = Vec::with_capacity(batches);
    let mut bins = 0;
    for chunk in samples.chunks_exact(len).take(batches) {
        let est = welch(chunk, ts.dt(), cfg.welch_segment, cfg.welch_overlap)?;
        let pairs = band_pairs(&est, budget, Some(band));
        if pairs.is_empty() {
            return Err(OracleError::NoBandOverlap);
        }
        bins = pairs.len();
        let sum = pairs.iter().fold(T::zero(), |a, &(_, e, w)| a + e / w);
        ratios.push(sum / from_usize(pairs.len()));
    }
    let nb = from_usize::<T>(ratios.len());
    let mean = ratios.iter().fold(T::zero(), |a, &r| a + r) / nb;
    let var = ratios
        .iter()
        .fold(T::zero(), |a, &r| a + (r - mean) * (r - mean))
        / (nb - T::one());
    Ok(BandRatio {
        mean,
        std_error: (var / nb).sqrt(),
        batches: ratios.len(),
        bins,
    })
}

/// `(ω, estimate, analytic)` for every estimator bin inside `band` that the
/// budget's grid covers.
fn band_pairs<T: Scalar>(
    estimate: &PsdEstimate<T>,
    budget: &NoiseBudget<T>,
    band: Option<(T, T)>,
) -> Vec<(T, T, T)> {
    estimate
        .grid()
        .omegas()
        .iter()
        .zip(estimate.values())
        .filter(|(&w, _)| band.is_none_or(|(lo, hi)| w >= lo && w <= hi))
        .filter_map(|(&w, &e)| budget.total_at(w).map(|a| (w, e, a)))
        .collect()
}
