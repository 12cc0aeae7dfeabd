//! Welch power-spectral-density estimator.

use std::f64::consts::PI;

use num_complex::Complex;
use rustfft::{FftNum, FftPlanner};

use super::{Channel, OracleError, SimulationConfig, TimeSeries};
use crate::scalar::{from_usize, lit, Scalar};
use crate::spectra::FrequencyGrid;

/// Averaged periodogram on the frequencies where it is unbiased enough to
/// compare with a closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate<T> {
    grid: FrequencyGrid<T>,
    values: Vec<T>,
    segments: usize,
}

impl<T: Scalar> PsdEstimate<T> {
    /// Panics if `values` and `grid` differ in length.
    pub fn new(grid: FrequencyGrid<T>, values: Vec<T>, segments: usize) -> Self {
        assert_eq!(grid.len(), values.len(), "grid and values differ in length");
        Self {
            grid,
            values,
            segments,
        }
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Number of periodograms averaged.
    pub fn segments(&self) -> usize {
        self.segments
    }
}

/// Bins `k` with `4 ≤ k` and `ω_k ≤ 0.4 π/dt`: the lowest bins carry the
/// window's leakage from DC and the highest sit close to Nyquist.
fn bin_range(segment: usize, dt: f64) -> (usize, usize) {
    let hi = ((0.4 * PI / dt) / (2.0 * PI / (segment as f64 * dt))).floor() as usize;
    (4, hi.min(segment / 2))
}

pub(super) fn output_grid<T: Scalar>(
    segment: usize,
    dt: T,
) -> Result<FrequencyGrid<T>, OracleError> {
    let (lo, hi) = bin_range(segment, dt.to_f64().unwrap_or(f64::NAN));
    if hi < lo {
        return Err(OracleError::InsufficientData {
            needed: 8 * lo,
            available: segment,
        });
    }
    let step = lit::<T>(2.0 * PI) / (from_usize::<T>(segment) * dt);
    Ok(FrequencyGrid::new((lo..=hi).map(|k| step * from_usize(k)).collect())?)
}

/// Welch estimate of one channel, with the segment length and overlap of
/// `cfg`.
///
/// Each segment has its mean removed and a Hann window applied; the
/// periodogram `dt |X_k|² / Σw²` is normalized so unit-density white noise
/// estimates to 1.
pub fn estimate_psd<T: Scalar + FftNum>(
    ts: &TimeSeries<T>,
    channel: Channel,
    cfg: &SimulationConfig<T>,
) -> Result<PsdEstimate<T>, OracleError> {
    let samples = ts
        .channel(channel)
        .ok_or(OracleError::MissingChannel(channel))?;
    welch(samples, ts.dt(), cfg.welch_segment, cfg.welch_overlap)
}

pub(super) fn welch<T: Scalar + FftNum>(
    samples: &[T],
    dt: T,
    segment: usize,
    overlap: T,
) -> Result<PsdEstimate<T>, OracleError> {
    if segment < 8 || samples.len() < segment {
        return Err(OracleError::InsufficientData {
            needed: segment.max(8),
            available: samples.len(),
        });
    }
    let grid = output_grid(segment, dt)?;
    let (lo, hi) = bin_range(segment, dt.to_f64().unwrap_or(f64::NAN));
    let hop = (from_usize::<T>(segment) * (T::one() - overlap))
        .round()
        .to_usize()
        .unwrap_or(segment)
        .max(1);

    let two_pi = lit::<T>(2.0 * PI);
    let n = from_usize::<T>(segment);
    let window: Vec<T> = (0..segment)
        .map(|j| lit::<T>(0.5) * (T::one() - (two_pi * from_usize(j) / n).cos()))
        .collect();
    let window_power: T = window.iter().fold(T::zero(), |acc, &w| acc + w * w);

    let fft = FftPlanner::<T>::new().plan_fft_forward(segment);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); segment];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    let mut acc = vec![T::zero(); hi - lo + 1];
    let mut count = 0usize;
    let mut start = 0;
    while start + segment <= samples.len() {
        let chunk = &samples[start..start + segment];
        let mean = chunk.iter().fold(T::zero(), |a, &x| a + x) / n;
        for ((b, &x), &w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex::new((x - mean) * w, T::zero());
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (a, b) in acc.iter_mut().zip(&buf[lo..=hi]) {
            *a += b.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    let norm = dt / (window_power * from_usize(count));
    let values = acc.into_iter().map(|a| a * norm).collect();
    Ok(PsdEstimate::new(grid, values, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn white(n: usize, dt: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal) / dt.sqrt())
            .collect()
    }

    #[test]
    fn unit_white_noise_estimates_to_one() {
        let (seg, dt) = (1024, 0.1);
        let x = white(seg * 200, dt, 3);
        let est = welch(&x, dt, seg, 0.0).unwrap();
        assert_eq!(est.segments(), 200);
        let mean = est.values().iter().sum::<f64>() / est.values().len() as f64;
        assert!((mean - 1.0).abs() < 0.015, "mean {mean}");
    }

    #[test]
    fn sinusoid_peaks_at_its_frequency() {
        let (seg, dt) = (2048, 0.01);
        let w0 = 2.0 * PI / (seg as f64 * dt) * 100.0;
        let x: Vec<f64> = (0..seg * 8).map(|i| (w0 * i as f64 * dt).sin()).collect();
        let est = welch(&x, dt, seg, 0.5).unwrap();
        let (i_max, _) = est
            .values()
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |m, (i, &v)| if v > m.1 { (i, v) } else { m });
        assert!((est.grid().omegas()[i_max] - w0).abs() < 1e-9);
    }

    #[test]
    fn grid_bounds() {
        let (seg, dt) = (1000, 0.02);
        let g = output_grid::<f64>(seg, dt).unwrap();
        let bin = 2.0 * PI / (seg as f64 * dt);
        assert!((g.min() - 4.0 * bin).abs() < 1e-12);
        assert!(g.max() <= 0.4 * PI / dt);
        assert!(g.max() + bin > 0.4 * PI / dt);
    }

    #[test]
    fn short_record_is_rejected() {
        assert!(matches!(
            welch(&[0.0; 100], 1.0, 128, 0.5),
            Err(OracleError::InsufficientData { .. })
        ));
    }
}
