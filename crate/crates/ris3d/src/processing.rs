//! Frequency sweeps to range profiles: windowing, zero padding, IFFT.
//!
//! The inverse transform is normalized by 1/fft_len, so without a window
//! Σ|profile|² = (1/fft_len)·Σ|S21|². Bin b maps to the one-way range
//! b·c/(2·fft_len·Δf). Zero-padding (default 4×K) refines peak localization
//! without changing the underlying c/2B resolution.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, RisError};
use crate::sweep::SweepConfig;
use crate::tensor::{MeasurementTensor, ProcessedTensor};

/// Default zero-padding factor applied by [`default_fft_len`].
pub const DEFAULT_PAD_FACTOR: usize = 4;

/// Window applied before the inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// Symmetric Hann (K−1 denominator).
    #[default]
    Hann,
    /// No window.
    Rectangular,
}

/// Symmetric Hann window: w[k] = 0.5·(1 − cos(2πk/(K−1))); [1] for K = 1.
pub fn hanning_window(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    (0..k)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / (k - 1) as f64).cos()))
        .collect()
}

/// Default padded transform length for a sweep.
pub fn default_fft_len(sweep: &SweepConfig) -> usize {
    sweep.points() * DEFAULT_PAD_FACTOR
}

/// Range profile of one sweep row: window, zero-pad to `fft_len`, IFFT.
pub fn range_profile(
    row: &[Complex64],
    sweep: &SweepConfig,
    fft_len: usize,
) -> Result<Vec<Complex64>> {
    range_profile_with(row, sweep, fft_len, Window::Hann)
}

/// Same as [`range_profile`] with an explicit window choice.
pub fn range_profile_with(
    row: &[Complex64],
    sweep: &SweepConfig,
    fft_len: usize,
    window: Window,
) -> Result<Vec<Complex64>> {
    let ifft = plan_ifft(row.len(), sweep, fft_len)?;
    let mut buf = windowed_padded(row, fft_len, window);
    run_ifft(&ifft, &mut buf);
    Ok(buf)
}

/// Apply [`range_profile`] to every beam, preserving beam metadata.
pub fn process_tensor(tensor: &MeasurementTensor, fft_len: usize) -> Result<ProcessedTensor> {
    process_tensor_with(tensor, fft_len, Window::Hann)
}

/// Same as [`process_tensor`] with an explicit window choice.
pub fn process_tensor_with(
    tensor: &MeasurementTensor,
    fft_len: usize,
    window: Window,
) -> Result<ProcessedTensor> {
    let k = tensor.sweep.points();
    let ifft = plan_ifft(k, &tensor.sweep, fft_len)?;
    let data: Vec<Complex64> = (0..tensor.num_beams())
        .into_par_iter()
        .map(|b| {
            let mut buf = windowed_padded(tensor.row(b), fft_len, window);
            run_ifft(&ifft, &mut buf);
            buf
        })
        .collect::<Vec<_>>()
        .concat();
    ProcessedTensor::new(tensor.sweep, fft_len, tensor.beams.clone(), data)
}

fn plan_ifft(row_len: usize, sweep: &SweepConfig, fft_len: usize) -> Result<Arc<dyn Fft<f64>>> {
    if row_len != sweep.points() {
        return Err(RisError::Processing(format!(
            "row length {row_len} does not match sweep points {}",
            sweep.points()
        )));
    }
    if fft_len < row_len {
        return Err(RisError::Processing(format!(
            "fft_len {fft_len} is shorter than the sweep ({row_len} points)"
        )));
    }
    Ok(FftPlanner::new().plan_fft_inverse(fft_len))
}

fn windowed_padded(row: &[Complex64], fft_len: usize, window: Window) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
    match window {
        Window::Hann => {
            for ((out, v), w) in buf.iter_mut().zip(row).zip(hanning_window(row.len())) {
                *out = v * w;
            }
        }
        Window::Rectangular => buf[..row.len()].copy_from_slice(row),
    }
    buf
}

fn run_ifft(ifft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
    ifft.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Index of the largest-magnitude bin.
pub fn argmax_bin(profile: &[Complex64]) -> usize {
    profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}
