//! Stepped-frequency sweep plans.

use crate::error::{Result, RisError};
use crate::SPEED_OF_LIGHT;

/// A stepped-frequency sweep: K CW tones starting at `f_start_hz`, spaced
/// `step_hz`. Derived quantities are always recomputed from these three.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    f_start_hz: f64,
    step_hz: f64,
    points: usize,
}

impl SweepConfig {
    pub fn new(f_start_hz: f64, step_hz: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(RisError::Config(format!(
                "sweep needs at least 2 points, got {points}"
            )));
        }
        if step_hz <= 0.0 || !step_hz.is_finite() {
            return Err(RisError::Config(format!(
                "frequency step must be positive, got {step_hz}"
            )));
        }
        if f_start_hz <= 0.0 || !f_start_hz.is_finite() {
            return Err(RisError::Config(format!(
                "start frequency must be positive, got {f_start_hz}"
            )));
        }
        Ok(Self {
            f_start_hz,
            step_hz,
            points,
        })
    }

    /// Sweep covering [f_start, f_stop] with `points` tones.
    pub fn from_band(f_start_hz: f64, f_stop_hz: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(RisError::Config(format!(
                "sweep needs at least 2 points, got {points}"
            )));
        }
        if f_stop_hz <= f_start_hz {
            return Err(RisError::Config(format!(
                "sweep stop {f_stop_hz} must exceed start {f_start_hz}"
            )));
        }
        Self::new(
            f_start_hz,
            (f_stop_hz - f_start_hz) / (points - 1) as f64,
            points,
        )
    }

    pub fn f_start_hz(&self) -> f64 {
        self.f_start_hz
    }

    pub fn step_hz(&self) -> f64 {
        self.step_hz
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Total bandwidth B = Δf·(K−1).
    pub fn bandwidth_hz(&self) -> f64 {
        self.step_hz * (self.points - 1) as f64
    }

    pub fn center_hz(&self) -> f64 {
        self.f_start_hz + self.bandwidth_hz() / 2.0
    }

    /// Monostatic range resolution ΔR = c/(2B).
    pub fn range_resolution_m(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth_hz())
    }

    /// Maximum observable distance K·ΔR covered by the K range bins.
    pub fn max_range_m(&self) -> f64 {
        self.points as f64 * self.range_resolution_m()
    }

    /// Alias-free (unambiguous) range c/(2Δf) of the sampled spectrum.
    pub fn unambiguous_range_m(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.step_hz)
    }

    /// k-th tone frequency, k in 0..K.
    pub fn frequency_hz(&self, k: usize) -> f64 {
        self.f_start_hz + k as f64 * self.step_hz
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|k| self.frequency_hz(k))
    }
}
