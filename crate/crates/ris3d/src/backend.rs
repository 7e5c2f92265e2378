//! Acquisition backends: one synchronous contract for the simulator, file
//! replay, and eventual hardware.
//!
//! The acquisition loop is set_pattern then sweep, beam by beam. Backends
//! enforce that ordering and keep a call log so the contract is assertable
//! from tests. Sweeps always return exactly K complex points.

use num_complex::Complex64;

use crate::error::{Result, RisError};
use crate::geometry::{RisArray, Scene};
use crate::roi::{mock_fmcw_detect, DetectorNoise, RadarDetection};
use crate::sim::{simulate_s21, SimOptions};
use crate::sweep::SweepConfig;
use crate::tensor::MeasurementTensor;

/// What a backend can do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackendCapabilities {
    pub can_detect: bool,
    pub can_set_pattern: bool,
    pub can_sweep: bool,
}

/// One logged backend invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendCall {
    Detect,
    SetPattern(usize),
    Sweep(usize),
}

/// Synchronous per-beam acquisition contract.
pub trait AcquisitionBackend {
    fn capabilities(&self) -> BackendCapabilities;

    /// Coarse (R, φ) target detections seeding the ROI.
    fn detect(&mut self) -> Result<Vec<RadarDetection>>;

    /// Program the surface for beam `beam`; `applied` is one phase state
    /// per element.
    fn set_pattern(&mut self, beam: usize, applied: &[f64]) -> Result<()>;

    /// Measure the K-point sweep for beam `beam`. Must follow
    /// `set_pattern(beam, ..)`.
    fn sweep(&mut self, beam: usize) -> Result<Vec<Complex64>>;

    /// Every call made so far, in order.
    fn call_log(&self) -> &[BackendCall];

    /// The prerecorded tensor, if this backend replays one.
    fn recorded(&self) -> Option<&MeasurementTensor> {
        None
    }
}

/// Physics-backed backend wrapping the forward simulator.
pub struct SimBackend {
    scene: Scene,
    array: RisArray,
    sweep: SweepConfig,
    opts: SimOptions,
    noise: DetectorNoise,
    seed: u64,
    current: Option<(usize, Vec<f64>)>,
    log: Vec<BackendCall>,
}

impl SimBackend {
    pub fn new(
        scene: Scene,
        array: RisArray,
        sweep: SweepConfig,
        opts: SimOptions,
        noise: DetectorNoise,
        seed: u64,
    ) -> Self {
        Self {
            scene,
            array,
            sweep,
            opts,
            noise,
            seed,
            current: None,
            log: Vec::new(),
        }
    }
}

impl AcquisitionBackend for SimBackend {
    fn capabilities(&self) -> BackendCapabilities {
        BackendCapabilities {
            can_detect: true,
            can_set_pattern: true,
            can_sweep: true,
        }
    }

    fn detect(&mut self) -> Result<Vec<RadarDetection>> {
        self.log.push(BackendCall::Detect);
        Ok(mock_fmcw_detect(&self.scene, self.noise, self.seed))
    }

    fn set_pattern(&mut self, beam: usize, applied: &[f64]) -> Result<()> {
        if applied.len() != self.array.num_elements() {
            return Err(RisError::backend(
                Some(beam),
                format!(
                    "pattern has {} states but the array has {} elements",
                    applied.len(),
                    self.array.num_elements()
                ),
            ));
        }
        self.log.push(BackendCall::SetPattern(beam));
        self.current = Some((beam, applied.to_vec()));
        Ok(())
    }

    fn sweep(&mut self, beam: usize) -> Result<Vec<Complex64>> {
        let Some((set_beam, applied)) = &self.current else {
            return Err(RisError::backend(
                Some(beam),
                "sweep requested before any pattern was set",
            ));
        };
        if *set_beam != beam {
            return Err(RisError::backend(
                Some(beam),
                format!("surface is programmed for beam {set_beam}"),
            ));
        }
        self.log.push(BackendCall::Sweep(beam));
        simulate_s21(
            &self.scene,
            &self.array,
            applied,
            &self.sweep,
            &self.opts,
            // Matches the batch simulator's per-beam seeding, so replaying
            // a recorded tensor is bit-exact against direct simulation.
            self.seed.wrapping_add(beam as u64),
        )
    }

    fn call_log(&self) -> &[BackendCall] {
        &self.log
    }
}

/// Backend replaying a previously recorded measurement tensor.
pub struct ReplayBackend {
    tensor: MeasurementTensor,
    current: Option<usize>,
    log: Vec<BackendCall>,
}

impl ReplayBackend {
    pub fn new(tensor: MeasurementTensor) -> Self {
        Self {
            tensor,
            current: None,
            log: Vec::new(),
        }
    }
}

impl AcquisitionBackend for ReplayBackend {
    fn capabilities(&self) -> BackendCapabilities {
        BackendCapabilities {
            can_detect: false,
            can_set_pattern: true,
            can_sweep: true,
        }
    }

    fn detect(&mut self) -> Result<Vec<RadarDetection>> {
        Err(RisError::backend(
            None,
            "replay backend has no detector; the recording fixes the beams",
        ))
    }

    fn set_pattern(&mut self, beam: usize, _applied: &[f64]) -> Result<()> {
        if beam >= self.tensor.num_beams() {
            return Err(RisError::backend(
                Some(beam),
                format!("recording holds only {} beams", self.tensor.num_beams()),
            ));
        }
        self.log.push(BackendCall::SetPattern(beam));
        self.current = Some(beam);
        Ok(())
    }

    fn sweep(&mut self, beam: usize) -> Result<Vec<Complex64>> {
        if self.current != Some(beam) {
            return Err(RisError::backend(
                Some(beam),
                "sweep does not match the last programmed beam",
            ));
        }
        self.log.push(BackendCall::Sweep(beam));
        Ok(self.tensor.row(beam).to_vec())
    }

    fn call_log(&self) -> &[BackendCall] {
        &self.log
    }

    fn recorded(&self) -> Option<&MeasurementTensor> {
        Some(&self.tensor)
    }
}
