//! Measurement tensors and the shared binary container.
//!
//! Raw sweeps and processed range profiles share one self-describing binary
//! layout: a `RIST` magic, version, a kind tag, sweep parameters, per-beam
//! (φ, θ, focus R) metadata, then interleaved little-endian f64 (re, im)
//! pairs, beam-major. Round trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Result, RisError};
use crate::sweep::SweepConfig;

pub(crate) const MAGIC: &[u8; 4] = b"RIST";
pub(crate) const VERSION: u16 = 1;

/// Container payload kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    RawSweep = 1,
    RangeProfiles = 2,
    VoxelGrid = 3,
}

/// Per-beam acquisition metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamMeta {
    pub azimuth_deg: f64,
    pub zenith_deg: f64,
    pub focus_r_m: f64,
}

/// Raw frequency-domain sweeps, one row of K complex points per beam.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementTensor {
    pub sweep: SweepConfig,
    pub beams: Vec<BeamMeta>,
    /// beams × K, beam-major.
    pub data: Vec<Complex64>,
}

impl MeasurementTensor {
    pub fn new(sweep: SweepConfig, beams: Vec<BeamMeta>, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != beams.len() * sweep.points() {
            return Err(RisError::Format(format!(
                "tensor data length {} does not match {} beams x {} points",
                data.len(),
                beams.len(),
                sweep.points()
            )));
        }
        Ok(Self { sweep, beams, data })
    }

    pub fn num_beams(&self) -> usize {
        self.beams.len()
    }

    pub fn row(&self, beam: usize) -> &[Complex64] {
        let k = self.sweep.points();
        &self.data[beam * k..(beam + 1) * k]
    }

    pub fn write_to(&self, w: impl Write) -> Result<()> {
        write_complex_container(
            w,
            TensorKind::RawSweep,
            &self.sweep,
            self.sweep.points(),
            &self.beams,
            &self.data,
        )
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let (kind, sweep, row_len, beams, data) = read_complex_container(r)?;
        if kind != TensorKind::RawSweep {
            return Err(RisError::Format("expected a raw-sweep tensor".into()));
        }
        if row_len != sweep.points() {
            return Err(RisError::Format(
                "raw tensor row length disagrees with sweep points".into(),
            ));
        }
        Self::new(sweep, beams, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

/// Range-domain profiles, one row of `fft_len` complex bins per beam.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedTensor {
    pub sweep: SweepConfig,
    pub fft_len: usize,
    pub beams: Vec<BeamMeta>,
    /// beams × fft_len, beam-major.
    pub data: Vec<Complex64>,
}

impl ProcessedTensor {
    pub fn new(
        sweep: SweepConfig,
        fft_len: usize,
        beams: Vec<BeamMeta>,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != beams.len() * fft_len {
            return Err(RisError::Format(format!(
                "profile data length {} does not match {} beams x fft_len {}",
                data.len(),
                beams.len(),
                fft_len
            )));
        }
        Ok(Self {
            sweep,
            fft_len,
            beams,
            data,
        })
    }

    pub fn num_beams(&self) -> usize {
        self.beams.len()
    }

    pub fn row(&self, beam: usize) -> &[Complex64] {
        &self.data[beam * self.fft_len..(beam + 1) * self.fft_len]
    }

    /// One-way range of bin b: b·c/(2·fft_len·Δf).
    pub fn bin_range_m(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_spacing_m()
    }

    pub fn bin_spacing_m(&self) -> f64 {
        crate::SPEED_OF_LIGHT / (2.0 * self.fft_len as f64 * self.sweep.step_hz())
    }

    pub fn write_to(&self, w: impl Write) -> Result<()> {
        write_complex_container(
            w,
            TensorKind::RangeProfiles,
            &self.sweep,
            self.fft_len,
            &self.beams,
            &self.data,
        )
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let (kind, sweep, row_len, beams, data) = read_complex_container(r)?;
        if kind != TensorKind::RangeProfiles {
            return Err(RisError::Format("expected a range-profile tensor".into()));
        }
        Self::new(sweep, row_len, beams, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

// ── low-level container primitives ─────────────────────────────────────

pub(crate) fn write_header(mut w: impl Write, kind: TensorKind) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(kind as u16).to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_header(mut r: impl Read) -> Result<TensorKind> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(RisError::Format("bad magic, not a ris3d container".into()));
    }
    let version = read_u16(&mut r)?;
    if version != VERSION {
        return Err(RisError::Format(format!(
            "unsupported container version {version}"
        )));
    }
    match read_u16(&mut r)? {
        1 => Ok(TensorKind::RawSweep),
        2 => Ok(TensorKind::RangeProfiles),
        3 => Ok(TensorKind::VoxelGrid),
        k => Err(RisError::Format(format!("unknown container kind {k}"))),
    }
}

pub(crate) fn write_f64(mut w: impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_u64(mut w: impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_f64(mut r: impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub(crate) fn read_u64(mut r: impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_u16(mut r: impl Read) -> Result<u16> {
    let mut buf = [0u8; 2];
    r.read_exact(&mut buf)?;
    Ok(u16::from_le_bytes(buf))
}

fn write_complex_container(
    mut w: impl Write,
    kind: TensorKind,
    sweep: &SweepConfig,
    row_len: usize,
    beams: &[BeamMeta],
    data: &[Complex64],
) -> Result<()> {
    write_header(&mut w, kind)?;
    write_f64(&mut w, sweep.f_start_hz())?;
    write_f64(&mut w, sweep.step_hz())?;
    write_u64(&mut w, sweep.points() as u64)?;
    write_u64(&mut w, beams.len() as u64)?;
    write_u64(&mut w, row_len as u64)?;
    // Reserved per-run dwell/settle time; the simulator does not model it.
    write_f64(&mut w, 0.0)?;
    for b in beams {
        write_f64(&mut w, b.azimuth_deg)?;
        write_f64(&mut w, b.zenith_deg)?;
        write_f64(&mut w, b.focus_r_m)?;
    }
    for c in data {
        write_f64(&mut w, c.re)?;
        write_f64(&mut w, c.im)?;
    }
    Ok(())
}

type ComplexContainer = (TensorKind, SweepConfig, usize, Vec<BeamMeta>, Vec<Complex64>);

fn read_complex_container(mut r: impl Read) -> Result<ComplexContainer> {
    let kind = read_header(&mut r)?;
    if kind == TensorKind::VoxelGrid {
        return Err(RisError::Format(
            "container holds a voxel grid, not beam data".into(),
        ));
    }
    let f_start = read_f64(&mut r)?;
    let step = read_f64(&mut r)?;
    let points = read_u64(&mut r)? as usize;
    let beam_count = read_u64(&mut r)? as usize;
    let row_len = read_u64(&mut r)? as usize;
    let _dwell_s = read_f64(&mut r)?;
    let sweep = SweepConfig::new(f_start, step, points)?;
    let mut beams = Vec::with_capacity(beam_count);
    for _ in 0..beam_count {
        beams.push(BeamMeta {
            azimuth_deg: read_f64(&mut r)?,
            zenith_deg: read_f64(&mut r)?,
            focus_r_m: read_f64(&mut r)?,
        });
    }
    let mut data = Vec::with_capacity(beam_count * row_len);
    for _ in 0..beam_count * row_len {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        data.push(Complex64::new(re, im));
    }
    Ok((kind, sweep, row_len, beams, data))
}
