//! From beam-indexed range profiles to images: 2D max-projection maps,
//! distance-loss compensation, nearest-neighbor voxelization, separable 3D
//! Gaussian smoothing and dB thresholding.
//!
//! Each (beam, bin) inside the range gate becomes a Cartesian sample along
//! the beam direction; a voxel takes the compensated magnitude of its
//! nearest sample unless that sample is farther than the cutoff δ, in which
//! case the voxel stays null.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Result, RisError};
use crate::geometry::{sph_to_cart, CartesianPoint, SphericalPoint};
use crate::spatial::KdTree;
use crate::tensor::{self, ProcessedTensor, TensorKind};

/// Reference range of the amplitude-domain 1/R⁴ compensation.
pub const COMPENSATION_REF_M: f64 = 1.0;

/// Azimuth-elevation max-projection map of one ROI.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap2D {
    pub azimuth_deg: Vec<f64>,
    pub zenith_deg: Vec<f64>,
    /// zenith-major: values[t * azimuth.len() + p].
    pub values: Vec<f64>,
    /// Range gate [R_min, R_max] the projection used, scene meters.
    pub range_window: (f64, f64),
}

impl IntensityMap2D {
    pub fn value(&self, phi_idx: usize, theta_idx: usize) -> f64 {
        self.values[theta_idx * self.azimuth_deg.len() + phi_idx]
    }

    /// (φ, θ) of the strongest cell.
    pub fn argmax(&self) -> (f64, f64) {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let nphi = self.azimuth_deg.len();
        (self.azimuth_deg[i % nphi], self.zenith_deg[i / nphi])
    }

    /// Plain-text matrix with degree axis headers, plot-ready.
    pub fn write_text(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "# ris3d 2d intensity map")?;
        writeln!(
            w,
            "# range_window_m {} {}",
            self.range_window.0, self.range_window.1
        )?;
        write!(w, "phi_deg")?;
        for p in &self.azimuth_deg {
            write!(w, " {p}")?;
        }
        writeln!(w)?;
        for (t, theta) in self.zenith_deg.iter().enumerate() {
            write!(w, "{theta}")?;
            for p in 0..self.azimuth_deg.len() {
                write!(w, " {:e}", self.value(p, t))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Max |s| over the bins whose scene range falls in [r_min, r_max].
///
/// `range_offset_m` is the fixed antenna-to-array standoff subtracted from
/// the raw bin range to get scene (array-to-target) range. Requires the
/// tensor's beams to form a regular (φ, θ) grid.
pub fn project_2d(
    t: &ProcessedTensor,
    r_min: f64,
    r_max: f64,
    range_offset_m: f64,
) -> Result<IntensityMap2D> {
    project_2d_on(t, 0..t.num_beams(), r_min, r_max, range_offset_m)
}

/// [`project_2d`] restricted to a contiguous run of beams (one ROI).
pub fn project_2d_on(
    t: &ProcessedTensor,
    beams: Range<usize>,
    r_min: f64,
    r_max: f64,
    range_offset_m: f64,
) -> Result<IntensityMap2D> {
    if r_min >= r_max {
        return Err(RisError::Processing(format!(
            "empty range window [{r_min}, {r_max}]"
        )));
    }
    let bins = bin_window(t, r_min, r_max, range_offset_m)?;
    let mut azimuth: Vec<f64> = t.beams[beams.clone()].iter().map(|b| b.azimuth_deg).collect();
    let mut zenith: Vec<f64> = t.beams[beams.clone()].iter().map(|b| b.zenith_deg).collect();
    azimuth.sort_by(f64::total_cmp);
    azimuth.dedup();
    zenith.sort_by(f64::total_cmp);
    zenith.dedup();
    if azimuth.len() * zenith.len() != beams.len() {
        return Err(RisError::Processing(format!(
            "beams {beams:?} do not form a regular grid ({} azimuths x {} zeniths)",
            azimuth.len(),
            zenith.len()
        )));
    }
    let mut values = vec![0.0; beams.len()];
    for beam in beams.clone() {
        let meta = &t.beams[beam];
        let p = azimuth
            .iter()
            .position(|&a| a == meta.azimuth_deg)
            .expect("azimuth in axis");
        let ti = zenith
            .iter()
            .position(|&a| a == meta.zenith_deg)
            .expect("zenith in axis");
        let row = t.row(beam);
        let peak = row[bins.clone()]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        values[ti * azimuth.len() + p] = peak;
    }
    Ok(IntensityMap2D {
        azimuth_deg: azimuth,
        zenith_deg: zenith,
        values,
        range_window: (r_min, r_max),
    })
}

/// Bin indices whose scene range lies in [r_min, r_max].
fn bin_window(
    t: &ProcessedTensor,
    r_min: f64,
    r_max: f64,
    range_offset_m: f64,
) -> Result<Range<usize>> {
    let spacing = t.bin_spacing_m();
    let lo = ((r_min + range_offset_m) / spacing).ceil().max(0.0) as usize;
    let hi = (((r_max + range_offset_m) / spacing).floor() as usize + 1).min(t.fft_len);
    if lo >= hi {
        return Err(RisError::Processing(format!(
            "range window [{r_min}, {r_max}] m contains no bins (spacing {spacing} m)"
        )));
    }
    Ok(lo..hi)
}

/// Amplitude-domain distance-loss compensation: magnitude · (R/R_ref)².
///
/// Squaring the amplitude ratio is the R⁴ power compensation of a
/// monostatic two-hop path.
pub fn compensate(magnitude: f64, r_m: f64, r_ref_m: f64) -> f64 {
    magnitude * (r_m / r_ref_m).powi(2)
}

/// One compensated range sample mapped to Cartesian space.
#[derive(Debug, Clone, Copy)]
pub struct SamplePoint {
    pub position: CartesianPoint,
    pub magnitude: f64,
    pub beam: usize,
    pub bin: usize,
}

/// Expand every in-window (beam, bin) into a Cartesian sample.
///
/// The window is per beam: focus_R ± `range_pad_m`. Samples are ordered by
/// (beam, bin), which is also the nearest-neighbor tie-break order.
pub fn samples_from_profiles(
    t: &ProcessedTensor,
    range_pad_m: f64,
    range_offset_m: f64,
    compensation: bool,
) -> Vec<SamplePoint> {
    let mut out = Vec::new();
    for beam in 0..t.num_beams() {
        let meta = &t.beams[beam];
        let window = (
            (meta.focus_r_m - range_pad_m).max(0.0),
            meta.focus_r_m + range_pad_m,
        );
        collect_beam_samples(t, beam, window, range_offset_m, compensation, &mut out);
    }
    out
}

/// Same expansion with one fixed scene-range window for all beams.
pub fn samples_in_window(
    t: &ProcessedTensor,
    window: (f64, f64),
    range_offset_m: f64,
    compensation: bool,
) -> Vec<SamplePoint> {
    let mut out = Vec::new();
    for beam in 0..t.num_beams() {
        collect_beam_samples(t, beam, window, range_offset_m, compensation, &mut out);
    }
    out
}

fn collect_beam_samples(
    t: &ProcessedTensor,
    beam: usize,
    window: (f64, f64),
    range_offset_m: f64,
    compensation: bool,
    out: &mut Vec<SamplePoint>,
) {
    let Ok(bins) = bin_window(t, window.0, window.1, range_offset_m) else {
        return;
    };
    let meta = &t.beams[beam];
    let row = t.row(beam);
    for bin in bins {
        let r_scene = t.bin_range_m(bin) - range_offset_m;
        if r_scene <= 0.0 {
            continue;
        }
        let raw = row[bin].norm();
        let magnitude = if compensation {
            compensate(raw, r_scene, COMPENSATION_REF_M)
        } else {
            raw
        };
        out.push(SamplePoint {
            position: sph_to_cart(SphericalPoint::new(
                r_scene,
                meta.azimuth_deg,
                meta.zenith_deg,
            )),
            magnitude,
            beam,
            bin,
        });
    }
}

/// Cartesian voxel lattice: `dims` voxels of edge `voxel_size_m` starting at
/// `origin` (center of voxel (0,0,0)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelGridSpec {
    pub origin: CartesianPoint,
    pub voxel_size_m: f64,
    pub dims: (usize, usize, usize),
}

impl VoxelGridSpec {
    /// Bounding box of `samples` padded by `pad_voxels` on every side.
    pub fn bounding(samples: &[SamplePoint], voxel_size_m: f64, pad_voxels: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(RisError::Processing(
                "cannot bound an empty sample set".into(),
            ));
        }
        if voxel_size_m <= 0.0 {
            return Err(RisError::Processing(format!(
                "voxel size must be positive, got {voxel_size_m}"
            )));
        }
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for s in samples {
            for (i, v) in [s.position.x, s.position.y, s.position.z].into_iter().enumerate() {
                min[i] = min[i].min(v);
                max[i] = max[i].max(v);
            }
        }
        let pad = pad_voxels as f64 * voxel_size_m;
        let dims = |lo: f64, hi: f64| ((hi - lo + 2.0 * pad) / voxel_size_m).ceil() as usize + 1;
        Ok(Self {
            origin: CartesianPoint::new(min[0] - pad, min[1] - pad, min[2] - pad),
            voxel_size_m,
            dims: (
                dims(min[0], max[0]),
                dims(min[1], max[1]),
                dims(min[2], max[2]),
            ),
        })
    }

    pub fn num_voxels(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    /// Flat index, x fastest.
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.dims.1 + iy) * self.dims.0 + ix
    }

    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let ix = index % self.dims.0;
        let iy = (index / self.dims.0) % self.dims.1;
        let iz = index / (self.dims.0 * self.dims.1);
        (ix, iy, iz)
    }

    pub fn center(&self, ix: usize, iy: usize, iz: usize) -> CartesianPoint {
        CartesianPoint::new(
            self.origin.x + ix as f64 * self.voxel_size_m,
            self.origin.y + iy as f64 * self.voxel_size_m,
            self.origin.z + iz as f64 * self.voxel_size_m,
        )
    }
}

/// Scalar intensity volume, optionally with its filtered counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub spec: VoxelGridSpec,
    pub values: Vec<f64>,
    pub filtered: Option<Vec<f64>>,
}

/// Which field of a [`VoxelGrid`] an export refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Raw,
    Filtered,
}

impl VoxelGrid {
    pub fn empty(voxel_size_m: f64) -> Self {
        Self {
            spec: VoxelGridSpec {
                origin: CartesianPoint::ORIGIN,
                voxel_size_m,
                dims: (0, 0, 0),
            },
            values: Vec::new(),
            filtered: None,
        }
    }

    pub fn field(&self, which: Field) -> &[f64] {
        match which {
            Field::Raw => &self.values,
            Field::Filtered => self.filtered.as_deref().unwrap_or(&[]),
        }
    }

    /// Intensity-weighted centroid of the chosen field, `None` if all zero.
    pub fn weighted_centroid(&self, which: Field) -> Option<CartesianPoint> {
        let values = self.field(which);
        let mut acc = [0.0; 3];
        let mut total = 0.0;
        for (i, &v) in values.iter().enumerate() {
            if v > 0.0 {
                let (ix, iy, iz) = self.spec.coords(i);
                let c = self.spec.center(ix, iy, iz);
                acc[0] += v * c.x;
                acc[1] += v * c.y;
                acc[2] += v * c.z;
                total += v;
            }
        }
        (total > 0.0).then(|| CartesianPoint::new(acc[0] / total, acc[1] / total, acc[2] / total))
    }

    /// Sparse text export: header plus `x y z value` per nonzero voxel.
    pub fn write_sparse_text(&self, mut w: impl Write, which: Field) -> Result<()> {
        writeln!(w, "# ris3d voxel grid ({})", match which {
            Field::Raw => "raw",
            Field::Filtered => "filtered",
        })?;
        writeln!(
            w,
            "origin {} {} {}",
            self.spec.origin.x, self.spec.origin.y, self.spec.origin.z
        )?;
        writeln!(w, "voxel_size_m {}", self.spec.voxel_size_m)?;
        writeln!(
            w,
            "dims {} {} {}",
            self.spec.dims.0, self.spec.dims.1, self.spec.dims.2
        )?;
        for (i, &v) in self.field(which).iter().enumerate() {
            if v > 0.0 {
                let (ix, iy, iz) = self.spec.coords(i);
                let c = self.spec.center(ix, iy, iz);
                writeln!(w, "{} {} {} {:e}", c.x, c.y, c.z, v)?;
            }
        }
        Ok(())
    }

    /// Dense binary export sharing the tensor container framing.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        tensor::write_header(&mut w, TensorKind::VoxelGrid)?;
        tensor::write_f64(&mut w, self.spec.origin.x)?;
        tensor::write_f64(&mut w, self.spec.origin.y)?;
        tensor::write_f64(&mut w, self.spec.origin.z)?;
        tensor::write_f64(&mut w, self.spec.voxel_size_m)?;
        tensor::write_u64(&mut w, self.spec.dims.0 as u64)?;
        tensor::write_u64(&mut w, self.spec.dims.1 as u64)?;
        tensor::write_u64(&mut w, self.spec.dims.2 as u64)?;
        tensor::write_u64(&mut w, u64::from(self.filtered.is_some()))?;
        for &v in &self.values {
            tensor::write_f64(&mut w, v)?;
        }
        if let Some(f) = &self.filtered {
            for &v in f {
                tensor::write_f64(&mut w, v)?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        if tensor::read_header(&mut r)? != TensorKind::VoxelGrid {
            return Err(RisError::Format("expected a voxel-grid container".into()));
        }
        let origin = CartesianPoint::new(
            tensor::read_f64(&mut r)?,
            tensor::read_f64(&mut r)?,
            tensor::read_f64(&mut r)?,
        );
        let voxel_size_m = tensor::read_f64(&mut r)?;
        let dims = (
            tensor::read_u64(&mut r)? as usize,
            tensor::read_u64(&mut r)? as usize,
            tensor::read_u64(&mut r)? as usize,
        );
        let has_filtered = tensor::read_u64(&mut r)? != 0;
        let spec = VoxelGridSpec {
            origin,
            voxel_size_m,
            dims,
        };
        let n = spec.num_voxels();
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(tensor::read_f64(&mut r)?);
        }
        let filtered = if has_filtered {
            let mut f = Vec::with_capacity(n);
            for _ in 0..n {
                f.push(tensor::read_f64(&mut r)?);
            }
            Some(f)
        } else {
            None
        };
        Ok(Self {
            spec,
            values,
            filtered,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

/// Nearest-neighbor voxel assignment with distance cutoff δ.
///
/// Each voxel takes the magnitude of its nearest sample; ties go to the
/// lowest (beam, bin) sample. Voxels farther than δ from every sample stay
/// null.
pub fn voxelize(samples: &[SamplePoint], spec: &VoxelGridSpec, delta_m: f64) -> Result<VoxelGrid> {
    if samples.is_empty() {
        return Err(RisError::Processing("no samples to voxelize".into()));
    }
    if delta_m <= 0.0 {
        return Err(RisError::Processing(format!(
            "distance cutoff must be positive, got {delta_m}"
        )));
    }
    if spec.num_voxels() == 0 {
        return Err(RisError::Processing("voxel grid has zero extent".into()));
    }
    let positions: Vec<CartesianPoint> = samples.iter().map(|s| s.position).collect();
    let tree = KdTree::build(&positions);
    let delta2 = delta_m * delta_m;
    let values: Vec<f64> = (0..spec.num_voxels())
        .into_par_iter()
        .map(|i| {
            let (ix, iy, iz) = spec.coords(i);
            let (d2, idx) = tree.nearest(spec.center(ix, iy, iz)).expect("nonempty tree");
            if d2 <= delta2 {
                samples[idx].magnitude
            } else {
                0.0
            }
        })
        .collect();
    Ok(VoxelGrid {
        spec: *spec,
        values,
        filtered: None,
    })
}

/// Separable 3D Gaussian smoothing on the voxel lattice.
///
/// σ is in voxel units; the kernel is truncated at 4σ and renormalized to
/// unit sum; boundaries are zero-padded.
pub fn gaussian_filter_3d(values: &[f64], dims: (usize, usize, usize), sigma_voxels: f64) -> Vec<f64> {
    assert!(sigma_voxels > 0.0, "sigma must be positive");
    assert_eq!(values.len(), dims.0 * dims.1 * dims.2);
    let kernel = gaussian_kernel_1d(sigma_voxels);
    let (nx, ny, nz) = dims;
    let idx = |ix: usize, iy: usize, iz: usize| (iz * ny + iy) * nx + ix;

    let mut a = values.to_vec();
    let mut b = vec![0.0; values.len()];
    // x pass
    pass_axis(&a, &mut b, &kernel, nx, |fixed, i| {
        let (iy, iz) = (fixed % ny, fixed / ny);
        idx(i, iy, iz)
    });
    std::mem::swap(&mut a, &mut b);
    // y pass
    pass_axis(&a, &mut b, &kernel, ny, |fixed, i| {
        let (ix, iz) = (fixed % nx, fixed / nx);
        idx(ix, i, iz)
    });
    std::mem::swap(&mut a, &mut b);
    // z pass
    pass_axis(&a, &mut b, &kernel, nz, |fixed, i| {
        let (ix, iy) = (fixed % nx, fixed / nx);
        idx(ix, iy, i)
    });
    b
}

fn pass_axis(
    src: &[f64],
    dst: &mut [f64],
    kernel: &[f64],
    axis_len: usize,
    index: impl Fn(usize, usize) -> usize + Sync,
) {
    let radius = kernel.len() / 2;
    let num_lines = if axis_len == 0 { 0 } else { src.len() / axis_len };
    for fixed in 0..num_lines {
        for i in 0..axis_len {
            let mut acc = 0.0;
            for (k, &w) in kernel.iter().enumerate() {
                let j = i as isize + k as isize - radius as isize;
                if j >= 0 && (j as usize) < axis_len {
                    acc += w * src[index(fixed, j as usize)];
                }
            }
            dst[index(fixed, i)] = acc;
        }
    }
}

/// 1D Gaussian kernel, truncated at 4σ, renormalized to unit sum.
pub fn gaussian_kernel_1d(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    for v in kernel.iter_mut() {
        *v /= sum;
    }
    kernel
}

/// Keep values within `tau_db` (amplitude dB) of the field maximum.
///
/// The threshold is relative to max(ν_s), so the simulator's arbitrary
/// amplitude scale cancels. An all-zero field stays all zero.
pub fn threshold(values: &[f64], tau_db: f64) -> Vec<f64> {
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return values.to_vec();
    }
    let t = max * 10f64.powf(tau_db / 20.0);
    values
        .iter()
        .map(|&v| if v >= t { v } else { 0.0 })
        .collect()
}

/// 26-connected components of the nonzero voxels, largest first.
pub fn connected_components(values: &[f64], spec: &VoxelGridSpec) -> Vec<Vec<usize>> {
    let mut seen = vec![false; values.len()];
    let mut components = Vec::new();
    for start in 0..values.len() {
        if seen[start] || values[start] <= 0.0 {
            continue;
        }
        let mut component = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            component.push(i);
            let (ix, iy, iz) = spec.coords(i);
            for dz in -1isize..=1 {
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue;
                        }
                        let (jx, jy, jz) = (
                            ix as isize + dx,
                            iy as isize + dy,
                            iz as isize + dz,
                        );
                        if jx < 0
                            || jy < 0
                            || jz < 0
                            || jx as usize >= spec.dims.0
                            || jy as usize >= spec.dims.1
                            || jz as usize >= spec.dims.2
                        {
                            continue;
                        }
                        let j = spec.index(jx as usize, jy as usize, jz as usize);
                        if !seen[j] && values[j] > 0.0 {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        component.sort_unstable();
        components.push(component);
    }
    components.sort_by_key(|c| std::cmp::Reverse(c.len()));
    components
}

/// Intensity-weighted centroid of one component.
pub fn component_centroid(values: &[f64], spec: &VoxelGridSpec, component: &[usize]) -> CartesianPoint {
    let mut acc = [0.0; 3];
    let mut total = 0.0;
    for &i in component {
        let (ix, iy, iz) = spec.coords(i);
        let c = spec.center(ix, iy, iz);
        acc[0] += values[i] * c.x;
        acc[1] += values[i] * c.y;
        acc[2] += values[i] * c.z;
        total += values[i];
    }
    CartesianPoint::new(acc[0] / total, acc[1] / total, acc[2] / total)
}

/// Volumetric pipeline parameters (l, δ, σ, τ plus the range gate pad).
#[derive(Debug, Clone, Copy)]
pub struct ImagingParams {
    pub voxel_size_m: f64,
    pub delta_m: f64,
    pub sigma_voxels: f64,
    pub tau_db: f64,
    pub range_pad_m: f64,
    pub compensation: bool,
}

/// Output of [`reconstruct`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// One max-projection map per ROI (contiguous beams sharing a focus R).
    pub maps: Vec<IntensityMap2D>,
    /// Raw voxelization in `values`, smoothed+thresholded result in `filtered`.
    pub grid: VoxelGrid,
}

/// Full volumetric pipeline: 2D maps, sampling, voxelization, Gaussian
/// smoothing, thresholding. Deterministic.
pub fn reconstruct(
    t: &ProcessedTensor,
    params: &ImagingParams,
    range_offset_m: f64,
    grid_spec: Option<VoxelGridSpec>,
) -> Result<Reconstruction> {
    let mut maps = Vec::new();
    for run in focus_runs(t) {
        let focus_r = t.beams[run.start].focus_r_m;
        let window = (
            (focus_r - params.range_pad_m).max(0.0),
            focus_r + params.range_pad_m,
        );
        maps.push(project_2d_on(t, run, window.0, window.1, range_offset_m)?);
    }

    let samples = samples_from_profiles(t, params.range_pad_m, range_offset_m, params.compensation);
    if samples.is_empty() {
        return Ok(Reconstruction {
            maps,
            grid: VoxelGrid::empty(params.voxel_size_m),
        });
    }
    let spec = match grid_spec {
        Some(s) => s,
        None => VoxelGridSpec::bounding(&samples, params.voxel_size_m, 5)?,
    };
    let mut grid = voxelize(&samples, &spec, params.delta_m)?;
    let smoothed = gaussian_filter_3d(&grid.values, spec.dims, params.sigma_voxels);
    grid.filtered = Some(threshold(&smoothed, params.tau_db));
    Ok(Reconstruction { maps, grid })
}

/// Contiguous beam runs sharing a focus distance: one run per ROI scan.
pub fn focus_runs(t: &ProcessedTensor) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=t.num_beams() {
        if i == t.num_beams() || t.beams[i].focus_r_m != t.beams[start].focus_r_m {
            runs.push(start..i);
            start = i;
        }
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::SweepConfig;
    use crate::tensor::BeamMeta;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn beam(phi: f64, theta: f64, r: f64) -> BeamMeta {
        BeamMeta {
            azimuth_deg: phi,
            zenith_deg: theta,
            focus_r_m: r,
        }
    }

    /// One-beam tensor with a single nonzero bin.
    fn single_bin_tensor(bin: usize, mag: f64) -> ProcessedTensor {
        let sweep = SweepConfig::from_band(26.5e9, 30.5e9, 64).unwrap();
        let fft_len = 64;
        let mut data = vec![Complex64::default(); fft_len];
        data[bin] = Complex64::new(mag, 0.0);
        ProcessedTensor::new(sweep, fft_len, vec![beam(0.0, 90.0, 3.0)], data).unwrap()
    }

    #[test]
    fn projection_includes_and_excludes_bins() {
        let t = single_bin_tensor(20, 2.5);
        let r20 = t.bin_range_m(20);
        let inside = project_2d(&t, r20 - 0.1, r20 + 0.1, 0.0).unwrap();
        assert_eq!(inside.values, vec![2.5]);
        let outside = project_2d(&t, r20 + 0.5, r20 + 1.0, 0.0).unwrap();
        assert_eq!(outside.values, vec![0.0]);
    }

    #[test]
    fn projection_monotone_in_window() {
        let t = single_bin_tensor(20, 2.5);
        let r20 = t.bin_range_m(20);
        let narrow = project_2d(&t, r20 + 0.5, r20 + 1.0, 0.0).unwrap();
        let wide = project_2d(&t, r20 - 1.0, r20 + 1.0, 0.0).unwrap();
        for (n, w) in narrow.values.iter().zip(&wide.values) {
            assert!(w >= n);
        }
    }

    #[test]
    fn empty_window_is_an_error() {
        let t = single_bin_tensor(20, 2.5);
        assert!(project_2d(&t, 3.0, 2.0, 0.0).is_err());
        // Window narrower than a bin between two bin centers.
        let spacing = t.bin_spacing_m();
        assert!(project_2d(&t, 20.1 * spacing, 20.2 * spacing, 0.0).is_err());
    }

    #[test]
    fn compensation_values() {
        assert_abs_diff_eq!(compensate(1.0, 1.0, 1.0), 1.0);
        assert_abs_diff_eq!(compensate(1.0, 2.0, 1.0), 4.0);
        assert_abs_diff_eq!(compensate(0.5, 4.0, 1.0), 8.0);
    }

    #[test]
    fn sample_extraction_counts_and_positions() {
        let t = single_bin_tensor(20, 2.5);
        let spacing = t.bin_spacing_m();
        let window = (18.0 * spacing, 22.0 * spacing);
        let samples = samples_in_window(&t, window, 0.0, false);
        assert_eq!(samples.len(), 5); // bins 18..=22
        let s20 = samples.iter().find(|s| s.bin == 20).unwrap();
        assert_abs_diff_eq!(s20.magnitude, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s20.position.x, 20.0 * spacing, epsilon = 1e-12);
        assert_abs_diff_eq!(s20.position.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn range_offset_shifts_scene_positions() {
        let t = single_bin_tensor(20, 1.0);
        let spacing = t.bin_spacing_m();
        let offset = 0.6;
        let window = (20.0 * spacing - offset - 1e-9, 20.0 * spacing - offset + 1e-9);
        let samples = samples_in_window(&t, window, offset, false);
        assert_eq!(samples.len(), 1);
        assert_abs_diff_eq!(samples[0].position.x, 20.0 * spacing - offset, epsilon = 1e-9);
    }

    fn sample_at(x: f64, y: f64, z: f64, mag: f64, order: usize) -> SamplePoint {
        SamplePoint {
            position: CartesianPoint::new(x, y, z),
            magnitude: mag,
            beam: order,
            bin: 0,
        }
    }

    #[test]
    fn voxel_takes_coincident_sample_value() {
        let spec = VoxelGridSpec {
            origin: CartesianPoint::ORIGIN,
            voxel_size_m: 0.05,
            dims: (3, 3, 3),
        };
        let samples = vec![sample_at(0.05, 0.05, 0.05, 7.0, 0)];
        let grid = voxelize(&samples, &spec, 0.1).unwrap();
        assert_eq!(grid.values[spec.index(1, 1, 1)], 7.0);
    }

    #[test]
    fn far_voxels_stay_null() {
        let spec = VoxelGridSpec {
            origin: CartesianPoint::ORIGIN,
            voxel_size_m: 0.11,
            dims: (2, 1, 1),
        };
        // Sample 0.11 m from voxel 1, just beyond the 0.10 m cutoff.
        let samples = vec![sample_at(0.0, 0.0, 0.0, 3.0, 0)];
        let grid = voxelize(&samples, &spec, 0.10).unwrap();
        assert_eq!(grid.values[0], 3.0);
        assert_eq!(grid.values[1], 0.0);
    }

    #[test]
    fn voxelize_matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = rng.gen_range(1..200);
            let samples: Vec<SamplePoint> = (0..n)
                .map(|i| {
                    sample_at(
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(0.0..10.0),
                        i,
                    )
                })
                .collect();
            let spec = VoxelGridSpec {
                origin: CartesianPoint::new(-0.45, -0.45, -0.45),
                voxel_size_m: 0.1,
                dims: (10, 10, 10),
            };
            let grid = voxelize(&samples, &spec, 0.10).unwrap();
            for i in 0..spec.num_voxels() {
                let (ix, iy, iz) = spec.coords(i);
                let c = spec.center(ix, iy, iz);
                let mut best = (f64::INFINITY, usize::MAX);
                for (j, s) in samples.iter().enumerate() {
                    let d = c.distance(&s.position);
                    let d2 = d * d;
                    if d2 < best.0 {
                        best = (d2, j);
                    }
                }
                let expect = if best.0 <= 0.01 {
                    samples[best.1].magnitude
                } else {
                    0.0
                };
                assert_eq!(grid.values[i], expect, "voxel {i}");
            }
        }
    }

    #[test]
    fn gaussian_impulse_reproduces_kernel() {
        let dims = (17, 17, 17);
        let mut values = vec![0.0; 17 * 17 * 17];
        let spec = VoxelGridSpec {
            origin: CartesianPoint::ORIGIN,
            voxel_size_m: 1.0,
            dims,
        };
        values[spec.index(8, 8, 8)] = 1.0;
        let out = gaussian_filter_3d(&values, dims, 1.5);
        let total: f64 = out.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
        // Isotropy: permuting offsets leaves the response unchanged.
        let v = |dx: usize, dy: usize, dz: usize| out[spec.index(8 + dx, 8 + dy, 8 + dz)];
        assert_abs_diff_eq!(v(2, 1, 0), v(0, 2, 1), epsilon = 1e-12);
        assert_abs_diff_eq!(v(2, 1, 0), v(1, 0, 2), epsilon = 1e-12);
    }

    #[test]
    fn gaussian_constant_interior_preserved() {
        let dims = (20, 20, 20);
        let values = vec![3.0; 20 * 20 * 20];
        let out = gaussian_filter_3d(&values, dims, 1.0);
        let spec = VoxelGridSpec {
            origin: CartesianPoint::ORIGIN,
            voxel_size_m: 1.0,
            dims,
        };
        // 4σ kernel radius is 4; voxel (10,10,10) is interior.
        assert_abs_diff_eq!(out[spec.index(10, 10, 10)], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn separable_matches_direct_3d_convolution() {
        let dims = (7, 6, 5);
        let sigma = 0.9;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values: Vec<f64> = (0..7 * 6 * 5).map(|_| rng.gen_range(0.0..1.0)).collect();
        let out = gaussian_filter_3d(&values, dims, sigma);

        // Direct dense convolution with the outer-product 3D kernel.
        let k1 = gaussian_kernel_1d(sigma);
        let radius = (k1.len() / 2) as isize;
        let idx = |x: usize, y: usize, z: usize| (z * dims.1 + y) * dims.0 + x;
        for z in 0..dims.2 {
            for y in 0..dims.1 {
                for x in 0..dims.0 {
                    let mut acc = 0.0;
                    for (kz, wz) in k1.iter().enumerate() {
                        for (ky, wy) in k1.iter().enumerate() {
                            for (kx, wx) in k1.iter().enumerate() {
                                let sx = x as isize + kx as isize - radius;
                                let sy = y as isize + ky as isize - radius;
                                let sz = z as isize + kz as isize - radius;
                                if sx >= 0
                                    && sy >= 0
                                    && sz >= 0
                                    && (sx as usize) < dims.0
                                    && (sy as usize) < dims.1
                                    && (sz as usize) < dims.2
                                {
                                    acc += wx * wy * wz * values[idx(sx as usize, sy as usize, sz as usize)];
                                }
                            }
                        }
                    }
                    assert_abs_diff_eq!(out[idx(x, y, z)], acc, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn gaussian_kernel_normalization_analytic() {
        // Unit-sum by construction and symmetric; peak matches the
        // continuous 1D Gaussian shape ratio.
        let k = gaussian_kernel_1d(2.0);
        assert_abs_diff_eq!(k.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let mid = k.len() / 2;
        assert_abs_diff_eq!(k[mid - 1] / k[mid], (-1.0f64 / 8.0).exp(), epsilon = 1e-12);
        assert_eq!(k.len(), 17); // radius ceil(4*2) = 8
    }

    #[test]
    fn threshold_cases() {
        let values = vec![0.0, 1.0, 0.5, 0.01];
        // -inf keeps everything.
        assert_eq!(threshold(&values, f64::NEG_INFINITY), values);
        // 0 dB keeps only the maximum.
        assert_eq!(threshold(&values, 0.0), vec![0.0, 1.0, 0.0, 0.0]);
        // -6 dB keeps the 0.5 entry too (10^(-6/20) ~ 0.501? just below).
        let kept = threshold(&values, -6.03);
        assert_eq!(kept, vec![0.0, 1.0, 0.5, 0.0]);
        // All-zero stays all-zero.
        assert_eq!(threshold(&[0.0, 0.0], -60.0), vec![0.0, 0.0]);
    }

    #[test]
    fn threshold_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let values: Vec<f64> = (0..100).map(|_| rng.gen_range(0.0..5.0)).collect();
        let once = threshold(&values, -20.0);
        let twice = threshold(&once, -20.0);
        assert_eq!(once, twice);
    }

    #[test]
    fn two_blobs_are_two_components() {
        let spec = VoxelGridSpec {
            origin: CartesianPoint::ORIGIN,
            voxel_size_m: 1.0,
            dims: (9, 3, 3),
        };
        let mut values = vec![0.0; spec.num_voxels()];
        values[spec.index(0, 1, 1)] = 1.0;
        values[spec.index(1, 1, 1)] = 1.0;
        values[spec.index(8, 1, 1)] = 2.0;
        let comps = connected_components(&values, &spec);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].len(), 2);
        let c = component_centroid(&values, &spec, &comps[1]);
        assert_abs_diff_eq!(c.x, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_voxels_are_connected() {
        let spec = VoxelGridSpec {
            origin: CartesianPoint::ORIGIN,
            voxel_size_m: 1.0,
            dims: (3, 3, 3),
        };
        let mut values = vec![0.0; 27];
        values[spec.index(0, 0, 0)] = 1.0;
        values[spec.index(1, 1, 1)] = 1.0;
        assert_eq!(connected_components(&values, &spec).len(), 1);
    }

    #[test]
    fn voxel_grid_binary_round_trip() {
        let spec = VoxelGridSpec {
            origin: CartesianPoint::new(-0.1, 0.2, -0.3),
            voxel_size_m: 0.02,
            dims: (3, 4, 2),
        };
        let grid = VoxelGrid {
            spec,
            values: (0..24).map(|i| i as f64 * 0.5).collect(),
            filtered: Some((0..24).map(|i| i as f64).collect()),
        };
        let mut buf = Vec::new();
        grid.write_to(&mut buf).unwrap();
        let back = VoxelGrid::read_from(buf.as_slice()).unwrap();
        assert_eq!(grid, back);
    }

    #[test]
    fn sparse_text_lists_only_nonzero() {
        let spec = VoxelGridSpec {
            origin: CartesianPoint::ORIGIN,
            voxel_size_m: 1.0,
            dims: (2, 2, 1),
        };
        let grid = VoxelGrid {
            spec,
            values: vec![0.0, 5.0, 0.0, 0.0],
            filtered: None,
        };
        let mut out = Vec::new();
        grid.write_sparse_text(&mut out, Field::Raw).unwrap();
        let text = String::from_utf8(out).unwrap();
        let data_lines: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with(|c: char| c.is_alphabetic()))
            .collect();
        assert_eq!(data_lines.len(), 1);
        assert!(data_lines[0].starts_with("1 0 0 "), "{}", data_lines[0]);
    }

    #[test]
    fn reconstruct_empty_profiles_no_crash() {
        let sweep = SweepConfig::from_band(26.5e9, 30.5e9, 16).unwrap();
        let t = ProcessedTensor::new(sweep, 16, vec![], vec![]).unwrap();
        let params = ImagingParams {
            voxel_size_m: 0.02,
            delta_m: 0.1,
            sigma_voxels: 2.0,
            tau_db: -20.0,
            range_pad_m: 0.5,
            compensation: true,
        };
        let rec = reconstruct(&t, &params, 0.0, None).unwrap();
        assert!(rec.maps.is_empty());
        assert!(rec.grid.values.is_empty());
    }

    #[test]
    fn focus_runs_split_on_focus_change() {
        let sweep = SweepConfig::from_band(26.5e9, 30.5e9, 4).unwrap();
        let beams = vec![
            beam(0.0, 90.0, 3.0),
            beam(1.0, 90.0, 3.0),
            beam(0.0, 90.0, 2.0),
        ];
        let t = ProcessedTensor::new(sweep, 4, beams, vec![Complex64::default(); 12]).unwrap();
        assert_eq!(focus_runs(&t), vec![0..2, 2..3]);
    }
}
