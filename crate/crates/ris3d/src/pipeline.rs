//! End-to-end orchestration: detect, define ROIs, build the codebook,
//! acquire beam by beam, process, reconstruct, and write artifacts.
//!
//! All artifacts except the run report are deterministic for a fixed
//! scenario and seed, so two runs are byte-identical and a replayed
//! recording reproduces the original reconstruction exactly. A failed
//! acquisition flushes the completed beams to `tensor.partial.bin`; the
//! next run over the same output directory resumes after them.

use std::fs::{self, File};
use std::io::BufWriter;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;

use crate::backend::AcquisitionBackend;
use crate::codebook::{array_factor, build_codebook, Codebook};
use crate::error::{Result, RisError};
use crate::geometry::CartesianPoint;
use crate::processing::{default_fft_len, process_tensor};
use crate::roi::{define_roi, roi_grid, RadarDetection, RoiSpec};
use crate::scenario::ScenarioConfig;
use crate::tensor::{BeamMeta, MeasurementTensor};
use crate::volumetric::{
    component_centroid, connected_components, reconstruct, Field, Reconstruction,
};

/// File name of the complete raw tensor.
pub const TENSOR_FILE: &str = "tensor.bin";
/// File name of the partial tensor flushed after a backend failure.
pub const PARTIAL_FILE: &str = "tensor.partial.bin";
/// File name of the processed range profiles.
pub const PROFILES_FILE: &str = "profiles.bin";

/// Everything a pipeline run produced.
#[derive(Debug)]
pub struct PipelineRun {
    pub out_dir: PathBuf,
    pub detections: Vec<RadarDetection>,
    pub rois: Vec<RoiSpec>,
    pub num_beams: usize,
    pub reconstruction: Reconstruction,
}

/// Run the closed loop against `backend`, writing artifacts to `out_dir`.
///
/// With a replay backend the detection and codebook stages are skipped;
/// the recording fixes the beam list.
pub fn run_pipeline(
    cfg: &ScenarioConfig,
    backend: &mut dyn AcquisitionBackend,
    out_dir: impl AsRef<Path>,
    fft_len: Option<usize>,
) -> Result<PipelineRun> {
    let out_dir = out_dir.as_ref().to_path_buf();
    fs::create_dir_all(&out_dir)?;
    let mut timings: Vec<(&str, f64)> = Vec::new();
    let clock = Instant::now;

    // Detection and ROI definition, or the recorded beam list.
    let t0 = clock();
    let (detections, rois, beams, codebook) = if let Some(rec) = backend.recorded() {
        if rec.sweep != cfg.sweep {
            return Err(RisError::Config(
                "recording sweep parameters disagree with the scenario".into(),
            ));
        }
        (Vec::new(), Vec::new(), rec.beams.clone(), None)
    } else {
        let detections = backend.detect()?;
        if detections.is_empty() {
            return Err(RisError::Processing(
                "radar stage produced no detections".into(),
            ));
        }
        let mut rois = Vec::new();
        let mut codebook = Codebook::default();
        for d in &detections {
            let roi = define_roi(
                d,
                cfg.roi.span_azimuth_deg,
                cfg.roi.span_zenith_deg,
                cfg.roi.step_deg,
                cfg.roi.center_zenith_deg,
                cfg.roi.range_pad_m,
            )?;
            codebook.extend(build_codebook(
                &cfg.array,
                cfg.tx,
                &roi_grid(&roi),
                roi.focus_r_m,
                cfg.array.design_wavelength(),
            )?);
            rois.push(roi);
        }
        let beams = codebook
            .entries
            .iter()
            .map(|e| BeamMeta {
                azimuth_deg: e.azimuth_deg,
                zenith_deg: e.zenith_deg,
                focus_r_m: e.focus_r_m,
            })
            .collect();
        let mut f = BufWriter::new(File::create(out_dir.join("codebook.txt"))?);
        codebook.write_text(&mut f)?;
        (detections, rois, beams, Some(codebook))
    };
    timings.push(("setup", t0.elapsed().as_secs_f64()));

    // Acquisition, resumable over a flushed partial tensor.
    let t0 = clock();
    let tensor = acquire(cfg, backend, &out_dir, beams, codebook.as_ref())?;
    tensor.save(out_dir.join(TENSOR_FILE))?;
    let _ = fs::remove_file(out_dir.join(PARTIAL_FILE));
    timings.push(("acquire", t0.elapsed().as_secs_f64()));

    // Range processing.
    let t0 = clock();
    let fft_len = fft_len.unwrap_or_else(|| default_fft_len(&cfg.sweep));
    let profiles = process_tensor(&tensor, fft_len)?;
    profiles.save(out_dir.join(PROFILES_FILE))?;
    timings.push(("process", t0.elapsed().as_secs_f64()));

    // Volumetric reconstruction.
    let t0 = clock();
    let range_offset = range_offset_m(cfg);
    let reconstruction = reconstruct(&profiles, &cfg.imaging, range_offset, None)?;
    for (i, map) in reconstruction.maps.iter().enumerate() {
        let mut f = BufWriter::new(File::create(out_dir.join(format!("map2d_{i}.txt")))?);
        map.write_text(&mut f)?;
    }
    let grid = &reconstruction.grid;
    if !grid.values.is_empty() {
        grid.write_sparse_text(
            BufWriter::new(File::create(out_dir.join("voxels.txt"))?),
            Field::Raw,
        )?;
        grid.write_sparse_text(
            BufWriter::new(File::create(out_dir.join("voxels_filtered.txt"))?),
            Field::Filtered,
        )?;
        grid.save(out_dir.join("voxels.bin"))?;
    }
    timings.push(("reconstruct", t0.elapsed().as_secs_f64()));

    let run = PipelineRun {
        out_dir: out_dir.clone(),
        detections,
        rois,
        num_beams: tensor.num_beams(),
        reconstruction,
    };
    write_report(cfg, &run, fft_len, &timings)?;
    Ok(run)
}

/// Distance from the feed to the array center: the standoff baked into
/// every raw range bin, subtracted to get scene range.
pub fn range_offset_m(cfg: &ScenarioConfig) -> f64 {
    cfg.tx.distance(&cfg.array.center())
}

fn acquire(
    cfg: &ScenarioConfig,
    backend: &mut dyn AcquisitionBackend,
    out_dir: &Path,
    beams: Vec<BeamMeta>,
    codebook: Option<&Codebook>,
) -> Result<MeasurementTensor> {
    let k = cfg.sweep.points();
    let partial_path = out_dir.join(PARTIAL_FILE);
    let mut rows: Vec<Complex64> = Vec::with_capacity(beams.len() * k);
    let mut start = 0;
    if partial_path.exists() {
        let partial = MeasurementTensor::load(&partial_path)?;
        let n = partial.num_beams();
        if partial.sweep == cfg.sweep && n <= beams.len() && partial.beams == beams[..n] {
            rows.extend_from_slice(&partial.data);
            start = n;
        }
    }

    for i in start..beams.len() {
        let result = (|| {
            let applied: &[f64] = match codebook {
                Some(cb) => &cb.entries[i].profile.quantized,
                None => &[],
            };
            backend.set_pattern(i, applied)?;
            let row = backend.sweep(i)?;
            if row.len() != k {
                return Err(RisError::backend(
                    Some(i),
                    format!("sweep returned {} points, expected {k}", row.len()),
                ));
            }
            Ok(row)
        })();
        match result {
            Ok(row) => rows.extend(row),
            Err(e) => {
                // Flush completed beams so a rerun can pick up here.
                let done = rows.len() / k;
                let partial =
                    MeasurementTensor::new(cfg.sweep, beams[..done].to_vec(), rows)?;
                partial.save(&partial_path)?;
                return Err(e);
            }
        }
    }
    MeasurementTensor::new(cfg.sweep, beams, rows)
}

fn write_report(
    cfg: &ScenarioConfig,
    run: &PipelineRun,
    fft_len: usize,
    timings: &[(&str, f64)],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(run.out_dir.join("report.txt"))?);
    writeln!(w, "ris3d pipeline report")?;
    writeln!(w, "sweep: {} Hz start, {} Hz step, {} points",
        cfg.sweep.f_start_hz(), cfg.sweep.step_hz(), cfg.sweep.points())?;
    writeln!(w, "array: {}x{} pitch {} m", cfg.array.rows(), cfg.array.cols(), cfg.array.pitch_m())?;
    writeln!(w, "fft_len: {fft_len}")?;
    writeln!(w, "seed: {}", cfg.seed)?;
    writeln!(w, "beams: {}", run.num_beams)?;
    writeln!(w, "detections: {}", run.detections.len())?;
    for d in &run.detections {
        writeln!(w, "  R {:.4} m, phi {:.2} deg", d.range_m, d.azimuth_deg)?;
    }
    for (i, map) in run.reconstruction.maps.iter().enumerate() {
        let (phi, theta) = map.argmax();
        writeln!(w, "map {i} peak: phi {phi:.2} deg, theta {theta:.2} deg")?;
    }
    let grid = &run.reconstruction.grid;
    if let Some(filtered) = &grid.filtered {
        let comps = connected_components(filtered, &grid.spec);
        writeln!(w, "filtered components: {}", comps.len())?;
        for (i, comp) in comps.iter().enumerate() {
            let c = component_centroid(filtered, &grid.spec, comp);
            writeln!(
                w,
                "  component {i}: {} voxels, centroid ({:.3}, {:.3}, {:.3}) m",
                comp.len(),
                c.x,
                c.y,
                c.z
            )?;
        }
    }
    writeln!(
        w,
        "imaging: l {} m, delta {} m, sigma {} voxels, tau {} dB",
        cfg.imaging.voxel_size_m, cfg.imaging.delta_m, cfg.imaging.sigma_voxels, cfg.imaging.tau_db
    )?;
    for (stage, secs) in timings {
        writeln!(w, "stage {stage}: {secs:.3} s")?;
    }
    Ok(())
}

/// Per-beam focusing diagnostic: continuous vs 1-bit focus amplitude.
#[derive(Debug, Clone, Copy)]
pub struct BeamGain {
    pub beam_index: usize,
    pub azimuth_deg: f64,
    pub zenith_deg: f64,
    pub focus_r_m: f64,
    pub continuous_amp: f64,
    pub quantized_amp: f64,
    /// quantized / continuous; ~2/π for large 1-bit arrays.
    pub ratio: f64,
}

/// Brute-force focus-gain table for every codebook entry.
pub fn beam_report(
    codebook: &Codebook,
    array: &crate::geometry::RisArray,
    tx: CartesianPoint,
    wavelength_m: f64,
) -> Vec<BeamGain> {
    codebook
        .entries
        .iter()
        .map(|e| {
            let continuous_amp =
                array_factor(&e.profile.continuous, array, tx, e.profile.focus, wavelength_m)
                    .norm();
            let quantized_amp =
                array_factor(&e.profile.quantized, array, tx, e.profile.focus, wavelength_m)
                    .norm();
            BeamGain {
                beam_index: e.beam_index,
                azimuth_deg: e.azimuth_deg,
                zenith_deg: e.zenith_deg,
                focus_r_m: e.focus_r_m,
                continuous_amp,
                quantized_amp,
                ratio: quantized_amp / continuous_amp,
            }
        })
        .collect()
}

/// Text table for [`beam_report`].
pub fn write_beam_report(gains: &[BeamGain], mut w: impl std::io::Write) -> Result<()> {
    writeln!(w, "# beam phi_deg theta_deg focus_r_m continuous quantized ratio")?;
    for g in gains {
        writeln!(
            w,
            "{} {} {} {} {:.6} {:.6} {:.6}",
            g.beam_index, g.azimuth_deg, g.zenith_deg, g.focus_r_m, g.continuous_amp,
            g.quantized_amp, g.ratio
        )?;
    }
    Ok(())
}
