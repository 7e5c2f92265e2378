//! Command-line front end for the RIS imaging toolkit.
//!
//! Exit codes: 0 on success, 2 for configuration problems, 3 for backend
//! failures, 1 for anything else.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ris3d::backend::{AcquisitionBackend, ReplayBackend, SimBackend};
use ris3d::codebook::{build_codebook, Codebook};
use ris3d::pipeline::{beam_report, run_pipeline, write_beam_report, range_offset_m};
use ris3d::processing::{default_fft_len, process_tensor};
use ris3d::roi::{define_roi, mock_fmcw_detect, roi_grid};
use ris3d::scenario::ScenarioConfig;
use ris3d::tensor::{MeasurementTensor, ProcessedTensor};
use ris3d::volumetric::{reconstruct, Field};
use ris3d::{Result, RisError};

#[derive(Parser)]
#[command(name = "ris3d", about = "RIS-aided SFCW radar 3D imaging toolkit", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Sim,
    Replay,
}

#[derive(Subcommand)]
enum Command {
    /// Export the RIS phase patterns for a scenario's ROIs.
    Codebook {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Seed override (defaults to the scenario seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate the scene into a raw measurement tensor.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Turn a raw tensor into range profiles.
    Process {
        /// Input tensor (tensor.bin).
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Transform length (default: 4x sweep points).
        #[arg(long)]
        fft_len: Option<usize>,
    },
    /// Turn range profiles into 2D maps and voxel grids.
    Reconstruct {
        /// Input profiles (profiles.bin).
        input: PathBuf,
        /// Scenario providing imaging parameters and geometry.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the whole closed loop: detect, scan, process, reconstruct.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "sim")]
        backend: BackendKind,
        /// Recorded tensor to replay (required with --backend replay).
        #[arg(long)]
        tensor: Option<PathBuf>,
        #[arg(long)]
        fft_len: Option<usize>,
    },
    /// Per-beam continuous vs 1-bit focus-gain table.
    BeamReport {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized");
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RisError::Config(_) => ExitCode::from(2),
                RisError::Backend { .. } => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load(config: &PathBuf, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Closed-loop setup shared by the offline subcommands: detect targets and
/// assemble the combined codebook over all ROIs.
fn scan_codebook(cfg: &ScenarioConfig) -> Result<Codebook> {
    let scene = cfg.build_scene()?;
    let detections = mock_fmcw_detect(&scene, cfg.detector, cfg.seed);
    if detections.is_empty() {
        return Err(RisError::Processing(
            "radar stage produced no detections".into(),
        ));
    }
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
    }
    Ok(codebook)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Codebook {
            config,
            out_dir,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let codebook = scan_codebook(&cfg)?;
            fs::create_dir_all(&out_dir)?;
            let path = out_dir.join("codebook.txt");
            codebook.write_text(BufWriter::new(File::create(&path)?))?;
            println!("wrote {} ({} beams)", path.display(), codebook.len());
            Ok(())
        }
        Command::Simulate {
            config,
            out_dir,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let codebook = scan_codebook(&cfg)?;
            let scene = cfg.build_scene()?;
            let tensor = ris3d::sim::simulate_tensor(
                &scene,
                &cfg.array,
                &codebook,
                &cfg.sweep,
                &cfg.sim,
                cfg.seed,
            )?;
            fs::create_dir_all(&out_dir)?;
            let path = out_dir.join("tensor.bin");
            tensor.save(&path)?;
            println!("wrote {} ({} beams)", path.display(), tensor.num_beams());
            Ok(())
        }
        Command::Process {
            input,
            out_dir,
            fft_len,
        } => {
            let tensor = MeasurementTensor::load(&input)?;
            let fft_len = fft_len.unwrap_or_else(|| default_fft_len(&tensor.sweep));
            let profiles = process_tensor(&tensor, fft_len)?;
            fs::create_dir_all(&out_dir)?;
            let path = out_dir.join("profiles.bin");
            profiles.save(&path)?;
            println!("wrote {} (fft_len {fft_len})", path.display());
            Ok(())
        }
        Command::Reconstruct {
            input,
            config,
            out_dir,
        } => {
            let cfg = load(&config, None)?;
            let profiles = ProcessedTensor::load(&input)?;
            let rec = reconstruct(&profiles, &cfg.imaging, range_offset_m(&cfg), None)?;
            fs::create_dir_all(&out_dir)?;
            for (i, map) in rec.maps.iter().enumerate() {
                let path = out_dir.join(format!("map2d_{i}.txt"));
                map.write_text(BufWriter::new(File::create(path)?))?;
            }
            if !rec.grid.values.is_empty() {
                rec.grid.write_sparse_text(
                    BufWriter::new(File::create(out_dir.join("voxels.txt"))?),
                    Field::Raw,
                )?;
                rec.grid.write_sparse_text(
                    BufWriter::new(File::create(out_dir.join("voxels_filtered.txt"))?),
                    Field::Filtered,
                )?;
                rec.grid.save(out_dir.join("voxels.bin"))?;
            }
            println!(
                "wrote {} maps and {} voxels to {}",
                rec.maps.len(),
                rec.grid.values.len(),
                out_dir.display()
            );
            Ok(())
        }
        Command::Pipeline {
            config,
            out_dir,
            seed,
            backend,
            tensor,
            fft_len,
        } => {
            let cfg = load(&config, seed)?;
            let mut backend: Box<dyn AcquisitionBackend> = match backend {
                BackendKind::Sim => Box::new(SimBackend::new(
                    cfg.build_scene()?,
                    cfg.array.clone(),
                    cfg.sweep,
                    cfg.sim,
                    cfg.detector,
                    cfg.seed,
                )),
                BackendKind::Replay => {
                    let path = tensor.ok_or_else(|| {
                        RisError::Config("--backend replay requires --tensor".into())
                    })?;
                    Box::new(ReplayBackend::new(MeasurementTensor::load(&path)?))
                }
            };
            let run = run_pipeline(&cfg, backend.as_mut(), &out_dir, fft_len)?;
            println!(
                "pipeline complete: {} beams, {} maps, artifacts in {}",
                run.num_beams,
                run.reconstruction.maps.len(),
                run.out_dir.display()
            );
            Ok(())
        }
        Command::BeamReport {
            config,
            out_dir,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let codebook = scan_codebook(&cfg)?;
            let gains = beam_report(
                &codebook,
                &cfg.array,
                cfg.tx,
                cfg.array.design_wavelength(),
            );
            fs::create_dir_all(&out_dir)?;
            let path = out_dir.join("beam_report.txt");
            write_beam_report(&gains, BufWriter::new(File::create(&path)?))?;
            println!("wrote {} ({} beams)", path.display(), gains.len());
            Ok(())
        }
    }
}
