//! Coarse radar detections and ROI grid construction.
//!
//! A mock FMCW detector stands in for the hardware radar: it clusters scene
//! scatterers (single linkage, 0.3 m radius), reports each cluster centroid
//! as an (R, φ) detection with optional Gaussian measurement noise, and the
//! ROI builder turns a detection into the angular grid the RIS scans.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RisError};
use crate::geometry::{cart_to_sph, CartesianPoint, Scene};

/// Azimuth coverage of the coarse radar, degrees each side of boresight.
pub const RADAR_AZIMUTH_COVERAGE_DEG: f64 = 60.0;

/// Scatterers closer than this are merged into one detection cluster.
pub const CLUSTER_RADIUS_M: f64 = 0.3;

/// One coarse (R, φ) detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarDetection {
    pub range_m: f64,
    pub azimuth_deg: f64,
    /// Dimensionless [0, 1].
    pub confidence: f64,
}

/// Gaussian measurement noise of the mock detector.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DetectorNoise {
    pub sigma_range_m: f64,
    pub sigma_azimuth_deg: f64,
}

/// Mock FMCW detection: one detection per scatterer cluster.
///
/// Deterministic given `seed`. Clusters whose centroid azimuth falls outside
/// the radar's ±60° coverage are dropped.
pub fn mock_fmcw_detect(scene: &Scene, noise: DetectorNoise, seed: u64) -> Vec<RadarDetection> {
    let positions: Vec<CartesianPoint> = scene.scatterers.iter().map(|s| s.position).collect();
    let clusters = single_linkage_clusters(&positions, CLUSTER_RADIUS_M);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut detections = Vec::new();
    for cluster in clusters {
        let n = cluster.len() as f64;
        let centroid = CartesianPoint::new(
            cluster.iter().map(|&i| positions[i].x).sum::<f64>() / n,
            cluster.iter().map(|&i| positions[i].y).sum::<f64>() / n,
            cluster.iter().map(|&i| positions[i].z).sum::<f64>() / n,
        );
        let sph = cart_to_sph(centroid);
        let (g_r, g_phi) = (gaussian(&mut rng), gaussian(&mut rng));
        let range = sph.range_m + noise.sigma_range_m * g_r;
        let azimuth = sph.azimuth_deg + noise.sigma_azimuth_deg * g_phi;
        if azimuth.abs() > RADAR_AZIMUTH_COVERAGE_DEG || range <= 0.0 {
            continue;
        }
        detections.push(RadarDetection {
            range_m: range,
            azimuth_deg: azimuth,
            confidence: 1.0,
        });
    }
    detections
}

/// Union-find single-linkage clustering; clusters ordered by lowest member
/// index, members ascending.
fn single_linkage_clusters(points: &[CartesianPoint], radius: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i].distance(&points[j]) <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        match root_of[root] {
            Some(c) => clusters[c].push(i),
            None => {
                root_of[root] = Some(clusters.len());
                clusters.push(vec![i]);
            }
        }
    }
    clusters
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Angular scan region around one detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiSpec {
    pub center_azimuth_deg: f64,
    pub center_zenith_deg: f64,
    /// Full widths, degrees.
    pub span_azimuth_deg: f64,
    pub span_zenith_deg: f64,
    /// Angular step Δψ, degrees.
    pub step_deg: f64,
    /// Focus distance for every beam of this ROI.
    pub focus_r_m: f64,
    /// Range gate [R_min, R_max] in scene (RIS-to-target) meters.
    pub range_window: (f64, f64),
}

/// Build an ROI centered on a detection.
///
/// The grid has floor(span/Δψ)+1 steps per axis, symmetric about the
/// center; the range window is the detection range ± `range_pad_m`.
pub fn define_roi(
    detection: &RadarDetection,
    span_azimuth_deg: f64,
    span_zenith_deg: f64,
    step_deg: f64,
    center_zenith_deg: f64,
    range_pad_m: f64,
) -> Result<RoiSpec> {
    if step_deg <= 0.0 {
        return Err(RisError::Config(format!(
            "ROI angular step must be positive, got {step_deg}"
        )));
    }
    if span_azimuth_deg < 0.0 || span_zenith_deg < 0.0 {
        return Err(RisError::Config("ROI spans must be nonnegative".into()));
    }
    let r_min = (detection.range_m - range_pad_m).max(0.0);
    Ok(RoiSpec {
        center_azimuth_deg: detection.azimuth_deg,
        center_zenith_deg,
        span_azimuth_deg,
        span_zenith_deg,
        step_deg,
        focus_r_m: detection.range_m,
        range_window: (r_min, detection.range_m + range_pad_m),
    })
}

impl RoiSpec {
    fn axis(center: f64, span: f64, step: f64) -> Vec<f64> {
        let steps = (span / step).floor() as usize + 1;
        let half = (steps - 1) as f64 / 2.0;
        (0..steps)
            .map(|i| center + (i as f64 - half) * step)
            .collect()
    }

    /// Ascending azimuth grid values.
    pub fn azimuth_axis(&self) -> Vec<f64> {
        Self::axis(self.center_azimuth_deg, self.span_azimuth_deg, self.step_deg)
    }

    /// Ascending zenith grid values.
    pub fn zenith_axis(&self) -> Vec<f64> {
        Self::axis(self.center_zenith_deg, self.span_zenith_deg, self.step_deg)
    }

    pub fn num_beams(&self) -> usize {
        self.azimuth_axis().len() * self.zenith_axis().len()
    }
}

/// Ordered (φ_i, θ_j) scan list: θ outer, φ inner, both ascending.
pub fn roi_grid(roi: &RoiSpec) -> Vec<(f64, f64)> {
    let phis = roi.azimuth_axis();
    let thetas = roi.zenith_axis();
    let mut grid = Vec::with_capacity(phis.len() * thetas.len());
    for &theta in &thetas {
        for &phi in &phis {
            grid.push((phi, theta));
        }
    }
    grid
}

/// Read detections from a text file: `R phi confidence` per line,
/// `#` comments allowed. Lets recorded radar output replace the mock.
pub fn read_detections(path: impl AsRef<Path>) -> Result<Vec<RadarDetection>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(RisError::Format(format!(
                "detections line {}: expected `R phi confidence`, got {trimmed:?}",
                lineno + 1
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| {
                RisError::Format(format!(
                    "detections line {}: bad {what} value {s:?}",
                    lineno + 1
                ))
            })
        };
        out.push(RadarDetection {
            range_m: parse(fields[0], "range")?,
            azimuth_deg: parse(fields[1], "azimuth")?,
            confidence: parse(fields[2], "confidence")?,
        });
    }
    Ok(out)
}

/// Write detections in the format [`read_detections`] accepts.
pub fn write_detections(path: impl AsRef<Path>, detections: &[RadarDetection]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# R_m azimuth_deg confidence")?;
    for d in detections {
        writeln!(w, "{} {} {}", d.range_m, d.azimuth_deg, d.confidence)?;
    }
    Ok(())
}
