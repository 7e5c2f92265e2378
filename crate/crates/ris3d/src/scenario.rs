//! Scenario configuration files and target point-cloud generation.
//!
//! A scenario is a TOML file pinning the sweep, the array, antenna
//! positions, target primitives, ROI defaults, imaging parameters and the
//! simulator options. Target primitives (humanoid silhouette, sphere, box)
//! expand into deterministic seeded point clouds; only surfaces facing the
//! array are sampled, since back faces scatter away from the receiver.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Result, RisError};
use crate::geometry::{CartesianPoint, RisArray, Scatterer, Scene};
use crate::roi::DetectorNoise;
use crate::sim::{Leakage, SimOptions};
use crate::sweep::SweepConfig;
use crate::volumetric::ImagingParams;

/// Target primitive shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Flat silhouette (torso ellipse plus head disc) facing the array.
    Humanoid { height_m: f64, width_m: f64 },
    Sphere { radius_m: f64 },
    /// Axis-aligned box given as (x, y, z) edge lengths.
    Box { size_m: [f64; 3] },
}

/// One named target: a primitive sampled into `points` scatterers.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub name: String,
    pub shape: Shape,
    pub center: CartesianPoint,
    pub points: usize,
    /// Per-point reflectivity.
    pub reflectivity: f64,
}

/// Fully validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub sweep: SweepConfig,
    pub array: RisArray,
    pub tx: CartesianPoint,
    pub rx: CartesianPoint,
    pub targets: Vec<TargetSpec>,
    pub roi: RoiDefaults,
    pub detector: DetectorNoise,
    pub imaging: ImagingParams,
    pub sim: SimOptions,
    pub seed: u64,
}

/// ROI construction defaults used by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiDefaults {
    pub step_deg: f64,
    pub span_azimuth_deg: f64,
    pub span_zenith_deg: f64,
    pub center_zenith_deg: f64,
    pub range_pad_m: f64,
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| {
            RisError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
            .map_err(|e| RisError::Config(format!("{}: {e}", path.display())))
    }

    /// Parse and validate a scenario from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text)
            .map_err(|e| RisError::Config(e.to_string()))?;
        raw.validate()
    }

    /// Expand every target into scatterers and assemble the scene.
    pub fn build_scene(&self) -> Result<Scene> {
        let mut scatterers = Vec::new();
        for (i, target) in self.targets.iter().enumerate() {
            scatterers.extend(sample_target(target, self.seed.wrapping_add(i as u64)));
        }
        Scene::new(scatterers, self.tx, self.rx)
    }

    /// Per-target clouds, in declaration order, with the same seeds the
    /// scene builder uses. Handy for ground-truth centroid checks.
    pub fn target_clouds(&self) -> Vec<(String, Vec<Scatterer>)> {
        self.targets
            .iter()
            .enumerate()
            .map(|(i, t)| {
                (
                    t.name.clone(),
                    sample_target(t, self.seed.wrapping_add(i as u64)),
                )
            })
            .collect()
    }
}

/// Deterministic point cloud for one target.
pub fn sample_target(target: &TargetSpec, seed: u64) -> Vec<Scatterer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = target.center;
    let mut points = Vec::with_capacity(target.points);
    match target.shape {
        Shape::Humanoid { height_m, width_m } => {
            // Billboard silhouette in the vertical plane through the target
            // center, broadside to the array at the origin.
            let horiz = (c.x * c.x + c.y * c.y).sqrt();
            let (ux, uy) = if horiz > 0.0 {
                (-c.y / horiz, c.x / horiz)
            } else {
                (0.0, 1.0)
            };
            // Torso ellipse and head disc overlap, so the silhouette is one
            // connected region.
            let torso_c = -0.10 * height_m;
            let torso_a = width_m / 2.0;
            let torso_b = 0.38 * height_m;
            let head_c = 0.38 * height_m;
            let head_r = 0.12 * height_m;
            while points.len() < target.points {
                let u = rng.gen_range(-torso_a..=torso_a);
                let v = rng.gen_range(-0.5 * height_m..=0.5 * height_m);
                let in_torso = (u / torso_a).powi(2) + ((v - torso_c) / torso_b).powi(2) <= 1.0;
                let dv = v - head_c;
                let in_head = u * u + dv * dv <= head_r * head_r;
                if in_torso || in_head {
                    points.push(CartesianPoint::new(c.x + u * ux, c.y + u * uy, c.z + v));
                }
            }
        }
        Shape::Sphere { radius_m } => {
            // Uniform on the hemisphere whose normals face the origin.
            let to_origin = CartesianPoint::new(-c.x, -c.y, -c.z);
            let n = to_origin.norm();
            let d = if n > 0.0 {
                CartesianPoint::new(to_origin.x / n, to_origin.y / n, to_origin.z / n)
            } else {
                CartesianPoint::new(-1.0, 0.0, 0.0)
            };
            while points.len() < target.points {
                let (mut x, mut y, mut z);
                loop {
                    x = rng.gen_range(-1.0..=1.0);
                    y = rng.gen_range(-1.0..=1.0);
                    z = rng.gen_range(-1.0..=1.0);
                    let r2: f64 = x * x + y * y + z * z;
                    if r2 > 1e-12 && r2 <= 1.0 {
                        let r = r2.sqrt();
                        x /= r;
                        y /= r;
                        z /= r;
                        break;
                    }
                }
                if x * d.x + y * d.y + z * d.z < 0.0 {
                    x = -x;
                    y = -y;
                    z = -z;
                }
                points.push(CartesianPoint::new(
                    c.x + radius_m * x,
                    c.y + radius_m * y,
                    c.z + radius_m * z,
                ));
            }
        }
        Shape::Box { size_m } => {
            // Sample the faces whose outward normal points toward the
            // origin, weighted by projected area.
            let to_origin = CartesianPoint::new(-c.x, -c.y, -c.z);
            let n = to_origin.norm().max(1e-12);
            let d = [to_origin.x / n, to_origin.y / n, to_origin.z / n];
            let half = [size_m[0] / 2.0, size_m[1] / 2.0, size_m[2] / 2.0];
            // (axis, sign, projected-area weight)
            let mut faces = Vec::new();
            for axis in 0..3 {
                let area = match axis {
                    0 => size_m[1] * size_m[2],
                    1 => size_m[0] * size_m[2],
                    _ => size_m[0] * size_m[1],
                };
                for sign in [-1.0, 1.0] {
                    let w = (sign * d[axis]).max(0.0) * area;
                    if w > 0.0 {
                        faces.push((axis, sign, w));
                    }
                }
            }
            if faces.is_empty() {
                // Degenerate (origin inside the box column): fall back to
                // the -x face.
                faces.push((0, -1.0, 1.0));
            }
            let total: f64 = faces.iter().map(|f| f.2).sum();
            while points.len() < target.points {
                let mut pick = rng.gen_range(0.0..total);
                let mut chosen = faces[faces.len() - 1];
                for &f in &faces {
                    if pick < f.2 {
                        chosen = f;
                        break;
                    }
                    pick -= f.2;
                }
                let (axis, sign, _) = chosen;
                let mut p = [
                    rng.gen_range(-half[0]..=half[0]),
                    rng.gen_range(-half[1]..=half[1]),
                    rng.gen_range(-half[2]..=half[2]),
                ];
                p[axis] = sign * half[axis];
                points.push(CartesianPoint::new(c.x + p[0], c.y + p[1], c.z + p[2]));
            }
        }
    }
    points
        .into_iter()
        .map(|p| Scatterer::new(p, target.reflectivity))
        .collect()
}

/// Unweighted centroid of a cloud.
pub fn cloud_centroid(cloud: &[Scatterer]) -> Option<CartesianPoint> {
    if cloud.is_empty() {
        return None;
    }
    let n = cloud.len() as f64;
    let mut acc = [0.0; 3];
    for s in cloud {
        acc[0] += s.position.x;
        acc[1] += s.position.y;
        acc[2] += s.position.z;
    }
    Some(CartesianPoint::new(acc[0] / n, acc[1] / n, acc[2] / n))
}

// ── raw TOML schema ─────────────────────────────────────────────────────

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    seed: u64,
    sweep: RawSweep,
    ris: RawRis,
    antennas: RawAntennas,
    #[serde(default)]
    targets: Vec<RawTarget>,
    roi: RawRoi,
    #[serde(default)]
    detection: RawDetection,
    imaging: RawImaging,
    #[serde(default)]
    sim: RawSim,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    f_start_hz: f64,
    f_stop_hz: f64,
    points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRis {
    rows: usize,
    cols: usize,
    pitch_m: f64,
    design_frequency_hz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAntennas {
    tx_m: [f64; 3],
    rx_m: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    name: String,
    shape: String,
    center_m: [f64; 3],
    points: usize,
    #[serde(default = "default_reflectivity")]
    reflectivity: f64,
    height_m: Option<f64>,
    width_m: Option<f64>,
    radius_m: Option<f64>,
    size_m: Option<[f64; 3]>,
}

fn default_reflectivity() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoi {
    step_deg: f64,
    azimuth_span_deg: f64,
    zenith_span_deg: f64,
    center_zenith_deg: f64,
    range_pad_m: f64,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDetection {
    #[serde(default)]
    range_std_m: f64,
    #[serde(default)]
    azimuth_std_deg: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImaging {
    voxel_size_m: f64,
    delta_m: f64,
    sigma_voxels: f64,
    tau_db: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    #[serde(default = "default_true")]
    spreading_loss: bool,
    #[serde(default)]
    noise_std: f64,
    leakage: Option<RawLeakage>,
}

impl Default for RawSim {
    fn default() -> Self {
        Self {
            spreading_loss: true,
            noise_std: 0.0,
            leakage: None,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLeakage {
    amplitude: f64,
    range_m: f64,
}

impl RawScenario {
    fn validate(self) -> Result<ScenarioConfig> {
        let sweep = SweepConfig::from_band(self.sweep.f_start_hz, self.sweep.f_stop_hz, self.sweep.points)
            .map_err(|e| RisError::Config(format!("sweep: {e}")))?;
        let array = RisArray::new(
            self.ris.rows,
            self.ris.cols,
            self.ris.pitch_m,
            self.ris.design_frequency_hz,
        )
        .map_err(|e| RisError::Config(format!("ris: {e}")))?;
        let tx = point(self.antennas.tx_m);
        let rx = point(self.antennas.rx_m);
        if !tx.is_finite() || !rx.is_finite() {
            return Err(RisError::Config("antennas: positions must be finite".into()));
        }

        let targets = self
            .targets
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.validate(i))
            .collect::<Result<Vec<_>>>()?;

        if self.roi.step_deg <= 0.0 {
            return Err(RisError::Config(format!(
                "roi.step_deg must be positive, got {}",
                self.roi.step_deg
            )));
        }
        if self.roi.range_pad_m <= 0.0 {
            return Err(RisError::Config(format!(
                "roi.range_pad_m must be positive, got {}",
                self.roi.range_pad_m
            )));
        }
        if self.imaging.voxel_size_m <= 0.0 {
            return Err(RisError::Config(format!(
                "imaging.voxel_size_m must be positive, got {}",
                self.imaging.voxel_size_m
            )));
        }
        if self.imaging.delta_m <= 0.0 {
            return Err(RisError::Config(format!(
                "imaging.delta_m must be positive, got {}",
                self.imaging.delta_m
            )));
        }
        if self.imaging.sigma_voxels <= 0.0 {
            return Err(RisError::Config(format!(
                "imaging.sigma_voxels must be positive, got {}",
                self.imaging.sigma_voxels
            )));
        }
        if self.sim.noise_std < 0.0 {
            return Err(RisError::Config(format!(
                "sim.noise_std must be nonnegative, got {}",
                self.sim.noise_std
            )));
        }

        Ok(ScenarioConfig {
            sweep,
            array,
            tx,
            rx,
            targets,
            roi: RoiDefaults {
                step_deg: self.roi.step_deg,
                span_azimuth_deg: self.roi.azimuth_span_deg,
                span_zenith_deg: self.roi.zenith_span_deg,
                center_zenith_deg: self.roi.center_zenith_deg,
                range_pad_m: self.roi.range_pad_m,
            },
            detector: DetectorNoise {
                sigma_range_m: self.detection.range_std_m,
                sigma_azimuth_deg: self.detection.azimuth_std_deg,
            },
            imaging: ImagingParams {
                voxel_size_m: self.imaging.voxel_size_m,
                delta_m: self.imaging.delta_m,
                sigma_voxels: self.imaging.sigma_voxels,
                tau_db: self.imaging.tau_db,
                range_pad_m: self.roi.range_pad_m,
                compensation: true,
            },
            sim: SimOptions {
                spreading_loss: self.sim.spreading_loss,
                noise_std: self.sim.noise_std,
                leakage: self.sim.leakage.map(|l| Leakage {
                    amplitude: l.amplitude,
                    range_m: l.range_m,
                }),
            },
            seed: self.seed,
        })
    }
}

impl RawTarget {
    fn validate(self, index: usize) -> Result<TargetSpec> {
        let at = |field: &str, msg: &str| {
            RisError::Config(format!("targets[{index}].{field}: {msg}"))
        };
        if self.points == 0 {
            return Err(at("points", "must be at least 1"));
        }
        if self.reflectivity < 0.0 {
            return Err(at("reflectivity", "must be nonnegative"));
        }
        let require = |v: Option<f64>, field: &str| {
            let v = v.ok_or_else(|| {
                at(field, &format!("required for shape \"{}\"", self.shape))
            })?;
            if v <= 0.0 {
                return Err(at(field, "must be positive"));
            }
            Ok(v)
        };
        let shape = match self.shape.as_str() {
            "humanoid" => Shape::Humanoid {
                height_m: require(self.height_m, "height_m")?,
                width_m: require(self.width_m, "width_m")?,
            },
            "sphere" => Shape::Sphere {
                radius_m: require(self.radius_m, "radius_m")?,
            },
            "box" => {
                let size = self
                    .size_m
                    .ok_or_else(|| at("size_m", "required for shape \"box\""))?;
                if size.iter().any(|&s| s <= 0.0) {
                    return Err(at("size_m", "edges must be positive"));
                }
                Shape::Box { size_m: size }
            }
            other => {
                return Err(at(
                    "shape",
                    &format!("unknown shape \"{other}\" (expected humanoid, sphere or box)"),
                ))
            }
        };
        // Reject stray dimension fields so typos do not silently vanish.
        let stray = match shape {
            Shape::Humanoid { .. } => self.radius_m.is_some() || self.size_m.is_some(),
            Shape::Sphere { .. } => {
                self.height_m.is_some() || self.width_m.is_some() || self.size_m.is_some()
            }
            Shape::Box { .. } => {
                self.height_m.is_some() || self.width_m.is_some() || self.radius_m.is_some()
            }
        };
        if stray {
            return Err(at("shape", "dimension fields do not match the shape"));
        }
        Ok(TargetSpec {
            name: self.name,
            shape,
            center: point(self.center_m),
            points: self.points,
            reflectivity: self.reflectivity,
        })
    }
}

fn point(v: [f64; 3]) -> CartesianPoint {
    CartesianPoint::new(v[0], v[1], v[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const MINIMAL: &str = r#"
seed = 7

[sweep]
f_start_hz = 26.5e9
f_stop_hz = 30.5e9
points = 256

[ris]
rows = 40
cols = 40
pitch_m = 5.263157894736842e-3
design_frequency_hz = 28.5e9

[antennas]
tx_m = [0.6, 0.0, 0.0]
rx_m = [0.6, 0.0, 0.0]

[roi]
step_deg = 0.5
azimuth_span_deg = 10.0
zenith_span_deg = 10.0
center_zenith_deg = 97.0
range_pad_m = 0.5

[imaging]
voxel_size_m = 0.02
delta_m = 0.10
sigma_voxels = 2.0
tau_db = -65.0

[[targets]]
name = "mannequin"
shape = "humanoid"
center_m = [3.0, -1.0, -0.38]
height_m = 1.85
width_m = 0.50
points = 50
"#;

    #[test]
    fn minimal_scenario_parses() {
        let cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.sweep.points(), 256);
        assert_abs_diff_eq!(cfg.sweep.f_start_hz(), 26.5e9);
        assert_eq!(cfg.array.rows(), 40);
        assert_eq!(cfg.targets.len(), 1);
        assert_abs_diff_eq!(cfg.roi.step_deg, 0.5);
        assert!(cfg.sim.spreading_loss);
        assert_abs_diff_eq!(cfg.imaging.tau_db, -65.0);
        let scene = cfg.build_scene().unwrap();
        assert_eq!(scene.scatterers.len(), 50);
    }

    #[test]
    fn unknown_keys_rejected_with_name() {
        let text = MINIMAL.replace("seed = 7", "seed = 7\nbogus_key = 1");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn missing_shape_dimension_names_field() {
        let text = MINIMAL.replace("height_m = 1.85\n", "");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("targets[0].height_m"), "{err}");
    }

    #[test]
    fn stray_dimension_rejected() {
        let text = MINIMAL.replace("width_m = 0.50", "width_m = 0.50\nradius_m = 0.1");
        assert!(ScenarioConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn unknown_shape_rejected() {
        let text = MINIMAL.replace("shape = \"humanoid\"", "shape = \"cone\"");
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("cone"), "{err}");
    }

    #[test]
    fn clouds_are_seed_deterministic() {
        let cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        let a = cfg.build_scene().unwrap();
        let b = cfg.build_scene().unwrap();
        assert_eq!(a.scatterers, b.scatterers);
    }

    #[test]
    fn humanoid_cloud_extent_and_centroid() {
        let target = TargetSpec {
            name: "t".into(),
            shape: Shape::Humanoid {
                height_m: 1.85,
                width_m: 0.5,
            },
            center: CartesianPoint::new(3.0, -1.0, -0.38),
            points: 600,
            reflectivity: 1.0,
        };
        let cloud = sample_target(&target, 1);
        assert_eq!(cloud.len(), 600);
        for s in &cloud {
            assert!((s.position.z - (-0.38)).abs() <= 0.925 + 1e-9);
            // Billboard plane: distance from the vertical plane through the
            // center is bounded by half the width.
            let d = s.position.distance(&CartesianPoint::new(3.0, -1.0, s.position.z));
            assert!(d <= 0.25 + 1e-9);
        }
        let c = cloud_centroid(&cloud).unwrap();
        assert_abs_diff_eq!(c.x, 3.0, epsilon = 0.05);
        assert_abs_diff_eq!(c.y, -1.0, epsilon = 0.05);
        // The head sits above the torso midline, so the centroid rides a
        // little below the geometric center.
        assert!((c.z - (-0.38)).abs() < 0.2);
    }

    #[test]
    fn sphere_cloud_faces_origin() {
        let target = TargetSpec {
            name: "s".into(),
            shape: Shape::Sphere { radius_m: 0.15 },
            center: CartesianPoint::new(2.0, 1.0, -0.3),
            points: 400,
            reflectivity: 1.0,
        };
        let c = target.center;
        for s in sample_target(&target, 2) {
            assert_abs_diff_eq!(s.position.distance(&c), 0.15, epsilon = 1e-9);
            // Outward normal has a nonnegative component toward the origin.
            let n = (
                s.position.x - c.x,
                s.position.y - c.y,
                s.position.z - c.z,
            );
            assert!(n.0 * -c.x + n.1 * -c.y + n.2 * -c.z >= -1e-9);
        }
    }

    #[test]
    fn box_cloud_on_facing_surfaces() {
        let target = TargetSpec {
            name: "agv".into(),
            shape: Shape::Box {
                size_m: [0.72, 0.61, 0.42],
            },
            center: CartesianPoint::new(3.9, -1.2, -1.09),
            points: 300,
            reflectivity: 1.0,
        };
        let c = target.center;
        let half = [0.36, 0.305, 0.21];
        for s in sample_target(&target, 3) {
            let d = [
                (s.position.x - c.x).abs(),
                (s.position.y - c.y).abs(),
                (s.position.z - c.z).abs(),
            ];
            // On the surface: at least one coordinate pinned to a face.
            assert!(d.iter().zip(&half).any(|(di, hi)| (di - hi).abs() < 1e-9));
            assert!(d.iter().zip(&half).all(|(di, hi)| *di <= hi + 1e-9));
            // Never on the far (+x) face, which looks away from the origin.
            assert!(s.position.x - c.x < half[0] - 1e-9);
        }
    }

    #[test]
    fn leakage_and_noise_options_parse() {
        let text = format!(
            "{MINIMAL}\n[sim]\nspreading_loss = false\nnoise_std = 1e-9\n\n[sim.leakage]\namplitude = 1e-3\nrange_m = 0.6\n"
        );
        let cfg = ScenarioConfig::from_toml_str(&text).unwrap();
        assert!(!cfg.sim.spreading_loss);
        let leak = cfg.sim.leakage.unwrap();
        assert_abs_diff_eq!(leak.range_m, 0.6);
    }
}
