//! Forward simulator: the physics oracle behind the acquisition backend.
//!
//! Synthesizes the complex S21 sweep a VNA would measure for a configured
//! RIS and a point-scatterer scene. The propagation is the dual-hop
//! TX → RIS → scatterer → RIS → RX model with exact spherical-wave
//! distances; the RIS phase is applied on each bounce. Per scatterer q and
//! antenna a the hop sum is
//!
//! ```text
//! F_a,q(f) = Σ_nm A_nm · exp(j ψ_nm) · exp(-j 2πf (r_a,nm + r_nm,q) / c)
//! ```
//!
//! with A_nm = 1/(r_a,nm · r_nm,q) when spreading loss is enabled, and
//! S21(f) = Σ_q σ_q · F_tx,q(f) · F_q,rx(f) plus optional leakage and noise.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::codebook::Codebook;
use crate::error::{Result, RisError};
use crate::geometry::{CartesianPoint, RisArray, Scene};
use crate::sweep::SweepConfig;
use crate::tensor::{BeamMeta, MeasurementTensor};
use crate::SPEED_OF_LIGHT;

/// Constant-delay TX→RX leakage tone, placed at a one-way range.
#[derive(Debug, Clone, Copy)]
pub struct Leakage {
    pub amplitude: f64,
    /// One-way range the tone appears at in the range profile.
    pub range_m: f64,
}

/// Forward-model options.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Apply per-hop 1/(r_a,nm · r_nm,q) amplitude factors.
    pub spreading_loss: bool,
    /// Std of the complex circular Gaussian noise added per frequency point.
    pub noise_std: f64,
    /// Optional direct leakage tone.
    pub leakage: Option<Leakage>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            spreading_loss: true,
            noise_std: 0.0,
            leakage: None,
        }
    }
}

impl SimOptions {
    /// No spreading loss, no noise, no leakage.
    pub fn ideal() -> Self {
        Self {
            spreading_loss: false,
            noise_std: 0.0,
            leakage: None,
        }
    }
}

/// One-hop element sum F_a,q over the whole sweep.
///
/// Exposed so the reciprocity of the two hops can be checked directly.
pub fn hop_sum(
    antenna: CartesianPoint,
    scatterer: CartesianPoint,
    array: &RisArray,
    applied: &[f64],
    sweep: &SweepConfig,
    spreading_loss: bool,
) -> Vec<Complex64> {
    let k = sweep.points();
    let mut out = vec![Complex64::new(0.0, 0.0); k];
    let f_start = sweep.f_start_hz();
    let step_hz = sweep.step_hz();
    for (e, &psi) in array.elements().iter().zip(applied) {
        let r_a = antenna.distance(e);
        let r_q = scatterer.distance(e);
        let d = r_a + r_q;
        let amp = if spreading_loss { 1.0 / (r_a * r_q) } else { 1.0 };
        // Phase recurrence over the sweep: one complex multiply per tone.
        let base_phase = psi - (f_start * d / SPEED_OF_LIGHT).fract() * TAU;
        let step_phase = -(step_hz * d / SPEED_OF_LIGHT).fract() * TAU;
        let mut cur = Complex64::from_polar(amp, base_phase);
        let step = Complex64::from_polar(1.0, step_phase);
        for v in out.iter_mut() {
            *v += cur;
            cur *= step;
        }
    }
    out
}

/// Simulate the complex S21 sweep for one RIS configuration.
///
/// `applied` is the per-element phase actually programmed on the surface
/// (normally a profile's quantized states). Fixed `seed` gives bit-identical
/// output; noise is complex circular Gaussian per frequency point.
pub fn simulate_s21(
    scene: &Scene,
    array: &RisArray,
    applied: &[f64],
    sweep: &SweepConfig,
    opts: &SimOptions,
    seed: u64,
) -> Result<Vec<Complex64>> {
    if applied.len() != array.num_elements() {
        return Err(RisError::Geometry(format!(
            "phase profile has {} states but the array has {} elements",
            applied.len(),
            array.num_elements()
        )));
    }
    if opts.noise_std < 0.0 {
        return Err(RisError::Config("noise std must be nonnegative".into()));
    }
    let k = sweep.points();
    let mut s21 = vec![Complex64::new(0.0, 0.0); k];

    for scatterer in &scene.scatterers {
        let f_tx = hop_sum(
            scene.tx,
            scatterer.position,
            array,
            applied,
            sweep,
            opts.spreading_loss,
        );
        let f_rx = if scene.rx == scene.tx {
            f_tx.clone()
        } else {
            hop_sum(
                scene.rx,
                scatterer.position,
                array,
                applied,
                sweep,
                opts.spreading_loss,
            )
        };
        for ((s, t), r) in s21.iter_mut().zip(&f_tx).zip(&f_rx) {
            *s += scatterer.reflectivity * t * r;
        }
    }

    if let Some(leak) = opts.leakage {
        for (i, s) in s21.iter_mut().enumerate() {
            let f = sweep.frequency_hz(i);
            let phase = -(f * 2.0 * leak.range_m / SPEED_OF_LIGHT).fract() * TAU;
            *s += Complex64::from_polar(leak.amplitude, phase);
        }
    }

    if opts.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = opts.noise_std / 2f64.sqrt();
        for s in s21.iter_mut() {
            let (a, b) = gaussian_pair(&mut rng);
            *s += Complex64::new(sigma * a, sigma * b);
        }
    }

    Ok(s21)
}

/// Box-Muller pair of independent standard normals.
fn gaussian_pair(rng: &mut impl Rng) -> (f64, f64) {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = TAU * u2;
    (r * phi.cos(), r * phi.sin())
}

/// One sweep per codebook entry, aggregated into a measurement tensor.
///
/// Entries are independent; they run in parallel and each gets its own
/// noise stream seeded by `seed + beam_index`, so the result does not
/// depend on scheduling.
pub fn simulate_tensor(
    scene: &Scene,
    array: &RisArray,
    codebook: &Codebook,
    sweep: &SweepConfig,
    opts: &SimOptions,
    seed: u64,
) -> Result<MeasurementTensor> {
    if codebook.is_empty() {
        return Err(RisError::Config("codebook is empty".into()));
    }
    let rows: Vec<Vec<Complex64>> = codebook
        .entries
        .par_iter()
        .map(|entry| {
            simulate_s21(
                scene,
                array,
                &entry.profile.quantized,
                sweep,
                opts,
                seed.wrapping_add(entry.beam_index as u64),
            )
        })
        .collect::<Result<_>>()?;
    let beams = codebook
        .entries
        .iter()
        .map(|e| BeamMeta {
            azimuth_deg: e.azimuth_deg,
            zenith_deg: e.zenith_deg,
            focus_r_m: e.focus_r_m,
        })
        .collect();
    MeasurementTensor::new(*sweep, beams, rows.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::build_codebook;
    use crate::geometry::Scatterer;
    use approx::assert_abs_diff_eq;

    fn feed() -> CartesianPoint {
        CartesianPoint::new(0.6, 0.0, 0.0)
    }

    fn sweep() -> SweepConfig {
        SweepConfig::from_band(26.5e9, 30.5e9, 64).unwrap()
    }

    fn single_element_array() -> RisArray {
        RisArray::new(1, 1, 0.005, 28.5e9).unwrap()
    }

    #[test]
    fn empty_scene_is_all_zero() {
        let scene = Scene::quasi_monostatic(vec![]).unwrap();
        let array = single_element_array();
        let s = simulate_s21(&scene, &array, &[0.0], &sweep(), &SimOptions::ideal(), 0).unwrap();
        assert!(s.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn single_path_is_a_phase_ramp() {
        let target = CartesianPoint::new(3.0, 0.0, 0.0);
        let scene = Scene::quasi_monostatic(vec![Scatterer::new(target, 0.7)]).unwrap();
        let array = single_element_array();
        let sw = sweep();
        let s = simulate_s21(&scene, &array, &[0.0], &sw, &SimOptions::ideal(), 0).unwrap();
        // One-way total path tx->element->target = 0.6 + 3.0.
        for (k, v) in s.iter().enumerate() {
            let f = sw.frequency_hz(k);
            let expect = Complex64::from_polar(
                0.7,
                -(f * 2.0 * 3.6 / SPEED_OF_LIGHT).fract() * TAU,
            );
            assert_abs_diff_eq!(v.re, expect.re, epsilon = 1e-9);
            assert_abs_diff_eq!(v.im, expect.im, epsilon = 1e-9);
        }
    }

    #[test]
    fn superposition_of_two_scatterers() {
        let array = RisArray::new(4, 4, 0.005, 28.5e9).unwrap();
        let a = Scatterer::new(CartesianPoint::new(3.0, -1.0, -0.38), 1.0);
        let b = Scatterer::new(CartesianPoint::new(2.0, 1.0, -0.3), 0.5);
        let phases = vec![0.0; 16];
        let opts = SimOptions::default();
        let sw = sweep();
        let both = Scene::quasi_monostatic(vec![a, b]).unwrap();
        let only_a = Scene::quasi_monostatic(vec![a]).unwrap();
        let only_b = Scene::quasi_monostatic(vec![b]).unwrap();
        let s_both = simulate_s21(&both, &array, &phases, &sw, &opts, 0).unwrap();
        let s_a = simulate_s21(&only_a, &array, &phases, &sw, &opts, 0).unwrap();
        let s_b = simulate_s21(&only_b, &array, &phases, &sw, &opts, 0).unwrap();
        for ((ab, a), b) in s_both.iter().zip(&s_a).zip(&s_b) {
            let sum = a + b;
            assert_abs_diff_eq!(ab.re, sum.re, epsilon = 1e-9 * sum.norm().max(1.0));
            assert_abs_diff_eq!(ab.im, sum.im, epsilon = 1e-9 * sum.norm().max(1.0));
        }
    }

    #[test]
    fn doubling_reflectivity_doubles_s21() {
        let array = RisArray::new(4, 4, 0.005, 28.5e9).unwrap();
        let phases = vec![0.0; 16];
        let sw = sweep();
        let p = CartesianPoint::new(2.5, 0.5, -0.4);
        let one = Scene::quasi_monostatic(vec![Scatterer::new(p, 1.0)]).unwrap();
        let two = Scene::quasi_monostatic(vec![Scatterer::new(p, 2.0)]).unwrap();
        let s1 = simulate_s21(&one, &array, &phases, &sw, &SimOptions::default(), 0).unwrap();
        let s2 = simulate_s21(&two, &array, &phases, &sw, &SimOptions::default(), 0).unwrap();
        for (a, b) in s1.iter().zip(&s2) {
            assert_eq!(b, &(a * 2.0));
        }
    }

    #[test]
    fn reciprocity_when_monostatic() {
        let array = RisArray::new(6, 6, 0.005, 28.5e9).unwrap();
        let target = CartesianPoint::new(2.0, 1.0, -0.3);
        let phases: Vec<f64> = (0..36).map(|i| (i % 2) as f64 * std::f64::consts::PI).collect();
        let sw = sweep();
        let f_tx = hop_sum(feed(), target, &array, &phases, &sw, true);
        let f_rx = hop_sum(feed(), target, &array, &phases, &sw, true);
        assert_eq!(f_tx, f_rx);
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let array = single_element_array();
        let scene = Scene::quasi_monostatic(vec![Scatterer::new(
            CartesianPoint::new(3.0, 0.0, 0.0),
            1.0,
        )])
        .unwrap();
        let opts = SimOptions {
            noise_std: 0.1,
            ..SimOptions::ideal()
        };
        let a = simulate_s21(&scene, &array, &[0.0], &sweep(), &opts, 42).unwrap();
        let b = simulate_s21(&scene, &array, &[0.0], &sweep(), &opts, 42).unwrap();
        let c = simulate_s21(&scene, &array, &[0.0], &sweep(), &opts, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn profile_length_mismatch_rejected() {
        let array = RisArray::new(2, 2, 0.005, 28.5e9).unwrap();
        let scene = Scene::quasi_monostatic(vec![]).unwrap();
        assert!(simulate_s21(&scene, &array, &[0.0; 3], &sweep(), &SimOptions::ideal(), 0).is_err());
    }

    #[test]
    fn tensor_matches_single_sweep() {
        let array = RisArray::new(4, 4, 0.005, 28.5e9).unwrap();
        let scene = Scene::quasi_monostatic(vec![Scatterer::new(
            CartesianPoint::new(3.0, -1.0, -0.38),
            1.0,
        )])
        .unwrap();
        let sw = sweep();
        let cb = build_codebook(
            &array,
            feed(),
            &[(-18.4, 96.8)],
            3.18,
            array.design_wavelength(),
        )
        .unwrap();
        let opts = SimOptions::default();
        let tensor = simulate_tensor(&scene, &array, &cb, &sw, &opts, 7).unwrap();
        assert_eq!(tensor.num_beams(), 1);
        let direct = simulate_s21(
            &scene,
            &array,
            &cb.entries[0].profile.quantized,
            &sw,
            &opts,
            7,
        )
        .unwrap();
        assert_eq!(tensor.row(0), &direct[..]);
    }

    #[test]
    fn tensor_is_deterministic_across_runs() {
        let array = RisArray::new(8, 8, 0.005, 28.5e9).unwrap();
        let scene = Scene::quasi_monostatic(vec![Scatterer::new(
            CartesianPoint::new(2.0, 1.0, -0.3),
            1.0,
        )])
        .unwrap();
        let sw = sweep();
        let grid: Vec<(f64, f64)> = (0..6).map(|i| (20.0 + i as f64, 97.0)).collect();
        let cb = build_codebook(&array, feed(), &grid, 2.26, array.design_wavelength()).unwrap();
        let opts = SimOptions {
            noise_std: 0.05,
            ..SimOptions::default()
        };
        let a = simulate_tensor(&scene, &array, &cb, &sw, &opts, 99).unwrap();
        let b = simulate_tensor(&scene, &array, &cb, &sw, &opts, 99).unwrap();
        assert_eq!(a, b);
    }
}
