//! Near-field focusing phase profiles and their 1-bit quantization.
//!
//! For a focus point P the optimal continuous phase of element (n, m) is the
//! total path phase (2π/λ)(r_tx,nm + r_nm,P) reduced mod 2π, using exact
//! spherical-wave distances. Applying +ψ_opt against the propagation factor
//! exp(-jψ_path) makes all element contributions align at P, so the
//! continuous-phase array factor at the focus equals N·M. The 1-bit state is
//! 0 where cos(ψ_opt) >= 0 and π otherwise.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Result, RisError};
use crate::geometry::{sph_to_cart, CartesianPoint, RisArray, SphericalPoint};

/// Continuous and 1-bit quantized phase matrices for one focus point.
#[derive(Debug, Clone)]
pub struct PhaseProfile {
    pub rows: usize,
    pub cols: usize,
    /// ψ_opt per element in [0, 2π), row-major.
    pub continuous: Vec<f64>,
    /// Quantized states per element, each exactly 0 or π, row-major.
    pub quantized: Vec<f64>,
    pub focus: CartesianPoint,
    pub wavelength_m: f64,
}

impl PhaseProfile {
    /// Compute the continuous profile for `target` and quantize it.
    pub fn design(
        array: &RisArray,
        tx: CartesianPoint,
        target: CartesianPoint,
        wavelength_m: f64,
    ) -> Result<Self> {
        let continuous = optimal_phase(array, tx, target, wavelength_m)?;
        let quantized = quantize_1bit(&continuous);
        Ok(Self {
            rows: array.rows(),
            cols: array.cols(),
            continuous,
            quantized,
            focus: target,
            wavelength_m,
        })
    }
}

/// Optimal continuous phases, row-major, each in [0, 2π).
pub fn optimal_phase(
    array: &RisArray,
    tx: CartesianPoint,
    target: CartesianPoint,
    wavelength_m: f64,
) -> Result<Vec<f64>> {
    if wavelength_m <= 0.0 || !wavelength_m.is_finite() {
        return Err(RisError::Geometry(format!(
            "wavelength must be positive, got {wavelength_m}"
        )));
    }
    array
        .elements()
        .iter()
        .map(|e| {
            let d_tx = tx.distance(e);
            let d_p = target.distance(e);
            if d_p < 1e-12 || d_tx < 1e-12 {
                return Err(RisError::Geometry(
                    "focus or feed point coincides with a RIS element".into(),
                ));
            }
            // frac of the path length in wavelengths, scaled back to radians;
            // keeps the mod-2π reduction accurate for paths of many λ.
            Ok(((d_tx + d_p) / wavelength_m).fract() * TAU)
        })
        .collect()
}

/// 1-bit quantization: 0 where cos(ψ) >= 0, π where cos(ψ) < 0.
pub fn quantize_1bit(continuous: &[f64]) -> Vec<f64> {
    continuous
        .iter()
        .map(|&p| if p.cos() >= 0.0 { 0.0 } else { PI })
        .collect()
}

/// Complex array factor of `applied` phases evaluated at `eval_point`.
///
/// Sums exp(j·ψ_nm)·exp(-j(2π/λ)(r_tx,nm + r_nm,eval)) over all elements.
/// This is the single-bounce focusing oracle: with continuous phases and
/// eval_point at the focus every term equals 1.
pub fn array_factor(
    applied: &[f64],
    array: &RisArray,
    tx: CartesianPoint,
    eval_point: CartesianPoint,
    wavelength_m: f64,
) -> Complex64 {
    debug_assert_eq!(applied.len(), array.num_elements());
    let mut sum = Complex64::new(0.0, 0.0);
    for (e, &psi) in array.elements().iter().zip(applied) {
        let path = tx.distance(e) + eval_point.distance(e);
        let phase = psi - (path / wavelength_m).fract() * TAU;
        sum += Complex64::from_polar(1.0, phase);
    }
    sum
}

/// One RIS configuration of a beam scan.
#[derive(Debug, Clone)]
pub struct CodebookEntry {
    pub beam_index: usize,
    pub azimuth_deg: f64,
    pub zenith_deg: f64,
    pub focus_r_m: f64,
    pub profile: PhaseProfile,
}

/// Ordered list of beam configurations, one per ROI grid point.
#[derive(Debug, Clone, Default)]
pub struct Codebook {
    pub entries: Vec<CodebookEntry>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Append another codebook, renumbering its beams to follow this one.
    pub fn extend(&mut self, other: Codebook) {
        let offset = self.entries.len();
        for (i, mut e) in other.entries.into_iter().enumerate() {
            e.beam_index = offset + i;
            self.entries.push(e);
        }
    }

    /// Export as the portable text format a RIS controller consumes:
    /// one `beam` header per entry followed by the quantized bit matrix,
    /// row-major, `0` for phase 0 and `1` for phase π.
    pub fn write_text(&self, mut w: impl Write) -> Result<()> {
        let (rows, cols) = self
            .entries
            .first()
            .map(|e| (e.profile.rows, e.profile.cols))
            .unwrap_or((0, 0));
        writeln!(w, "# ris3d codebook v1")?;
        writeln!(w, "rows {rows}")?;
        writeln!(w, "cols {cols}")?;
        writeln!(w, "entries {}", self.entries.len())?;
        for e in &self.entries {
            writeln!(
                w,
                "beam {} phi {} theta {} focus_r {}",
                e.beam_index, e.azimuth_deg, e.zenith_deg, e.focus_r_m
            )?;
            for n in 0..e.profile.rows {
                let mut line = String::with_capacity(e.profile.cols);
                for m in 0..e.profile.cols {
                    let bit = if e.profile.quantized[n * e.profile.cols + m] == 0.0 {
                        '0'
                    } else {
                        '1'
                    };
                    line.push(bit);
                }
                writeln!(w, "{line}")?;
            }
        }
        Ok(())
    }
}

/// Build one codebook entry per (φ, θ) grid point, all focused at `focus_r_m`.
pub fn build_codebook(
    array: &RisArray,
    tx: CartesianPoint,
    roi_grid: &[(f64, f64)],
    focus_r_m: f64,
    wavelength_m: f64,
) -> Result<Codebook> {
    if roi_grid.is_empty() {
        return Err(RisError::Config("ROI grid is empty".into()));
    }
    if focus_r_m <= 0.0 {
        return Err(RisError::Config(format!(
            "focus distance must be positive, got {focus_r_m}"
        )));
    }
    let entries = roi_grid
        .iter()
        .enumerate()
        .map(|(i, &(phi, theta))| {
            let focus = sph_to_cart(SphericalPoint::new(focus_r_m, phi, theta));
            Ok(CodebookEntry {
                beam_index: i,
                azimuth_deg: phi,
                zenith_deg: theta,
                focus_r_m,
                profile: PhaseProfile::design(array, tx, focus, wavelength_m)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Codebook { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn feed() -> CartesianPoint {
        CartesianPoint::new(0.6, 0.0, 0.0)
    }

    #[test]
    fn full_wavelength_path_gives_zero_phase() {
        // Single element at the origin; total path tx->element->target = λ.
        let array = RisArray::new(1, 1, 0.005, 28.5e9).unwrap();
        let lambda = 1.0;
        let target = CartesianPoint::new(0.4, 0.0, 0.0);
        let psi = optimal_phase(&array, feed(), target, lambda).unwrap();
        assert_abs_diff_eq!(psi[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn central_elements_match_scalar_arithmetic() {
        // 40x40 has no single central element; check the four inner ones
        // against a direct scalar computation of the path length.
        let array = RisArray::new(40, 40, 0.005, 28.5e9).unwrap();
        let lambda = array.design_wavelength();
        let target = CartesianPoint::new(3.0, -1.0, -0.38);
        let psi = optimal_phase(&array, feed(), target, lambda).unwrap();
        for (n, m) in [(19, 19), (19, 20), (20, 19), (20, 20)] {
            let e = array.element(n, m);
            let d = feed().distance(&e) + target.distance(&e);
            let expect = (d / lambda).fract() * TAU;
            assert_abs_diff_eq!(psi[n * 40 + m], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_elements_equal_phase_on_boresight() {
        let array = RisArray::new(2, 2, 0.01, 28.5e9).unwrap();
        let target = CartesianPoint::new(3.0, 0.0, 0.0);
        let psi = optimal_phase(&array, feed(), target, array.design_wavelength()).unwrap();
        // All four elements are symmetric about the boresight axis.
        for p in &psi[1..] {
            assert_abs_diff_eq!(*p, psi[0], epsilon = 1e-9);
        }
    }

    #[test]
    fn focus_on_element_rejected() {
        let array = RisArray::new(3, 3, 0.01, 28.5e9).unwrap();
        let on_element = array.element(1, 1);
        assert!(optimal_phase(&array, feed(), on_element, 0.01).is_err());
    }

    #[test]
    fn quantize_cases() {
        let q = quantize_1bit(&[0.0, PI, PI / 2.0, 1.0, 2.0]);
        assert_eq!(q[0], 0.0); // cos = 1
        assert_eq!(q[1], PI); // cos = -1
        assert_eq!(q[2], 0.0); // cos(π/2) >= 0 tie-break
        assert_eq!(q[3], 0.0); // cos(1) > 0
        assert_eq!(q[4], PI); // cos(2) < 0
    }

    #[test]
    fn quantization_stable_inside_open_half_circle() {
        // Phases strictly inside (-π/2, π/2) mod 2π always map to state 0.
        for i in 0..1000 {
            let p = -PI / 2.0 + 1e-6 + (PI - 2e-6) * i as f64 / 999.0;
            let wrapped = p.rem_euclid(TAU);
            assert_eq!(quantize_1bit(&[wrapped])[0], 0.0, "phase {p}");
        }
    }

    #[test]
    fn array_factor_single_element_unit() {
        let array = RisArray::new(1, 1, 0.005, 28.5e9).unwrap();
        let af = array_factor(
            &[1.234],
            &array,
            feed(),
            CartesianPoint::new(2.0, 0.5, -0.2),
            array.design_wavelength(),
        );
        assert_abs_diff_eq!(af.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn continuous_profile_is_fully_coherent_at_focus() {
        let array = RisArray::new(16, 12, 0.005, 28.5e9).unwrap();
        let target = CartesianPoint::new(2.0, 1.0, -0.3);
        let lambda = array.design_wavelength();
        let profile = PhaseProfile::design(&array, feed(), target, lambda).unwrap();
        let af = array_factor(&profile.continuous, &array, feed(), target, lambda);
        assert_abs_diff_eq!(af.norm(), 192.0, epsilon = 192.0 * 1e-9);
    }

    #[test]
    fn one_bit_focus_ratio_near_two_over_pi() {
        let array = RisArray::new(20, 20, 0.005, 28.5e9).unwrap();
        let target = CartesianPoint::new(3.0, -1.0, -0.38);
        let lambda = array.design_wavelength();
        let profile = PhaseProfile::design(&array, feed(), target, lambda).unwrap();
        let af = array_factor(&profile.quantized, &array, feed(), target, lambda);
        let ratio = af.norm() / array.num_elements() as f64;
        assert!(
            (0.55..=0.75).contains(&ratio),
            "1-bit coherence ratio {ratio}"
        );
    }

    #[test]
    fn mirrored_roi_points_mirror_the_columns() {
        let array = RisArray::new(6, 8, 0.005, 28.5e9).unwrap();
        let lambda = array.design_wavelength();
        let grid = [(12.0, 95.0), (-12.0, 95.0)];
        let cb = build_codebook(&array, feed(), &grid, 3.0, lambda).unwrap();
        let a = &cb.entries[0].profile.quantized;
        let b = &cb.entries[1].profile.quantized;
        for n in 0..6 {
            for m in 0..8 {
                assert_eq!(a[n * 8 + m], b[n * 8 + (7 - m)], "({n},{m})");
            }
        }
    }

    #[test]
    fn codebook_single_boresight_entry() {
        let array = RisArray::new(4, 4, 0.005, 28.5e9).unwrap();
        let cb = build_codebook(
            &array,
            feed(),
            &[(0.0, 90.0)],
            3.0,
            array.design_wavelength(),
        )
        .unwrap();
        assert_eq!(cb.len(), 1);
        let f = cb.entries[0].profile.focus;
        assert_abs_diff_eq!(f.x, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.z, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn codebook_rejects_empty_grid() {
        let array = RisArray::new(4, 4, 0.005, 28.5e9).unwrap();
        assert!(build_codebook(&array, feed(), &[], 3.0, 0.0105).is_err());
        assert!(build_codebook(&array, feed(), &[(0.0, 90.0)], 0.0, 0.0105).is_err());
    }

    #[test]
    fn profiles_are_deterministic() {
        let array = RisArray::new(10, 10, 0.005, 28.5e9).unwrap();
        let target = CartesianPoint::new(2.5, 0.7, -0.4);
        let lambda = array.design_wavelength();
        let a = PhaseProfile::design(&array, feed(), target, lambda).unwrap();
        let b = PhaseProfile::design(&array, feed(), target, lambda).unwrap();
        assert_eq!(a.quantized, b.quantized);
        assert_eq!(a.continuous, b.continuous);
    }

    #[test]
    fn codebook_text_export_shape() {
        let array = RisArray::new(3, 5, 0.005, 28.5e9).unwrap();
        let cb = build_codebook(
            &array,
            feed(),
            &[(0.0, 90.0), (1.0, 90.0)],
            3.0,
            array.design_wavelength(),
        )
        .unwrap();
        let mut out = Vec::new();
        cb.write_text(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "rows 3");
        assert_eq!(lines[2], "cols 5");
        assert_eq!(lines[3], "entries 2");
        assert!(lines[4].starts_with("beam 0 phi 0 theta 90"));
        assert_eq!(lines[5].len(), 5);
        assert!(lines[5].chars().all(|c| c == '0' || c == '1'));
    }
}
