//! Coordinate frames and scene/array geometry.
//!
//! The RIS frame is the single world frame: the surface lies in the YZ-plane
//! with the X-axis as its normal, Z vertical, origin at the array center.
//! Spherical coordinates use azimuth φ in the XY-plane (degrees, signed) and
//! zenith θ measured from +Z (degrees, 90° = horizontal). Angles are kept in
//! degrees at API boundaries and converted to radians internally.

use crate::error::{Result, RisError};

/// A point in the RIS Cartesian frame, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPoint {
    pub const ORIGIN: CartesianPoint = CartesianPoint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &CartesianPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Distance from the origin.
    pub fn norm(&self) -> f64 {
        self.distance(&Self::ORIGIN)
    }
}

/// A point in spherical coordinates relative to the RIS origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    /// Range in meters, >= 0.
    pub range_m: f64,
    /// Azimuth φ in degrees, in (-180, 180].
    pub azimuth_deg: f64,
    /// Zenith θ in degrees measured from +Z, in [0, 180].
    pub zenith_deg: f64,
}

impl SphericalPoint {
    pub fn new(range_m: f64, azimuth_deg: f64, zenith_deg: f64) -> Self {
        Self {
            range_m,
            azimuth_deg,
            zenith_deg,
        }
    }
}

/// Convert a Cartesian point to spherical coordinates.
///
/// The origin maps to `(0, 0, 0)` by convention.
pub fn cart_to_sph(p: CartesianPoint) -> SphericalPoint {
    let r = p.norm();
    if r == 0.0 {
        return SphericalPoint::new(0.0, 0.0, 0.0);
    }
    let azimuth = p.y.atan2(p.x).to_degrees();
    let zenith = (p.z / r).clamp(-1.0, 1.0).acos().to_degrees();
    SphericalPoint::new(r, azimuth, zenith)
}

/// Convert spherical coordinates back to a Cartesian point.
pub fn sph_to_cart(p: SphericalPoint) -> CartesianPoint {
    let az = p.azimuth_deg.to_radians();
    let ze = p.zenith_deg.to_radians();
    let s = ze.sin();
    CartesianPoint::new(
        p.range_m * s * az.cos(),
        p.range_m * s * az.sin(),
        p.range_m * ze.cos(),
    )
}

/// Planar RIS element grid in the YZ-plane, centered at the origin.
#[derive(Debug, Clone)]
pub struct RisArray {
    rows: usize,
    cols: usize,
    pitch_m: f64,
    center: CartesianPoint,
    elements: Vec<CartesianPoint>,
    design_frequency_hz: f64,
}

impl RisArray {
    /// Build an `rows x cols` grid with the given element pitch.
    ///
    /// Element (n, m) sits at y = (m - (M-1)/2) * pitch,
    /// z = (n - (N-1)/2) * pitch, x = 0.
    pub fn new(rows: usize, cols: usize, pitch_m: f64, design_frequency_hz: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(RisError::Geometry(format!(
                "array dimensions must be >= 1, got {rows}x{cols}"
            )));
        }
        if pitch_m <= 0.0 || !pitch_m.is_finite() {
            return Err(RisError::Geometry(format!(
                "element pitch must be positive, got {pitch_m}"
            )));
        }
        if design_frequency_hz <= 0.0 {
            return Err(RisError::Geometry(format!(
                "design frequency must be positive, got {design_frequency_hz}"
            )));
        }
        let cy = (cols as f64 - 1.0) / 2.0;
        let cz = (rows as f64 - 1.0) / 2.0;
        let mut elements = Vec::with_capacity(rows * cols);
        for n in 0..rows {
            for m in 0..cols {
                elements.push(CartesianPoint::new(
                    0.0,
                    (m as f64 - cy) * pitch_m,
                    (n as f64 - cz) * pitch_m,
                ));
            }
        }
        Ok(Self {
            rows,
            cols,
            pitch_m,
            center: CartesianPoint::ORIGIN,
            elements,
            design_frequency_hz,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pitch_m(&self) -> f64 {
        self.pitch_m
    }

    pub fn center(&self) -> CartesianPoint {
        self.center
    }

    pub fn num_elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Element positions in row-major order (row n outer, column m inner).
    pub fn elements(&self) -> &[CartesianPoint] {
        &self.elements
    }

    /// Position of element (n, m).
    pub fn element(&self, n: usize, m: usize) -> CartesianPoint {
        self.elements[n * self.cols + m]
    }

    pub fn design_frequency_hz(&self) -> f64 {
        self.design_frequency_hz
    }

    /// Wavelength at the design frequency.
    pub fn design_wavelength(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.design_frequency_hz
    }
}

/// A point scatterer with nonnegative reflectivity amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: CartesianPoint,
    pub reflectivity: f64,
}

impl Scatterer {
    pub fn new(position: CartesianPoint, reflectivity: f64) -> Self {
        Self {
            position,
            reflectivity,
        }
    }
}

/// Point-scatterer scene plus antenna positions, all in the RIS frame.
#[derive(Debug, Clone)]
pub struct Scene {
    pub scatterers: Vec<Scatterer>,
    pub tx: CartesianPoint,
    pub rx: CartesianPoint,
}

impl Scene {
    pub fn new(scatterers: Vec<Scatterer>, tx: CartesianPoint, rx: CartesianPoint) -> Result<Self> {
        for (i, s) in scatterers.iter().enumerate() {
            if !(s.reflectivity >= 0.0) || !s.reflectivity.is_finite() {
                return Err(RisError::Geometry(format!(
                    "scatterer {i} has invalid reflectivity {}",
                    s.reflectivity
                )));
            }
            if !s.position.is_finite() {
                return Err(RisError::Geometry(format!(
                    "scatterer {i} has non-finite position"
                )));
            }
            if s.position.distance(&tx) < 1e-9 || s.position.distance(&rx) < 1e-9 {
                return Err(RisError::Geometry(format!(
                    "scatterer {i} coincides with an antenna"
                )));
            }
        }
        Ok(Self { scatterers, tx, rx })
    }

    /// Quasi-monostatic scene: tx = rx = 0.6 m in front of the RIS center.
    pub fn quasi_monostatic(scatterers: Vec<Scatterer>) -> Result<Self> {
        let feed = CartesianPoint::new(0.6, 0.0, 0.0);
        Self::new(scatterers, feed, feed)
    }

    pub fn is_empty(&self) -> bool {
        self.scatterers.is_empty()
    }
}
