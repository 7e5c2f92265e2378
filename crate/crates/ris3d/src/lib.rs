//! RIS-aided mmWave 3D radar imaging toolkit.
//!
//! Simulates stepped-frequency (SFCW) measurements of point-scatterer scenes
//! seen through a 1-bit reconfigurable intelligent surface (RIS), and
//! reconstructs 2D intensity maps and filtered 3D voxel images from them.
//!
//! The closed loop mirrors a hardware rig: a coarse radar detection defines a
//! region of interest, each angular cell of the ROI gets a near-field 1-bit
//! focusing pattern, a frequency sweep is acquired per beam, and the stack of
//! range profiles is voxelized, distance-compensated, Gaussian-smoothed and
//! thresholded into a volumetric image.
//!
//! ```
//! use ris3d::geometry::{CartesianPoint, RisArray};
//! use ris3d::codebook::PhaseProfile;
//!
//! let array = RisArray::new(8, 8, 0.005, 28.5e9).unwrap();
//! let tx = CartesianPoint::new(0.6, 0.0, 0.0);
//! let target = CartesianPoint::new(3.0, -1.0, -0.38);
//! let profile = PhaseProfile::design(&array, tx, target, array.design_wavelength()).unwrap();
//! assert_eq!(profile.quantized.len(), 64);
//! ```

pub mod backend;
pub mod codebook;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod processing;
pub mod roi;
pub mod scenario;
pub mod sim;
pub mod spatial;
pub mod sweep;
pub mod tensor;
pub mod volumetric;

pub use error::{Result, RisError};

/// Nominal speed of light in m/s. The round value keeps the classic radar
/// identities (range resolution c/2B, unambiguous range c/2df) exact for the
/// standard sweep plans.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
