//! Holographic uniform planar arrays.
//!
//! Two coordinate systems are in play. Intra-array offsets, which drive every
//! phase computation, are measured in wavelengths. Node reference positions are
//! in meters and only feed the large-scale path loss.

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Tolerance used when an aperture in wavelengths is rounded up to a lattice size.
pub(crate) const CEIL_EPS: f64 = 1e-9;
/// Largest supported inter-element spacing, in wavelengths.
pub const MAX_SPACING: f64 = 0.5;

/// A planar array of `n_x * n_y` elements on a square grid in the `z = const` plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    n_x: usize,
    n_y: usize,
    /// Inter-element spacing in wavelengths.
    spacing: f64,
    /// Position of the first element, in meters.
    reference: [f64; 3],
    /// Carrier wavelength in meters.
    wavelength: f64,
}

impl ArrayGeometry {
    /// Array with unit wavelength, so meters and wavelengths coincide.
    pub fn new(
        n_x: usize,
        n_y: usize,
        spacing: f64,
        reference: [f64; 3],
    ) -> Result<Self, GeometryError> {
        Self::with_wavelength(n_x, n_y, spacing, reference, 1.0)
    }

    pub fn with_wavelength(
        n_x: usize,
        n_y: usize,
        spacing: f64,
        reference: [f64; 3],
        wavelength: f64,
    ) -> Result<Self, GeometryError> {
        if n_x == 0 || n_y == 0 {
            return Err(GeometryError::EmptyArray { n_x, n_y });
        }
        if !(spacing > 0.0 && spacing <= MAX_SPACING) {
            return Err(GeometryError::Spacing(spacing));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(GeometryError::Wavelength(wavelength));
        }
        if reference.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::Reference(reference));
        }
        Ok(Self {
            n_x,
            n_y,
            spacing,
            reference,
            wavelength,
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn num_elements(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn reference(&self) -> [f64; 3] {
        self.reference
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Aperture lengths `(L_x, L_y)` in wavelengths.
    pub fn aperture(&self) -> (f64, f64) {
        (self.n_x as f64 * self.spacing, self.n_y as f64 * self.spacing)
    }

    /// Same array translated to a new reference position.
    pub fn moved_to(&self, reference: [f64; 3]) -> Self {
        Self {
            reference,
            ..self.clone()
        }
    }

    /// Same element counts with a different spacing.
    pub fn with_spacing(&self, spacing: f64) -> Result<Self, GeometryError> {
        Self::with_wavelength(self.n_x, self.n_y, spacing, self.reference, self.wavelength)
    }

    /// Element offsets relative to the first element, in wavelengths.
    ///
    /// Element `n` (zero-based) sits at `[δ·(n mod n_x), δ·⌊n / n_x⌋, 0]`.
    pub fn element_offsets(&self) -> Vec<[f64; 3]> {
        (0..self.num_elements())
            .map(|n| {
                [
                    self.spacing * (n % self.n_x) as f64,
                    self.spacing * (n / self.n_x) as f64,
                    0.0,
                ]
            })
            .collect()
    }

    /// Absolute element positions in meters.
    pub fn antenna_positions(&self) -> Vec<[f64; 3]> {
        let [rx, ry, rz] = self.reference;
        self.element_offsets()
            .into_iter()
            .map(|[ox, oy, _]| [rx + ox * self.wavelength, ry + oy * self.wavelength, rz])
            .collect()
    }

    /// Distance in meters between the first elements of two arrays.
    pub fn distance_to(&self, other: &ArrayGeometry) -> f64 {
        self.reference
            .iter()
            .zip(other.reference.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Large-scale gain `d^(-η) · Λ`.
pub fn path_loss(distance: f64, exponent: f64, array_gain: f64) -> f64 {
    distance.powf(-exponent) * array_gain
}
