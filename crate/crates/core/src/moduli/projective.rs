use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThetaError};
use crate::numeric::serde_complex;

/// Coordinates below this modulus cannot serve as a normalization.
pub const ZERO_FLOOR: f64 = 1e-12;

/// A point of complex projective space, scaled so that its largest
/// coordinate (the first one on ties) equals 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint {
    #[serde(with = "serde_complex::vec")]
    coordinates: Vec<Complex64>,
    normalization: usize,
}

impl ProjectivePoint {
    pub fn new(coordinates: Vec<Complex64>) -> Result<Self> {
        let (normalization, largest) = coordinates
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(k, m), (i, c)| if c.norm() > m { (i, c.norm()) } else { (k, m) });
        if !(largest >= ZERO_FLOOR) {
            return Err(ThetaError::ZeroProjectivePoint { floor: ZERO_FLOOR });
        }
        let pivot = coordinates[normalization];
        let mut coordinates: Vec<Complex64> = coordinates.iter().map(|c| c / pivot).collect();
        coordinates[normalization] = Complex64::new(1.0, 0.0);
        Ok(Self { coordinates, normalization })
    }

    pub fn coordinates(&self) -> &[Complex64] {
        &self.coordinates
    }

    /// Index of the coordinate scaled to 1.
    pub fn normalization(&self) -> usize {
        self.normalization
    }

    pub fn len(&self) -> usize {
        self.coordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.is_empty()
    }

    fn unit(&self) -> Vec<Complex64> {
        let norm = self.coordinates.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        self.coordinates.iter().map(|c| c / norm).collect()
    }

    /// `min_phi |u - e^{i phi} v|` over unit representatives `u`, `v`.
    pub fn chordal_distance(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(ThetaError::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let (u, v) = (self.unit(), other.unit());
        let inner: Complex64 = u.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
        let phase = if inner.norm() > 0.0 { inner / inner.norm() } else { Complex64::new(1.0, 0.0) };
        Ok(u.iter()
            .zip(&v)
            .map(|(x, y)| (x * phase - y).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}
