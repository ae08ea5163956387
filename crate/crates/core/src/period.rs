//! Points of the Siegel upper half-space.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ThetaError};

/// Default lower bound on `lambda_min(Im tau)` accepted at construction.
pub const BOUNDARY_FLOOR: f64 = 1e-3;

/// A symmetric complex `g x g` matrix with positive-definite imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodMatrix {
    genus: usize,
    entries: Vec<Complex64>,
    lambda_min: f64,
}

impl PeriodMatrix {
    /// Row-major entries. Rejects matrices with `lambda_min(Im tau)` below
    /// [`BOUNDARY_FLOOR`].
    pub fn new(genus: usize, entries: Vec<Complex64>) -> Result<Self> {
        Self::with_floor(genus, entries, BOUNDARY_FLOOR)
    }

    /// Accepts anything strictly inside `H_g`.
    pub fn new_near_boundary(genus: usize, entries: Vec<Complex64>) -> Result<Self> {
        Self::with_floor(genus, entries, 0.0)
    }

    fn with_floor(genus: usize, entries: Vec<Complex64>, floor: f64) -> Result<Self> {
        if genus == 0 {
            return Err(ThetaError::InvalidPeriodMatrix("genus must be at least 1".into()));
        }
        if entries.len() != genus * genus {
            return Err(ThetaError::DimensionMismatch {
                expected: genus * genus,
                got: entries.len(),
            });
        }
        if entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(ThetaError::InvalidPeriodMatrix("non-finite entry".into()));
        }
        for j in 0..genus {
            for k in 0..j {
                if entries[j * genus + k] != entries[k * genus + j] {
                    return Err(ThetaError::InvalidPeriodMatrix(format!(
                        "not symmetric at ({j}, {k})"
                    )));
                }
            }
        }
        let imag = DMatrix::from_fn(genus, genus, |j, k| entries[j * genus + k].im);
        let lambda_min = SymmetricEigen::new(imag)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if lambda_min <= 0.0 {
            return Err(ThetaError::InvalidPeriodMatrix(format!(
                "imaginary part not positive definite (lambda_min = {lambda_min:e})"
            )));
        }
        if lambda_min < floor {
            return Err(ThetaError::NearBoundary { lambda_min, floor });
        }
        Ok(Self {
            genus,
            entries,
            lambda_min,
        })
    }

    /// The genus-one matrix `(tau)`.
    pub fn scalar(tau: Complex64) -> Result<Self> {
        Self::new(1, vec![tau])
    }

    /// `tau = i * I`.
    pub fn identity_times_i(genus: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); genus * genus];
        for j in 0..genus {
            entries[j * genus + j] = Complex64::new(0.0, 1.0);
        }
        Self {
            genus,
            entries,
            lambda_min: 1.0,
        }
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.entries[j * self.genus + k]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Smallest eigenvalue of `Im tau`.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// `m * tau` for a positive real `m`.
    pub fn scaled(&self, m: f64) -> Self {
        assert!(m > 0.0, "scale factor must be positive");
        Self {
            genus: self.genus,
            entries: self.entries.iter().map(|c| c * m).collect(),
            lambda_min: self.lambda_min * m,
        }
    }

    /// `tau + h` on the symmetric pair `(j, k)` (both entries when `j != k`).
    /// Used by finite-difference checks; skips the boundary floor.
    pub fn perturbed(&self, j: usize, k: usize, h: Complex64) -> Result<Self> {
        let mut entries = self.entries.clone();
        entries[j * self.genus + k] += h;
        if j != k {
            entries[k * self.genus + j] += h;
        }
        Self::new_near_boundary(self.genus, entries)
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.genus, self.genus, |j, k| self.entry(j, k))
    }

    /// Short hex digest of the exact entry bits.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.genus as u64).to_le_bytes());
        for c in &self.entries {
            h.update(c.re.to_le_bytes());
            h.update(c.im.to_le_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct PeriodMatrixRepr {
    genus: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for PeriodMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PeriodMatrixRepr {
            genus: self.genus,
            entries: self.entries.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PeriodMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PeriodMatrixRepr::deserialize(d)?;
        let entries = repr
            .entries
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        PeriodMatrix::new_near_boundary(repr.genus, entries).map_err(serde::de::Error::custom)
    }
}
