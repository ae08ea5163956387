use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::projective::ProjectivePoint;
use crate::error::{Result, ThetaError};
use crate::numeric::{serde_complex, singular_values};
use crate::period::PeriodMatrix;
use crate::rational::{LiftedVector, RationalVector};
use crate::theta::theta_jet_lifted;
use crate::truncation::TruncationPolicy;

/// Frames whose `sigma_g / sigma_1` falls below this are treated as rank deficient.
pub const FRAME_RANK_FLOOR: f64 = 1e-10;

fn require_positive(n: u64) -> Result<()> {
    if n == 0 {
        return Err(ThetaError::InvalidArgument("level n must be at least 1".into()));
    }
    Ok(())
}

fn zero_point(g: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); g]
}

/// `[theta[a,0](n tau, 0)]` over `a` in `((1/n) Z / Z)^g`, lexicographic.
pub fn th_map(tau: &PeriodMatrix, n: u64, policy: &TruncationPolicy) -> Result<ProjectivePoint> {
    require_positive(n)?;
    let g = tau.genus();
    let scaled = tau.scaled(n as f64);
    let zero = LiftedVector::zeros(g);
    let coords = RationalVector::grid(n, g)
        .par_iter()
        .map(|a| theta_jet_lifted(&scaled, &zero_point(g), &a.lift(), &zero, policy).map(|j| j.value))
        .collect::<Result<Vec<_>>>()?;
    ProjectivePoint::new(coords)
}

/// Gradients at `z = 0` of `theta[a,0](4n tau, z)`, one column per `a` in
/// `((1/4n) Z / Z)^g`, lexicographic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientFrame {
    #[serde(with = "serde_complex::matrix")]
    matrix: DMatrix<Complex64>,
    genus: usize,
    level: u64,
    #[serde(default)]
    degraded: bool,
}

impl GradientFrame {
    /// Wraps an explicit `g x (4n)^g` matrix.
    pub fn from_matrix(matrix: DMatrix<Complex64>, level: u64) -> Result<Self> {
        require_positive(level)?;
        let genus = matrix.nrows();
        let cols = (4 * level as usize).pow(genus as u32);
        if genus == 0 || matrix.ncols() != cols {
            return Err(ThetaError::DimensionMismatch {
                expected: cols,
                got: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            genus,
            level,
            degraded: false,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn degraded(&self) -> bool {
        self.degraded
    }

    /// Column for any representative of `a` in `(1/4n) Z`.
    pub fn column(&self, a: &LiftedVector) -> Result<Vec<Complex64>> {
        let reduced = a.reduce();
        let idx = reduced.grid_index(4 * self.level).ok_or(ThetaError::OrderMismatch {
            order: reduced.order(),
            modulus: 4 * self.level,
        })?;
        Ok(self.matrix.column(idx).iter().cloned().collect())
    }
}

pub fn phi_map(tau: &PeriodMatrix, n: u64, policy: &TruncationPolicy) -> Result<GradientFrame> {
    require_positive(n)?;
    let g = tau.genus();
    let scaled = tau.scaled(4.0 * n as f64);
    let zero = LiftedVector::zeros(g);
    let jets = RationalVector::grid(4 * n, g)
        .par_iter()
        .map(|a| theta_jet_lifted(&scaled, &zero_point(g), &a.lift(), &zero, policy))
        .collect::<Result<Vec<_>>>()?;
    let degraded = jets.iter().any(|j| j.degraded);
    let matrix = DMatrix::from_fn(g, jets.len(), |i, k| jets[k].gradient[i]);
    Ok(GradientFrame {
        matrix,
        genus: g,
        level: n,
        degraded,
    })
}

/// `pi^-g det` of a square matrix whose rows are theta gradients.
pub fn jacobian_det_from_rows(rows: &DMatrix<Complex64>) -> Complex64 {
    rows.determinant() * PI.powi(-(rows.nrows() as i32))
}

/// `D = pi^-g grad theta[e_1,d_1] ^ ... ^ grad theta[e_g,d_g]` at `z = 0`.
/// `tau_arg` is the full first argument of the theta functions.
pub fn jacobian_det(
    tau_arg: &PeriodMatrix,
    chars: &[(RationalVector, RationalVector)],
    policy: &TruncationPolicy,
) -> Result<Complex64> {
    let g = tau_arg.genus();
    if chars.len() != g {
        return Err(ThetaError::DimensionMismatch {
            expected: g,
            got: chars.len(),
        });
    }
    let mut rows = DMatrix::zeros(g, g);
    for (i, (e, d)) in chars.iter().enumerate() {
        let jet = theta_jet_lifted(tau_arg, &zero_point(g), &e.lift(), &d.lift(), policy)?;
        for j in 0..g {
            rows[(i, j)] = jet.gradient[j];
        }
    }
    Ok(jacobian_det_from_rows(&rows))
}

/// All `k`-subsets of `0..n`, lexicographic.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Maximal minors of a frame, indexed by column subsets in lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlueckerVector {
    pub point: ProjectivePoint,
    pub subsets: Vec<Vec<usize>>,
}

impl PlueckerVector {
    pub fn chordal_distance(&self, other: &Self) -> Result<f64> {
        self.point.chordal_distance(&other.point)
    }
}

/// Unnormalized minors of `matrix` over `subsets(ncols, nrows)`.
pub fn minors(matrix: &DMatrix<Complex64>) -> Vec<Complex64> {
    let g = matrix.nrows();
    subsets(matrix.ncols(), g)
        .par_iter()
        .map(|cols| matrix.select_columns(cols.iter()).determinant())
        .collect()
}

pub fn pluecker(frame: &GradientFrame) -> Result<PlueckerVector> {
    let g = frame.genus();
    let s = singular_values(frame.matrix());
    let ratio = if s[0] > 0.0 { s[g - 1] / s[0] } else { 0.0 };
    if !(ratio >= FRAME_RANK_FLOOR) {
        return Err(ThetaError::DegenerateFrame { genus: g, ratio });
    }
    let point = ProjectivePoint::new(minors(frame.matrix())).map_err(|_| ThetaError::DegenerateFrame { genus: g, ratio })?;
    Ok(PlueckerVector {
        point,
        subsets: subsets(frame.matrix().ncols(), g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(subsets(3, 3).len(), 1);
        assert_eq!(subsets(5, 1).len(), 5);
        assert!(subsets(2, 3).is_empty());
    }

    #[test]
    fn trivial_th_map() {
        let p = th_map(&PeriodMatrix::identity_times_i(1), 1, &Default::default()).unwrap();
        assert_eq!(p.coordinates(), &[Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn frame_parity_and_zero_column() {
        let tau = PeriodMatrix::new(2, vec![
            Complex64::new(0.2, 1.1), Complex64::new(0.1, 0.3),
            Complex64::new(0.1, 0.3), Complex64::new(-0.3, 0.9),
        ]).unwrap();
        let frame = phi_map(&tau, 1, &Default::default()).unwrap();
        assert_eq!(frame.matrix().ncols(), 16);
        assert!(frame.matrix().column(0).iter().all(|c| c.norm() < 1e-14));
        let a = RationalVector::from_pairs(&[(1, 4), (1, 2)]).unwrap();
        let plus = frame.column(&a.lift()).unwrap();
        let minus = frame.column(&a.neg().lift()).unwrap();
        for (x, y) in plus.iter().zip(&minus) {
            assert!((x + y).norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_frame_reported() {
        let m = DMatrix::from_fn(2, 16, |i, j| Complex64::new((j as f64) * (i as f64 + 1.0), 0.0));
        let frame = GradientFrame::from_matrix(m, 1).unwrap();
        assert!(matches!(pluecker(&frame), Err(ThetaError::DegenerateFrame { .. })));
        assert!(GradientFrame::from_matrix(DMatrix::zeros(2, 15), 1).is_err());
    }
}
