//! Small dense linear-algebra helpers and serde adapters for complex data.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Singular values (descending) together with the right singular vector of
/// the smallest one.
pub fn smallest_right_singular_vector(m: &DMatrix<Complex64>) -> (Vec<f64>, DVector<Complex64>) {
    let cols = m.ncols();
    // Pad short systems so V is square and the full right basis is available.
    let work = if m.nrows() < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let last = *order.last().expect("non-empty matrix");
    let kernel = v_t.row(last).transpose().map(|c| c.conj());
    (values, kernel)
}

/// Largest modulus among the given values (0 for an empty set).
pub fn max_abs<'a>(values: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    values.into_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Residual scale convention: `max(1, largest |term|)`.
pub fn residual_scale(terms: &[f64]) -> f64 {
    terms.iter().cloned().fold(1.0, f64::max)
}

/// Entrywise max-norm of `a - b`.
pub fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn matrix_max_abs(a: &DMatrix<Complex64>) -> f64 {
    max_abs(a.iter())
}

/// Serde adapters: complex numbers as `[re, im]` pairs.
pub mod serde_complex {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn pair(c: &Complex64) -> [f64; 2] {
        [c.re, c.im]
    }

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        pair(c).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(pair).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
            let raw = Vec::<[f64; 2]>::deserialize(d)?;
            Ok(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
        }
    }

    /// Matrices as a list of rows.
    pub mod matrix {
        use super::*;

        pub fn serialize<S: Serializer>(m: &DMatrix<Complex64>, s: S) -> Result<S::Ok, S::Error> {
            let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect())
                .collect();
            rows.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<Complex64>, D::Error> {
            let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
            let nrows = rows.len();
            let ncols = rows.first().map_or(0, |r| r.len());
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(serde::de::Error::custom("ragged matrix"));
            }
            Ok(DMatrix::from_fn(nrows, ncols, |i, j| {
                Complex64::new(rows[i][j][0], rows[i][j][1])
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_rank_deficient_matrix() {
        let c = |x: f64| Complex64::new(x, 0.5 * x);
        // Rows orthogonal to (1, -2, 1).
        let m = DMatrix::from_row_slice(4, 3, &[
            c(1.0), c(1.0), c(1.0),
            c(2.0), c(1.0), c(0.0),
            c(0.0), c(1.0), c(2.0),
            c(3.0), c(2.0), c(1.0),
        ]);
        let (s, v) = smallest_right_singular_vector(&m);
        assert!(s[0] >= s[1] && s[1] >= s[2]);
        assert!(s[2] < 1e-12 * s[0]);
        let ratio = v[0] / v[1];
        assert!((ratio - Complex64::new(-0.5, 0.0)).norm() < 1e-12);
        assert!((v[2] / v[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn kernel_of_wide_matrix_is_padded() {
        let one = Complex64::new(1.0, 0.0);
        let m = DMatrix::from_row_slice(1, 2, &[one, one]);
        let (_, v) = smallest_right_singular_vector(&m);
        assert!((v[0] + v[1]).norm() < 1e-12);
    }

    #[test]
    fn scale_convention() {
        assert_eq!(residual_scale(&[0.1, 0.2]), 1.0);
        assert_eq!(residual_scale(&[3.0, 0.2]), 3.0);
    }
}
