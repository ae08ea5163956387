//! Theta functions with rational characteristics and their derivative jets.
//!
//! `theta[eps, delta](tau, z) = sum_n e(1/2 (n+eps)^t tau (n+eps) + (n+eps)^t (z+delta))`
//!
//! A single pass over the truncation box accumulates the value, the
//! z-gradient, the z-Hessian and the weighted tau-derivative matrix
//! `D theta` (full weight on the diagonal, 1/2 off it, the symmetric pair
//! `tau_jk = tau_kj` counted as one variable). With this weighting the heat
//! equation reads `D theta = Hess_z theta / (4 pi i)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ThetaError};
use crate::numeric::serde_complex;
use crate::period::PeriodMatrix;
use crate::rational::{cexp, fract, LiftedVector, Rational, RationalVector};
use crate::truncation::{imag_norm, tail_bound, TruncationPolicy};

/// Value, z-gradient, z-Hessian and weighted tau-derivatives of one theta
/// function at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaJet {
    #[serde(with = "serde_complex")]
    pub value: Complex64,
    #[serde(with = "serde_complex::vec")]
    pub gradient: Vec<Complex64>,
    #[serde(with = "serde_complex::matrix")]
    pub hessian: DMatrix<Complex64>,
    /// `D theta`: `d/dtau_jj` on the diagonal, `1/2 d/dtau_jk` off it.
    #[serde(with = "serde_complex::matrix")]
    pub tau_deriv: DMatrix<Complex64>,
    /// Set when the radius cap was hit before the tail target was met.
    pub degraded: bool,
    pub radius: u32,
    /// Proven bound on the omitted tail at the radius used.
    pub tail: f64,
}

impl ThetaJet {
    pub fn genus(&self) -> usize {
        self.gradient.len()
    }

    /// Plain partial derivative with respect to the symmetric variable
    /// `tau_jk` (one variable per unordered pair).
    pub fn tau_partial(&self, j: usize, k: usize) -> Complex64 {
        if j == k {
            self.tau_deriv[(j, k)]
        } else {
            self.tau_deriv[(j, k)] * 2.0
        }
    }

    /// `Hess / (4 pi i)`, the heat-equation image of the Hessian.
    pub fn heat_tau_deriv(&self) -> DMatrix<Complex64> {
        let four_pi_i = Complex64::new(0.0, 4.0 * PI);
        self.hessian.map(|h| h / four_pi_i)
    }
}

/// How `z` enters a theta function of order `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZScaling {
    /// `theta[a,0](m tau, m z)`, the section-of-`m Theta` convention.
    Full,
    /// `theta[a,0](m tau, z)`, as in the gradient map.
    None,
}

/// Jet of `theta[eps, delta](tau, z)` for characteristics in `(Q/Z)^g`.
pub fn theta_jet(
    tau: &PeriodMatrix,
    z: &[Complex64],
    eps: &RationalVector,
    delta: &RationalVector,
    policy: &TruncationPolicy,
) -> Result<ThetaJet> {
    evaluate(tau, z, eps, delta.entries(), policy)
}

/// Jet with an unreduced lower characteristic. The upper characteristic is
/// reduced mod 1, which leaves the function unchanged.
pub fn theta_jet_lifted(
    tau: &PeriodMatrix,
    z: &[Complex64],
    eps: &LiftedVector,
    delta: &LiftedVector,
    policy: &TruncationPolicy,
) -> Result<ThetaJet> {
    evaluate(tau, z, &eps.reduce(), delta.entries(), policy)
}

/// `theta[a, delta]` at `z = 0`.
pub fn theta_constant(
    tau: &PeriodMatrix,
    eps: &LiftedVector,
    delta: &LiftedVector,
    policy: &TruncationPolicy,
) -> Result<Complex64> {
    let zero = vec![Complex64::new(0.0, 0.0); tau.genus()];
    Ok(theta_jet_lifted(tau, &zero, eps, delta, policy)?.value)
}

/// Jet of an order-`m` theta function `theta[a, 0](m tau, m z)` or
/// `theta[a, 0](m tau, z)`.
///
/// Gradient and Hessian are reported with respect to the caller's `z`, so
/// under [`ZScaling::Full`] they carry the chain-rule factors `m` and `m^2`.
/// `tau_deriv` stays with respect to the first argument `m tau`.
pub fn theta_scaled_jet(
    tau: &PeriodMatrix,
    z: &[Complex64],
    a: &RationalVector,
    order_m: u64,
    z_scaling: ZScaling,
    policy: &TruncationPolicy,
) -> Result<ThetaJet> {
    if order_m == 0 || !order_m.is_multiple_of(2) {
        return Err(ThetaError::InvalidArgument(format!(
            "order must be a positive even integer, got {order_m}"
        )));
    }
    if !a.divides(order_m) {
        return Err(ThetaError::OrderMismatch {
            order: a.order(),
            modulus: order_m,
        });
    }
    let m = order_m as f64;
    let scaled_tau = tau.scaled(m);
    let zero = RationalVector::zeros(tau.genus());
    match z_scaling {
        ZScaling::None => theta_jet(&scaled_tau, z, a, &zero, policy),
        ZScaling::Full => {
            let mz: Vec<Complex64> = z.iter().map(|c| c * m).collect();
            let mut jet = theta_jet(&scaled_tau, &mz, a, &zero, policy)?;
            jet.gradient.iter_mut().for_each(|d| *d *= m);
            jet.hessian *= Complex64::new(m * m, 0.0);
            Ok(jet)
        }
    }
}

fn evaluate(
    tau: &PeriodMatrix,
    z: &[Complex64],
    eps: &RationalVector,
    delta: &[Rational],
    policy: &TruncationPolicy,
) -> Result<ThetaJet> {
    let g = tau.genus();
    for len in [z.len(), eps.genus(), delta.len()] {
        if len != g {
            return Err(ThetaError::DimensionMismatch { expected: g, got: len });
        }
    }
    if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(ThetaError::InvalidArgument("z must be finite".into()));
    }
    policy.validate()?;

    let (radius, degraded) = policy.select_radius(tau.lambda_min(), imag_norm(z), g);
    let r = Rational::from_integer(radius as i64);

    // Per-coordinate lattice ranges with |n_j + eps_j| <= R, the real offsets
    // x_j = n_j + eps_j and the exact phases e(x_j delta_j).
    let mut axes: Vec<Vec<(f64, Complex64)>> = Vec::with_capacity(g);
    for (&e, &d) in eps.entries().iter().zip(delta) {
        let lo = (-r - e).ceil().to_integer();
        let hi = (r - e).floor().to_integer();
        let axis = (lo..=hi)
            .map(|n| {
                let x = Rational::from_integer(n) + e;
                let phase = cexp(fract(x * d));
                (*x.numer() as f64 / *x.denom() as f64, phase)
            })
            .collect();
        axes.push(axis);
    }

    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let pi_i = Complex64::new(0.0, PI);
    let mut value = Complex64::new(0.0, 0.0);
    let mut gradient = vec![Complex64::new(0.0, 0.0); g];
    let mut hessian = DMatrix::from_element(g, g, Complex64::new(0.0, 0.0));
    let mut tau_deriv = DMatrix::from_element(g, g, Complex64::new(0.0, 0.0));

    let mut idx = vec![0usize; g];
    let mut x = vec![0.0f64; g];
    'lattice: loop {
        let mut phase = Complex64::new(1.0, 0.0);
        for j in 0..g {
            let (xj, pj) = axes[j][idx[j]];
            x[j] = xj;
            phase *= pj;
        }
        let mut q = Complex64::new(0.0, 0.0);
        for j in 0..g {
            q += z[j] * x[j];
            q += tau.entry(j, j) * (0.5 * x[j] * x[j]);
            for k in 0..j {
                q += tau.entry(j, k) * (x[j] * x[k]);
            }
        }
        let term = (two_pi_i * q).exp() * phase;

        value += term;
        for j in 0..g {
            let dj = two_pi_i * x[j];
            gradient[j] += dj * term;
            for k in 0..=j {
                let h = dj * (two_pi_i * x[k]) * term;
                hessian[(j, k)] += h;
                // d/dtau_jj of 1/2 x^t tau x is x_j^2 / 2; d/dtau_jk (j != k) is
                // x_j x_k, weighted by 1/2 in D.
                let coeff = if j == k {
                    pi_i * (x[j] * x[j])
                } else {
                    0.5 * two_pi_i * (x[j] * x[k])
                };
                tau_deriv[(j, k)] += coeff * term;
            }
        }

        let mut pos = g;
        loop {
            if pos == 0 {
                break 'lattice;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < axes[pos].len() {
                continue 'lattice;
            }
            idx[pos] = 0;
        }
    }

    for j in 0..g {
        for k in 0..j {
            hessian[(k, j)] = hessian[(j, k)];
            tau_deriv[(k, j)] = tau_deriv[(j, k)];
        }
    }

    let tail = tail_bound(tau, z, eps, radius, policy.deriv_order);
    Ok(ThetaJet {
        value,
        gradient,
        hessian,
        tau_deriv,
        degraded,
        radius,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rv(pairs: &[(i64, i64)]) -> RationalVector {
        RationalVector::from_pairs(pairs).unwrap()
    }

    /// Direct summation over |n| <= 30, written independently of `evaluate`.
    fn oracle_g1(tau: Complex64, z: Complex64, eps: f64, delta: f64) -> Complex64 {
        (-30..=30)
            .map(|n| {
                let x = n as f64 + eps;
                (c(0.0, 2.0 * PI) * (0.5 * x * x * tau + x * (z + delta))).exp()
            })
            .sum()
    }

    #[test]
    fn theta_at_i_matches_direct_sum() {
        let tau = PeriodMatrix::identity_times_i(1);
        let jet = theta_jet(&tau, &[c(0.0, 0.0)], &rv(&[(0, 1)]), &rv(&[(0, 1)]), &Default::default())
            .unwrap();
        let oracle = oracle_g1(c(0.0, 1.0), c(0.0, 0.0), 0.0, 0.0);
        assert!((jet.value - oracle).norm() < 1e-14);
        assert!((jet.value.re - 1.086_434_811_213_31).abs() < 1e-13);
        assert!(!jet.degraded);
    }

    #[test]
    fn odd_characteristic_vanishes_at_origin() {
        let h = rv(&[(1, 2)]);
        for tau in [c(0.0, 1.0), c(0.3, 0.7), c(-0.4, 2.0)] {
            let tau = PeriodMatrix::scalar(tau).unwrap();
            let jet = theta_jet(&tau, &[c(0.0, 0.0)], &h, &h, &Default::default()).unwrap();
            assert!(jet.value.norm() < 1e-14);
            assert!(jet.hessian[(0, 0)].norm() < 1e-12);
            assert!(jet.gradient[0].norm() > 1.0);
        }
    }

    #[test]
    fn reindexing_symmetry() {
        let tau = PeriodMatrix::identity_times_i(1);
        let z = c(0.3, 0.1);
        let a = rv(&[(1, 4)]);
        let zero = rv(&[(0, 1)]);
        let lhs = theta_jet(&tau, &[-z], &a, &zero, &Default::default()).unwrap();
        let rhs = theta_jet(&tau, &[z], &a.neg(), &zero, &Default::default()).unwrap();
        assert!((lhs.value - rhs.value).norm() < 1e-14);
    }

    #[test]
    fn lower_characteristic_shift_picks_up_phase() {
        let tau = PeriodMatrix::scalar(c(0.2, 0.9)).unwrap();
        let z = [c(0.1, -0.2)];
        let eps = rv(&[(1, 8)]);
        let base = theta_jet_lifted(&tau, &z, &eps.lift(), &LiftedVector::zeros(1), &Default::default())
            .unwrap();
        let one = LiftedVector::new(vec![Rational::from_integer(1)]);
        let shifted = theta_jet_lifted(&tau, &z, &eps.lift(), &one, &Default::default()).unwrap();
        assert!((shifted.value - cexp(Rational::new(1, 8)) * base.value).norm() < 1e-14);
    }

    #[test]
    fn derivatives_match_direct_sums() {
        let tau = c(0.25, 0.8);
        let z = c(0.1, 0.15);
        let jet = theta_jet(
            &PeriodMatrix::scalar(tau).unwrap(),
            &[z],
            &rv(&[(1, 3)]),
            &rv(&[(1, 4)]),
            &Default::default(),
        )
        .unwrap();
        let (e, d) = (1.0 / 3.0, 0.25);
        let sum = |p: i32| -> Complex64 {
            (-30..=30)
                .map(|n| {
                    let x = n as f64 + e;
                    c(0.0, 2.0 * PI * x).powi(p) * (c(0.0, 2.0 * PI) * (0.5 * x * x * tau + x * (z + d))).exp()
                })
                .sum()
        };
        assert!((jet.gradient[0] - sum(1)).norm() < 1e-12);
        assert!((jet.hessian[(0, 0)] - sum(2)).norm() < 1e-11);
        let heat = jet.heat_tau_deriv();
        assert!((jet.tau_deriv[(0, 0)] - heat[(0, 0)]).norm() < 1e-13);
    }

    #[test]
    fn dimension_checks() {
        let tau = PeriodMatrix::identity_times_i(2);
        let err = theta_jet(&tau, &[c(0.0, 0.0)], &RationalVector::zeros(2), &RationalVector::zeros(2), &Default::default());
        assert!(matches!(err, Err(ThetaError::DimensionMismatch { .. })));
    }

    #[test]
    fn degraded_flag_when_cap_hit() {
        let tau = PeriodMatrix::new_near_boundary(1, vec![c(0.0, 0.002)]).unwrap();
        let policy = TruncationPolicy {
            max_radius: 5,
            ..Default::default()
        };
        let jet = theta_jet(&tau, &[c(0.0, 0.0)], &rv(&[(0, 1)]), &rv(&[(0, 1)]), &policy).unwrap();
        assert!(jet.degraded);
        assert_eq!(jet.radius, 5);
    }

    #[test]
    fn scaled_jet_conventions() {
        let tau = PeriodMatrix::identity_times_i(1);
        let z = [c(0.0, 0.0)];
        let zero = rv(&[(0, 1)]);
        let full = theta_scaled_jet(&tau, &z, &zero, 2, ZScaling::Full, &Default::default()).unwrap();
        let none = theta_scaled_jet(&tau, &z, &zero, 2, ZScaling::None, &Default::default()).unwrap();
        assert_eq!(full.value, none.value);
        assert_eq!(full.gradient[0], none.gradient[0] * 2.0);

        let quarter = rv(&[(1, 4)]);
        let scaled = theta_scaled_jet(&tau, &z, &quarter, 4, ZScaling::Full, &Default::default()).unwrap();
        let direct = theta_jet(&tau.scaled(4.0), &z, &quarter, &zero, &Default::default()).unwrap();
        assert_eq!(scaled.value, direct.value);

        assert!(matches!(
            theta_scaled_jet(&tau, &z, &rv(&[(1, 8)]), 4, ZScaling::Full, &Default::default()),
            Err(ThetaError::OrderMismatch { order: 8, modulus: 4 })
        ));
        assert!(theta_scaled_jet(&tau, &z, &zero, 3, ZScaling::Full, &Default::default()).is_err());
    }
}
