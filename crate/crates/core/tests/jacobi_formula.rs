use std::f64::consts::PI;

use num_complex::Complex64;
use thetaforge::harness::sample_tau;
use thetaforge::jacobi::{
    d_operator_quotient, estimate_constant, finite_difference_d, generalized_residual, index_tuples,
};
use thetaforge::{theta_jet, PeriodMatrix, RationalVector, ThetaError, TruncationPolicy};

fn factorial(g: usize) -> f64 {
    (1..=g).map(|k| k as f64).product()
}

/// `g! (i / (2 n pi))^g e(-a^t delta)^g`
fn closed_form(g: usize, n: u64, a: &RationalVector, delta: &RationalVector) -> Complex64 {
    let base = Complex64::new(0.0, 1.0 / (2.0 * n as f64 * PI));
    let dot: f64 = a.to_f64().iter().zip(delta.to_f64()).map(|(x, y)| x * y).sum();
    let phase = Complex64::from_polar(1.0, -2.0 * PI * dot * g as f64);
    base.powi(g as i32) * phase * factorial(g)
}

#[test]
fn fitted_constants_match_closed_form() {
    let p = TruncationPolicy::default();
    for g in 1..=2usize {
        let taus: Vec<PeriodMatrix> = (0..20).map(|i| sample_tau(g, 42, i)).collect();
        for n in 1..=2u64 {
            let tuples = index_tuples(g, n);
            assert!(!tuples.is_empty());
            for (a, delta) in tuples {
                let est = estimate_constant(&taus, &a, &delta, n, &p).unwrap();
                let want = closed_form(g, n, &a, &delta);
                let rel = (est.estimate - want).norm() / want.norm();
                assert!(rel < 1e-9, "g={g} n={n} a={a} delta={delta}: {} vs {want}", est.estimate);
                assert!(est.relative_std < 1e-6);
                let held = sample_tau(g, 43, 0);
                assert!(generalized_residual(&held, &est, &p, 1e-8).unwrap().pass);
            }
        }
    }
}

#[test]
fn odd_numerators_are_excluded() {
    for (a, delta) in index_tuples(1, 1) {
        assert!(!(a.is_half_integer() && RationalVector::parity(&a, &delta) == 1), "{a} {delta}");
    }
    let a: RationalVector = "1/2".parse().unwrap();
    let taus: Vec<PeriodMatrix> = (0..12).map(|i| sample_tau(1, 1, i)).collect();
    let err = estimate_constant(&taus, &a, &a, 1, &TruncationPolicy::default()).unwrap_err();
    assert!(matches!(err, ThetaError::InsufficientData { .. }));
}

#[test]
fn tau_derivatives_match_finite_differences() {
    let p = TruncationPolicy::default();
    for g in 1..=2usize {
        for i in 0..4 {
            let tau = sample_tau(g, 9, i);
            let z: Vec<Complex64> = (0..g).map(|j| Complex64::new(0.1 * j as f64, -0.05)).collect();
            let eps = RationalVector::constant(g, 1, 4);
            let delta = RationalVector::constant(g, 1, 3);
            let f = |t: &PeriodMatrix| Ok(theta_jet(t, &z, &eps, &delta, &p)?.value);
            let fd = finite_difference_d(&f, &tau).unwrap();
            let jet = theta_jet(&tau, &z, &eps, &delta, &p).unwrap();
            let scale = jet.tau_deriv.iter().map(|x| x.norm()).fold(jet.value.norm().max(1.0), f64::max);
            for (x, y) in fd.iter().zip(jet.tau_deriv.iter()) {
                assert!((x - y).norm() < 1e-8 * scale, "g={g} i={i}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn quotient_rule_matches_finite_differences() {
    let p = TruncationPolicy::default();
    let tau = sample_tau(2, 17, 0);
    let a: RationalVector = "1/4, 1/2".parse().unwrap();
    let delta: RationalVector = "0, 1/2".parse().unwrap();
    let n = 1;
    let quotient = |t: &PeriodMatrix| {
        let s = t.scaled(2.0 * n as f64);
        let z = [Complex64::new(0.0, 0.0); 2];
        Ok(theta_jet(&s, &z, &a, &delta, &p)?.value / theta_jet(&s, &z, &RationalVector::zeros(2), &delta, &p)?.value)
    };
    let fd = finite_difference_d(&quotient, &tau).unwrap();
    let d = d_operator_quotient(&tau, &a, &delta, n, &p).unwrap();
    let scale = d.matrix.iter().map(|x| x.norm()).fold(1.0, f64::max);
    for (x, y) in fd.iter().zip(d.matrix.iter()) {
        assert!((x - y).norm() < 1e-7 * scale, "{x} vs {y}");
    }
}
