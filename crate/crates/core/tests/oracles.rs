use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thetaforge::harness::{sample_point, sample_tau};
use thetaforge::{theta_jet, PeriodMatrix, RationalVector, TruncationPolicy};

const RADIUS: i64 = 14;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn e(x: Complex64) -> Complex64 {
    (c(0.0, 2.0 * PI) * x).exp()
}

struct Naive {
    value: Complex64,
    gradient: Vec<Complex64>,
    hessian: DMatrix<Complex64>,
    tau_deriv: DMatrix<Complex64>,
}

/// Direct box sum over `[-RADIUS, RADIUS]^g`, written independently of the library.
fn naive(tau: &PeriodMatrix, z: &[Complex64], eps: &[f64], delta: &[f64]) -> Naive {
    let g = tau.genus();
    let mut out = Naive {
        value: c(0.0, 0.0),
        gradient: vec![c(0.0, 0.0); g],
        hessian: DMatrix::zeros(g, g),
        tau_deriv: DMatrix::zeros(g, g),
    };
    let side = (2 * RADIUS + 1) as usize;
    for idx in 0..side.pow(g as u32) {
        let mut rem = idx;
        let v: Vec<f64> = (0..g)
            .map(|j| {
                let n = (rem % side) as i64 - RADIUS;
                rem /= side;
                n as f64 + eps[j]
            })
            .collect();
        let mut quad = c(0.0, 0.0);
        let mut lin = c(0.0, 0.0);
        for j in 0..g {
            for k in 0..g {
                quad += tau.entry(j, k) * v[j] * v[k];
            }
            lin += (z[j] + delta[j]) * v[j];
        }
        let term = e(quad * 0.5 + lin);
        out.value += term;
        for j in 0..g {
            out.gradient[j] += c(0.0, 2.0 * PI * v[j]) * term;
            for k in 0..g {
                out.hessian[(j, k)] += -4.0 * PI * PI * v[j] * v[k] * term;
                out.tau_deriv[(j, k)] += c(0.0, PI * v[j] * v[k]) * term;
            }
        }
    }
    out
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

#[test]
fn theta_constant_at_i_matches_gamma_closed_form() {
    let tau = PeriodMatrix::identity_times_i(1);
    let zero = [c(0.0, 0.0)];
    let p = TruncationPolicy::default();
    let z0 = RationalVector::zeros(1);
    let half: RationalVector = "1/2".parse().unwrap();
    // pi^(1/4) / Gamma(3/4), and 2^(-1/4) times that for the other two even constants
    let t00 = 1.086_434_811_213_308;
    let t01 = t00 / 2f64.powf(0.25);
    assert!(close(theta_jet(&tau, &zero, &z0, &z0, &p).unwrap().value, c(t00, 0.0), 1e-14));
    assert!(close(theta_jet(&tau, &zero, &z0, &half, &p).unwrap().value, c(t01, 0.0), 1e-14));
    assert!(close(theta_jet(&tau, &zero, &half, &z0, &p).unwrap().value, c(t01, 0.0), 1e-14));
}

#[test]
fn jets_match_direct_sum() {
    let p = TruncationPolicy::default();
    let chars = [("0", "0"), ("1/2", "1/2"), ("1/3", "-1/4"), ("3/4", "5/6")];
    for g in 1..=2usize {
        for i in 0..6u64 {
            let tau = sample_tau(g, 11, i);
            let z = sample_point(&mut thetaforge::harness::stream(11, "oracle-z", i), g);
            for (ce, cd) in chars {
                let eps: RationalVector = vec![ce; g].join(",").parse().unwrap();
                let delta: RationalVector = vec![cd; g].join(",").parse().unwrap();
                let got = theta_jet(&tau, &z, &eps, &delta, &p).unwrap();
                let want = naive(&tau, &z, &eps.to_f64(), &delta.to_f64());
                assert!(close(got.value, want.value, 1e-11), "g={g} i={i} {ce},{cd}: {} vs {}", got.value, want.value);
                for j in 0..g {
                    assert!(close(got.gradient[j], want.gradient[j], 1e-11));
                    for k in 0..g {
                        assert!(close(got.hessian[(j, k)], want.hessian[(j, k)], 1e-11));
                        assert!(close(got.tau_deriv[(j, k)], want.tau_deriv[(j, k)], 1e-11));
                    }
                }
            }
        }
    }
}

#[test]
fn jacobi_quartic_relation() {
    // theta_00^4 = theta_01^4 + theta_10^4 at every tau in the upper half-plane
    let p = TruncationPolicy::default();
    let z = [c(0.0, 0.0)];
    let zero = RationalVector::zeros(1);
    let half: RationalVector = "1/2".parse().unwrap();
    for i in 0..20 {
        let tau = sample_tau(1, 5, i);
        let t00 = theta_jet(&tau, &z, &zero, &zero, &p).unwrap().value.powi(4);
        let t01 = theta_jet(&tau, &z, &zero, &half, &p).unwrap().value.powi(4);
        let t10 = theta_jet(&tau, &z, &half, &zero, &p).unwrap().value.powi(4);
        assert!(close(t00, t01 + t10, 1e-12), "{i}");
    }
}

#[test]
fn diagonal_period_matrix_factorizes() {
    let p = TruncationPolicy::default();
    let (t1, t2) = (c(0.2, 0.9), c(-0.35, 1.4));
    let tau = PeriodMatrix::new(2, vec![t1, c(0.0, 0.0), c(0.0, 0.0), t2]).unwrap();
    let z = [c(0.1, -0.2), c(0.3, 0.05)];
    let eps: RationalVector = "1/3, 1/2".parse().unwrap();
    let delta: RationalVector = "1/4, 0".parse().unwrap();
    let joint = theta_jet(&tau, &z, &eps, &delta, &p).unwrap().value;
    let one = |t: Complex64, zj: Complex64, e: &str, d: &str| {
        let tau = PeriodMatrix::scalar(t).unwrap();
        theta_jet(&tau, &[zj], &e.parse().unwrap(), &d.parse().unwrap(), &p).unwrap().value
    };
    let product = one(t1, z[0], "1/3", "1/4") * one(t2, z[1], "1/2", "0");
    assert!(close(joint, product, 1e-13));
}

#[test]
fn looser_tail_target_stays_within_its_bound() {
    let tight = TruncationPolicy::default();
    let loose = TruncationPolicy { tail_bound: 1e-6, ..tight };
    for g in 1..=2 {
        for i in 0..8 {
            let tau = sample_tau(g, 3, i);
            let z = vec![c(0.05, 0.1); g];
            let eps = RationalVector::constant(g, 1, 3);
            let a = theta_jet(&tau, &z, &eps, &eps, &tight).unwrap();
            let b = theta_jet(&tau, &z, &eps, &eps, &loose).unwrap();
            assert!(b.radius <= a.radius);
            assert!((a.value - b.value).norm() <= 1e-6 + 1e-13);
            assert!(b.tail <= 1e-6);
        }
    }
}
